"""Bootstrapped local surrogate explanations with ordinal consensus.

Fits many diverse local linear surrogates to a black-box (ensemble)
classifier around one instance, reduces their coefficients to a ranking
matrix, and quantifies explanation uncertainty through ordinal consensus
statistics.
"""

from .bootstrap import (
    AVERAGE_RANKS,
    INDEX_ORDER,
    RESAMPLE_FRESH,
    RESAMPLE_POOL,
    RESAMPLE_SHARED,
    BlimeConfig,
    CoefficientEnsemble,
    RankingMatrix,
    rank_coefficients,
    rank_matrix,
    run_blime,
)
from .consensus import (
    ConsensusReport,
    build_report,
    fleiss_kappa,
    kendall_w,
    mean_ranks,
    ordinal_consensus,
)
from .errors import BlimeError, ConfigError, InputError, ProtocolError
from .external import ExternalConfig, ExternalPredictor, external_predictor
from .interpretable import (
    InterpretableInstance,
    SegmentMap,
    TokenMap,
    grid_segment,
    load_image,
    load_segment_map,
    load_text,
    reconstruct,
    reconstruct_batch,
    recover_masks,
    tokenize,
)
from .predictors import (
    MEAN_OF_MEMBERS,
    SAMPLE_MEMBER_PER_QUERY,
    PredictionMode,
    Predictor,
    SyntheticEnsembleSpec,
    fixed_member,
    predict_batch,
    synthetic_predictor,
)
from .surrogate import (
    KernelConfig,
    PerturbationSet,
    SurrogateCoefficients,
    SurrogateConfig,
    build_perturbation_set,
    fit_weighted_ridge,
    kernel_weights,
    sample_masks,
)

__version__ = "0.1.0"
