"""Bootstrapped surrogate derivation and rank-matrix reduction.

K diverse surrogates are fitted around one instance; diversity comes from
redrawing the perturbation masks per surrogate and/or from sampling
ensemble members per query. Each coefficient vector is reduced to a rank
vector (smallest coefficient = rank 1, largest = rank M), stacked into a
K x M ranking matrix that downstream consensus statistics consume.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from . import seeds
from .errors import BlimeError, InputError
from .interpretable import InterpretableInstance
from .predictors import MEAN_OF_MEMBERS, PredictionMode, Predictor
from .surrogate import (
    KernelConfig,
    SurrogateConfig,
    build_perturbation_set,
    fit_weighted_ridge,
    sample_masks,
)

AVERAGE_RANKS = "average"
INDEX_ORDER = "index"

RESAMPLE_FRESH = "fresh"
RESAMPLE_SHARED = "shared"
RESAMPLE_POOL = "pool"

# Substream tags for per-surrogate seed derivation.
_MASK_STREAM = 0
_MEMBER_STREAM = 1
_POOL_STREAM = 2


@dataclass(frozen=True)
class BlimeConfig:
    """Parameters of one bootstrapped-surrogate run.

    ``resample_masks`` selects the diversity source on the mask side:
    ``fresh`` draws a new mask set per surrogate, ``shared`` fits every
    surrogate on the first set, ``pool`` resamples rows with replacement
    from a shared pool.
    """

    k_surrogates: int = 100
    n_perturbations: int = 100
    resample_masks: str = RESAMPLE_FRESH
    prediction_mode: PredictionMode = MEAN_OF_MEMBERS
    master_seed: int = 0

    def __post_init__(self):
        if self.k_surrogates < 2:
            raise InputError("k_surrogates must be at least 2")
        if self.n_perturbations < 2:
            raise InputError("n_perturbations must be at least 2")
        if self.resample_masks not in (RESAMPLE_FRESH, RESAMPLE_SHARED, RESAMPLE_POOL):
            raise InputError(
                f"resample_masks must be fresh, shared or pool, "
                f"got {self.resample_masks!r}"
            )


@dataclass(frozen=True)
class CoefficientEnsemble:
    """Stacked surrogate fits: one row of coefficients per surrogate."""

    alphas: np.ndarray
    intercepts: np.ndarray
    fit_scores: np.ndarray

    def __post_init__(self):
        for name in ("alphas", "intercepts", "fit_scores"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            if not np.isfinite(arr).all():
                raise InputError(f"non-finite entries in {name}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.alphas.ndim != 2:
            raise InputError("alphas must be a K x M matrix")

    @property
    def k(self) -> int:
        return self.alphas.shape[0]

    @property
    def m(self) -> int:
        return self.alphas.shape[1]


@dataclass(frozen=True)
class RankingMatrix:
    """K x M matrix of ranks; row k ranks surrogate k's coefficients.

    Every row sums to M(M+1)/2 exactly. Under the index-order tie policy
    every row is a permutation of 1..M.
    """

    ranks: np.ndarray
    tie_policy: str = AVERAGE_RANKS

    def __post_init__(self):
        ranks = np.ascontiguousarray(self.ranks, dtype=np.float64)
        if ranks.ndim != 2 or ranks.shape[1] < 1:
            raise InputError("ranks must be a K x M matrix")
        m = ranks.shape[1]
        expected = m * (m + 1) / 2
        sums = ranks.sum(axis=1)
        if not (sums == expected).all():
            k = int(np.flatnonzero(sums != expected)[0])
            raise InputError(
                f"rank row {k} sums to {sums[k]}, expected {expected}"
            )
        if self.tie_policy == INDEX_ORDER:
            if not (np.sort(ranks, axis=1) == np.arange(1, m + 1)).all():
                raise InputError("index-order rank rows must be permutations of 1..M")
        elif self.tie_policy != AVERAGE_RANKS:
            raise InputError(f"unknown tie policy {self.tie_policy!r}")
        ranks.setflags(write=False)
        object.__setattr__(self, "ranks", ranks)

    @property
    def k(self) -> int:
        return self.ranks.shape[0]

    @property
    def m(self) -> int:
        return self.ranks.shape[1]


def rank_coefficients(alpha, tie_policy: str = AVERAGE_RANKS) -> np.ndarray:
    """Rank one coefficient vector, smallest value = rank 1.

    Average-rank policy gives tied values the mean of the ranks they span;
    index-order policy breaks ties by ascending component index.
    """
    alpha = np.asarray(alpha, dtype=np.float64)
    if not np.isfinite(alpha).all():
        raise InputError("coefficients must be finite to be ranked")
    method = {"average": "average", "index": "ordinal"}.get(tie_policy)
    if method is None:
        raise InputError(f"unknown tie policy {tie_policy!r}")
    return rankdata(alpha, method=method).astype(np.float64)


def rank_matrix(alphas, tie_policy: str = AVERAGE_RANKS) -> RankingMatrix:
    """Row-wise ``rank_coefficients`` over a K x M coefficient matrix."""
    alphas = np.asarray(alphas, dtype=np.float64)
    ranks = np.vstack([rank_coefficients(row, tie_policy) for row in alphas])
    return RankingMatrix(ranks=ranks, tie_policy=tie_policy)


def run_blime(
    interp: InterpretableInstance,
    predictor: Predictor,
    explained_class: int,
    config: BlimeConfig,
    surrogate_config: SurrogateConfig | None = None,
    kernel_config: KernelConfig | None = None,
    workers: int = 1,
) -> tuple[CoefficientEnsemble, RankingMatrix]:
    """Fit K surrogates and reduce their coefficients to a ranking matrix.

    Surrogate k draws its mask and member streams from
    (master_seed, k, substream), so output rows are ordered by k and
    bit-reproducible for a given master seed regardless of ``workers``.
    """
    if interp.m < 2:
        raise InputError("at least 2 components are required")
    scfg = surrogate_config or SurrogateConfig()
    kcfg = kernel_config or KernelConfig()
    cfg = config

    shared_masks = None
    if cfg.resample_masks == RESAMPLE_SHARED:
        # The shared set is the one the first surrogate would draw.
        shared_masks = sample_masks(
            cfg.n_perturbations,
            interp.m,
            scfg,
            seeds.generator(cfg.master_seed, 0, _MASK_STREAM),
        )
    elif cfg.resample_masks == RESAMPLE_POOL:
        # Distinct substream: per-surrogate resample indices must not replay
        # the uniforms that generated the pool itself.
        shared_masks = sample_masks(
            cfg.n_perturbations,
            interp.m,
            scfg,
            seeds.generator(cfg.master_seed, 0, _POOL_STREAM),
        )

    def fit_one(k: int):
        try:
            if cfg.resample_masks == RESAMPLE_FRESH:
                masks = sample_masks(
                    cfg.n_perturbations,
                    interp.m,
                    scfg,
                    seeds.generator(cfg.master_seed, k, _MASK_STREAM),
                )
            elif cfg.resample_masks == RESAMPLE_SHARED:
                masks = shared_masks
            else:
                rows = seeds.generator(cfg.master_seed, k, _MASK_STREAM).integers(
                    0, cfg.n_perturbations, size=cfg.n_perturbations
                )
                masks = shared_masks[rows]
            member_rng = None
            if cfg.prediction_mode.kind == "sample":
                member_rng = seeds.generator(cfg.master_seed, k, _MEMBER_STREAM)
            pset = build_perturbation_set(
                interp,
                predictor,
                explained_class,
                mode=cfg.prediction_mode,
                surrogate_config=scfg,
                kernel_config=kcfg,
                masks=masks,
                member_rng=member_rng,
            )
            return fit_weighted_ridge(pset.masks, pset.targets, pset.weights, scfg)
        except BlimeError as exc:
            raise type(exc)(f"surrogate {k}: {exc}") from exc

    indices = range(cfg.k_surrogates)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            fits = list(pool.map(fit_one, indices))
    else:
        fits = [fit_one(k) for k in indices]

    ensemble = CoefficientEnsemble(
        alphas=np.vstack([f.alpha for f in fits]),
        intercepts=np.array([f.intercept for f in fits]),
        fit_scores=np.array([f.weighted_r2 for f in fits]),
    )
    return ensemble, rank_matrix(ensemble.alphas, AVERAGE_RANKS)
