"""Perturbation sets and the weighted ridge surrogate fit.

One surrogate is a linear model fitted to the black box's behaviour on a
set of masked variants of the instance, weighted by a locality kernel over
mask space. Its coefficient vector is the raw explanation.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import InputError
from .interpretable import InterpretableInstance, reconstruct_batch
from .predictors import (
    MEAN_OF_MEMBERS,
    PredictionMode,
    Predictor,
    predict_batch,
)


@dataclass(frozen=True)
class KernelConfig:
    """Locality kernel over masks: w = exp(-d^2 / width^2) with d the
    cosine distance between a mask and the all-ones mask."""

    width: float = 0.25
    distance: str = "cosine"

    def __post_init__(self):
        if self.width <= 0:
            raise InputError("kernel width must be positive")
        if self.distance != "cosine":
            raise InputError(f"unknown mask distance {self.distance!r}")


@dataclass(frozen=True)
class SurrogateConfig:
    ridge_lambda: float = 1.0
    fit_intercept: bool = True
    include_original: bool = True
    activation_prob: float = 0.5

    def __post_init__(self):
        if self.ridge_lambda < 0:
            raise InputError("ridge_lambda must be nonnegative")
        if not 0 < self.activation_prob < 1:
            raise InputError("activation_prob must lie in (0, 1)")


@dataclass(frozen=True)
class PerturbationSet:
    """Masks, explained-class targets and kernel weights of one fit."""

    masks: np.ndarray
    targets: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        masks = np.ascontiguousarray(self.masks, dtype=np.int8)
        targets = np.ascontiguousarray(self.targets, dtype=np.float64)
        weights = np.ascontiguousarray(self.weights, dtype=np.float64)
        if masks.ndim != 2 or targets.shape != (masks.shape[0],) or weights.shape != targets.shape:
            raise InputError("masks, targets and weights must agree on N")
        for arr, name in ((masks, "masks"), (targets, "targets"), (weights, "weights")):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def to_json_dict(self) -> dict:
        return {
            "masks": self.masks.tolist(),
            "targets": self.targets.tolist(),
            "weights": self.weights.tolist(),
        }


@dataclass(frozen=True)
class SurrogateCoefficients:
    """Fitted surrogate: coefficients, intercept and a goodness diagnostic."""

    alpha: np.ndarray
    intercept: float
    weighted_r2: float
    rank_deficient: bool = False


def sample_masks(
    n: int, m: int, config: SurrogateConfig, rng: np.random.Generator
) -> np.ndarray:
    """Draw an (n, m) binary mask matrix, entries Bernoulli(activation_prob).

    With ``include_original`` the first sampled row is replaced by the
    all-ones mask, keeping N = n.
    """
    if n < 2:
        raise InputError("at least 2 masks are required to fit a surrogate")
    if m < 2:
        raise InputError("at least 2 components are required")
    masks = (rng.random((n, m)) < config.activation_prob).astype(np.int8)
    if config.include_original:
        masks[0] = 1
    return masks


def kernel_weights(masks, kernel: KernelConfig) -> np.ndarray:
    """Locality weight of each mask relative to the unperturbed instance.

    The all-zero mask has undefined cosine similarity; its distance is
    defined as 1 (maximal) and a warning is recorded.
    """
    masks = np.asarray(masks, dtype=np.float64)
    n, m = masks.shape
    ones = masks.sum(axis=1)
    dist = np.ones(n)
    nonzero = ones > 0
    dist[nonzero] = 1.0 - ones[nonzero] / (np.sqrt(ones[nonzero]) * np.sqrt(m))
    if not nonzero.all():
        warnings.warn(
            "all-zero mask row: cosine distance set to 1", RuntimeWarning, stacklevel=2
        )
    return np.exp(-(dist**2) / kernel.width**2)


def fit_weighted_ridge(
    masks, targets, weights, config: SurrogateConfig
) -> SurrogateCoefficients:
    """Minimise sum_i w_i (y_i - alpha.z_i - b)^2 + lambda ||alpha||^2.

    The intercept is unpenalised: weighted means are removed from the
    columns and targets, the reduced SPD system is solved by Cholesky
    factorisation, and the intercept is recovered from the means. With
    lambda = 0 and a rank-deficient system, the minimum-norm coefficients
    are computed by a pseudo-inverse (lstsq) path and the result is
    flagged ``rank_deficient``.
    """
    Z = np.asarray(masks, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    n, m = Z.shape
    if n < 2:
        raise InputError("need at least 2 rows to fit")
    if y.shape != (n,) or w.shape != (n,):
        raise InputError("targets and weights must have one entry per mask row")
    if not (np.isfinite(Z).all() and np.isfinite(y).all() and np.isfinite(w).all()):
        raise InputError("non-finite values in the fit inputs")
    if w.min() < 0 or w.max() <= 0:
        raise InputError("weights must be nonnegative with at least one positive")

    wsum = w.sum()
    if config.fit_intercept:
        z_mean = (w @ Z) / wsum
        y_mean = (w @ y) / wsum
    else:
        z_mean = np.zeros(m)
        y_mean = 0.0
    Zc = Z - z_mean
    yc = y - y_mean

    gram = (Zc * w[:, None]).T @ Zc
    gram[np.diag_indices_from(gram)] += config.ridge_lambda
    rhs = Zc.T @ (w * yc)

    rank_deficient = False
    try:
        alpha = cho_solve(cho_factor(gram, lower=True), rhs)
        if not np.isfinite(alpha).all():
            raise LinAlgError("non-finite solution")
    except LinAlgError:
        if config.ridge_lambda > 0:
            raise InputError("ridge system is numerically singular") from None
        sw = np.sqrt(w)
        alpha, *_ = np.linalg.lstsq(sw[:, None] * Zc, sw * yc, rcond=None)
        rank_deficient = True

    intercept = float(y_mean - alpha @ z_mean) if config.fit_intercept else 0.0
    residuals = y - (Z @ alpha + intercept)
    rss = float(w @ residuals**2)
    centred = y - ((w @ y) / wsum if config.fit_intercept else 0.0)
    tss = float(w @ centred**2)
    r2 = 1.0 if tss / wsum < 1e-12 else 1.0 - rss / tss
    return SurrogateCoefficients(
        alpha=alpha, intercept=intercept, weighted_r2=r2, rank_deficient=rank_deficient
    )


def build_perturbation_set(
    interp: InterpretableInstance,
    predictor: Predictor,
    explained_class: int,
    mode: PredictionMode = MEAN_OF_MEMBERS,
    n: int = 100,
    surrogate_config: SurrogateConfig | None = None,
    kernel_config: KernelConfig | None = None,
    rng: np.random.Generator | None = None,
    member_rng: np.random.Generator | None = None,
    masks: np.ndarray | None = None,
) -> PerturbationSet:
    """Sample masks, reconstruct, query the black box once, weight.

    ``rng`` drives mask sampling and ``member_rng`` the per-query member
    draws (falls back to ``rng`` when omitted). A precomputed ``masks``
    matrix skips sampling, which is how shared and pooled perturbation
    sets are fed in.
    """
    surrogate_config = surrogate_config or SurrogateConfig()
    kernel_config = kernel_config or KernelConfig()
    if not 0 <= explained_class < predictor.n_classes:
        raise InputError(
            f"explained class {explained_class} out of range "
            f"(predictor has {predictor.n_classes} classes)"
        )
    if masks is None:
        if rng is None:
            raise InputError("an rng stream is required to sample masks")
        masks = sample_masks(n, interp.m, surrogate_config, rng)
    else:
        masks = np.asarray(masks, dtype=np.int8)
    instances = reconstruct_batch(interp, masks)
    probs = predict_batch(predictor, instances, mode, member_rng or rng)
    targets = probs[:, explained_class]
    weights = kernel_weights(masks, kernel_config)
    return PerturbationSet(masks=masks, targets=targets, weights=weights)
