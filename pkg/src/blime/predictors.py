"""Probabilistic classifiers and ensembles thereof.

A predictor exposes per-member and ensemble-mean queries; ``predict_batch``
turns those into the three prediction modes (ensemble mean, one member
redrawn per query, one fixed member). A deterministic synthetic ensemble
with planted per-component weights serves as the bundled black box.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from . import seeds
from .errors import InputError, ProtocolError
from .interpretable import InterpretableInstance, recover_masks

PROBABILITY_TOL = 1e-6


@dataclass(frozen=True)
class PredictionMode:
    """How an ensemble answers a batch of queries.

    ``mean`` averages all members, ``sample`` redraws one member uniformly
    for every instance, ``fixed`` always uses member ``member``.
    """

    kind: str
    member: int | None = None

    def __post_init__(self):
        if self.kind not in ("mean", "sample", "fixed"):
            raise InputError(f"unknown prediction mode {self.kind!r}")
        if self.kind == "fixed" and (self.member is None or self.member < 0):
            raise InputError("fixed mode requires a nonnegative member index")
        if self.kind != "fixed" and self.member is not None:
            raise InputError(f"mode {self.kind!r} takes no member index")


MEAN_OF_MEMBERS = PredictionMode("mean")
SAMPLE_MEMBER_PER_QUERY = PredictionMode("sample")


def fixed_member(index: int) -> PredictionMode:
    return PredictionMode("fixed", index)


class Predictor(ABC):
    """Black-box classifier ensemble interface."""

    n_classes: int
    n_members: int
    modality: str

    @abstractmethod
    def predict_member(self, instances, member: int) -> np.ndarray:
        """Class probabilities (n, n_classes) from one ensemble member."""

    @abstractmethod
    def predict_mean(self, instances) -> np.ndarray:
        """Class probabilities (n, n_classes) averaged over all members."""


def _check_instances(predictor: Predictor, instances) -> list:
    items = list(instances)
    for i, item in enumerate(items):
        if predictor.modality == "image" and not isinstance(item, np.ndarray):
            raise InputError(f"instance {i} is not an image array")
        if predictor.modality == "text" and not isinstance(item, str):
            raise InputError(f"instance {i} is not a text document")
    return items


def validate_probabilities(probs: np.ndarray, n: int, n_classes: int) -> np.ndarray:
    """Enforce the class-probability invariants on a prediction batch."""
    probs = np.asarray(probs, dtype=np.float64)
    if probs.shape != (n, n_classes):
        raise ProtocolError(
            f"predictor returned shape {probs.shape}, expected {(n, n_classes)}"
        )
    if not np.isfinite(probs).all():
        raise ProtocolError("predictor returned non-finite probabilities")
    if probs.min() < -PROBABILITY_TOL or probs.max() > 1 + PROBABILITY_TOL:
        raise ProtocolError("predictor returned probabilities outside [0, 1]")
    sums = probs.sum(axis=1)
    off = np.abs(sums - 1.0)
    if off.max() > PROBABILITY_TOL:
        i = int(off.argmax())
        raise ProtocolError(
            f"probability row {i} sums to {sums[i]:.8f}, expected 1"
        )
    return probs


def predict_batch(
    predictor: Predictor,
    instances,
    mode: PredictionMode = MEAN_OF_MEMBERS,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Query the predictor for a batch under a prediction mode.

    ``rng`` is consumed only in sample mode, where one member index is
    drawn uniformly per instance, in instance order, so results are
    reproducible for a given stream regardless of parallelism.
    """
    items = _check_instances(predictor, instances)
    n = len(items)
    if n == 0:
        return np.zeros((0, predictor.n_classes))
    if mode.kind == "mean":
        out = predictor.predict_mean(items)
    elif mode.kind == "fixed":
        if mode.member >= predictor.n_members:
            raise InputError(
                f"member {mode.member} out of range "
                f"(ensemble has {predictor.n_members})"
            )
        out = predictor.predict_member(items, mode.member)
    else:
        if rng is None:
            raise InputError("sample mode requires an rng stream")
        members = rng.integers(0, predictor.n_members, size=n)
        out = np.empty((n, predictor.n_classes))
        for member in np.unique(members):
            sel = np.flatnonzero(members == member)
            sub = [items[i] for i in sel]
            out[sel] = predictor.predict_member(sub, int(member))
    return validate_probabilities(out, n, predictor.n_classes)


@dataclass(frozen=True)
class SyntheticEnsembleSpec:
    """Parameters of the bundled synthetic binary ensemble.

    Member e uses weights ``base_weights + member_noise_scale * eps_e``
    where ``eps_e`` is a deterministic standard-normal vector derived from
    (seed, e).
    """

    member_count: int
    base_weights: tuple[float, ...]
    member_noise_scale: float = 0.0
    bias: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.member_count < 1:
            raise InputError("ensemble needs at least one member")
        if self.member_noise_scale < 0:
            raise InputError("member_noise_scale must be nonnegative")
        object.__setattr__(
            self, "base_weights", tuple(float(b) for b in self.base_weights)
        )

    def member_weights(self) -> np.ndarray:
        """The (member_count, m) matrix of per-member logit weights."""
        base = np.array(self.base_weights)
        out = np.tile(base, (self.member_count, 1))
        if self.member_noise_scale > 0:
            for e in range(self.member_count):
                eps = seeds.standard_normals(
                    seeds.derive_seed(self.seed, e), base.size
                )
                out[e] += self.member_noise_scale * eps
        return out


class SyntheticEnsemblePredictor(Predictor):
    """Binary classifier over masked variants of one interpretable instance.

    Each member recovers the active-component mask from the reconstructed
    instance, computes ``logit = weights . mask + bias`` and outputs
    ``(1 - sigmoid(logit), sigmoid(logit))``, i.e. class 1 is the planted
    class. A pure function of (spec, interpretable instance, inputs).
    """

    n_classes = 2

    def __init__(self, spec: SyntheticEnsembleSpec, interp: InterpretableInstance):
        if len(spec.base_weights) != interp.m:
            raise InputError(
                f"spec has {len(spec.base_weights)} weights but the instance "
                f"has {interp.m} components"
            )
        self.spec = spec
        self.interp = interp
        self.n_members = spec.member_count
        self.modality = interp.modality
        self._weights = spec.member_weights()
        self._weights.setflags(write=False)

    def _activations(self, instances) -> np.ndarray:
        if self.modality == "image":
            batch = np.asarray(instances, dtype=np.uint8)
        else:
            batch = instances
        return recover_masks(self.interp, batch).astype(np.float64)

    def _member_probs(self, z: np.ndarray, member: int) -> np.ndarray:
        logits = z @ self._weights[member] + self.spec.bias
        p1 = expit(logits)
        return np.column_stack([1.0 - p1, p1])

    def predict_member(self, instances, member: int) -> np.ndarray:
        if not 0 <= member < self.n_members:
            raise InputError(f"member {member} out of range")
        return self._member_probs(self._activations(instances), member)

    def predict_mean(self, instances) -> np.ndarray:
        z = self._activations(instances)
        acc = np.zeros((z.shape[0], 2))
        for e in range(self.n_members):
            acc += self._member_probs(z, e)
        return acc / self.n_members


def synthetic_predictor(
    spec: SyntheticEnsembleSpec, interpretable: InterpretableInstance
) -> SyntheticEnsemblePredictor:
    """Build the bundled synthetic ensemble for an interpretable instance."""
    return SyntheticEnsemblePredictor(spec, interpretable)
