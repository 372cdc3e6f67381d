import math

import numpy as np
import pytest

from blime import (
    InputError,
    KernelConfig,
    MEAN_OF_MEMBERS,
    SurrogateConfig,
    build_perturbation_set,
    fit_weighted_ridge,
    kernel_weights,
    sample_masks,
)
from blime import seeds

# Hand evaluation of the kernel formula for m=4, mask (1,1,0,0), sigma=0.25.
HAND_DISTANCE = 1.0 - 2.0 / (math.sqrt(2.0) * math.sqrt(4.0))
HAND_WEIGHT = math.exp(-HAND_DISTANCE**2 / 0.25**2)


def brute_force_ridge(Z, y, w, lam, fit_intercept=True):
    """Independent oracle: assemble the full normal equations naively.

    Builds the (m+1) x (m+1) system for (alpha, b) with explicit loops and
    solves it with numpy's generic solver; no centring, no Cholesky.
    """
    Z = np.asarray(Z, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    n, m = Z.shape
    cols = m + 1 if fit_intercept else m
    A = np.zeros((cols, cols))
    rhs = np.zeros(cols)
    for i in range(n):
        zi = np.append(Z[i], 1.0) if fit_intercept else Z[i]
        for a in range(cols):
            rhs[a] += w[i] * y[i] * zi[a]
            for b in range(cols):
                A[a, b] += w[i] * zi[a] * zi[b]
    for a in range(m):
        A[a, a] += lam
    sol = np.linalg.solve(A, rhs)
    if fit_intercept:
        return sol[:m], sol[m]
    return sol, 0.0


class TestSampleMasks:
    def test_shape_and_determinism(self):
        cfg = SurrogateConfig()
        a = sample_masks(20, 8, cfg, seeds.generator(5))
        b = sample_masks(20, 8, cfg, seeds.generator(5))
        assert a.shape == (20, 8)
        assert set(np.unique(a)) <= {0, 1}
        np.testing.assert_array_equal(a, b)

    def test_include_original_row(self):
        masks = sample_masks(10, 4, SurrogateConfig(include_original=True), seeds.generator(1))
        assert (masks[0] == 1).all()

    def test_near_one_activation(self):
        cfg = SurrogateConfig(activation_prob=0.999999, include_original=False)
        masks = sample_masks(200, 8, cfg, seeds.generator(2))
        assert masks.mean() > 0.999

    def test_column_means_concentrate(self):
        cfg = SurrogateConfig(include_original=False)
        masks = sample_masks(200, 8, cfg, seeds.generator(3))
        means = masks.mean(axis=0)
        assert (np.abs(means - 0.5) <= 0.15).all()

    def test_too_few_rows_rejected(self):
        with pytest.raises(InputError):
            sample_masks(1, 8, SurrogateConfig(), seeds.generator(0))


class TestKernelWeights:
    def test_all_ones_weight_is_exactly_one(self):
        w = kernel_weights(np.ones((3, 6)), KernelConfig(width=0.25))
        np.testing.assert_array_equal(w, np.ones(3))

    def test_hand_evaluated_weight(self):
        w = kernel_weights(np.array([[1, 1, 0, 0]]), KernelConfig(width=0.25))
        assert w[0] == pytest.approx(HAND_WEIGHT, abs=1e-12)
        assert w[0] == pytest.approx(0.2535, abs=1e-4)

    def test_flat_kernel_limit(self):
        masks = (np.random.default_rng(0).random((20, 6)) < 0.5).astype(int)
        masks[:, 0] = 1  # keep rows nonzero
        w = kernel_weights(masks, KernelConfig(width=1e9))
        np.testing.assert_allclose(w, 1.0, atol=1e-12)

    def test_all_zero_row_warns_and_uses_max_distance(self):
        masks = np.array([[0, 0, 0, 0], [1, 1, 1, 1]])
        with pytest.warns(RuntimeWarning, match="all-zero mask"):
            w = kernel_weights(masks, KernelConfig(width=0.5))
        assert w[0] == pytest.approx(math.exp(-1.0 / 0.25), abs=1e-12)
        assert w[1] == 1.0

    def test_weights_in_unit_interval(self):
        rng = np.random.default_rng(9)
        masks = (rng.random((50, 7)) < 0.5).astype(int)
        masks[:, 0] = 1
        w = kernel_weights(masks, KernelConfig(width=0.25))
        assert (w > 0).all() and (w <= 1).all()


class TestFitWeightedRidge:
    def test_zero_targets(self):
        rng = np.random.default_rng(0)
        Z = (rng.random((10, 4)) < 0.5).astype(float)
        for lam in (0.0, 0.5, 2.0):
            fit = fit_weighted_ridge(
                Z, np.zeros(10), np.ones(10), SurrogateConfig(ridge_lambda=lam)
            )
            np.testing.assert_allclose(fit.alpha, 0.0, atol=1e-12)
            assert fit.intercept == pytest.approx(0.0, abs=1e-12)

    def test_exact_interpolation(self):
        fit = fit_weighted_ridge(
            [[0.0], [1.0]], [0.0, 1.0], [1.0, 1.0], SurrogateConfig(ridge_lambda=0.0)
        )
        assert fit.alpha[0] == pytest.approx(1.0, abs=1e-12)
        assert fit.intercept == pytest.approx(0.0, abs=1e-12)
        assert fit.weighted_r2 == pytest.approx(1.0, abs=1e-12)

    def test_penalised_two_point_fit(self):
        # Analytic minimiser of b^2 + (a + b - 1)^2 + a^2 is a = b = 1/3.
        fit = fit_weighted_ridge(
            [[0.0], [1.0]], [0.0, 1.0], [1.0, 1.0], SurrogateConfig(ridge_lambda=1.0)
        )
        assert fit.alpha[0] == pytest.approx(1.0 / 3.0, abs=1e-12)
        assert fit.intercept == pytest.approx(1.0 / 3.0, abs=1e-12)

    def test_matches_brute_force_oracle(self):
        rng = np.random.default_rng(1234)
        for trial in range(30):
            n = int(rng.integers(12, 50))
            m = int(rng.integers(1, 10))
            Z = rng.normal(size=(n, m))
            y = rng.normal(size=n)
            w = rng.uniform(0.1, 1.0, size=n)
            lam = [0.0, 0.1, 1.0][trial % 3]
            fit = fit_weighted_ridge(Z, y, w, SurrogateConfig(ridge_lambda=lam))
            alpha, intercept = brute_force_ridge(Z, y, w, lam)
            np.testing.assert_allclose(fit.alpha, alpha, atol=1e-8)
            assert fit.intercept == pytest.approx(intercept, abs=1e-8)

    def test_no_intercept_matches_oracle(self):
        rng = np.random.default_rng(7)
        Z = rng.normal(size=(20, 3))
        y = rng.normal(size=20)
        w = rng.uniform(0.2, 1.0, size=20)
        fit = fit_weighted_ridge(
            Z, y, w, SurrogateConfig(ridge_lambda=0.3, fit_intercept=False)
        )
        alpha, _ = brute_force_ridge(Z, y, w, 0.3, fit_intercept=False)
        np.testing.assert_allclose(fit.alpha, alpha, atol=1e-8)
        assert fit.intercept == 0.0

    def test_weight_scale_invariance_at_lambda_zero(self):
        rng = np.random.default_rng(8)
        Z = rng.normal(size=(30, 5))
        y = rng.normal(size=30)
        w = rng.uniform(0.1, 1.0, size=30)
        cfg = SurrogateConfig(ridge_lambda=0.0)
        a = fit_weighted_ridge(Z, y, w, cfg)
        b = fit_weighted_ridge(Z, y, 7.5 * w, cfg)
        np.testing.assert_allclose(a.alpha, b.alpha, atol=1e-9)
        assert a.intercept == pytest.approx(b.intercept, abs=1e-9)

    def test_weight_scale_invariance_with_rescaled_lambda(self):
        rng = np.random.default_rng(9)
        Z = rng.normal(size=(30, 5))
        y = rng.normal(size=30)
        w = rng.uniform(0.1, 1.0, size=30)
        c = 3.0
        a = fit_weighted_ridge(Z, y, w, SurrogateConfig(ridge_lambda=0.7))
        b = fit_weighted_ridge(Z, y, c * w, SurrogateConfig(ridge_lambda=c * 0.7))
        np.testing.assert_allclose(a.alpha, b.alpha, atol=1e-9)

    def test_row_duplication_invariance_at_lambda_zero(self):
        rng = np.random.default_rng(10)
        Z = rng.normal(size=(15, 4))
        y = rng.normal(size=15)
        w = rng.uniform(0.1, 1.0, size=15)
        cfg = SurrogateConfig(ridge_lambda=0.0)
        a = fit_weighted_ridge(Z, y, w, cfg)
        b = fit_weighted_ridge(
            np.vstack([Z, Z]), np.concatenate([y, y]), np.concatenate([w, w]), cfg
        )
        np.testing.assert_allclose(a.alpha, b.alpha, atol=1e-9)

    def test_positive_lambda_never_fails(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            n = int(rng.integers(2, 12))
            m = int(rng.integers(1, 9))
            Z = (rng.random((n, m)) < 0.5).astype(float)
            fit = fit_weighted_ridge(
                Z,
                rng.random(n),
                rng.uniform(0.01, 1.0, n),
                SurrogateConfig(ridge_lambda=1.0),
            )
            assert np.isfinite(fit.alpha).all()

    def test_rank_deficient_lambda_zero_flagged_min_norm(self):
        # Duplicated column makes the unpenalised system singular; fitted
        # values stay unique, and lstsq on the weighted design is the
        # same documented pseudo-inverse route.
        Z = np.array([[1.0, 1.0], [0.0, 0.0], [1.0, 1.0], [0.0, 0.0]])
        y = np.array([1.0, 0.0, 1.0, 0.0])
        w = np.ones(4)
        fit = fit_weighted_ridge(Z, y, w, SurrogateConfig(ridge_lambda=0.0))
        assert fit.rank_deficient
        preds = Z @ fit.alpha + fit.intercept
        np.testing.assert_allclose(preds, y, atol=1e-9)
        np.testing.assert_allclose(fit.alpha[0], fit.alpha[1], atol=1e-9)

    def test_constant_targets_r2_is_one(self):
        Z = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
        fit = fit_weighted_ridge(Z, np.full(3, 0.4), np.ones(3), SurrogateConfig())
        assert fit.weighted_r2 == 1.0

    def test_non_finite_inputs_rejected(self):
        with pytest.raises(InputError):
            fit_weighted_ridge(
                [[np.nan], [1.0]], [0.0, 1.0], [1.0, 1.0], SurrogateConfig()
            )

    def test_all_zero_weights_rejected(self):
        with pytest.raises(InputError):
            fit_weighted_ridge(
                [[0.0], [1.0]], [0.0, 1.0], [0.0, 0.0], SurrogateConfig()
            )


class TestBuildPerturbationSet:
    def test_end_to_end_shapes_and_targets(self, interp, planted_predictor):
        pset = build_perturbation_set(
            interp,
            planted_predictor,
            explained_class=1,
            mode=MEAN_OF_MEMBERS,
            n=40,
            rng=seeds.generator(17),
        )
        assert pset.masks.shape == (40, interp.m)
        assert pset.targets.shape == (40,)
        assert pset.weights.shape == (40,)
        assert (pset.targets >= 0).all() and (pset.targets <= 1).all()
        assert pset.weights[0] == 1.0  # all-ones row kept at weight 1

    def test_explained_class_bound(self, interp, planted_predictor):
        with pytest.raises(InputError):
            build_perturbation_set(
                interp, planted_predictor, explained_class=2, rng=seeds.generator(0)
            )

    def test_json_dump_field_names(self, interp, planted_predictor):
        pset = build_perturbation_set(
            interp, planted_predictor, 1, n=10, rng=seeds.generator(3)
        )
        dump = pset.to_json_dict()
        assert set(dump) == {"masks", "targets", "weights"}
        assert len(dump["masks"]) == 10
