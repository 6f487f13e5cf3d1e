"""Tests for the exact Gaussian samplers."""

import math

import numpy as np
import pytest
from scipy.linalg import toeplitz

import mfboundary.sampling as sampling
from mfboundary.covariance import (
    MfbmParams,
    MfouParams,
    SamplingDesign,
    fgn_autocovariance,
    mfou_critical_rows,
)
from mfboundary.sampling import (
    mfou_sampling_cholesky,
    rng_for,
    sample_fgn,
    sample_mfbm_increments,
    sample_mfou_path,
)
from mfboundary.spectral import H_CRITICAL


def _sample_cov(draws: np.ndarray) -> np.ndarray:
    return draws.T @ draws / draws.shape[0]


def _cov_se(cov: np.ndarray, reps: int) -> np.ndarray:
    # Wick: Var(x_i x_j) = cov_ii cov_jj + cov_ij^2
    return np.sqrt((np.outer(np.diag(cov), np.diag(cov)) + cov**2) / reps)


class TestSeeding:
    def test_rng_streams_are_reproducible(self):
        a = rng_for(42, 3, 0).standard_normal(4)
        b = rng_for(42, 3, 0).standard_normal(4)
        assert np.array_equal(a, b)

    def test_rng_streams_differ_across_reps_and_streams(self):
        base = rng_for(42, 0, 0).standard_normal(4)
        assert not np.array_equal(base, rng_for(42, 1, 0).standard_normal(4))
        assert not np.array_equal(base, rng_for(42, 0, 1).standard_normal(4))
        assert not np.array_equal(base, rng_for(43, 0, 0).standard_normal(4))


class TestFgnSampler:
    def test_single_point_is_standard_normal(self):
        reps = 20000
        draws = np.array([sample_fgn(1, 0.75, 5, rep).values[0] for rep in range(reps)])
        assert abs(np.mean(draws)) < 4.0 / math.sqrt(reps)
        var = np.var(draws, ddof=1)
        assert abs(var - 1.0) < 4.0 * math.sqrt(2.0 / reps)

    def test_covariance_small_n(self):
        n, reps = 6, 20000
        draws = np.array([sample_fgn(n, 0.8, 21, rep).values for rep in range(reps)])
        target = toeplitz(fgn_autocovariance(np.arange(n), 0.8))
        cov = _sample_cov(draws)
        assert np.all(np.abs(cov - target) < 4.0 * _cov_se(target, reps))

    def test_backend_reported(self):
        out = sample_fgn(16, 0.75, 1, 0)
        assert out.backend in ("circulant", "cholesky")

    def test_determinism(self):
        a = sample_fgn(32, 0.9, 7, 4).values
        b = sample_fgn(32, 0.9, 7, 4).values
        assert np.array_equal(a, b)

    def test_cholesky_fallback_agrees_with_circulant(self, monkeypatch):
        # force the fallback and compare the two backends in distribution
        n, reps, hurst = 5, 4000, 0.75
        circ = np.array([sample_fgn(n, hurst, 31, rep).values for rep in range(reps)])

        true_eigs = sampling._embedding_eigenvalues(n, hurst)
        monkeypatch.setattr(
            sampling, "_embedding_eigenvalues", lambda n_, h_: -np.ones(2 * (n_ - 1))
        )
        forced = [sample_fgn(n, hurst, 31, rep) for rep in range(reps)]
        monkeypatch.undo()
        assert all(s.backend == "cholesky" for s in forced)
        assert np.all(true_eigs >= 0.0)  # the patch really was a lie
        chol = np.array([s.values for s in forced])

        target = toeplitz(fgn_autocovariance(np.arange(n), hurst))
        se = _cov_se(target, reps)
        assert np.all(np.abs(_sample_cov(circ) - target) < 4.5 * se)
        assert np.all(np.abs(_sample_cov(chol) - target) < 4.5 * se)


class TestMfbmSampler:
    def test_marginal_variance(self):
        params = MfbmParams(sigma=2.0, hurst=0.75)
        design = SamplingDesign(n=4, delta=0.25)
        reps = 20000
        draws = np.array(
            [sample_mfbm_increments(params, design, 17, rep) for rep in range(reps)]
        )
        target_var = design.delta * (
            1.0 + params.sigma**2 * design.delta ** (2.0 * params.hurst - 1.0)
        )
        var = np.var(draws[:, 0], ddof=1)
        assert abs(var - target_var) < 5.0 * target_var * math.sqrt(2.0 / reps)

    def test_determinism_and_rep_independence(self):
        params = MfbmParams(sigma=1.0, hurst=0.8)
        design = SamplingDesign(n=8, delta=0.1)
        a = sample_mfbm_increments(params, design, 9, 2)
        b = sample_mfbm_increments(params, design, 9, 2)
        c = sample_mfbm_increments(params, design, 9, 3)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)


class TestMfouSampler:
    def test_covariance_small_n(self):
        params = MfouParams(sigma=1.0, hurst=H_CRITICAL, alpha=1.0)
        design = SamplingDesign(n=4, delta=0.5)
        chol = mfou_sampling_cholesky(params, design)
        reps = 10000
        draws = np.array(
            [
                sample_mfou_path(params, design, 23, rep, chol_lower=chol)
                for rep in range(reps)
            ]
        )
        target = toeplitz(mfou_critical_rows(params, design)["r"])
        cov = _sample_cov(draws)
        assert np.all(np.abs(cov - target) < 4.0 * _cov_se(target, reps))

    def test_cholesky_factor_consistent(self):
        params = MfouParams(sigma=1.0, hurst=H_CRITICAL, alpha=0.5)
        design = SamplingDesign(n=6, delta=0.2)
        low = mfou_sampling_cholesky(params, design)
        target = toeplitz(mfou_critical_rows(params, design)["r"])
        assert np.allclose(low @ low.T, target, rtol=1e-10, atol=1e-12)

    def test_off_critical_uses_quadrature_route(self):
        params = MfouParams(sigma=0.5, hurst=0.7, alpha=1.0)
        design = SamplingDesign(n=3, delta=0.4)
        low = mfou_sampling_cholesky(params, design)
        x = sample_mfou_path(params, design, 3, 0, chol_lower=low)
        assert x.shape == (3,) and np.all(np.isfinite(x))
