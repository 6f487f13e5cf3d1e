"""Acceptance suite: the nine headline guarantees of the package.

Each test is independent and seeded; the slow Monte Carlo reproductions
(ac4/ac5) run 4000 replications to keep their tolerance bands several
Monte Carlo standard errors wide.
"""

import math
from math import log, pi, sqrt

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.linalg import toeplitz

from mfboundary.asymptotics import lan_quadratic_check, trace_ladder, whittle_crosscheck
from mfboundary.boundary import CriticalCache
from mfboundary.covariance import (
    CovarianceBundle,
    MfbmParams,
    MfouParams,
    SamplingDesign,
    mfbm_bundle,
    mfou_autocovariance,
    mfou_bundle,
)
from mfboundary.experiments import NullSequenceConfig, PowerGridConfig, run_null_sequence, run_power_grid
from mfboundary.gaussian import log_likelihood, score_vector
from mfboundary.intraday import PipelineConfig, run_pipeline
from mfboundary.sampling import (
    mfou_sampling_cholesky,
    sample_mfbm_increments,
    sample_mfou_path,
)
from mfboundary.spectral import (
    H_CRITICAL,
    c_coefficient,
    c_log_derivative,
    critical_constants,
    gamma_crit,
    profiles,
)

EULER_GAMMA = 0.5772156649015328606


# ---------------------------------------------------------------------------
# 1. Closed-form critical constants
# ---------------------------------------------------------------------------

def test_ac1_critical_constants_closed_forms():
    k_closed = 3.0 * sqrt(2.0 * pi) / 8.0
    beta_closed = 16.0 / 3.0 - 2.0 * EULER_GAMMA - 4.0 * log(2.0) - pi
    assert abs(c_coefficient(H_CRITICAL) - k_closed) < 1e-12
    assert abs(c_log_derivative(H_CRITICAL) - beta_closed) < 1e-12
    for sigma in (0.5, 1.0, 2.5, 3.0):
        cc = critical_constants(sigma)
        assert abs(cc.k - k_closed) < 1e-12
        assert abs(cc.beta - beta_closed) < 1e-12
        assert abs(cc.i_eff - 3.0 * sigma**4 / 64.0) < 1e-12
        g = gamma_crit(sigma)
        assert abs(g.matrix[0, 0] - 9.0 * sigma**2 / 16.0) < 1e-12
        assert abs(g.matrix[0, 1] - 9.0 * sigma**3 / 32.0) < 1e-12
        assert abs(g.matrix[1, 1] - 3.0 * sigma**4 / 16.0) < 1e-12
        assert abs(g.correlation - sqrt(3.0) / 2.0) < 1e-12
        assert abs(g.schur_complement_hh - 3.0 * sigma**4 / 64.0) < 1e-12
    for alpha in (0.5, 1.0, 2.0):
        m = gamma_crit(3.0, alpha=alpha).matrix
        assert abs(m[2, 2] - 1.0 / (2.0 * alpha)) < 1e-12
        assert abs(m[0, 2]) < 1e-12 and abs(m[1, 2]) < 1e-12


# ---------------------------------------------------------------------------
# 2. Analytic scores match finite differences of the log-likelihood
# ---------------------------------------------------------------------------

def _fd_scores(loglik, theta, steps):
    out = []
    for i, h in enumerate(steps):
        up = list(theta)
        dn = list(theta)
        up[i] += h
        dn[i] -= h
        out.append((loglik(*up) - loglik(*dn)) / (2.0 * h))
    return out


def test_ac2_mfbm_scores_match_finite_differences():
    design = SamplingDesign(n=32, delta=0.1)
    rng = np.random.default_rng(20240201)
    x = rng.standard_normal(32)

    def loglik(sigma, hurst):
        return log_likelihood(mfbm_bundle(MfbmParams(sigma=sigma, hurst=hurst), design), x)

    for sigma in (0.5, 1.0, 2.0):
        for hurst in (0.6, 0.75, 0.9):
            params = MfbmParams(sigma=sigma, hurst=hurst)
            sv = score_vector(mfbm_bundle(params, design), x, params, design)
            fd_s, fd_h = _fd_scores(loglik, (sigma, hurst), (1e-5 * sigma, 1e-6))
            assert abs(fd_s - sv.s_sigma) / abs(sv.s_sigma) < 1e-5
            assert abs(fd_h - sv.s_hurst) / abs(sv.s_hurst) < 1e-5


def test_ac2_mfou_scores_match_finite_differences():
    n, delta = 32, 0.1
    design = SamplingDesign(n=n, delta=delta)
    rng = np.random.default_rng(20240202)
    x = rng.standard_normal(n)

    def loglik(sigma, hurst, alpha):
        p = MfouParams(sigma=sigma, hurst=hurst, alpha=alpha)
        row = np.array([mfou_autocovariance(k * delta, p) for k in range(n)])
        bundle = CovarianceBundle(
            sigma_matrix=toeplitz(row), d_sigma=None, d_hurst=None, d_alpha=None
        )
        return log_likelihood(bundle, x)

    for sigma in (0.5, 1.0, 2.0):
        for hurst in (0.6, 0.75, 0.9):
            for alpha in (0.5, 1.0, 2.0):
                params = MfouParams(sigma=sigma, hurst=hurst, alpha=alpha)
                sv = score_vector(mfou_bundle(params, design), x, params, design)
                # The alpha direction needs a wider step: the likelihood is
                # nearly flat there, so quadrature noise dominates below 1e-3.
                steps = (1e-4 * sigma, 1e-4, 1e-3 * alpha)
                fd_s, fd_h, fd_a = _fd_scores(loglik, (sigma, hurst, alpha), steps)
                assert abs(fd_s - sv.s_sigma) / abs(sv.s_sigma) < 1e-5
                assert abs(fd_h - sv.s_hurst) / abs(sv.s_hurst) < 1e-5
                assert abs(fd_a - sv.s_alpha) / abs(sv.s_alpha) < 1e-5


# ---------------------------------------------------------------------------
# 3. Sampler fidelity against the covariance bundles
# ---------------------------------------------------------------------------

def _assert_sample_cov_matches(draws, target, reps):
    sample = draws.T @ draws / reps
    var = np.outer(np.diag(target), np.diag(target)) + target**2
    se = np.sqrt(var / reps)
    assert np.all(np.abs(sample - target) < 4.0 * se)


def test_ac3_mfbm_sampler_covariance():
    reps, n = 50_000, 8
    design = SamplingDesign(n=n, delta=0.25)
    params = MfbmParams(sigma=1.5, hurst=0.7)
    target = mfbm_bundle(params, design).sigma_matrix
    draws = np.empty((reps, n))
    for rep in range(reps):
        draws[rep] = sample_mfbm_increments(params, design, 20240303, rep)
    _assert_sample_cov_matches(draws, target, reps)


def test_ac3_mfou_sampler_covariance():
    reps, n = 50_000, 6
    design = SamplingDesign(n=n, delta=0.5)
    params = MfouParams(sigma=1.0, hurst=0.8, alpha=1.2)
    target = mfou_bundle(params, design).sigma_matrix
    chol = mfou_sampling_cholesky(params, design)
    draws = np.empty((reps, n))
    for rep in range(reps):
        draws[rep] = sample_mfou_path(params, design, 20240304, rep, chol_lower=chol)
    _assert_sample_cov_matches(draws, target, reps)


# ---------------------------------------------------------------------------
# 4. Power-grid reference reproduction (n=160, delta=0.01, sigma=3)
# ---------------------------------------------------------------------------

REFERENCE_MEAN_T = (0.013, 0.190, 0.386, 0.854, 1.422)
REFERENCE_SD_T = (0.528, 0.761, 0.854, 1.375, 1.846)
REFERENCE_REJ5 = (0.009, 0.038, 0.080, 0.245, 0.394)
REFERENCE_MEAN_SIGMA = (2.982, 2.540, 2.339, 1.839, 1.472)


def test_ac4_power_grid_reproduces_reference_table():
    config = PowerGridConfig(reps=4000, seed=20240801, threads=1)
    result = run_power_grid(config)
    assert len(result.cells) == 5
    for cell, mean_ref, sd_ref, rej5_ref, sigma_ref in zip(
        result.cells, REFERENCE_MEAN_T, REFERENCE_SD_T, REFERENCE_REJ5, REFERENCE_MEAN_SIGMA
    ):
        s = cell.summary
        assert s.failures == 0
        mean_tol = max(0.07, 4.0 * sd_ref / sqrt(1000.0))
        assert abs(s.mean_t - mean_ref) < mean_tol, (cell.label_value, s.mean_t)
        assert abs(s.rej5 - rej5_ref) < 0.03, (cell.label_value, s.rej5)
        assert abs(s.mean_sigma - sigma_ref) < 0.06, (cell.label_value, s.mean_sigma)
    rej5 = [c.summary.rej5 for c in result.cells]
    for lo, hi in zip(rej5, rej5[1:]):
        assert hi >= lo - 0.02


# ---------------------------------------------------------------------------
# 5. Critical-null sequence reference reproduction (delta = n^{-1/2})
# ---------------------------------------------------------------------------

REFERENCE_NULL_SD = (0.688, 0.593, 0.549, 0.511)


def test_ac5_null_sequence_reproduces_reference_table():
    config = NullSequenceConfig(reps=4000, seed=20240802, threads=1)
    result = run_null_sequence(config)
    assert [int(c.label_value) for c in result.cells] == [64, 128, 256, 512]
    sds = []
    for cell, sd_ref in zip(result.cells, REFERENCE_NULL_SD):
        s = cell.summary
        assert s.failures == 0
        assert abs(s.sd_t - sd_ref) < 0.06, (cell.label_value, s.sd_t)
        assert s.rej5 <= 0.035, (cell.label_value, s.rej5)
        sds.append(s.sd_t)
    for lo, hi in zip(sds, sds[1:]):
        assert hi <= lo  # conservative null tightens as n grows


# ---------------------------------------------------------------------------
# 6. Trace ratios drift monotonically toward 1; Whittle agreement at the top
# ---------------------------------------------------------------------------

def test_ac6_trace_ladder_monotone_with_whittle_crosscheck():
    designs = [SamplingDesign(n=n, delta=n**-0.5) for n in (256, 1024, 4096)]
    report = trace_ladder(0.5, designs)
    for key in ("cc", "cd", "dd"):
        seq = report.ratio_sequence(key)
        assert all(r > 0.0 for r in seq)
        devs = [abs(r - 1.0) for r in seq]
        assert devs[1] < devs[0] and devs[2] < devs[1], (key, seq)

    mfou_report = trace_ladder(0.5, designs, model="mfou", alpha=1.0)
    seq = mfou_report.ratio_sequence("aa")
    assert all(r > 0.0 for r in seq)
    devs = [abs(r - 1.0) for r in seq]
    assert devs[1] < devs[0] and devs[2] < devs[1], ("aa", seq)

    top = report.rungs[-1].traces
    w = whittle_crosscheck(0.5, designs[-1])
    for key, exact in (("cc", top.tr_cc), ("cd", top.tr_cd), ("dd", top.tr_dd)):
        assert abs(w[key] - exact) / abs(exact) < 0.15, (key, w[key], exact)
    top_ou = mfou_report.rungs[-1].traces
    w_ou = whittle_crosscheck(0.5, designs[-1], alpha=1.0)
    assert abs(w_ou["aa"] - top_ou.tr_aa) / abs(top_ou.tr_aa) < 0.15


# ---------------------------------------------------------------------------
# 7. LAN remainder shrinks between n=128 and n=1024
# ---------------------------------------------------------------------------

def test_ac7_lan_remainder_decreases():
    d128 = SamplingDesign(n=128, delta=128**-0.5)
    d1024 = SamplingDesign(n=1024, delta=1024**-0.5)
    for h in ((1.0, 0.0), (0.0, 1.0)):
        small = lan_quadratic_check(1.0, d128, h, reps=500, seed=515151)
        large = lan_quadratic_check(1.0, d1024, h, reps=500, seed=515151)
        assert large.mean_abs_remainder < small.mean_abs_remainder, (
            h,
            small.mean_abs_remainder,
            large.mean_abs_remainder,
        )


# ---------------------------------------------------------------------------
# 8. Drift-profile identity: int g_alpha^2 du = 2 pi / alpha
# ---------------------------------------------------------------------------

def test_ac8_alpha_profile_integral_identity():
    cc = critical_constants(1.0)
    for alpha in (0.5, 1.0, 2.0):

        def g_alpha_sq(u):
            _, _, ga = profiles(np.array([u]), cc.eta, 4.0, cc.beta, 1.0, alpha=alpha)
            return float(ga[0] ** 2)

        val, err = quad(g_alpha_sq, -np.inf, np.inf, epsabs=1e-12, epsrel=1e-12)
        assert err < 1e-9
        assert abs(val - 2.0 * pi / alpha) < 1e-8, (alpha, val)


# ---------------------------------------------------------------------------
# 9. Pipeline determinism on the bundled fixture; panel mean near zero
# ---------------------------------------------------------------------------

def test_ac9_pipeline_byte_determinism_and_panel_mean(tmp_path):
    from importlib.resources import files

    fixture = str(files("mfboundary") / "fixtures" / "synthetic_panel.csv")
    results = []
    for label, threads in (("a", 1), ("b", 1), ("c", 4)):
        config = PipelineConfig(
            input_path=fixture, output_dir=tmp_path / label, threads=threads
        )
        results.append(run_pipeline(config))
    names = set(results[0].paths)
    assert names == {"daily_records.csv", "rolling.csv", "subperiods.csv", "run_metadata.json"}
    for name in names:
        ref = results[0].paths[name].read_bytes()
        assert results[1].paths[name].read_bytes() == ref
        assert results[2].paths[name].read_bytes() == ref

    summary = results[0].summary
    assert summary["days"] == 252 and summary["failures"] == 0
    se = summary["sd_T"] / math.sqrt(summary["days"])
    assert abs(summary["mean_T"]) < 4.0 * se
