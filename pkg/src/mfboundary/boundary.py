"""Restricted estimation at H = 3/4 and the feasible boundary score test.

The boundary test standardizes the efficient H-score at the restricted
maximum-likelihood estimate of the nuisance parameters:

    T = (8 / (sqrt(3) sigma^2)) (xi_hurst - (sigma/2) xi_sigma),

rejecting H = 3/4 against H > 3/4 for large positive values.  At the
restricted MLE the sigma-score vanishes, so the second term is analytically
zero; both the full and the reduced form are computed and compared as an
optimizer-health guard.

The restricted mfBm likelihood is one-dimensional in sigma after a single
eigendecomposition of the critical fGn Toeplitz matrix: with
T = U diag(lam) U' and y = U'x, every likelihood/score evaluation is O(n).
:class:`CriticalCache` holds that machinery per design; Monte Carlo loops
share one cache across replications.

Boundary behavior: for data whose empirical variance does not exceed the
Brownian floor, the restricted likelihood is maximized as sigma -> 0.  The
estimate is then clamped to a tiny floor (``exp(FLOOR_LOG_SIGMA)``), the
result is flagged ``floored``, and the statistic is still well defined
because the transformed score R_H scales like sigma^2 — the 1/sigma^2
prefactor cancels exactly, so T has a finite small-sigma limit.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import erfc, log, sqrt

import numpy as np
from scipy.linalg import cho_factor, cho_solve, eigh, toeplitz
from scipy.optimize import minimize_scalar

from .covariance import (
    MfouParams,
    SamplingDesign,
    fgn_autocovariance,
    fgn_autocovariance_dH,
    mfou_critical_rows,
)
from .spectral import H_CRITICAL

__all__ = [
    "FLOOR_LOG_SIGMA",
    "CriticalCache",
    "SigmaEstimate",
    "MfouEstimate",
    "TestResult",
    "DecisionRecord",
    "z_quantile",
    "normal_cdf",
    "restricted_mle_sigma",
    "restricted_mle_mfou",
    "efficient_statistic",
    "feasible_statistic_mfbm",
    "feasible_statistic_mfou",
    "decide",
]

#: log of the sigma floor used when the likelihood pushes sigma to zero
FLOOR_LOG_SIGMA = -18.42  # exp(-18.42) ~ 1e-8

#: discrepancy between the two T forms that flags an optimizer failure
_FORM_AGREEMENT_TOL = 1e-6


# ---------------------------------------------------------------------------
# Normal quantiles and CDF
# ---------------------------------------------------------------------------

# Acklam's rational approximation of the inverse normal CDF (absolute error
# below 1.2e-9), polished by one Halley step against the erfc-based CDF to
# near machine precision.  Bit-stable across platforms, no scipy dependency
# on the decision path.
_ACKLAM_A = (
    -3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
    1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00,
)
_ACKLAM_B = (
    -5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
    6.680131188771972e01, -1.328068155288572e01,
)
_ACKLAM_C = (
    -7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
    -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00,
)
_ACKLAM_D = (
    7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
    3.754408661907416e00,
)


def z_quantile(p: float) -> float:
    """Inverse standard normal CDF (Acklam seed + one Halley refinement)."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"quantile level must lie in (0, 1), got {p}")
    a, b, c, d = _ACKLAM_A, _ACKLAM_B, _ACKLAM_C, _ACKLAM_D
    p_low, p_high = 0.02425, 1.0 - 0.02425
    if p < p_low:
        q = sqrt(-2.0 * log(p))
        z = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / (
            (((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0
        )
    elif p > p_high:
        q = sqrt(-2.0 * log(1.0 - p))
        z = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / (
            (((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0
        )
    else:
        q = p - 0.5
        r = q * q
        z = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q / (
            ((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0
        )
    # Halley refinement: residual e = Phi(z) - p, density phi(z);
    # update z -= u / (1 + z u / 2), u = e / phi(z).
    e = normal_cdf(z) - p
    u = e * sqrt(2.0 * np.pi) * np.exp(0.5 * z * z)
    return z - u / (1.0 + 0.5 * z * u)


def normal_cdf(z: float) -> float:
    """Standard normal CDF via the complementary error function."""
    return 0.5 * erfc(-z / sqrt(2.0))


# ---------------------------------------------------------------------------
# Critical cache: one eigendecomposition per design
# ---------------------------------------------------------------------------

class CriticalCache:
    """Eigen machinery for H = 3/4 mfBm workflows on a fixed design.

    With T(gamma_{3/4}) = U diag(lam) U', the covariance in the rotated
    basis is diag(s), s_i = Delta (1 + gamma lam_i), gamma = sigma^2
    sqrt(Delta).  Log-likelihood, sigma-score and the transformed H-score
    are then O(n) per evaluation (the H-score needs one O(n^2) quadratic
    form against B = U' T' U, precomputed here).
    """

    def __init__(self, design: SamplingDesign):
        self.design = design
        self.n = design.n
        self.delta = design.delta
        self.L = design.L
        lags = np.arange(self.n)
        self.evals, self.eigvecs = eigh(toeplitz(fgn_autocovariance(lags, H_CRITICAL)))
        b = self.eigvecs.T @ toeplitz(fgn_autocovariance_dH(lags, H_CRITICAL)) @ self.eigvecs
        self._b = b
        self._b_diag = np.diag(b).copy()

    def transform(self, x: np.ndarray) -> np.ndarray:
        """Rotate data into the eigenbasis of T."""
        return self.eigvecs.T @ np.asarray(x, dtype=float)

    def _diag_s(self, sigma: float) -> np.ndarray:
        gamma = sigma * sigma * self.delta**0.5
        return self.delta * (1.0 + gamma * self.evals)

    def neg_loglik(self, log_sigma: float, y: np.ndarray) -> float:
        """Boundary-restricted negative log-likelihood (additive constant dropped)."""
        s = self._diag_s(float(np.exp(log_sigma)))
        return 0.5 * (float(np.sum(np.log(s))) + float(np.sum(y * y / s)))

    def score_sigma(self, sigma: float, y: np.ndarray) -> float:
        """Raw sigma-score at (sigma, H = 3/4)."""
        s = self._diag_s(sigma)
        a = 2.0 * sigma * self.delta**1.5 * self.evals
        return 0.5 * (float(np.sum(y * y * a / (s * s))) - float(np.sum(a / s)))

    def r_hurst(self, sigma: float, y: np.ndarray) -> float:
        """Transformed H-score R_H = S_H + sigma L S_sigma at (sigma, 3/4).

        The identity dSigma_H + sigma L dSigma_sigma = sigma^2 Delta^{3/2}
        T(dgamma/dH) (the explicit log Delta terms cancel) collapses R_H to
        a single quadratic form against B.
        """
        s = self._diag_s(sigma)
        v = y / s
        quad_form = float(v @ self._b @ v)
        trace = float(np.sum(self._b_diag / s))
        return 0.5 * sigma * sigma * self.delta**1.5 * (quad_form - trace)


# ---------------------------------------------------------------------------
# Restricted MLEs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SigmaEstimate:
    """Restricted MLE of sigma at H = 3/4.

    ``floored`` marks data whose likelihood is maximized at the sigma -> 0
    boundary; the estimate is then the tiny floor value, not an interior
    stationary point.
    """

    sigma_hat: float
    floored: bool

    def __float__(self) -> float:
        return self.sigma_hat


@dataclass(frozen=True)
class MfouEstimate:
    """Joint restricted MLE (sigma, alpha) for mfOU at H = 3/4."""

    sigma_hat: float
    alpha_hat: float
    floored: bool
    converged: bool


def _maximize_log_sigma(
    neg_loglik, floor_log_sigma: float, center: float
) -> tuple[float, bool]:
    """Shared 1-D maximizer over log sigma with boundary-floor semantics.

    Coarse unit grid from the floor to past the data-driven center, argmin,
    tolerance-aware plateau walk, then a Brent polish on the bracketing
    interval.  A plateau reaching the left edge means the likelihood keeps
    improving (or is flat) all the way down to sigma = 0: return the floor,
    flagged.  An argmin pinned to the right edge after repeated extensions
    means genuine divergence and raises.
    """
    grid = np.arange(floor_log_sigma, max(center + 7.0, floor_log_sigma + 10.0), 1.0)
    vals = np.array([neg_loglik(g) for g in grid])
    i = int(np.argmin(vals))
    for _ in range(8):
        if i < len(grid) - 1:
            break
        ext = grid[-1] + np.arange(1.0, 7.0)
        grid = np.concatenate([grid, ext])
        vals = np.concatenate([vals, [neg_loglik(g) for g in ext]])
        i = int(np.argmin(vals))
    tol = 64.0 * np.finfo(float).eps * max(1.0, abs(vals[i]))
    left = i
    while left > 0 and vals[left - 1] <= vals[i] + tol:
        left -= 1
    right = i
    while right < len(grid) - 1 and vals[right + 1] <= vals[i] + tol:
        right += 1
    if left == 0:
        return floor_log_sigma, True
    if right == len(grid) - 1:
        raise RuntimeError("restricted sigma estimate diverged (no interior maximum)")
    mid = (left + right) // 2
    try:
        res = minimize_scalar(
            neg_loglik,
            bracket=(grid[left - 1], grid[mid], grid[right + 1]),
            method="brent",
            options={"xtol": 1e-10},
        )
        return float(res.x), False
    except ValueError:
        # flat-valley bracketing failure: the grid midpoint is within tol
        return float(grid[mid]), False


def restricted_mle_sigma(
    x: np.ndarray,
    design: SamplingDesign,
    cache: CriticalCache | None = None,
    floor_log_sigma: float = FLOOR_LOG_SIGMA,
) -> SigmaEstimate:
    """Maximize the boundary-restricted mfBm likelihood over sigma > 0."""
    if design.n < 2:
        raise ValueError("restricted sigma estimation requires n >= 2")
    if cache is None:
        cache = CriticalCache(design)
    y = cache.transform(x)
    m2 = float(np.mean(y * y))
    s0_sq = max(m2 / design.delta**1.5 - design.delta**-0.5, 1e-12)
    center = max(0.5 * log(s0_sq), floor_log_sigma + 1.0)
    log_sig, floored = _maximize_log_sigma(
        lambda ls: cache.neg_loglik(ls, y), floor_log_sigma, center
    )
    return SigmaEstimate(sigma_hat=float(np.exp(log_sig)), floored=floored)


@lru_cache(maxsize=64)
def _mfou_pencil(n: int, delta: float, alpha: float):
    """Pencil eigendecomposition of (fractional part, OU part) at H = 3/4.

    Cached because Monte Carlo loops probe the same coarse alpha grid for
    every replication; the decomposition is data-independent.
    """
    design = SamplingDesign(n=n, delta=delta)
    tau = np.arange(n) * delta
    rows = mfou_critical_rows(
        MfouParams(sigma=1.0, hurst=H_CRITICAL, alpha=alpha), design
    )
    a_row = np.exp(-alpha * tau) / (2.0 * alpha)
    b_row = rows["r"] - a_row  # fractional component at sigma = 1
    a_mat = toeplitz(a_row)
    mu, phi = eigh(toeplitz(b_row), a_mat)
    logdet_a = 2.0 * float(np.sum(np.log(np.diag(np.linalg.cholesky(a_mat)))))
    return mu, phi, logdet_a


class _MfouProfile:
    """Profile machinery for the mfOU restricted likelihood at H = 3/4.

    For fixed alpha the covariance is A(alpha) + sigma^2 B(alpha) with
    A the pure-OU Toeplitz matrix and B the fractional part; the pencil
    eigendecomposition B phi = mu A phi reduces the sigma-profile to a
    one-dimensional problem with O(n) evaluations, exactly mirroring the
    mfBm cache.
    """

    def __init__(self, x: np.ndarray, design: SamplingDesign):
        self.x = np.asarray(x, dtype=float)
        self.design = design

    def _pencil(self, alpha: float):
        mu, phi, logdet_a = _mfou_pencil(self.design.n, self.design.delta, alpha)
        v = phi.T @ self.x
        return mu, v, logdet_a

    def profiled(self, log_alpha: float) -> tuple[float, float, bool]:
        """Minimize over sigma at fixed alpha; returns (value, log_sigma, floored)."""
        mu, v, logdet_a = self._pencil(float(np.exp(log_alpha)))
        v_sq = v * v

        def neg_loglik(log_sigma: float) -> float:
            sig_sq = float(np.exp(2.0 * log_sigma))
            denom = 1.0 + sig_sq * mu
            return 0.5 * (
                logdet_a
                + float(np.sum(np.log(denom)))
                + float(np.sum(v_sq / denom))
            )

        m2 = float(np.mean(self.x * self.x))
        center = max(0.5 * log(max(m2, 1e-12)), FLOOR_LOG_SIGMA + 1.0)
        log_sig, floored = _maximize_log_sigma(neg_loglik, FLOOR_LOG_SIGMA, center)
        return neg_loglik(log_sig), log_sig, floored


def restricted_mle_mfou(
    x: np.ndarray, design: SamplingDesign, log_alpha_bounds: tuple[float, float] = (-6.0, 4.0)
) -> MfouEstimate:
    """Joint restricted MLE over (log sigma, log alpha) by nested profiling.

    The outer search is a derivative-free 1-D minimization of the
    sigma-profiled likelihood over log alpha (coarse grid plus Brent
    polish to 1e-6); the inner problem reuses the boundary-aware sigma
    maximizer.  Nested profiling reaches the same joint maximizer as a 2-D
    search but cannot stall on the strongly anisotropic (sigma, alpha)
    geometry.
    """
    if design.n < 3:
        raise ValueError("restricted mfOU estimation requires n >= 3")
    profile = _MfouProfile(x, design)
    lo, hi = log_alpha_bounds
    # keep alpha * tau_max inside the kernel table
    tau_max = (design.n - 1) * design.delta
    if tau_max > 0.0:
        hi = min(hi, log(990.0 / tau_max))
    grid = np.linspace(lo, hi, 13)
    vals = [profile.profiled(g)[0] for g in grid]
    i = int(np.argmin(vals))
    converged = True
    if i == 0 or i == len(grid) - 1:
        # edge optimum: accept the edge point without polish
        best_log_alpha = float(grid[i])
        converged = False
    else:
        res = minimize_scalar(
            lambda la: profile.profiled(la)[0],
            bracket=(float(grid[i - 1]), float(grid[i]), float(grid[i + 1])),
            method="brent",
            options={"xtol": 1e-6},
        )
        best_log_alpha = float(res.x)
    _, log_sig, floored = profile.profiled(best_log_alpha)
    return MfouEstimate(
        sigma_hat=float(np.exp(log_sig)),
        alpha_hat=float(np.exp(best_log_alpha)),
        floored=floored,
        converged=converged,
    )


# ---------------------------------------------------------------------------
# Test statistics and decisions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TestResult:
    """Feasible (or oracle) boundary test outcome."""

    statistic: float
    sigma_hat: float
    p_value: float
    reject_10: bool
    reject_5: bool
    mode: str
    alpha_hat: float | None = None
    floored: bool = False
    form_gap: float = 0.0


@dataclass(frozen=True)
class DecisionRecord:
    """Decision for a given level and sidedness."""

    reject: bool
    p_value: float
    critical_value: float
    level: float
    sidedness: str


def efficient_statistic(xi_sigma: float, xi_hurst: float, sigma: float) -> float:
    """T = (8/(sqrt(3) sigma^2)) (xi_hurst - (sigma/2) xi_sigma)."""
    if sigma <= 0.0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    return 8.0 / (sqrt(3.0) * sigma * sigma) * (xi_hurst - 0.5 * sigma * xi_sigma)


def _result_from_statistic(
    t_full: float,
    t_reduced: float,
    sigma_hat: float,
    floored: bool,
    mode: str,
    alpha_hat: float | None = None,
) -> TestResult:
    """Assemble a TestResult, guarding the two-forms identity.

    At an interior optimum the sigma-score vanishes, so the full and
    reduced forms must agree to ~1e-6; a larger gap flags an optimizer
    failure.  At a floored estimate the first-order condition does not
    hold, the reduced form is meaningless, and the full formula (whose
    sigma^2-cancellation keeps it finite as sigma -> 0) is authoritative.
    """
    t_full = float(t_full)
    if not floored:
        gap = abs(t_full - t_reduced) / max(1.0, abs(t_full))
        if gap > _FORM_AGREEMENT_TOL:
            raise RuntimeError(
                f"statistic forms disagree (gap {gap:.3e}); restricted MLE "
                "did not reach a stationary point"
            )
    else:
        gap = abs(t_full - t_reduced)
    p_value = 1.0 - normal_cdf(t_full)
    return TestResult(
        statistic=t_full,
        sigma_hat=float(sigma_hat),
        p_value=p_value,
        reject_10=bool(t_full > z_quantile(0.90)),
        reject_5=bool(t_full > z_quantile(0.95)),
        mode=mode,
        alpha_hat=None if alpha_hat is None else float(alpha_hat),
        floored=bool(floored),
        form_gap=float(gap),
    )


def feasible_statistic_mfbm(
    x: np.ndarray, design: SamplingDesign, cache: CriticalCache | None = None
) -> TestResult:
    """Feasible boundary statistic for mfBm increment data."""
    if design.n < 2:
        raise ValueError("the feasible statistic requires n >= 2")
    if design.L <= 0.0:
        raise ValueError("the feasible statistic requires delta < 1 so that L > 0")
    if cache is None:
        cache = CriticalCache(design)
    y = cache.transform(x)
    est = restricted_mle_sigma(x, design, cache=cache)
    sig = est.sigma_hat
    n, delta, L = design.n, design.delta, design.L
    xi_hurst = cache.r_hurst(sig, y) / (sqrt(n * delta) * L**1.5)
    xi_sigma = cache.score_sigma(sig, y) / sqrt(n * delta * L)
    t_full = efficient_statistic(xi_sigma, xi_hurst, sig)
    t_reduced = 8.0 / (sqrt(3.0) * sig * sig) * xi_hurst
    return _result_from_statistic(t_full, t_reduced, sig, est.floored, mode="feasible")


def feasible_statistic_mfou(x: np.ndarray, design: SamplingDesign) -> TestResult:
    """Feasible boundary statistic for stationary mfOU data.

    The critical direction is identical to mfBm (the alpha-score is
    asymptotically orthogonal), so the statistic has the same form with
    (sigma_hat, alpha_hat) plugged in.
    """
    if design.n < 3:
        raise ValueError("the mfOU feasible statistic requires n >= 3")
    if design.L <= 0.0:
        raise ValueError("the feasible statistic requires delta < 1 so that L > 0")
    est = restricted_mle_mfou(x, design)
    params = MfouParams(
        sigma=max(est.sigma_hat, float(np.exp(FLOOR_LOG_SIGMA))),
        hurst=H_CRITICAL,
        alpha=est.alpha_hat,
    )
    rows = mfou_critical_rows(params, design)
    factor = cho_factor(toeplitz(rows["r"]), lower=True)
    x = np.asarray(x, dtype=float)
    a = cho_solve(factor, x)
    sigma_inv = cho_solve(factor, np.eye(design.n))

    def raw_score(row: np.ndarray) -> float:
        d_mat = toeplitz(row)
        return 0.5 * (float(a @ d_mat @ a) - float(np.sum(sigma_inv * d_mat)))

    s_sigma = raw_score(rows["d_sigma"])
    s_hurst = raw_score(rows["d_hurst"])
    n, delta, L = design.n, design.delta, design.L
    sig = params.sigma
    r_hurst = s_hurst + sig * L * s_sigma
    xi_hurst = r_hurst / (sqrt(n * delta) * L**1.5)
    xi_sigma = s_sigma / sqrt(n * delta * L)
    t_full = efficient_statistic(xi_sigma, xi_hurst, sig)
    t_reduced = 8.0 / (sqrt(3.0) * sig * sig) * xi_hurst
    return _result_from_statistic(
        t_full, t_reduced, sig, est.floored, mode="feasible", alpha_hat=est.alpha_hat
    )


def decide(t_statistic: float, level: float, sidedness: str = "one") -> DecisionRecord:
    """Test decision: one-sided rejects T > z_{1-level}, two-sided |T| > z_{1-level/2}."""
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    t_statistic = float(t_statistic)
    if sidedness == "one":
        critical = z_quantile(1.0 - level)
        reject = t_statistic > critical
        p_value = 1.0 - normal_cdf(t_statistic)
    elif sidedness == "two":
        critical = z_quantile(1.0 - level / 2.0)
        reject = abs(t_statistic) > critical
        p_value = 2.0 * (1.0 - normal_cdf(abs(t_statistic)))
    else:
        raise ValueError(f"sidedness must be 'one' or 'two', got {sidedness!r}")
    return DecisionRecord(
        reject=reject,
        p_value=p_value,
        critical_value=critical,
        level=level,
        sidedness=sidedness,
    )
