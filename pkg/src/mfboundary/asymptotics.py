"""Numerical verification of the critical trace and LAN asymptotics.

``trace_ladder`` computes exact dense traces of the score matrices along a
ladder of designs and compares them with the predicted leading terms

    tr(C^2) ~ Xi_ss n Delta L,   tr(CD) ~ Xi_sH n Delta L^2,
    tr(D^2) ~ Xi_HH n Delta L^3, tr(A^2) ~ n Delta / alpha,

where convergence of the ratios is logarithmic in 1/Delta — trends, not
limits, are the testable content.  ``whittle_crosscheck`` reproduces the
same traces from frequency-domain integrals of the exact (non-asymptotic)
reduced symbols, a fully independent route.  ``lan_quadratic_check``
simulates local log-likelihood ratios and measures the remainder against
the LAN quadratic h' Xi - h' Gamma h / 2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import log, pi, sqrt

import numpy as np
from scipy.integrate import quad
from scipy.linalg import cho_factor, cho_solve, toeplitz

from .boundary import CriticalCache
from .covariance import (
    MfbmParams,
    MfouParams,
    SamplingDesign,
    fgn_autocovariance,
    mfbm_bundle,
    mfou_bundle,
    mfou_critical_rows,
)
from .gaussian import TraceMoments, score_trace_moments
from .spectral import (
    H_CRITICAL,
    c_coefficient,
    fgn_spectral_density,
    fgn_spectral_density_dH,
    gamma_crit,
)

__all__ = [
    "TraceRung",
    "TraceReport",
    "LanSummary",
    "predicted_trace_scales",
    "trace_ladder",
    "whittle_crosscheck",
    "lan_quadratic_check",
]

#: dense-matrix memory guard: refuse rungs beyond this size
MAX_TRACE_N = 8192


@dataclass(frozen=True)
class TraceRung:
    """Exact traces, predicted scales, and ratios for one design."""

    n: int
    delta: float
    L: float
    traces: TraceMoments
    predicted: dict[str, float]
    ratios: dict[str, float]


@dataclass(frozen=True)
class TraceReport:
    """Trace ladder report; rungs are ordered by increasing n."""

    model: str
    sigma: float
    alpha: float | None
    rungs: list[TraceRung] = field(default_factory=list)

    def ratio_sequence(self, key: str) -> list[float]:
        return [r.ratios[key] for r in self.rungs if key in r.ratios]


def predicted_trace_scales(
    sigma: float, design: SamplingDesign, alpha: float | None = None
) -> dict[str, float]:
    """Leading-order predictions Xi_ab n Delta L^k for the trace moments."""
    k = c_coefficient(H_CRITICAL)
    n_delta = design.n * design.delta
    L = design.L
    out = {
        "cc": 4.0 * sigma**2 * k * k / pi * n_delta * L,
        "cd": 2.0 * sigma**3 * k * k / pi * n_delta * L * L,
        "dd": 4.0 * sigma**4 * k * k / (3.0 * pi) * n_delta * L**3,
    }
    if alpha is not None:
        out["aa"] = n_delta / alpha
        # envelope scales for the mixed alpha-traces (boundedness, not limits)
        out["ca_envelope"] = n_delta
        out["da_envelope"] = n_delta * L
    return out


def trace_ladder(
    sigma: float,
    designs: list[SamplingDesign],
    model: str = "mfbm",
    alpha: float | None = None,
    max_n: int = MAX_TRACE_N,
) -> TraceReport:
    """Exact dense trace moments along a ladder of designs.

    The ladder should be ordered with Delta decreasing and n Delta growing
    (the canonical choice is Delta = n^{-1/2}); ratios of exact traces to
    predicted scales then drift toward 1 at logarithmic speed.
    """
    if model not in ("mfbm", "mfou"):
        raise ValueError(f"model must be 'mfbm' or 'mfou', got {model!r}")
    if model == "mfou" and alpha is None:
        raise ValueError("mfou trace ladder requires alpha")
    for d in designs:
        if d.n > max_n:
            raise MemoryError(
                f"trace ladder rung n={d.n} exceeds the configured cap {max_n}"
            )
    rungs = []
    for design in sorted(designs, key=lambda d: d.n):
        if model == "mfbm":
            params = MfbmParams(sigma=sigma, hurst=H_CRITICAL)
            bundle = mfbm_bundle(params, design)
        else:
            params = MfouParams(sigma=sigma, hurst=H_CRITICAL, alpha=alpha)
            rows = mfou_critical_rows(params, design)
            from .covariance import CovarianceBundle

            bundle = CovarianceBundle(
                sigma_matrix=toeplitz(rows["r"]),
                d_sigma=toeplitz(rows["d_sigma"]),
                d_hurst=toeplitz(rows["d_hurst"]),
                d_alpha=toeplitz(rows["d_alpha"]),
            )
        traces = score_trace_moments(bundle, params, design)
        predicted = predicted_trace_scales(sigma, design, alpha=alpha)
        ratios = {
            "cc": traces.tr_cc / predicted["cc"],
            "cd": traces.tr_cd / predicted["cd"],
            "dd": traces.tr_dd / predicted["dd"],
        }
        if traces.tr_aa is not None:
            ratios["aa"] = traces.tr_aa / predicted["aa"]
            ratios["ca_scaled"] = traces.tr_ca / predicted["ca_envelope"]
            ratios["da_scaled"] = traces.tr_da / predicted["da_envelope"]
        rungs.append(
            TraceRung(
                n=design.n,
                delta=design.delta,
                L=design.L,
                traces=traces,
                predicted=predicted,
                ratios=ratios,
            )
        )
    return TraceReport(model=model, sigma=sigma, alpha=alpha, rungs=rungs)


def whittle_crosscheck(
    sigma: float, design: SamplingDesign, alpha: float | None = None
) -> dict[str, float]:
    """Frequency-domain trace approximations from the exact reduced symbols.

    mfBm: with gamma = sigma^2 sqrt(Delta) and f the exact fGn spectral
    density, the symbols of C and D are

        c(lam) = (2/sigma) gamma f / (1 + gamma f),
        d(lam) = gamma f_H' / (1 + gamma f),

    (the explicit log Delta terms cancel in D exactly as in the matrix
    identity), and tr(XY) ~ (n/2 pi) int_{-pi}^{pi} x y dlam.

    mfOU: the alpha-direction symbol is exactly -2 alpha/(alpha^2 + u^2),
    so tr(A^2) ~ (n Delta/2 pi) int over |u| <= pi/Delta of its square.
    """
    out: dict[str, float] = {}
    gamma = sigma * sigma * design.delta**0.5
    n = design.n

    def c_sym(lam: float) -> float:
        f = float(fgn_spectral_density(np.array(lam), H_CRITICAL))
        return (2.0 / sigma) * gamma * f / (1.0 + gamma * f)

    def d_sym(lam: float) -> float:
        f = float(fgn_spectral_density(np.array(lam), H_CRITICAL))
        fp = float(fgn_spectral_density_dH(np.array(lam), H_CRITICAL))
        return gamma * fp / (1.0 + gamma * f)

    for key, integrand in (
        ("cc", lambda l: c_sym(l) ** 2),
        ("cd", lambda l: c_sym(l) * d_sym(l)),
        ("dd", lambda l: d_sym(l) ** 2),
    ):
        import warnings
        from scipy.integrate import IntegrationWarning

        with warnings.catch_warnings():
            warnings.simplefilter("ignore", IntegrationWarning)
            val, _ = quad(integrand, 0.0, pi, limit=400, points=[1e-12])
        out[key] = n / pi * val
    if alpha is not None:
        cap = pi / design.delta
        val, _ = quad(
            lambda u: (2.0 * alpha / (alpha * alpha + u * u)) ** 2, 0.0, cap, limit=200
        )
        out["aa"] = design.n * design.delta / pi * val
    return out


@dataclass(frozen=True)
class LanSummary:
    """Remainder statistics of the LAN quadratic approximation."""

    n: int
    delta: float
    h: tuple[float, float]
    reps: int
    mean_abs_remainder: float
    mean_remainder: float
    sd_remainder: float


def lan_quadratic_check(
    sigma: float,
    design: SamplingDesign,
    h: tuple[float, float],
    reps: int,
    seed: int,
) -> LanSummary:
    """Monte Carlo check of the LAN expansion at the critical mfBm point.

    Simulates at theta = (sigma, 3/4), shifts along the critical rate
    matrix (delta_sigma = (h1 + sigma h2)/sqrt(n Delta L), delta_H =
    h2/(sqrt(n Delta) L^{3/2})), and reports the remainder

        [l(theta_h) - l(theta)] - [h' xi - h' Gamma h / 2]

    which the LAN theorem says is o_P(1) along critical designs.
    """
    if design.L <= 0.0:
        raise ValueError("LAN check requires delta < 1 so that L > 0")
    h1, h2 = float(h[0]), float(h[1])
    n, delta, L = design.n, design.delta, design.L
    rate_sigma = 1.0 / sqrt(n * delta * L)
    rate_hurst = 1.0 / (sqrt(n * delta) * L**1.5)
    sigma_shift = sigma + (h1 + sigma * h2) * rate_sigma
    hurst_shift = H_CRITICAL + h2 * rate_hurst
    if sigma_shift <= 0.0 or not 0.0 < hurst_shift < 1.0:
        raise ValueError(
            f"shifted parameter (sigma={sigma_shift:.4g}, H={hurst_shift:.4g}) "
            "is outside the admissible region"
        )

    cache = CriticalCache(design)
    s_diag = delta * (1.0 + sigma * sigma * sqrt(delta) * cache.evals)
    root_s = np.sqrt(s_diag)
    logdet_0 = float(np.sum(np.log(s_diag)))

    shifted = mfbm_bundle(
        MfbmParams(sigma=sigma_shift, hurst=hurst_shift), design
    ).sigma_matrix
    factor = cho_factor(shifted, lower=True)
    logdet_h = 2.0 * float(np.sum(np.log(np.diag(factor[0]))))

    gamma = gamma_crit(sigma).matrix
    h_vec = np.array([h1, h2])
    quad_term = 0.5 * float(h_vec @ gamma @ h_vec)

    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0, 0)))
    remainders = np.empty(reps)
    for i in range(reps):
        z = rng.standard_normal(n)
        y = root_s * z
        x = cache.eigvecs @ y
        loglik_0 = -0.5 * (logdet_0 + float(z @ z))
        loglik_h = -0.5 * (logdet_h + float(x @ cho_solve(factor, x)))
        xi_sigma = cache.score_sigma(sigma, y) * rate_sigma
        xi_hurst = cache.r_hurst(sigma, y) * rate_hurst
        remainders[i] = (
            (loglik_h - loglik_0) - (h1 * xi_sigma + h2 * xi_hurst) + quad_term
        )
    return LanSummary(
        n=n,
        delta=delta,
        h=(h1, h2),
        reps=reps,
        mean_abs_remainder=float(np.mean(np.abs(remainders))),
        mean_remainder=float(np.mean(remainders)),
        sd_remainder=float(np.std(remainders)),
    )
