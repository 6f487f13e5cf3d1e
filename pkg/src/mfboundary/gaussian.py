"""Exact Gaussian log-likelihood, scores, normalizations, and trace moments.

Every score is the centered quadratic form

    S_i = (1/2) (x' Sigma^{-1} dSigma_i Sigma^{-1} x - tr(Sigma^{-1} dSigma_i)),

computed with triangular solves against the Cholesky factor (no explicit
inverses, no symmetric square roots).  The transformed H-score

    R_H = S_H + sigma L S_sigma

removes the exploding -sigma L S_sigma coupling and is the object with a
non-degenerate limit at the critical index; the normalized vector divides by
the critical rates sqrt(n Delta L), sqrt(n Delta) L^{3/2} and sqrt(n Delta).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import log, pi

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .covariance import CovarianceBundle, MfbmParams, MfouParams, SamplingDesign

__all__ = [
    "ScoreVector",
    "NormalizedScores",
    "TraceMoments",
    "log_likelihood",
    "score_vector",
    "normalized_scores",
    "score_trace_moments",
]


@dataclass(frozen=True)
class ScoreVector:
    """Raw scores with the transformed H-score and a design echo."""

    s_sigma: float
    s_hurst: float
    r_hurst: float
    s_alpha: float | None
    n: int
    delta: float
    L: float


@dataclass(frozen=True)
class NormalizedScores:
    """Scores divided by their critical rates.

    xi_sigma = S_sigma / sqrt(n Delta L); xi_hurst = R_H / (sqrt(n Delta) L^{3/2});
    xi_alpha = S_alpha / sqrt(n Delta) (mfOU only).
    """

    xi_sigma: float
    xi_hurst: float
    xi_alpha: float | None = None


@dataclass(frozen=True)
class TraceMoments:
    """Exact dense traces of products of score matrices.

    C = Sigma^{-1} dSigma_sigma, D = M_H + sigma L M_sigma (the critical
    direction), A = Sigma^{-1} dSigma_alpha (mfOU only).  Alpha entries are
    None for mfBm bundles.
    """

    tr_cc: float
    tr_cd: float
    tr_dd: float
    tr_aa: float | None = None
    tr_ca: float | None = None
    tr_da: float | None = None


def log_likelihood(bundle: CovarianceBundle, x: np.ndarray) -> float:
    """Exact Gaussian log-density -(n log 2 pi + log det Sigma + x' Sigma^{-1} x)/2."""
    x = np.asarray(x, dtype=float)
    n = bundle.n
    if x.shape != (n,):
        raise ValueError(f"observation vector must have shape ({n},), got {x.shape}")
    factor = cho_factor(bundle.sigma_matrix, lower=True)
    logdet = 2.0 * float(np.sum(np.log(np.diag(factor[0]))))
    quad_form = float(x @ cho_solve(factor, x))
    return -0.5 * (n * log(2.0 * pi) + logdet + quad_form)


def score_vector(
    bundle: CovarianceBundle,
    x: np.ndarray,
    params: MfbmParams | MfouParams,
    design: SamplingDesign,
) -> ScoreVector:
    """All raw scores at ``params`` plus the transformed H-score.

    The quadratic part of each score uses one solve a = Sigma^{-1} x; the
    trace part contracts Sigma^{-1} against the derivative matrix.
    """
    x = np.asarray(x, dtype=float)
    factor = cho_factor(bundle.sigma_matrix, lower=True)
    a = cho_solve(factor, x)
    sigma_inv = cho_solve(factor, np.eye(bundle.n))

    def raw_score(d_mat: np.ndarray) -> float:
        return 0.5 * (float(a @ d_mat @ a) - float(np.sum(sigma_inv * d_mat)))

    s_sigma = raw_score(bundle.d_sigma)
    s_hurst = raw_score(bundle.d_hurst)
    s_alpha = raw_score(bundle.d_alpha) if bundle.d_alpha is not None else None
    r_hurst = s_hurst + params.sigma * design.L * s_sigma
    return ScoreVector(
        s_sigma=s_sigma,
        s_hurst=s_hurst,
        r_hurst=r_hurst,
        s_alpha=s_alpha,
        n=design.n,
        delta=design.delta,
        L=design.L,
    )


def normalized_scores(
    sv: ScoreVector, design: SamplingDesign, sigma: float
) -> NormalizedScores:
    """Divide by the critical rates; ``sigma`` is the value used in R_H.

    The transformed score is recombined from the raw components so that a
    plug-in sigma (feasible mode) can differ from the sigma the raw scores
    were evaluated at (oracle mode uses the same value and reproduces
    ``sv.r_hurst`` exactly).
    """
    n, delta, L = design.n, design.delta, design.L
    if L <= 0.0:
        raise ValueError("normalization requires delta < 1 so that L > 0")
    rate_sigma = (n * delta * L) ** 0.5
    rate_hurst = (n * delta) ** 0.5 * L**1.5
    r_hurst = sv.s_hurst + sigma * L * sv.s_sigma
    xi_alpha = None
    if sv.s_alpha is not None:
        xi_alpha = sv.s_alpha / (n * delta) ** 0.5
    return NormalizedScores(
        xi_sigma=sv.s_sigma / rate_sigma,
        xi_hurst=r_hurst / rate_hurst,
        xi_alpha=xi_alpha,
    )


def score_trace_moments(
    bundle: CovarianceBundle,
    params: MfbmParams | MfouParams,
    design: SamplingDesign,
) -> TraceMoments:
    """Exact traces tr(C^2), tr(CD), tr(D^2) (and A-products for mfOU).

    Uses the similarity-invariant identity tr((Sigma^{-1/2} dSigma
    Sigma^{-1/2})^2) = tr((Sigma^{-1} dSigma)^2), so only Cholesky solves
    are needed.  tr(XY) is contracted as sum(X * Y') without forming XY.
    """
    factor = cho_factor(bundle.sigma_matrix, lower=True)
    c_mat = cho_solve(factor, bundle.d_sigma)
    m_hurst = cho_solve(factor, bundle.d_hurst)
    d_mat = m_hurst + params.sigma * design.L * c_mat

    def tr_prod(x_mat: np.ndarray, y_mat: np.ndarray) -> float:
        return float(np.sum(x_mat * y_mat.T))

    tr_cc = tr_prod(c_mat, c_mat)
    tr_cd = tr_prod(c_mat, d_mat)
    tr_dd = tr_prod(d_mat, d_mat)
    if bundle.d_alpha is None:
        return TraceMoments(tr_cc=tr_cc, tr_cd=tr_cd, tr_dd=tr_dd)
    a_mat = cho_solve(factor, bundle.d_alpha)
    return TraceMoments(
        tr_cc=tr_cc,
        tr_cd=tr_cd,
        tr_dd=tr_dd,
        tr_aa=tr_prod(a_mat, a_mat),
        tr_ca=tr_prod(c_mat, a_mat),
        tr_da=tr_prod(d_mat, a_mat),
    )
