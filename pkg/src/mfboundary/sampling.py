"""Exact Gaussian samplers: fGn circulant embedding, mfBm increments, mfOU paths.

Fractional Gaussian noise is drawn by circulant embedding of size 2(n-1):
exact when the embedding eigenvalues are nonnegative (they are for every
design this package exercises), with an automatic Cholesky fallback
otherwise.  mfBm increments combine an fGn block with an independent
Brownian block; mfOU paths come from a Cholesky factor of the stationary
covariance.

Seeding is counter-based: replication ``rep`` of a run seeded with ``seed``
draws from ``SeedSequence(seed, spawn_key=(rep, stream))``, with a distinct
``stream`` index per independent noise source, so parallel and serial
replication orders produce identical output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cholesky, toeplitz

from .covariance import (
    MfbmParams,
    MfouParams,
    SamplingDesign,
    fgn_autocovariance,
    mfou_bundle,
    mfou_critical_rows,
)
from .spectral import H_CRITICAL

__all__ = [
    "FgnSample",
    "rng_for",
    "sample_fgn",
    "sample_mfbm_increments",
    "sample_mfou_path",
    "mfou_sampling_cholesky",
]

#: stream indices — each independent noise source gets its own substream
_STREAM_FGN = 0
_STREAM_BROWNIAN = 1
_STREAM_LEVELS = 2

#: relative tolerance below which a negative embedding eigenvalue is noise
_EMBED_TOL = 1e-9


@dataclass(frozen=True)
class FgnSample:
    """fGn draw plus a tag for which backend produced it."""

    values: np.ndarray
    backend: str  # "circulant" or "cholesky"


def rng_for(seed: int, rep: int, stream: int) -> np.random.Generator:
    """Deterministic generator for (seed, replication, stream)."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(rep, stream)))


def _embedding_eigenvalues(n: int, hurst: float) -> np.ndarray:
    """Eigenvalues of the 2(n-1) circulant embedding of the fGn covariance."""
    gamma = fgn_autocovariance(np.arange(n), hurst)
    circ = np.concatenate([gamma, gamma[-2:0:-1]])
    return np.fft.fft(circ).real


def sample_fgn(
    n: int, hurst: float, seed: int, rep: int = 0, rng: np.random.Generator | None = None
) -> FgnSample:
    """Exact draw of ``n`` unit-variance fGn values.

    Circulant embedding of size m = 2(n-1); the draw is assembled from a
    Hermitian-symmetric complex Gaussian vector in frequency domain, so
    exactly ``n`` real Gaussians with the target covariance come out.  If
    the embedding has a genuinely negative eigenvalue the sampler falls
    back to a dense Cholesky (exact as well, O(n^3) once).
    """
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    if rng is None:
        rng = rng_for(seed, rep, _STREAM_FGN)
    if n == 1:
        return FgnSample(values=rng.standard_normal(1), backend="circulant")

    eig = _embedding_eigenvalues(n, hurst)
    if eig.min() < -_EMBED_TOL * eig.max():
        gamma = fgn_autocovariance(np.arange(n), hurst)
        lower = cholesky(toeplitz(gamma), lower=True)
        return FgnSample(values=lower @ rng.standard_normal(n), backend="cholesky")

    eig = np.clip(eig, 0.0, None)
    m = 2 * (n - 1)
    w = np.empty(m, dtype=complex)
    w[0] = np.sqrt(eig[0]) * rng.standard_normal()
    w[n - 1] = np.sqrt(eig[n - 1]) * rng.standard_normal()
    interior = rng.standard_normal((n - 2, 2)) if n > 2 else np.empty((0, 2))
    half = np.sqrt(eig[1 : n - 1] / 2.0)
    w[1 : n - 1] = half * (interior[:, 0] + 1j * interior[:, 1])
    w[n:] = np.conj(w[1 : n - 1][::-1])
    x = np.fft.fft(w).real / np.sqrt(m)
    return FgnSample(values=x[:n], backend="circulant")


def sample_mfbm_increments(
    params: MfbmParams, design: SamplingDesign, seed: int, rep: int = 0
) -> np.ndarray:
    """mfBm increment vector: sigma Delta^H fGn + sqrt(Delta) i.i.d. normals."""
    fgn = sample_fgn(design.n, params.hurst, seed, rep)
    brownian_rng = rng_for(seed, rep, _STREAM_BROWNIAN)
    return (
        params.sigma * design.delta**params.hurst * fgn.values
        + design.delta**0.5 * brownian_rng.standard_normal(design.n)
    )


def mfou_sampling_cholesky(params: MfouParams, design: SamplingDesign) -> np.ndarray:
    """Lower Cholesky factor of the stationary mfOU covariance.

    Uses the fast critical kernel route at H = 3/4 and entry quadrature
    otherwise; precompute this once when drawing many replications.
    """
    if params.hurst == H_CRITICAL:
        row = mfou_critical_rows(params, design)["r"]
        return cholesky(toeplitz(row), lower=True)
    return cholesky(mfou_bundle(params, design).sigma_matrix, lower=True)


def sample_mfou_path(
    params: MfouParams,
    design: SamplingDesign,
    seed: int,
    rep: int = 0,
    chol_lower: np.ndarray | None = None,
) -> np.ndarray:
    """Exact stationary mfOU sample of length n.

    Pass ``chol_lower`` (from :func:`mfou_sampling_cholesky`) to amortize
    the factorization across replications.
    """
    if chol_lower is None:
        chol_lower = mfou_sampling_cholesky(params, design)
    rng = rng_for(seed, rep, _STREAM_LEVELS)
    return chol_lower @ rng.standard_normal(design.n)
