"""Tests for the spectral/constants layer."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mfboundary.spectral import (
    H_CRITICAL,
    c_coefficient,
    c_log_derivative,
    critical_constants,
    fgn_spectral_density,
    fgn_spectral_density_dH,
    gamma_crit,
    j_integrals,
    profiles,
    weight_profile,
)

EULER_GAMMA = 0.5772156649015328606


def oracle_density(lam: float, hurst: float, terms: int = 300_000) -> float:
    """Brute-force alias sum with an exact integral tail.

    With 3e5 alias terms the midpoint-rule error of the tail replacement
    is O((2 pi terms)^-(2H+2)) ~ 1e-22, far below the comparison level.
    """
    c = c_coefficient(hurst)
    k = np.arange(-terms, terms + 1)
    series = float(np.sum(np.abs(lam + 2.0 * np.pi * k) ** (-(2.0 * hurst + 1.0))))
    edge = 2.0 * np.pi * (terms + 0.5)
    tail = ((edge + lam) ** (-2.0 * hurst) + (edge - lam) ** (-2.0 * hurst)) / (
        4.0 * np.pi * hurst
    )
    return 2.0 * c * (1.0 - math.cos(lam)) * (series + tail)


class TestCriticalConstants:
    def test_k_closed_form(self):
        assert c_coefficient(H_CRITICAL) == pytest.approx(
            3.0 * math.sqrt(2.0 * math.pi) / 8.0, abs=1e-12
        )

    def test_k_value(self):
        assert c_coefficient(H_CRITICAL) == pytest.approx(0.9399856029866254, abs=1e-12)

    def test_beta_closed_form(self):
        beta_explicit = (
            16.0 / 3.0 - 2.0 * EULER_GAMMA - 4.0 * math.log(2.0) - math.pi
        )
        assert c_log_derivative(H_CRITICAL) == pytest.approx(beta_explicit, abs=1e-12)
        assert c_log_derivative(H_CRITICAL) == pytest.approx(-1.7352793722993, abs=1e-10)

    def test_c_log_derivative_matches_finite_difference(self):
        h = 1e-6
        for hurst in (0.55, 0.7, H_CRITICAL, 0.9):
            fd = (
                math.log(c_coefficient(hurst + h)) - math.log(c_coefficient(hurst - h))
            ) / (2.0 * h)
            assert c_log_derivative(hurst) == pytest.approx(fd, rel=1e-7)

    def test_critical_constants_bundle(self):
        cc = critical_constants(3.0)
        assert cc.sigma == 3.0
        assert cc.hurst == H_CRITICAL
        assert cc.eta == pytest.approx(9.0 * cc.k, abs=1e-12)
        assert cc.i_eff == pytest.approx(3.0 * 81.0 / 64.0, abs=1e-12)

    @given(st.floats(min_value=0.2, max_value=5.0))
    def test_gamma_entries_scale_with_sigma(self, sigma):
        g = gamma_crit(sigma)
        m = g.matrix
        assert m[0, 0] == pytest.approx(9.0 * sigma**2 / 16.0, rel=1e-12)
        assert m[0, 1] == pytest.approx(9.0 * sigma**3 / 32.0, rel=1e-12)
        assert m[1, 0] == m[0, 1]
        assert m[1, 1] == pytest.approx(3.0 * sigma**4 / 16.0, rel=1e-12)
        assert g.correlation == pytest.approx(math.sqrt(3.0) / 2.0, abs=1e-12)
        assert g.schur_complement_hh == pytest.approx(3.0 * sigma**4 / 64.0, rel=1e-12)

    def test_gamma_is_positive_definite(self):
        for sigma in (0.5, 1.0, 3.0):
            evals = np.linalg.eigvalsh(gamma_crit(sigma).matrix)
            assert np.all(evals > 0.0)

    def test_gamma_with_alpha_block(self):
        g = gamma_crit(2.0, alpha=0.5)
        m = g.matrix
        assert m.shape == (3, 3)
        assert m[2, 2] == pytest.approx(1.0 / (2.0 * 0.5), abs=1e-12)
        assert m[0, 2] == 0.0 and m[1, 2] == 0.0
        assert np.all(np.linalg.eigvalsh(m) > 0.0)


class TestSpectralDensity:
    @pytest.mark.parametrize("hurst", [0.55, H_CRITICAL, 0.95])
    @pytest.mark.parametrize("lam", [0.1, 1.0, math.pi - 0.1])
    def test_matches_brute_force_oracle(self, hurst, lam):
        ours = float(fgn_spectral_density(np.array(lam), hurst))
        oracle = oracle_density(lam, hurst)
        assert ours == pytest.approx(oracle, rel=1e-12)

    def test_symmetry(self):
        lam = np.array([0.3, 1.2, 2.9])
        assert np.allclose(
            fgn_spectral_density(lam, 0.8), fgn_spectral_density(-lam, 0.8), rtol=1e-14
        )

    def test_positive(self):
        lam = np.linspace(1e-6, math.pi, 50)
        assert np.all(fgn_spectral_density(lam, 0.75) > 0.0)

    def test_low_frequency_singularity(self):
        # f(lam) ~ c_H |lam|^{1-2H} as lam -> 0
        hurst = H_CRITICAL
        lam = np.array([1e-4, 1e-5, 1e-6])
        ratio = fgn_spectral_density(lam, hurst) / (
            c_coefficient(hurst) * np.abs(lam) ** (1.0 - 2.0 * hurst)
        )
        assert np.all(np.abs(ratio - 1.0) < np.array([1e-7, 1e-9, 1e-11]) + 5e-9)

    def test_rejects_zero_and_out_of_band(self):
        with pytest.raises(ValueError):
            fgn_spectral_density(np.array([0.0]), 0.75)
        with pytest.raises(ValueError):
            fgn_spectral_density(np.array([3.5]), 0.75)

    @pytest.mark.parametrize("hurst", [0.6, H_CRITICAL, 0.9])
    def test_dh_matches_finite_difference(self, hurst):
        lam = np.array([0.2, 1.0, 3.0])
        h = 1e-5
        fd = (
            fgn_spectral_density(lam, hurst + h) - fgn_spectral_density(lam, hurst - h)
        ) / (2.0 * h)
        ours = fgn_spectral_density_dH(lam, hurst)
        assert np.allclose(ours, fd, rtol=1e-6)


class TestProfiles:
    def test_weight_profile_shape(self):
        u = np.array([0.01, 1.0, 100.0])
        eta = 0.94
        w = weight_profile(u, eta)
        expected = eta * np.abs(u) ** -0.5 / (1.0 + eta * np.abs(u) ** -0.5)
        assert np.allclose(w, expected, rtol=1e-14)
        assert np.all((w > 0.0) & (w < 1.0))

    def test_weight_profile_tail(self):
        # w(u) ~ eta |u|^{-1/2} for large |u|
        u = np.array([1e8])
        eta = 2.0
        w = float(weight_profile(u, eta)[0])
        assert w == pytest.approx(eta * 1e-4, rel=2e-4)

    def test_profiles_consistency(self):
        cc = critical_constants(1.5)
        u = np.array([0.5, 2.0, 10.0])
        L = 3.0
        g_s, g_h, g_a = profiles(u, cc.eta, L, cc.beta, 1.5, alpha=0.7)
        w = weight_profile(u, cc.eta)
        assert np.allclose(g_s, 2.0 / 1.5 * w, rtol=1e-14)
        assert np.allclose(g_h, w * (2.0 * L + cc.beta - 2.0 * np.log(np.abs(u))), rtol=1e-14)
        assert np.allclose(g_a, -2.0 * 0.7 / (0.7**2 + u**2), rtol=1e-14)

    def test_profiles_without_alpha(self):
        cc = critical_constants(1.0)
        _, _, g_a = profiles(np.array([1.0]), cc.eta, 2.0, cc.beta, 1.0)
        assert g_a is None


class TestJIntegrals:
    def test_reference_values(self):
        beta = c_log_derivative(H_CRITICAL)
        j0, j1, j2 = j_integrals(beta, 2.0)
        assert j0 == pytest.approx(4.0, abs=1e-12)
        assert j1 == pytest.approx(1.05888, abs=1e-4)
        assert j2 == pytest.approx(5.61364, abs=1e-4)

    @given(
        st.floats(min_value=-3.0, max_value=1.0),
        st.floats(min_value=0.5, max_value=10.0),
    )
    def test_cauchy_schwarz_identity(self, beta, L):
        # J0 J2 - J1^2 = (4/3) L^4 exactly for the closed forms
        j0, j1, j2 = j_integrals(beta, L)
        assert j0 * j2 - j1 * j1 == pytest.approx(4.0 / 3.0 * L**4, rel=1e-9)

    def test_closed_forms(self):
        beta, L = -1.2, 3.0
        j0, j1, j2 = j_integrals(beta, L)
        assert j0 == pytest.approx(2.0 * L, abs=1e-13)
        assert j1 == pytest.approx(2.0 * L**2 + 2.0 * beta * L, abs=1e-12)
        assert j2 == pytest.approx(
            8.0 / 3.0 * L**3 + 4.0 * beta * L**2 + 2.0 * beta**2 * L, abs=1e-11
        )
