import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from muskat3d.grid import TWO_PI, InterfaceField, grid_coordinates, upsample
from muskat3d.norms import (
    NormReport,
    amplitude_threshold,
    besov_seminorm,
    hoelder_interpolation_gap,
    lipschitz_seminorm,
    norm_report,
    smallness_criterion,
    smallness_from_norms,
    sobolev_seminorm,
)
from muskat3d.profiles import random_bandlimited, single_mode, steep_ridge


def _j0_series(z, weight, start):
    """sum_{m >= start} (-1)^m weight(m) (z/2)^(2m) / (m!)^2, free of cancellation at small z."""
    total, m = mpmath.mpf(0), start
    while True:
        term = (-1) ** m * weight(m) * (z / 2) ** (2 * m) / mpmath.factorial(m) ** 2
        total += term
        if m > start + 4 and abs(term) < mpmath.mpf(10) ** (-40) * abs(total):
            return total
        m += 1


def besov_single_mode_oracle(amplitude, k, s, p, L=TWO_PI):
    """Besov (s, p, 2) semi-norm of amplitude * cos(k x1) by 1D quadrature.

    The angular integral has a closed form in J0, leaving a radial integral
    over [0, L/2] done in extended precision.
    """
    with mpmath.workdps(50):
        k = mpmath.mpf(k)
        if s >= 1:
            # ||2f - f(.-y) - f(.+y)||_p = c_p * 2A (1 - cos(k . y)); angular pi (3 - 4 J0(z) + J0(2z))
            angular = lambda z: mpmath.pi * _j0_series(z, lambda m: 4**m - 4, 2)
            scale = (np.sqrt(2.0) * amplitude * L if p == 2 else 2.0 * amplitude) ** 2
        else:
            # ||f - f(.-y)||_2^2 = A^2 L^2 (1 - cos(k . y)); angular 2 pi (1 - J0(z))
            angular = lambda z: -2 * mpmath.pi * _j0_series(z, lambda m: 1, 1)
            scale = amplitude**2 * L**2
        val = mpmath.quad(lambda r: r ** (-2 * s - 1) * angular(k * r), mpmath.linspace(0, L / 2, 9))
        return float(mpmath.sqrt(scale * val))


class TestSobolev:
    @pytest.mark.parametrize("s", [0.0, 1.0, 2.0, 2.5, 3.0])
    @pytest.mark.parametrize("mode", [(1, 0), (2, 1), (0, 4)])
    def test_single_mode(self, s, mode):
        A = 0.3
        f = single_mode(32, amplitude=A, mode=mode)
        exact = A * np.hypot(*mode) ** s * np.sqrt(2 * np.pi**2)
        assert sobolev_seminorm(f, s) == pytest.approx(exact, rel=1e-12)

    def test_constant(self):
        f = InterfaceField(np.full((16, 16), 3.0))
        assert all(sobolev_seminorm(f, s) == 0 for s in (0.5, 2.0, 2.5))

    def test_direct_mode_sum(self):
        rng = np.random.default_rng(9)
        modes = [(1, 2), (3, -1), (0, 5), (4, 4)]
        amps = rng.normal(size=len(modes))
        phases = rng.uniform(0, TWO_PI, size=len(modes))
        x1, x2 = grid_coordinates(32)
        v = sum(a * np.cos(m[0] * x1 + m[1] * x2 + ph) for a, m, ph in zip(amps, modes, phases))
        f = InterfaceField(v)
        for s in (1.0, 2.0, 2.5):
            direct = np.sqrt(sum(a * a * np.hypot(*m) ** (2 * s) for a, m in zip(amps, modes)) * 2 * np.pi**2)
            assert sobolev_seminorm(f, s) == pytest.approx(direct, rel=1e-12)

    @pytest.mark.parametrize("s", [-0.1, 3.5])
    def test_order_range(self, s):
        with pytest.raises(ValueError):
            sobolev_seminorm(single_mode(8), s)

    def test_h2_scale_invariance(self):
        """lambda^-1 f(lambda x) on the period L / lambda keeps H^2 and the slope."""
        f = random_bandlimited(32, slope=1.0, seed=3)
        lam = 2.0
        g = InterfaceField(f.values / lam, f.period / lam)
        assert sobolev_seminorm(g, 2.0) == pytest.approx(sobolev_seminorm(f, 2.0), rel=1e-2)
        assert lipschitz_seminorm(g) == pytest.approx(lipschitz_seminorm(f), rel=1e-12)


class TestBesov:
    def test_constant(self):
        f = InterfaceField(np.full((16, 16), -2.0))
        for s, p, q in ((0.5, 2, 2), (1.5, np.inf, 2), (1.2, 1, np.inf)):
            assert besov_seminorm(f, s, p, q) == 0

    @pytest.mark.parametrize("s,p,mode", [(1.5, 2, (2, 0)), (0.5, 2, (3, 0)), (1.5, np.inf, (1, 0))])
    def test_single_mode_oracle(self, s, p, mode):
        f = single_mode(64, amplitude=0.8, mode=mode)
        exact = besov_single_mode_oracle(0.8, mode[0], s, p)
        assert besov_seminorm(f, s, p, 2) == pytest.approx(exact, rel=1e-3)

    def test_refined_quadrature_cos(self):
        f = single_mode(64, amplitude=1.0)
        coarse = besov_seminorm(f, 1.5, np.inf, 2)
        fine = besov_seminorm(f, 1.5, np.inf, 2, radial=256, angular=128)
        assert coarse == pytest.approx(fine, rel=2e-2)

    def test_mode_independent_ratio(self):
        ratios = []
        for mode in ((2, 0), (2, 2), (3, 1), (4, 0), (4, 3)):
            f = single_mode(64, mode=mode)
            ratios.append(besov_seminorm(f, 1.5, 2, 2) / sobolev_seminorm(f, 1.5))
        assert (max(ratios) - min(ratios)) / np.mean(ratios) < 2e-2

    def test_q_embedding_corpus(self):
        """q = 4 never exceeds a fixed multiple of q = 2 across 20 fields."""
        ratios = []
        for seed in range(20):
            f = random_bandlimited(32, slope=1.0, seed=seed, kmax=6)
            ratios.append(besov_seminorm(f, 1.5, 2, 4) / besov_seminorm(f, 1.5, 2, 2))
        ratios = np.array(ratios)
        assert np.all(ratios > 0)
        assert ratios.max() / ratios.min() < 2.0

    @pytest.mark.parametrize("s", [0.0, 2.0, -1.0])
    def test_order_range(self, s):
        with pytest.raises(ValueError):
            besov_seminorm(single_mode(8), s, 2, 2)

    def test_exponent_range(self):
        with pytest.raises(ValueError):
            besov_seminorm(single_mode(8), 0.5, 0.5, 2)


class TestLipschitz:
    @pytest.mark.parametrize("A", [0.1, 1.0, 7.5])
    def test_single_mode(self, A):
        assert lipschitz_seminorm(single_mode(32, amplitude=A)) == pytest.approx(A, rel=1e-13)

    def test_constant(self):
        assert lipschitz_seminorm(InterfaceField(np.ones((8, 8)))) == 0

    @pytest.mark.parametrize("seed", range(5))
    def test_lower_bounds_refined_grid(self, seed):
        f = random_bandlimited(16, slope=2.0, seed=seed, kmax=5)
        assert lipschitz_seminorm(f) <= lipschitz_seminorm(upsample(f, 4)) + 1e-10


class TestVanishing:
    @settings(max_examples=20, deadline=None)
    @given(c=st.floats(-1e3, 1e3), eps=st.floats(1e-6, 1.0))
    def test_zero_iff_constant(self, c, eps):
        const = InterfaceField(np.full((16, 16), c))
        bumped = const + single_mode(16, amplitude=eps)
        for fn in (lambda f: sobolev_seminorm(f, 2.0), lipschitz_seminorm, lambda f: besov_seminorm(f, 0.5, 2, 2)):
            assert fn(const) <= 1e-12
            assert fn(bumped) > 1e-12


class TestNormReport:
    def test_interpolation_inequality(self):
        for seed in range(5):
            f = random_bandlimited(32, slope=1.0, seed=seed)
            rep = norm_report(f, with_h73=True)
            bound = rep.h2 ** (1 / 3) * rep.h52 ** (2 / 3)
            assert rep.h73 <= bound * (1 + 1e-10)
            assert hoelder_interpolation_gap(f) <= 1e-10 * bound

    def test_besov_entries(self):
        rep = norm_report(single_mode(32), 0.5, besov=[(1.5, 2, 2)])
        (s, p, q, val), = rep.besov_entries
        assert (s, p, q) == (1.5, 2, 2) and val > 0

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            NormReport(timestamp=0.0, h2=-1.0, h52=0.0, lipschitz=0.0)


class TestSmallness:
    def test_zero_data(self):
        rep = smallness_criterion(InterfaceField.zeros(16))
        assert rep.passed
        assert rep.margin_first == pytest.approx(2.0**-1.5)
        assert rep.bound == pytest.approx(2.0**-1.5)

    def test_huge_data_fails(self):
        assert not smallness_criterion(single_mode(16, amplitude=100.0)).passed

    def test_closed_form_conditions(self):
        rep = smallness_from_norms(0.1, 1.0, constant=0.125)
        w = 3.0**1.5
        assert rep.lhs_first == pytest.approx(0.125 * 0.11)
        assert rep.first == (0.125 * 0.11 < 1 / w)
        assert rep.ratio_second == pytest.approx(0.01 * w / (1 - 0.125 * 0.11 * w))

    @pytest.mark.parametrize("profile", ["mode", "ridge"])
    def test_threshold_is_monotone(self, profile):
        f = single_mode(32) if profile == "mode" else steep_ridge(32, k_target=5.0, width=1.0)
        a = amplitude_threshold(f)
        for factor in np.linspace(0.05, 0.999, 8):
            assert smallness_criterion(f * (factor * a)).passed
        for factor in (1.001, 1.5, 4.0):
            assert not smallness_criterion(f * (factor * a)).passed

    def test_constant_must_be_positive(self):
        with pytest.raises(ValueError):
            smallness_from_norms(0.1, 0.1, constant=0.0)
