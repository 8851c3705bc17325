import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from muskat3d.grid import (
    TWO_PI,
    InterfaceField,
    NonFiniteFieldError,
    evaluate_points,
    fractional_laplacian,
    from_spectral,
    gradient,
    grid_coordinates,
    sample_shifted,
    to_spectral,
    upsample,
    wave_vectors,
)
from muskat3d.profiles import gaussian_bump, random_bandlimited, single_mode


def cos_mode(n, mode=(1, 0), amplitude=1.0, L=TWO_PI):
    return single_mode(n, L, amplitude=amplitude, mode=mode)


class TestInterfaceField:
    def test_rejects_non_power_of_two(self):
        with pytest.raises(ValueError):
            InterfaceField(np.zeros((12, 12)))

    def test_rejects_non_finite_with_location(self):
        v = np.zeros((8, 8))
        v[3, 5] = np.nan
        with pytest.raises(NonFiniteFieldError, match=r"\(3, 5\)"):
            InterfaceField(v)

    def test_values_read_only(self):
        f = cos_mode(8)
        with pytest.raises(ValueError):
            f.values[0, 0] = 1.0

    def test_spectral_cache_consistent(self):
        f = random_bandlimited(32, slope=1.0, seed=3)
        back = from_spectral(f.spectral, f.period)
        assert np.max(np.abs(back.values - f.values)) < 1e-12 * np.max(np.abs(f.values))


class TestTransforms:
    def test_zero_field(self):
        assert np.all(to_spectral(InterfaceField.zeros(16)) == 0)

    @pytest.mark.parametrize("n", [4, 8, 64])
    def test_single_mode_two_coefficients(self, n):
        c = to_spectral(cos_mode(n))
        nz = np.argwhere(np.abs(c) > 1e-14)
        assert sorted(map(tuple, nz)) == sorted([(1, 0), (n - 1, 0)])

    def test_white_noise_round_trip(self):
        v = np.random.default_rng(0).normal(size=(64, 64))
        f = InterfaceField(v)
        back = from_spectral(to_spectral(f))
        assert np.max(np.abs(back.values - v)) < 1e-12

    def test_nyquist_multiplier_even(self):
        w = wave_vectors(16)
        m = w.multiplier(1.0)
        assert np.array_equal(m, m[(-np.arange(16)) % 16][:, (-np.arange(16)) % 16])


class TestFractionalLaplacian:
    @pytest.mark.parametrize("mode", [(1, 0), (2, 3), (5, -1)])
    def test_eigenfunction(self, mode):
        f = cos_mode(32, mode, amplitude=0.7)
        got = fractional_laplacian(f, 0.5)
        assert np.allclose(got.values, np.hypot(*mode) * f.values, atol=1e-13)

    def test_constants_in_kernel(self):
        f = InterfaceField(np.full((16, 16), 2.5))
        assert np.max(np.abs(fractional_laplacian(f, 0.5).values)) == 0.0

    def test_negative_order_needs_zero_mean(self):
        with pytest.raises(ValueError):
            fractional_laplacian(InterfaceField(np.ones((8, 8))), -0.5)

    @pytest.mark.parametrize("s1,s2", [(0.5, 0.5), (-0.5, 1.25), (1.0, -1.0)])
    def test_composition(self, s1, s2):
        f = random_bandlimited(32, slope=1.0, seed=1)
        a = fractional_laplacian(fractional_laplacian(f, s1), s2).values
        b = fractional_laplacian(f, s1 + s2).values
        assert np.max(np.abs(a - b)) <= 1e-10 * np.max(np.abs(b))

    def test_pv_quadrature_oracle_gaussian(self):
        """Spectral Lambda against the PV integral, up to a fitted constant.

        The oracle integrates (f(x) - f(x - y)) / |y|^3 over the whole plane
        for an unperiodized Gaussian of width 0.3 centred in a 2 pi cell, at
        16 points. The torus images are below 1e-40 there.
        """
        sigma, n = 0.3, 128
        f = gaussian_bump(n, TWO_PI, sigma=sigma)
        lam = fractional_laplacian(f, 0.5)
        c = np.pi
        rng = np.random.default_rng(16)
        idx = rng.integers(n // 2 - 8, n // 2 + 8, size=(16, 2))
        x1, x2 = grid_coordinates(n)

        def g(p):
            return np.exp(-0.5 * ((p[0] - c) ** 2 + (p[1] - c) ** 2) / sigma**2)

        mass = TWO_PI * sigma**2
        k1, k2 = np.meshgrid(np.arange(-20, 21), np.arange(-20, 21), indexing="ij")
        keep = (k1 != 0) | (k2 != 0)
        shifts = TWO_PI * np.stack([k1[keep], k2[keep]], axis=-1)

        def image_term(x):
            # periodic copies are far from x, where each acts as a point mass
            d = np.hypot(*(x - c - shifts).T)
            return -mass * np.sum(d**-3.0)

        oracle, spectral = [], []
        for i, j in idx:
            x = np.array([x1[i, j], x2[i, j]])
            gx = g(x)

            def integrand(theta, r):
                e = np.array([np.cos(theta), np.sin(theta)])
                # symmetric pair removes the odd singular part
                return (2 * gx - g(x - r * e) - g(x + r * e)) / (2 * r * r)

            val, _ = integrate.dblquad(integrand, 0.0, 4.0, 0.0, TWO_PI, epsabs=1e-11, epsrel=1e-10)
            # tail |y| > 4: f(x - y) is negligible, leaving f(x) * 2 pi / 4
            oracle.append(val + gx * TWO_PI / 4.0 + image_term(x))
            spectral.append(lam.values[i, j])
        oracle, spectral = np.array(oracle), np.array(spectral)
        k = np.dot(oracle, spectral) / np.dot(oracle, oracle)
        assert k == pytest.approx(1.0 / TWO_PI, rel=1e-3)
        assert np.max(np.abs(k * oracle - spectral)) < 1e-3 * np.max(np.abs(spectral))


class TestGradient:
    def test_single_mode(self):
        n = 32
        f = cos_mode(n)
        gx, gy = gradient(f)
        x1, _ = grid_coordinates(n)
        assert np.allclose(gx.values, -np.sin(x1), atol=1e-13)
        assert np.max(np.abs(gy.values)) < 1e-13

    def test_constant(self):
        gx, gy = gradient(InterfaceField(np.full((8, 8), 4.0)))
        assert np.max(np.abs(gx.values)) == 0 and np.max(np.abs(gy.values)) == 0

    def test_matches_centered_differences_second_order(self):
        base = random_bandlimited(16, slope=1.0, seed=2)
        errs = []
        for factor in (4, 8, 16):
            f = upsample(base, factor)
            h = f.period / f.n
            fd = (np.roll(f.values, -1, 0) - np.roll(f.values, 1, 0)) / (2 * h)
            errs.append(np.max(np.abs(fd - gradient(f)[0].values)))
        order = np.polyfit(np.log([4, 8, 16]), np.log(errs), 1)[0]
        assert order == pytest.approx(-2.0, abs=0.1)


class TestSampleShifted:
    @pytest.mark.parametrize("method", ["spectral", "bilinear"])
    def test_zero_shift(self, method):
        f = random_bandlimited(16, slope=1.0, seed=0)
        assert np.allclose(sample_shifted(f, (0.0, 0.0), method).values, f.values, atol=1e-14)

    @pytest.mark.parametrize("method", ["spectral", "bilinear"])
    def test_full_cell_is_roll(self, method):
        f = random_bandlimited(16, slope=1.0, seed=0)
        h = f.period / f.n
        got = sample_shifted(f, (h, -2 * h), method).values
        assert np.allclose(got, np.roll(f.values, (1, -2), axis=(0, 1)), atol=1e-13)

    def test_half_cell_analytic_phase(self):
        n = 32
        f = cos_mode(n, (3, 2))
        h = f.period / n
        x1, x2 = grid_coordinates(n)
        got = sample_shifted(f, (0.5 * h, 0.5 * h)).values
        assert np.max(np.abs(got - np.cos(3 * (x1 - 0.5 * h) + 2 * (x2 - 0.5 * h)))) < 1e-12

    @settings(max_examples=25, deadline=None)
    @given(
        a=st.tuples(st.floats(-7, 7), st.floats(-7, 7)),
        b=st.tuples(st.floats(-7, 7), st.floats(-7, 7)),
    )
    def test_shift_composition(self, a, b):
        f = random_bandlimited(16, slope=1.0, seed=4)
        one = sample_shifted(f, (a[0] + b[0], a[1] + b[1])).values
        two = sample_shifted(sample_shifted(f, a), b).values
        assert np.max(np.abs(one - two)) < 1e-10

    def test_gradient_commutes_with_shift(self):
        f = random_bandlimited(16, slope=1.0, seed=5)
        s = (0.37, -1.21)
        a = gradient(sample_shifted(f, s))
        b = [sample_shifted(g, s) for g in gradient(f)]
        for u, v in zip(a, b):
            assert np.max(np.abs(u.values - v.values)) < 1e-10

    def test_evaluate_points_matches_shift(self):
        f = random_bandlimited(16, slope=1.0, seed=6)
        x1, x2 = grid_coordinates(16)
        s = np.array([0.3, 0.11])
        pts = np.stack([x1.ravel() - s[0], x2.ravel() - s[1]], axis=-1)
        got = evaluate_points(f, pts).reshape(16, 16)
        assert np.max(np.abs(got - sample_shifted(f, s).values)) < 1e-12
