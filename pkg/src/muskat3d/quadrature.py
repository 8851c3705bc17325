"""Polar quadrature for singular y-integrals and far-field tail multipliers.

Integrals over the punctured plane are written in polar form y = r e(theta).
The angular rule pairs every direction with its opposite, so odd singular
parts cancel node by node. The radial rule is Gauss-Legendre in log r on
[r_min, R], where the integrand (after multiplying by the polar Jacobian and
converting dr to r d(log r)) stays bounded at both ends.

Beyond R the kernels are expanded in powers of (f(x) - f(x-y)) / |y| and each
power becomes a radial Fourier multiplier, tabulated here.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
from scipy import special

from .grid import TWO_PI, wave_vectors

INNER_POLICIES = ("taylor", "drop")

# the kernel series in the far field is used only where |u| <= Q_MAX
Q_MAX = 0.35


@dataclass(frozen=True)
class PvQuadrature:
    """Resolution and cutoff policy of the polar y-quadrature.

    ``r_min = r_min_factor * L / n`` and ``R = r_outer_factor * L``. The inner
    disk |y| < r_min is either filled with its leading Taylor term or dropped.
    ``tail_order`` is the number of kernel-series terms used beyond R.
    """

    radial: int = 48
    angular: int = 32
    r_min_factor: float = 0.25
    r_outer_factor: float = 0.5
    inner: str = "taylor"
    tail_order: int = 4
    symmetrize: bool = True

    def __post_init__(self):
        if self.radial < 2:
            raise ValueError(f"radial node count must be >= 2, got {self.radial}")
        if self.angular < 4 or self.angular % 4:
            raise ValueError(f"angular node count must be a positive multiple of 4, got {self.angular}")
        if not self.r_min_factor > 0:
            raise ValueError("r_min_factor must be positive")
        if not 0 < self.r_outer_factor:
            raise ValueError("r_outer_factor must be positive")
        if self.inner not in INNER_POLICIES:
            raise ValueError(f"inner policy must be one of {INNER_POLICIES}, got {self.inner!r}")
        if not 0 <= self.tail_order <= 8:
            raise ValueError(f"tail_order must be in [0, 8], got {self.tail_order}")
        if not self.symmetrize:
            raise ValueError("unpaired angular sums are not supported; principal values need pairing")

    def refined(self, factor: int = 2) -> "PvQuadrature":
        """Same policy with ``factor`` times more radial and angular nodes."""
        return PvQuadrature(
            self.radial * factor, self.angular * factor, self.r_min_factor,
            self.r_outer_factor, self.inner, self.tail_order, self.symmetrize,
        )

    def r_min(self, n: int, period: float) -> float:
        return self.r_min_factor * period / n

    def r_outer(self, period: float) -> float:
        return self.r_outer_factor * period

    def angles(self) -> tuple[np.ndarray, float]:
        """Half-circle directions theta_j in [0, pi) and the weight of each pair.

        Each node stands for the pair (theta_j, theta_j + pi), so the full
        angular weight is ``angular * weight = 2 pi``.
        """
        half = self.angular // 2
        theta = np.arange(half) * (np.pi / half)
        return theta, TWO_PI / self.angular

    def radial_rule(self, n: int, period: float, outer: float | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Radii and log-measure weights on [r_min, outer].

        Weights integrate d(log r). When ``outer`` exceeds the configured R,
        an extra band [R, outer] is appended with the same node density per
        unit of log r.
        """
        lo = self.r_min(n, period)
        hi = self.r_outer(period)
        if not hi > lo:
            raise ValueError(f"outer radius {hi} must exceed r_min {lo}")
        r, w = _log_gauss(lo, hi, self.radial)
        if outer is not None and outer > hi * (1 + 1e-12):
            extra = max(2, int(np.ceil(self.radial * np.log(outer / hi) / np.log(hi / lo))))
            r2, w2 = _log_gauss(hi, outer, extra)
            r, w = np.concatenate([r, r2]), np.concatenate([w, w2])
        return r, w

    def effective_outer(self, oscillation: float, period: float) -> float:
        """Outer radius at which the far-field kernel series converges fast.

        Grows in half-octave steps from R until oscillation / radius <= Q_MAX,
        so repeated calls on slowly varying fields hit cached tables.
        """
        hi = self.r_outer(period)
        need = oscillation / Q_MAX
        if self.tail_order == 0 or need <= hi:
            return hi
        steps = int(np.ceil(2.0 * np.log2(need / hi)))
        return hi * 2.0 ** (steps / 2.0)


def _log_gauss(lo: float, hi: float, m: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(m)
    a, b = np.log(lo), np.log(hi)
    s = 0.5 * (b - a) * x + 0.5 * (b + a)
    return np.exp(s), 0.5 * (b - a) * w


def kernel_series_coefficients(order: int) -> np.ndarray:
    """c_j with (1 + u^2)^(-3/2) = sum_j c_j u^(2j), j = 0..order."""
    return np.array([special.binom(-1.5, j) for j in range(order + 1)])


# ---------------------------------------------------------------------------
# radial Fourier multipliers of the exterior region |y| > R


def bessel_tail_integral(x: np.ndarray, order: int, power: float) -> np.ndarray:
    """int_x^inf J_order(t) t^-power dt for an array of x > 0.

    The piece [x, max(x, 10)] uses Gauss-Legendre in log t. From X = max(x, 10)
    on, J is the real part of the Hankel function H^(1), which decays like
    exp(-s) along X + i s, so the rotated contour integral is computed by
    Gauss-Laguerre without any oscillation.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    X = np.maximum(x, 10.0)
    g, gw = np.polynomial.legendre.leggauss(64)
    a, b = np.log(x), np.log(X)
    t = np.exp(0.5 * (b - a)[:, None] * g + 0.5 * (b + a)[:, None])
    wt = 0.5 * (b - a)[:, None] * gw * t
    direct = (special.jv(order, t) * t**-power * wt).sum(axis=1)
    s, sw = special.roots_laguerre(48)
    z = X[:, None] + 1j * s[None, :]
    h = special.hankel1(order, z) * z**-power * np.exp(s)[None, :]
    rotated = (1j * h * sw).sum(axis=1).real
    return direct + rotated


def exterior_radial_integrals(kvals: np.ndarray, outer: float, p: int) -> tuple[np.ndarray, np.ndarray]:
    """I0(k) = int_R^inf J0(kr) r^(1-p) dr and I1(k) = int_R^inf J1(kr) r^(2-p) dr."""
    k = np.asarray(kvals, dtype=float)
    i0 = np.full_like(k, outer ** (2 - p) / (p - 2))
    i1 = np.zeros_like(k)
    nz = k > 0
    kz = k[nz]
    if kz.size:
        i0[nz] = kz ** (p - 2) * bessel_tail_integral(kz * outer, 0, p - 1)
        i1[nz] = kz ** (p - 3) * bessel_tail_integral(kz * outer, 1, p - 2)
    return i0, i1


@dataclass(frozen=True, eq=False)
class TailTables:
    """Spectral multipliers for integrals over |y| > R, one set per power p.

    ``scalar[p]`` maps h to int h(x - y) |y|^-p dy,
    ``vector[p]`` is the common factor of int y h(x - y) |y|^-p dy, whose
    component i multiplier is ``-i * xi_i / |xi| * vector[p]``,
    ``flux[p]`` maps h to int y . grad h(x - y) |y|^-p dy.
    p = 3 carries the linear kernel, p = 5, 7, ... the series terms.
    """

    outer: float
    scalar: dict
    vector: dict
    flux: dict


@functools.lru_cache(maxsize=16)
def tail_tables(n: int, period: float, outer: float, max_order: int) -> TailTables:
    waves = wave_vectors(n, period)
    uniq, inv = np.unique(waves.modulus_sq_index, return_inverse=True)
    kvals = np.sqrt(uniq.astype(float)) * (TWO_PI / period)
    scalar, vector, flux = {}, {}, {}
    for j in range(max_order + 1):
        p = 3 + 2 * j
        i0, i1 = exterior_radial_integrals(kvals, outer, p)
        scalar[p] = TWO_PI * i0[inv].reshape(n, n)
        vector[p] = TWO_PI * i1[inv].reshape(n, n)
        flux[p] = waves.modulus * vector[p]
    for table in (scalar, vector, flux):
        for arr in table.values():
            arr.setflags(write=False)
    return TailTables(outer, scalar, vector, flux)
