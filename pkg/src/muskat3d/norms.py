"""Semi-norms and derived functionals of an interface field.

Sobolev semi-norms come from Parseval sums with the zero mode excluded.
Besov semi-norms follow the finite-difference definition

    || ||g_y||_{L^p} / |y|^s ||_{L^q(|y|^-2 dy)},

with g_y = f(x) - f(x-y) for 0 < s < 1 and g_y = 2f(x) - f(x-y) - f(x+y) for
1 <= s < 2, evaluated by polar quadrature over r_min <= |y| <= L/2. In polar
form the measure |y|^-2 dy is d(log r) d(theta).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from .grid import TWO_PI, InterfaceField, gradient, hessian

# interior-disk and outer cut of the Besov y-integral, in units of L / n and L
BESOV_RMIN_FACTOR = 0.25
BESOV_ROUTER_FACTOR = 0.5


def sobolev_seminorm(f: InterfaceField, s: float) -> float:
    """||Lambda^s f||_{L^2} on the torus, zero mode excluded."""
    if not 0.0 <= s <= 3.0:
        raise ValueError(f"Sobolev order s={s} outside [0, 3]")
    w = f.waves
    weight = w.multiplier(2.0 * s)
    if s == 0:
        weight = (w.modulus > 0).astype(float)
    total = np.sum(weight * np.abs(f.spectral) ** 2)
    return float(f.period * np.sqrt(total))


def lipschitz_seminorm(f: InterfaceField) -> float:
    """Largest Euclidean norm of the spectral gradient over the grid nodes."""
    gx, gy = gradient(f)
    return float(np.sqrt(np.max(gx.values**2 + gy.values**2)))


def _lp(values: np.ndarray, p: float, cell: float) -> np.ndarray:
    """L^p norm over the last two axes with cell area ``cell``."""
    a = np.abs(values)
    if np.isinf(p):
        return a.max(axis=(-2, -1))
    return (cell * np.sum(a**p, axis=(-2, -1))) ** (1.0 / p)


def besov_seminorm(
    f: InterfaceField,
    s: float,
    p: float,
    q: float,
    radial: int = 64,
    angular: int = 32,
    inner: bool = True,
) -> float:
    """Finite-difference Besov semi-norm of f.

    ``p`` and ``q`` may be ``np.inf``; infinite exponents are grid maxima over
    x and over the quadrature nodes respectively. With ``inner`` set, the disk
    |y| < r_min is filled with the leading Taylor term of the difference.
    """
    if not 0.0 < s < 2.0:
        raise ValueError(f"Besov order s={s} outside (0, 2)")
    for name, v in (("p", p), ("q", q)):
        if not (v >= 1.0):
            raise ValueError(f"{name}={v} outside [1, inf]")
    if angular < 4 or angular % 4:
        raise ValueError("angular node count must be a positive multiple of 4")
    n, L = f.n, f.period
    cell = (L / n) ** 2
    lo, hi = BESOV_RMIN_FACTOR * L / n, BESOV_ROUTER_FACTOR * L
    x, wx = np.polynomial.legendre.leggauss(radial)
    a, b = np.log(lo), np.log(hi)
    radii = np.exp(0.5 * (b - a) * x + 0.5 * (b + a))
    wlog = 0.5 * (b - a) * wx

    half = angular // 2
    theta = np.arange(half) * (np.pi / half)
    w_theta = TWO_PI / angular
    w = f.waves
    c = f.spectral * n**2 * (1 + 1j)
    second = s >= 1.0
    v = f.values

    vals = np.empty((radial, half, 2))
    for i, r in enumerate(radii):
        p1 = w.shift_phase_1d(r * np.cos(theta))
        p2 = w.shift_phase_1d(r * np.sin(theta))
        # real part: backward shift, imaginary part: forward shift
        pack = p1.real[:, :, None] * (p2.real + p2.imag)[:, None, :]
        pack += p1.imag[:, :, None] * (p2.real - p2.imag)[:, None, :]
        g = sfft.ifft2(c * pack, axes=(-2, -1), overwrite_x=True)
        if second:
            d = 2.0 * v - g.real - g.imag
            vals[i, :, 0] = vals[i, :, 1] = _lp(d, p, cell)
        else:
            vals[i, :, 0] = _lp(v - g.real, p, cell)
            vals[i, :, 1] = _lp(v - g.imag, p, cell)
    vals /= radii[:, None, None] ** s

    if np.isinf(q):
        return float(vals.max())

    total = np.sum(wlog[:, None, None] * w_theta * vals**q)
    if inner:
        total += _inner_disk(f, s, p, q, lo, theta, w_theta, second)
    return float(total ** (1.0 / q))


def _inner_disk(f, s, p, q, rmin, theta, w_theta, second) -> float:
    """Leading-order integral of (||g_y||_p / |y|^s)^q over |y| < r_min."""
    cell = (f.period / f.n) ** 2
    ct, st = np.cos(theta)[:, None, None], np.sin(theta)[:, None, None]
    if second:
        f11, f12, f22 = hessian(f)
        d = ct**2 * f11 + 2 * ct * st * f12 + st**2 * f22
        order = 2.0
    else:
        gx, gy = gradient(f)
        d = ct * gx.values + st * gy.values
        order = 1.0
    expo = (order - s) * q
    norms = _lp(d, p, cell)
    # both members of each direction pair contribute the same amount
    return float(2.0 * w_theta * np.sum(norms**q) * rmin**expo / expo)


def hoelder_interpolation_gap(f: InterfaceField) -> float:
    """||f||_{H^{7/3}} - ||f||_{H^2}^{1/3} ||f||_{H^{5/2}}^{2/3}, never positive."""
    return sobolev_seminorm(f, 7.0 / 3.0) - sobolev_seminorm(f, 2.0) ** (1.0 / 3.0) * sobolev_seminorm(f, 2.5) ** (2.0 / 3.0)


@dataclass
class NormReport:
    """Norms of one field at one instant."""

    timestamp: float
    h2: float
    h52: float
    lipschitz: float
    h73: float | None = None
    besov_entries: list[tuple[float, float, float, float]] = field(default_factory=list)

    def __post_init__(self):
        vals = [self.h2, self.h52, self.lipschitz] + ([self.h73] if self.h73 is not None else [])
        vals += [e[3] for e in self.besov_entries]
        for v in vals:
            if not (np.isfinite(v) and v >= 0):
                raise ValueError(f"norm entries must be finite and non-negative, got {v}")


def norm_report(f: InterfaceField, t: float = 0.0, besov=(), with_h73: bool = False) -> NormReport:
    """Bundle the standard norms; ``besov`` lists (s, p, q) triples to add."""
    entries = [(s, p, q, besov_seminorm(f, s, p, q)) for s, p, q in besov]
    return NormReport(
        timestamp=float(t),
        h2=sobolev_seminorm(f, 2.0),
        h52=sobolev_seminorm(f, 2.5),
        lipschitz=lipschitz_seminorm(f),
        h73=sobolev_seminorm(f, 7.0 / 3.0) if with_h73 else None,
        besov_entries=entries,
    )


# ---------------------------------------------------------------------------
# smallness criterion for global existence


@dataclass(frozen=True)
class SmallnessReport:
    """Both smallness conditions with their margins.

    ``margin_*`` are differences (bound minus left side), ``factor_*`` the
    corresponding ratios (bound over left side, infinite for a zero field).
    """

    h2: float
    lipschitz: float
    constant: float
    bound: float  # (2 + K^2)^(-3/2)
    lhs_first: float  # C (h + h^2)
    ratio_second: float  # h^2 (2+K^2)^(3/2) / (1 - C (h+h^2) (2+K^2)^(3/2))
    first: bool
    second: bool

    @property
    def passed(self) -> bool:
        return self.first and self.second

    @property
    def margin_first(self) -> float:
        return self.bound - self.lhs_first

    @property
    def margin_second(self) -> float:
        return 1.0 - self.ratio_second

    @property
    def factor_first(self) -> float:
        return np.inf if self.lhs_first == 0 else self.bound / self.lhs_first

    @property
    def factor_second(self) -> float:
        if not self.second:
            return 0.0
        return np.inf if self.ratio_second == 0 else 1.0 / self.ratio_second

    @property
    def margin_factor(self) -> float:
        """Smallest of the two factors; >= 2 means both conditions hold with a 2x margin."""
        return min(self.factor_first, self.factor_second)


def smallness_from_norms(h2: float, lipschitz: float, constant: float = 0.125) -> SmallnessReport:
    if not constant > 0:
        raise ValueError(f"theorem constant must be positive, got {constant}")
    weight = (2.0 + lipschitz**2) ** 1.5
    lhs = constant * (h2 + h2**2)
    denom = 1.0 - lhs * weight
    ratio = h2**2 * weight / denom if denom > 0 else np.inf
    return SmallnessReport(
        h2=h2, lipschitz=lipschitz, constant=constant, bound=1.0 / weight,
        lhs_first=lhs, ratio_second=ratio, first=lhs < 1.0 / weight, second=bool(ratio < 1.0),
    )


def smallness_criterion(f0: InterfaceField, constant: float = 0.125) -> SmallnessReport:
    return smallness_from_norms(sobolev_seminorm(f0, 2.0), lipschitz_seminorm(f0), constant)


def amplitude_threshold(
    f0: InterfaceField, constant: float = 0.125, rel_tol: float = 1e-10, max_iter: int = 200
) -> float:
    """Largest factor a such that a * f0 passes the smallness criterion.

    Both conditions get harder as a grows, so the pass/fail boundary is a
    single threshold located by bisection on the norms (which scale linearly).
    """
    h2, K = sobolev_seminorm(f0, 2.0), lipschitz_seminorm(f0)
    if h2 == 0 and K == 0:
        return np.inf

    def ok(a):
        return smallness_from_norms(a * h2, a * K, constant).passed

    lo, hi = 0.0, 1.0
    while ok(hi):
        lo, hi = hi, 2.0 * hi
        if hi > 1e300:
            return np.inf
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
        if hi - lo <= rel_tol * hi:
            break
    return lo
