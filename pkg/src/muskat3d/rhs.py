"""Right-hand sides of the contour equation for a graph interface.

Three equivalent forms are evaluated:

* ``m1``: grad_x Delta_y f . y / |y|^2 * (1 + Delta_y f^2)^(-3/2)
* ``integrated``: (grad f(x) . y - delta_y f) / |y|^3 * (1 + Delta_y f^2)^(-3/2)
* ``m2``: the ``m1`` integrand with the kernel written as
  cos(arctan u) * int_0^inf exp(-k) cos(k u) dk, either in closed form or by
  Gauss-Laguerre quadrature in k.

All forms carry the prefactor rho / (4 pi^2), which makes the small-slope
limit equal to -(rho / 2 pi) Lambda f.

By default the linear part of the kernel is removed and applied exactly as
the spectral multiplier -(rho / 2 pi) |xi|; only the nonlinear remainder
(kernel minus one) goes through the polar quadrature. The remainder integral
is split into three pieces: the inner disk |y| < r_min (leading Taylor term),
the annulus [r_min, R_eff] (paired polar quadrature) and the exterior
|y| > R_eff (kernel power series turned into Fourier multipliers).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.fft as sfft
from scipy import special

from .differences import OffsetStencil, slope, slope_bar
from .grid import TWO_PI, InterfaceField, gradient, hessian, laplacian, wave_vectors
from .quadrature import PvQuadrature, kernel_series_coefficients, tail_tables

FLUX = "flux"  # grad_x Delta_y f . y / |y|^2 integrand
INTEGRATED = "integrated"  # (grad f . y - delta_y f) / |y|^3 integrand

DEFAULT_QUADRATURE = PvQuadrature()


class QuadratureError(FloatingPointError):
    """The y-quadrature produced a non-finite value."""


class KernelBoundViolation(AssertionError):
    """A pointwise kernel bound failed, pointing at corrupted input."""


# ---------------------------------------------------------------------------
# kernels in u = Delta_y f


def kernel_m1(u: np.ndarray) -> np.ndarray:
    return (1.0 + u * u) ** -1.5


def kernel_m1_minus_one(u: np.ndarray) -> np.ndarray:
    return np.expm1(-1.5 * np.log1p(u * u))


def kernel_m2_analytic(u: np.ndarray) -> np.ndarray:
    """cos(arctan u) times the closed-form Laplace integral 1 / (1 + u^2)."""
    q = 1.0 + u * u
    return (1.0 / np.sqrt(q)) * (1.0 / q)


def laguerre_rule(nodes: int) -> tuple[np.ndarray, np.ndarray]:
    if not 4 <= nodes <= 64:
        raise ValueError(f"Gauss-Laguerre node count must be in [4, 64], got {nodes}")
    return special.roots_laguerre(nodes)


def laplace_cosine(u, nodes: int | None = None) -> np.ndarray:
    """int_0^inf exp(-k) cos(k u) dk, closed form or ``nodes``-point Gauss-Laguerre."""
    u = np.asarray(u, dtype=float)
    if nodes is None:
        return 1.0 / (1.0 + u * u)
    x, w = laguerre_rule(nodes)
    out = np.zeros_like(u)
    for xk, wk in zip(x, w):
        out += wk * np.cos(xk * u)
    return out


def kernel_m2_laguerre(nodes: int) -> Callable[[np.ndarray], np.ndarray]:
    def kernel(u):
        return np.cos(np.arctan(u)) * laplace_cosine(u, nodes)

    return kernel


@dataclass(frozen=True)
class _Form:
    integrand: str
    kernel: Callable[[np.ndarray], np.ndarray]
    remainder: Callable[[np.ndarray], np.ndarray]


def _m2_remainder(u):
    return kernel_m2_analytic(u) - 1.0


def _form(name: str, k_mode: str = "analytic", laguerre_nodes: int = 32) -> _Form:
    if name == "m1":
        return _Form(FLUX, kernel_m1, kernel_m1_minus_one)
    if name == "integrated":
        return _Form(INTEGRATED, kernel_m1, kernel_m1_minus_one)
    if name == "m2":
        if k_mode == "analytic":
            return _Form(FLUX, kernel_m2_analytic, _m2_remainder)
        if k_mode == "laguerre":
            k = kernel_m2_laguerre(laguerre_nodes)
            return _Form(FLUX, k, lambda u, k=k: k(u) - 1.0)
        raise ValueError(f"unknown k_mode {k_mode!r}; expected 'analytic' or 'laguerre'")
    raise ValueError(f"unknown formulation {name!r}")


# ---------------------------------------------------------------------------
# shared evaluator


class _Evaluator:
    """Evaluates several integrand forms on one field, sharing shifted samples."""

    def __init__(self, f: InterfaceField, quad: PvQuadrature):
        self.f = f
        self.quad = quad
        self.n = f.n
        self.L = f.period
        w = f.waves
        self.c = f.spectral * f.n**2
        gx, gy = gradient(f)
        self.fx, self.fy = gx.values, gy.values
        self.theta, self.w_theta = quad.angles()
        self.cos = np.cos(self.theta)[:, None, None]
        self.sin = np.sin(self.theta)[:, None, None]
        # directional slope a_j(x) = e_j . grad f(x) for every half-circle direction
        self.a = self.cos * self.fx + self.sin * self.fy
        self.c_dir = self.c * 1j * (self.cos * w.xi_odd[None, :, None] + self.sin * w.xi_odd[None, None, :])
        self.c_pack = self.c * (1 + 1j)
        self.c_dir_pack = self.c_dir * (1 + 1j)
        self.waves = w

    def _shifted(self, r: float, need_dir: bool):
        """f(x -+ r e_j) and, if asked, (e_j . grad f)(x -+ r e_j) for all j.

        Both shifts come out of one complex transform: with ph the backward
        phase, ph + i conj(ph) = (Re ph + Im ph)(1 + i) puts the backward
        shift in the real part and the forward one in the imaginary part.
        """
        w = self.waves
        p1 = w.shift_phase_1d(r * self.cos[:, 0, 0])
        p2 = w.shift_phase_1d(r * self.sin[:, 0, 0])
        a1, b1, a2, b2 = p1.real, p1.imag, p2.real, p2.imag
        pack = a1[:, :, None] * (a2 + b2)[:, None, :]
        pack += b1[:, :, None] * (a2 - b2)[:, None, :]
        g = sfft.ifft2(self.c_pack * pack, axes=(-2, -1), overwrite_x=True)
        d = sfft.ifft2(self.c_dir_pack * pack, axes=(-2, -1), overwrite_x=True) if need_dir else None
        return g, d

    def annulus(self, forms: dict[str, _Form], split_linear: bool, outer: float) -> dict[str, np.ndarray]:
        radii, weights = self.quad.radial_rule(self.n, self.L, outer)
        need_dir = any(fm.integrand == FLUX for fm in forms.values())
        acc = {name: np.zeros((self.n, self.n)) for name in forms}
        v = self.f.values
        a = self.a
        for r, wr in zip(radii, weights):
            g, d = self._shifted(r, need_dir)
            um = (v - g.real) / r
            up = (v - g.imag) / r
            kcache = {}
            for name, fm in forms.items():
                k = fm.remainder if split_linear else fm.kernel
                # forms sharing a kernel function (m1 and integrated) share its values
                if k not in kcache:
                    kcache[k] = (k(um), k(up))
                km, kp = kcache[k]
                if fm.integrand == FLUX:
                    br = (a - d.real) * km
                    br -= (a - d.imag) * kp
                else:
                    br = (a - um) * km
                    br -= (a + up) * kp
                s = br.sum(axis=0)
                if not np.all(np.isfinite(s)):
                    _raise_nonfinite(br, r, self.theta, name)
                acc[name] += (wr * self.w_theta) * s
        return acc

    def inner_disk(self, forms: dict[str, _Form], split_linear: bool) -> dict[str, np.ndarray]:
        """Leading Taylor term of the integral over |y| < r_min."""
        out = {}
        if self.quad.inner == "drop":
            return {name: 0.0 for name in forms}
        f11, f12, f22 = hessian(self.f)
        h = self.cos**2 * f11 + 2.0 * self.cos * self.sin * f12 + self.sin**2 * f22
        rmin = self.quad.r_min(self.n, self.L)
        for name, fm in forms.items():
            k = fm.remainder if split_linear else fm.kernel
            # each half-circle node stands for theta and theta + pi, which contribute equally
            full = 2.0 * self.w_theta * (h * k(self.a)).sum(axis=0)
            out[name] = rmin * full if fm.integrand == FLUX else 0.5 * rmin * full
        return out

    def exterior(self, forms: dict[str, _Form], split_linear: bool, outer: float) -> dict[str, np.ndarray]:
        """Integral over |y| > outer from the kernel power series."""
        order = self.quad.tail_order
        tables = tail_tables(self.n, self.L, outer, order)
        coeffs = kernel_series_coefficients(order)
        w = self.waves
        mod = w.modulus
        unit1 = np.zeros_like(mod)
        unit2 = np.zeros_like(mod)
        nz = mod > 0
        unit1[nz] = w.xi_odd[:, None].repeat(self.n, 1)[nz] / mod[nz]
        unit2[nz] = w.xi_odd[None, :].repeat(self.n, 0)[nz] / mod[nz]

        f0 = self.f.values - self.f.mean
        powers = [np.ones_like(f0)]
        for _ in range(2 * order + 2):
            powers.append(powers[-1] * f0)
        hats = [sfft.fft2(p) for p in powers]

        def apply(hat, mult):
            return sfft.ifft2(hat * mult).real

        flux_sum = np.zeros_like(f0)
        int_sum = np.zeros_like(f0)
        j0 = 0 if not split_linear else 1
        kinds = {fm.integrand for fm in forms.values()}
        for j in range(j0, order + 1):
            p = 3 + 2 * j
            cj = coeffs[j]
            vec = tables.vector[p]
            grad_term = np.zeros_like(f0)
            for m in range(2 * j + 1):
                b = special.comb(2 * j, m, exact=True) * (-1) ** m
                vx = apply(hats[m], -1j * unit1 * vec)
                vy = apply(hats[m], -1j * unit2 * vec)
                grad_term += b * powers[2 * j - m] * (self.fx * vx + self.fy * vy)
            if FLUX in kinds:
                fl = np.zeros_like(f0)
                for m in range(2 * j + 1):
                    b = special.comb(2 * j, m, exact=True) * (-1) ** m
                    fl += b * powers[2 * j - m] * apply(hats[m + 1], tables.flux[p]) / (m + 1)
                flux_sum += cj * (grad_term - fl)
            if INTEGRATED in kinds:
                sc = np.zeros_like(f0)
                for m in range(2 * j + 2):
                    b = special.comb(2 * j + 1, m, exact=True) * (-1) ** m
                    sc += b * powers[2 * j + 1 - m] * apply(hats[m], tables.scalar[p])
                int_sum += cj * (grad_term - sc)
        return {name: (flux_sum if fm.integrand == FLUX else int_sum) for name, fm in forms.items()}


def _raise_nonfinite(br: np.ndarray, r: float, theta: np.ndarray, name: str):
    j, i1, i2 = np.argwhere(~np.isfinite(br))[0]
    y = (r * np.cos(theta[j]), r * np.sin(theta[j]))
    raise QuadratureError(
        f"{name} integrand is non-finite at grid node ({i1}, {i2}) for y = ({y[0]:.6g}, {y[1]:.6g})"
    )


def linear_multiplier(n: int, period: float, rho: float, eps: float = 0.0) -> np.ndarray:
    """Symbol of the linear part: -(rho / 2 pi) |xi| - eps |xi|^2."""
    mod = wave_vectors(n, period).modulus
    return -(rho / TWO_PI) * mod - eps * mod**2


def evaluate_forms(
    f: InterfaceField,
    forms=("m1", "integrated", "m2"),
    rho: float = TWO_PI,
    quad: PvQuadrature | None = None,
    split_linear: bool = True,
    k_mode: str = "analytic",
    laguerre_nodes: int = 32,
    include_linear: bool = True,
) -> dict[str, InterfaceField]:
    """Evaluate several formulations at once, sharing the shifted samples of f.

    With ``split_linear`` and ``include_linear=False`` only the nonlinear
    remainder is returned.
    """
    if not rho > 0:
        raise ValueError(f"rho must be positive (stable regime), got {rho}")
    quad = DEFAULT_QUADRATURE if quad is None else quad
    table = {name: _form(name, k_mode, laguerre_nodes) for name in forms}
    ev = _Evaluator(f, quad)
    osc = float(f.values.max() - f.values.min())
    outer = quad.effective_outer(osc, f.period)
    parts = [ev.annulus(table, split_linear, outer), ev.inner_disk(table, split_linear)]
    if quad.tail_order > 0 or not split_linear:
        parts.append(ev.exterior(table, split_linear, outer))
    pref = rho / TWO_PI**2
    lin = 0.0
    if split_linear and include_linear:
        lin = sfft.ifft2(ev.c * linear_multiplier(f.n, f.period, rho)).real
    out = {}
    for name in forms:
        total = sum(p[name] for p in parts)
        out[name] = f.with_values(pref * total + lin)
    return out


def rhs_m1(f: InterfaceField, rho: float = TWO_PI, quad: PvQuadrature | None = None, split_linear: bool = True) -> InterfaceField:
    return evaluate_forms(f, ("m1",), rho, quad, split_linear)["m1"]


def rhs_integrated(f: InterfaceField, rho: float = TWO_PI, quad: PvQuadrature | None = None, split_linear: bool = True) -> InterfaceField:
    return evaluate_forms(f, ("integrated",), rho, quad, split_linear)["integrated"]


def rhs_m2(
    f: InterfaceField,
    rho: float = TWO_PI,
    quad: PvQuadrature | None = None,
    k_mode: str = "analytic",
    laguerre_nodes: int = 32,
    split_linear: bool = True,
) -> InterfaceField:
    return evaluate_forms(f, ("m2",), rho, quad, split_linear, k_mode, laguerre_nodes)["m2"]


def rhs_regularized(
    f: InterfaceField,
    rho: float = TWO_PI,
    eps: float = 0.0,
    quad: PvQuadrature | None = None,
) -> InterfaceField:
    """Closed-form oscillatory RHS plus eps times the Laplacian."""
    if eps < 0:
        raise ValueError(f"eps must be >= 0, got {eps}")
    out = rhs_m2(f, rho, quad)
    if eps:
        out = out + laplacian(f) * eps
    return out


def nonlinear_remainder(f: InterfaceField, rho: float = TWO_PI, quad: PvQuadrature | None = None) -> InterfaceField:
    """RHS minus its linear part -(rho / 2 pi) Lambda f."""
    return evaluate_forms(f, ("m2",), rho, quad, include_linear=False)["m2"]


# ---------------------------------------------------------------------------
# pointwise kernel factors


@dataclass(frozen=True, eq=False)
class KernelFactors:
    """Slope quotients and kernel factors for one offset y at every grid node."""

    slope: np.ndarray
    slope_bar: np.ndarray
    sum_quotient: np.ndarray  # S_y f = slope + slope_bar
    diff_quotient: np.ndarray  # D_y f = slope - slope_bar
    k: np.ndarray  # 1 / (1 + slope^2)
    k_bar: np.ndarray  # 1 / (1 + slope_bar^2)

    @classmethod
    def from_slopes(cls, a, b) -> "KernelFactors":
        """Factors from given values of Delta_y f (``a``) and Delta-bar_y f (``b``)."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        return cls(a, b, a + b, a - b, 1.0 / (1.0 + a * a), 1.0 / (1.0 + b * b))

    def check_bounds(self, tol: float = 1e-12):
        k, kb = self.k, self.k_bar
        if not (np.all(k > 0) and np.all(k <= 1) and np.all(kb > 0) and np.all(kb <= 1)):
            raise KernelBoundViolation("kernel factor outside (0, 1]")
        if np.max(np.abs(k + kb)) > 2 + tol:
            raise KernelBoundViolation("|K + Kbar| exceeds 2")
        if np.max(np.abs(self.sum_quotient * self.diff_quotient * k * kb)) > 2 + tol:
            raise KernelBoundViolation("|S D K Kbar| exceeds 2")


def kernel_factors(f: InterfaceField, y, check: bool = True) -> KernelFactors:
    y = y if isinstance(y, OffsetStencil) else OffsetStencil(y)
    a = slope(f, y).values
    b = slope_bar(f, y).values
    kf = KernelFactors.from_slopes(a, b)
    if check:
        kf.check_bounds()
    return kf


def linear_profile_integrand(slope_vector, ys, form: str = "m1") -> np.ndarray:
    """Integrand values for the linear profile f(x) = a . x + c at offsets ``ys``.

    A linear profile is not periodic, so the steady-state property is checked
    on the integrand formula itself: Delta_y f = a . y / |y| and grad f = a,
    independent of x.
    """
    a = np.asarray(slope_vector, dtype=float)
    y = np.atleast_2d(np.asarray(ys, dtype=float))
    r = np.hypot(y[:, 0], y[:, 1])
    u = (y @ a) / r
    delta = y @ a
    if form in ("m1", "m2"):
        grad_delta = np.zeros_like(y)  # grad a.x - grad a.(x - y) = a - a
        k = kernel_m1(u) if form == "m1" else kernel_m2_analytic(u)
        return np.einsum("pi,pi->p", grad_delta / r[:, None], y) / r**2 * k
    if form == "integrated":
        return (y @ a - delta) / r**3 * kernel_m1(u)
    raise ValueError(f"unknown formulation {form!r}")
