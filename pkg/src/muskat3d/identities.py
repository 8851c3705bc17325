"""Pointwise checks of the algebraic identities behind the energy estimates.

Each check samples (x, y) pairs, evaluates both sides of an identity by
independent routes (finite differences in y on one side, kernel factors and
quadrature on the other) and reports the largest residual. Field values at
off-grid points come from the exact trigonometric interpolant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import InterfaceField, evaluate_gradient_points, evaluate_points
from .rhs import laplace_cosine

DEFAULT_SEED = 7
DEFAULT_SAMPLES = 200


@dataclass(frozen=True)
class IdentityReport:
    identity: str
    residual: float
    samples: int
    tolerance: float

    def __post_init__(self):
        if not self.residual >= 0:
            raise ValueError(f"residual must be non-negative, got {self.residual}")

    @property
    def passed(self) -> bool:
        return self.residual < self.tolerance


@dataclass(frozen=True)
class SamplePairs:
    """Base points x (P, 2) and offsets y (P, 2)."""

    x: np.ndarray
    y: np.ndarray

    def __len__(self):
        return len(self.x)


def default_fd_step(period: float) -> float:
    return period / 2048.0


def sample_pairs(
    n: int,
    period: float,
    count: int = DEFAULT_SAMPLES,
    fd_step: float | None = None,
    seed: int = DEFAULT_SEED,
    r_max: float | None = None,
) -> SamplePairs:
    """x on grid nodes, |y| log-uniform in [8 fd_step, L/4], angle uniform."""
    h = default_fd_step(period) if fd_step is None else fd_step
    r_max = period / 4.0 if r_max is None else r_max
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, n, size=(count, 2))
    x = idx * (period / n)
    r = np.exp(rng.uniform(np.log(8.0 * h), np.log(r_max), size=count))
    th = rng.uniform(0.0, 2.0 * np.pi, size=count)
    y = np.stack([r * np.cos(th), r * np.sin(th)], axis=-1)
    return SamplePairs(x, y)


def _at(f: InterfaceField, pts: np.ndarray) -> np.ndarray:
    return evaluate_points(f, pts)


def _quotients(f: InterfaceField, x: np.ndarray, y: np.ndarray):
    """Slope quotients Delta, Delta-bar at (x, y) for stacks of points."""
    r = np.hypot(y[:, 0], y[:, 1])
    fx = _at(f, x)
    fm = _at(f, x - y)
    fp = _at(f, x + y)
    return (fx - fm) / r, (fx - fp) / r


def _fd_gradient(func, y: np.ndarray, h: float) -> np.ndarray:
    """Central-difference gradient in y of a function of stacked offsets."""
    e1 = np.array([h, 0.0])
    e2 = np.array([0.0, h])
    g1 = (func(y + e1) - func(y - e1)) / (2 * h)
    g2 = (func(y + e2) - func(y - e2)) / (2 * h)
    return np.stack([g1, g2], axis=-1)


def _arctan_gradient(f, pairs: SamplePairs, fd_step: float, sign: float) -> np.ndarray:
    x = pairs.x

    def lhs_fn(y):
        a, b = _quotients(f, x, y)
        return np.arctan(a) + sign * np.arctan(b)

    def s_fn(y):
        a, b = _quotients(f, x, y)
        return a + b

    def d_fn(y):
        a, b = _quotients(f, x, y)
        return a - b

    y = pairs.y
    a, b = _quotients(f, x, y)
    k, kb = 1.0 / (1 + a * a), 1.0 / (1 + b * b)
    s, d = a + b, a - b
    grad_s = _fd_gradient(s_fn, y, fd_step)
    grad_d = _fd_gradient(d_fn, y, fd_step)
    lhs = _fd_gradient(lhs_fn, y, fd_step)
    cross = (-0.5 * s * d * k * kb)[:, None]
    mean = (0.5 * (k + kb))[:, None]
    if sign > 0:
        rhs = cross * grad_d + mean * grad_s
    else:
        rhs = cross * grad_s + mean * grad_d
    return np.hypot(*(lhs - rhs).T)


def check_arctan_sum_gradient(
    f: InterfaceField, pairs: SamplePairs, fd_step: float | None = None, tolerance: float = 1e-4
) -> IdentityReport:
    """grad_y (arctan D + arctan D-bar) = -1/2 S D K K-bar grad_y D_y + 1/2 (K + K-bar) grad_y S_y."""
    h = default_fd_step(f.period) if fd_step is None else fd_step
    res = _arctan_gradient(f, pairs, h, +1.0)
    return IdentityReport("arctan_sum_gradient", float(res.max()), len(pairs), tolerance)


def check_arctan_diff_gradient(
    f: InterfaceField, pairs: SamplePairs, fd_step: float | None = None, tolerance: float = 1e-4
) -> IdentityReport:
    """grad_y (arctan D - arctan D-bar) = -1/2 S D K K-bar grad_y S_y + 1/2 (K + K-bar) grad_y D_y."""
    h = default_fd_step(f.period) if fd_step is None else fd_step
    res = _arctan_gradient(f, pairs, h, -1.0)
    return IdentityReport("arctan_diff_gradient", float(res.max()), len(pairs), tolerance)


def _radial_fd(func, y: np.ndarray, h: float) -> np.ndarray:
    """y . grad_y func(y) by a central difference along the ray through y."""
    r = np.hypot(y[:, 0], y[:, 1])
    eta = (h / r)[:, None]
    return (func(y * (1 + eta)) - func(y * (1 - eta))) / (2 * eta[:, 0])


def _second_diff_grad(f, x, y):
    """s_y (grad f) at x, shape (P, 2)."""
    return (
        2 * evaluate_gradient_points(f, x)
        - evaluate_gradient_points(f, x - y)
        - evaluate_gradient_points(f, x + y)
    )


def _dot(a, b):
    return np.einsum("pi,pi->p", a, b)


def radial_derivative_centered(
    f: InterfaceField, pairs: SamplePairs, nodes: int = 16, variant: str = "corrected"
) -> np.ndarray:
    """Right side of the y . grad_y D_y f identity.

    corrected:  (1/|y|) int_0^1 y . s_{ty} grad f dt - (y/|y|) . s_y grad f
    as_printed: the same with + in front of the last term.
    """
    x, y = pairs.x, pairs.y
    r = np.hypot(y[:, 0], y[:, 1])
    t, w = np.polynomial.legendre.leggauss(nodes)
    t, w = 0.5 * (t + 1), 0.5 * w
    integral = np.zeros(len(pairs))
    for tk, wk in zip(t, w):
        integral += wk * _dot(y, _second_diff_grad(f, x, tk * y))
    last = _dot(y, _second_diff_grad(f, x, y)) / r
    sign = _variant_sign(variant)
    return integral / r - sign * last


def radial_derivative_second(f: InterfaceField, pairs: SamplePairs, variant: str = "corrected") -> np.ndarray:
    """Right side of the y . grad_y S_y f identity.

    corrected:  -s_y f / |y| + (y/|y|) . (grad delta-bar_y f - grad delta_y f)
    as_printed: the same with +s_y f / |y|.
    """
    x, y = pairs.x, pairs.y
    r = np.hypot(y[:, 0], y[:, 1])
    s = 2 * _at(f, x) - _at(f, x - y) - _at(f, x + y)
    g0 = evaluate_gradient_points(f, x)
    grad_dbar = g0 - evaluate_gradient_points(f, x + y)
    grad_d = g0 - evaluate_gradient_points(f, x - y)
    sign = _variant_sign(variant)
    return -sign * s / r + _dot(y, grad_dbar - grad_d) / r


def _variant_sign(variant: str) -> float:
    if variant == "corrected":
        return 1.0
    if variant == "as_printed":
        return -1.0
    raise ValueError(f"unknown variant {variant!r}; expected 'corrected' or 'as_printed'")


def check_d_operator_radial(
    f: InterfaceField,
    pairs: SamplePairs,
    fd_step: float | None = None,
    nodes: int = 16,
    tolerance: float = 1e-4,
    variant: str = "corrected",
) -> IdentityReport:
    """y . grad_y D_y f, by radial finite differences, against its integral form."""
    h = default_fd_step(f.period) if fd_step is None else fd_step
    x = pairs.x

    def d_fn(y):
        r = np.hypot(y[:, 0], y[:, 1])
        return (_at(f, x + y) - _at(f, x - y)) / r

    lhs = _radial_fd(d_fn, pairs.y, h)
    rhs = radial_derivative_centered(f, pairs, nodes, variant)
    return IdentityReport(f"d_operator_radial[{variant}]", float(np.max(np.abs(lhs - rhs))), len(pairs), tolerance)


def check_s_operator_radial(
    f: InterfaceField,
    pairs: SamplePairs,
    fd_step: float | None = None,
    tolerance: float = 1e-4,
    variant: str = "corrected",
) -> IdentityReport:
    """y . grad_y S_y f, by radial finite differences, against its closed form."""
    h = default_fd_step(f.period) if fd_step is None else fd_step
    x = pairs.x

    def s_fn(y):
        r = np.hypot(y[:, 0], y[:, 1])
        return (2 * _at(f, x) - _at(f, x - y) - _at(f, x + y)) / r

    lhs = _radial_fd(s_fn, pairs.y, h)
    rhs = radial_derivative_second(f, pairs, variant)
    return IdentityReport(f"s_operator_radial[{variant}]", float(np.max(np.abs(lhs - rhs))), len(pairs), tolerance)


def divergence_ratio(r_exponent: float, points: np.ndarray, step: float = 1e-4) -> np.ndarray:
    """|div(x / |x|^r)| * |x|^r by central finite differences (relative step)."""
    p = np.atleast_2d(np.asarray(points, dtype=float))
    rad = np.hypot(p[:, 0], p[:, 1])
    h = step * rad

    def field(q):
        return q / np.hypot(q[:, 0], q[:, 1])[:, None] ** r_exponent

    div = np.zeros(len(p))
    for i in range(2):
        e = np.zeros_like(p)
        e[:, i] = h
        div += (field(p + e)[:, i] - field(p - e)[:, i]) / (2 * h)
    return np.abs(div) * rad**r_exponent


def check_kernel_divergence_bound(
    r_exponents, sample_points, tolerance: float = 1e-6
) -> list[IdentityReport]:
    """Finite-difference |div(x/|x|^r)| |x|^r against the exact value |2 - r|."""
    pts = np.atleast_2d(np.asarray(sample_points, dtype=float))
    if np.any(np.hypot(pts[:, 0], pts[:, 1]) == 0):
        raise ValueError("sample points must avoid the origin")
    out = []
    for r in np.atleast_1d(r_exponents):
        if not r > 0:
            raise ValueError(f"exponent must be positive, got {r}")
        res = np.max(np.abs(divergence_ratio(r, pts) - abs(2.0 - r)))
        out.append(IdentityReport(f"kernel_divergence[r={r:g}]", float(res), len(pts), tolerance))
    return out


@dataclass(frozen=True)
class TrigReport:
    """Residuals of the two scalar substitutions used by the oscillatory form."""

    arctan_cosine: IdentityReport
    laplace_cosine: IdentityReport
    u: np.ndarray
    laguerre_error: np.ndarray  # pointwise error profile of the Laguerre rule

    @property
    def passed(self) -> bool:
        return self.arctan_cosine.passed and self.laplace_cosine.passed


def check_trig_substitutions(u_samples, nodes: int = 32, tolerance: float = 1e-12) -> TrigReport:
    """cos(arctan u) = (1+u^2)^(-1/2) and int_0^inf e^-k cos(ku) dk = 1/(1+u^2).

    The Laguerre residual is reported over all samples; its profile grows
    with |u| because a fixed node set cannot follow cos(k u) once u is large.
    """
    u = np.asarray(u_samples, dtype=float).ravel()
    exact = 1.0 / np.sqrt(1.0 + u * u)
    r1 = np.abs(np.cos(np.arctan(u)) - exact)
    err = np.abs(laplace_cosine(u, nodes) - 1.0 / (1.0 + u * u))
    return TrigReport(
        IdentityReport("cos_arctan", float(r1.max(initial=0.0)), len(u), tolerance),
        IdentityReport(f"laplace_cosine[laguerre {nodes}]", float(err.max(initial=0.0)), len(u), tolerance),
        u,
        err,
    )


def convergence_order(steps, residuals) -> float:
    """Slope of log(residual) against log(step) by least squares."""
    s = np.log(np.asarray(steps, dtype=float))
    r = np.log(np.asarray(residuals, dtype=float))
    return float(np.polyfit(s, r, 1)[0])
