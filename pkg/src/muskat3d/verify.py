"""Verification suites shared by the command line and the acceptance tests.

Each suite returns plain records with a ``passed`` flag so the caller decides
how to print them and which exit code to use.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import identities as ident
from .grid import TWO_PI, InterfaceField
from .norms import besov_seminorm, lipschitz_seminorm, smallness_criterion, sobolev_seminorm
from .profiles import random_bandlimited, single_mode, steep_ridge
from .quadrature import PvQuadrature
from .rhs import evaluate_forms, kernel_factors, linear_profile_integrand


@dataclass(frozen=True)
class CheckLine:
    name: str
    value: float
    threshold: float
    passed: bool
    detail: str = ""

    def format(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        extra = f"  ({self.detail})" if self.detail else ""
        return f"{mark}  {self.name:<44s} {self.value:.3e}  limit {self.threshold:.3e}{extra}"


def below(name: str, value: float, threshold: float, detail: str = "") -> CheckLine:
    return CheckLine(name, float(value), float(threshold), bool(value < threshold), detail)


def relative_l2(a: InterfaceField, b: InterfaceField) -> float:
    den = np.linalg.norm(a.values)
    num = np.linalg.norm((a - b).values)
    return float(num / den) if den > 0 else float(num)


# ---------------------------------------------------------------------------
# cross-formulation agreement


@dataclass(frozen=True)
class EquivalenceRow:
    seed: int
    slope: float
    m1_vs_m2: float
    m1_vs_integrated: float
    m1_vs_integrated_refined: float

    @property
    def improvement(self) -> float:
        return self.m1_vs_integrated / self.m1_vs_integrated_refined


@dataclass
class EquivalenceResult:
    rows: list[EquivalenceRow]
    seconds: float

    def lines(self, algebraic_tol=1e-12, quadrature_tol=1e-3, min_improvement=2.0) -> list[CheckLine]:
        worst_alg = max(r.m1_vs_m2 for r in self.rows)
        worst_q = max(r.m1_vs_integrated for r in self.rows)
        worst_gain = min(r.improvement for r in self.rows)
        return [
            below("m1 vs m2 (closed-form kernel)", worst_alg, algebraic_tol, f"{len(self.rows)} fields"),
            below("m1 vs integrated, default quadrature", worst_q, quadrature_tol),
            CheckLine(
                "error reduction under 2x refinement", worst_gain, min_improvement, worst_gain >= min_improvement,
                "smallest ratio default/refined",
            ),
        ]


def equivalence_suite(
    n: int = 128,
    count: int = 10,
    seed: int = 0,
    max_slope: float = 2.0,
    quad: PvQuadrature | None = None,
    refine: int = 2,
) -> EquivalenceResult:
    """Compare the three formulations on ``count`` seeded smooth fields.

    Slopes are drawn uniformly from [max_slope / 4, max_slope]. The refined
    pass multiplies both the radial and the angular node counts by ``refine``.
    """
    quad = quad or PvQuadrature()
    fine = quad.refined(refine)
    rng = np.random.default_rng(seed)
    slopes = rng.uniform(0.25 * max_slope, max_slope, size=count)
    rows = []
    t0 = time.perf_counter()
    for i, k in enumerate(slopes):
        f = random_bandlimited(n, TWO_PI, slope=float(k), seed=seed + i)
        a = evaluate_forms(f, ("m1", "integrated", "m2"), quad=quad)
        b = evaluate_forms(f, ("m1", "integrated"), quad=fine)
        rows.append(
            EquivalenceRow(
                seed + i,
                float(k),
                relative_l2(a["m1"], a["m2"]),
                relative_l2(a["m1"], a["integrated"]),
                relative_l2(b["m1"], b["integrated"]),
            )
        )
    return EquivalenceResult(rows, time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# identities


@dataclass
class IdentitySuiteResult:
    reports: list[ident.IdentityReport]
    orders: dict[str, float]
    trig: ident.TrigReport
    nominal_order: float = 2.0
    order_tolerance: float = 0.3

    def lines(self) -> list[CheckLine]:
        out = [below(r.identity, r.residual, r.tolerance, f"{r.samples} pairs") for r in self.reports]
        for name, order in self.orders.items():
            err = abs(order - self.nominal_order)
            out.append(below(f"order {name}", err, self.order_tolerance, f"measured {order:.3f}"))
        for r in (self.trig.arctan_cosine, self.trig.laplace_cosine):
            out.append(below(r.identity, r.residual, r.tolerance))
        return out

    @property
    def passed(self) -> bool:
        return all(line.passed for line in self.lines())


def identity_field(n: int = 64, seed: int = ident.DEFAULT_SEED, slope: float = 1.0) -> InterfaceField:
    return random_bandlimited(n, TWO_PI, slope=slope, seed=seed)


def identity_suite(
    f: InterfaceField | None = None,
    seed: int = ident.DEFAULT_SEED,
    samples: int = ident.DEFAULT_SAMPLES,
    tolerance: float = 1e-4,
) -> IdentitySuiteResult:
    """Gradient and radial identities at the default step, with convergence orders.

    Orders come from residuals at steps 4h, 2h, h where h is the default
    finite-difference step. The trig substitutions are checked at u = 1.
    """
    f = identity_field(seed=seed) if f is None else f
    h = ident.default_fd_step(f.period)
    pairs = ident.sample_pairs(f.n, f.period, samples, h, seed)
    checks = {
        "arctan_sum_gradient": lambda step: ident.check_arctan_sum_gradient(f, pairs, step, tolerance),
        "arctan_diff_gradient": lambda step: ident.check_arctan_diff_gradient(f, pairs, step, tolerance),
        "d_operator_radial": lambda step: ident.check_d_operator_radial(f, pairs, step, tolerance=tolerance),
        "s_operator_radial": lambda step: ident.check_s_operator_radial(f, pairs, step, tolerance=tolerance),
    }
    reports, orders = [], {}
    steps = [4 * h, 2 * h, h]
    for name, fn in checks.items():
        res = [fn(s) for s in steps]
        reports.append(res[-1])
        orders[name] = ident.convergence_order(steps, [r.residual for r in res])
    reports.extend(ident.check_kernel_divergence_bound([1.0, 2.0, 3.0, 4.0], _divergence_points(seed)))
    trig = ident.check_trig_substitutions([1.0])
    return IdentitySuiteResult(reports, orders, trig)


def _divergence_points(seed: int, count: int = 64) -> np.ndarray:
    rng = np.random.default_rng(seed)
    r = np.exp(rng.uniform(np.log(1e-2), np.log(10.0), count))
    th = rng.uniform(0, TWO_PI, count)
    return np.stack([r * np.cos(th), r * np.sin(th)], axis=-1)


# ---------------------------------------------------------------------------
# pointwise kernel bounds


@dataclass(frozen=True)
class KernelScan:
    pairs: int
    max_sum: float  # max |K + K-bar|
    max_cross: float  # max |S D K K-bar|
    violations_sum: int
    violations_cross: int
    seconds: float

    def lines(self) -> list[CheckLine]:
        return [
            CheckLine("|K + Kbar| <= 2 violations", self.violations_sum, 0, self.violations_sum == 0,
                      f"{self.pairs} pairs, max {self.max_sum:.6f}"),
            CheckLine("|S D K Kbar| <= 2 violations", self.violations_cross, 0, self.violations_cross == 0,
                      f"{self.pairs} pairs, max {self.max_cross:.6f}"),
        ]


def kernel_bound_scan(total: int = 10**6, slope: float = 10.0, n: int = 64, seed: int = 0) -> KernelScan:
    """Evaluate the two kernel bounds at every grid node for random offsets.

    Half of the offsets go to a random field and half to a steep ridge, both
    scaled to grid slope ``slope``.
    """
    rng = np.random.default_rng(seed)
    fields = [random_bandlimited(n, TWO_PI, slope=slope, seed=seed), steep_ridge(n, TWO_PI, k_target=slope, width=0.3)]
    per_offset = n * n
    offsets = -(-total // per_offset)
    pairs = 0
    vmax_sum = vmax_cross = 0.0
    bad_sum = bad_cross = 0
    t0 = time.perf_counter()
    for i in range(offsets):
        f = fields[i % 2]
        r = np.exp(rng.uniform(np.log(TWO_PI / (4 * n)), np.log(TWO_PI / 2)))
        th = rng.uniform(0, TWO_PI)
        kf = kernel_factors(f, (r * np.cos(th), r * np.sin(th)), check=False)
        s = np.abs(kf.k + kf.k_bar)
        c = np.abs(kf.sum_quotient * kf.diff_quotient * kf.k * kf.k_bar)
        vmax_sum, vmax_cross = max(vmax_sum, float(s.max())), max(vmax_cross, float(c.max()))
        bad_sum += int(np.count_nonzero(s > 2.0))
        bad_cross += int(np.count_nonzero(c > 2.0))
        pairs += s.size
    return KernelScan(pairs, vmax_sum, vmax_cross, bad_sum, bad_cross, time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# steady states


def steady_state_lines(n: int = 32, quad: PvQuadrature | None = None, tolerance: float = 1e-10) -> list[CheckLine]:
    out = []
    for c in (0.0, 1.0, -3.7):
        f = InterfaceField(np.full((n, n), c))
        forms = evaluate_forms(f, ("m1", "integrated", "m2"), quad=quad)
        for name, v in forms.items():
            out.append(below(f"constant {c:g}: {name} sup norm", float(np.abs(v.values).max()), tolerance))
    rng = np.random.default_rng(0)
    ys = rng.normal(size=(256, 2))
    for form in ("m1", "integrated", "m2"):
        vals = linear_profile_integrand((0.7, -1.3), ys, form)
        m = float(np.abs(vals).max())
        out.append(CheckLine(f"linear profile integrand {form}", m, 0.0, m == 0.0, "must vanish identically"))
    return out


# ---------------------------------------------------------------------------
# norm oracles


def norm_lines(n: int = 64) -> list[CheckLine]:
    """Closed-form Sobolev and Lipschitz values plus Besov consistency checks."""
    out = []
    L = TWO_PI
    for mode in ((1, 0), (2, 1), (3, 3)):
        f = single_mode(n, L, amplitude=0.5, mode=mode)
        k = np.hypot(*mode) * TWO_PI / L
        for s in (1.0, 2.0, 2.5):
            exact = L * 0.5 * k**s / np.sqrt(2.0)
            err = abs(sobolev_seminorm(f, s) - exact) / exact
            out.append(below(f"H^{s:g} of mode {mode}", err, 1e-12, "relative"))
    f = single_mode(n, L, amplitude=0.5, mode=(1, 0))
    out.append(below("Lipschitz of 0.5 cos x1", abs(lipschitz_seminorm(f) - 0.5), 1e-12))
    # scale invariance of B^{3/2}_{2,2} / H^{3/2} across well-resolved modes
    ratios = []
    for mode in ((2, 0), (2, 2), (3, 1), (4, 0), (4, 3)):
        g = single_mode(n, L, mode=mode)
        ratios.append(besov_seminorm(g, 1.5, 2, 2) / sobolev_seminorm(g, 1.5))
    spread = (max(ratios) - min(ratios)) / np.mean(ratios)
    out.append(below("B^1.5_22 / H^1.5 spread over modes", spread, 1e-2))
    g = random_bandlimited(n, L, slope=1.0, seed=7)
    coarse = besov_seminorm(g, 1.5, np.inf, 2)
    fine = besov_seminorm(g, 1.5, np.inf, 2, radial=128, angular=64)
    out.append(below("B^1.5_inf2 quadrature refinement", abs(coarse - fine) / fine, 1e-3, "relative"))
    return out


# ---------------------------------------------------------------------------
# smallness


def smallness_line(f: InterfaceField, constant: float = 0.125) -> CheckLine:
    rep = smallness_criterion(f, constant)
    return CheckLine(
        "smallness criterion", rep.margin_factor, 1.0, rep.passed,
        f"h2={rep.h2:.4g} K={rep.lipschitz:.4g} margins {rep.margin_first:.3g}, {rep.margin_second:.3g}",
    )


@dataclass
class SuiteSummary:
    lines: list[CheckLine] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(line.passed for line in self.lines)
