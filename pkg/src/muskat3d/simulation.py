"""Time stepping, the energy ledger and the inequality monitors.

Two schemes are available:

* ``rk4``: classical Runge-Kutta on the full right-hand side.
* ``ifrk4``: integrating-factor RK4 (Lawson form). The linear part
  -(rho / 2 pi) |xi| - eps |xi|^2 is integrated exactly in Fourier space and
  only the nonlinear remainder goes through the RK stages.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.fft as sfft

from .config import SimConfig
from .grid import TWO_PI, InterfaceField, NonFiniteFieldError, laplacian
from .io import emit_ledger, read_snapshot, write_snapshot
from .norms import NormReport, lipschitz_seminorm, norm_report, sobolev_seminorm
from .profiles import builtin_profile
from .quadrature import PvQuadrature
from .rhs import QuadratureError, linear_multiplier, nonlinear_remainder, rhs_m2

# abort thresholds
MAX_SLOPE = 1e4
MAX_H2_GROWTH = 1e6


class SimulationAborted(RuntimeError):
    """Raised by ``step`` when the new state is not usable."""


def dissipation_coefficient(K: float) -> float:
    """1/2 (1 + K^2)^(-3/2), the coefficient of the H^{5/2} dissipation."""
    if not K >= 0:
        raise ValueError(f"slope must be non-negative, got {K}")
    return 0.5 * (1.0 + K * K) ** -1.5


@dataclass(frozen=True)
class StepperState:
    field: InterfaceField
    t: float
    dt: float
    scheme: str = "rk4"
    eps: float = 0.0
    rho: float = TWO_PI
    muskat: bool = True

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.scheme not in ("rk4", "ifrk4"):
            raise ValueError(f"unknown scheme {self.scheme!r}")


def stable_dt(
    n: int,
    period: float,
    rho: float,
    eps: float,
    scheme: str,
    cfl: float,
    slope: float = 0.0,
    muskat: bool = True,
) -> float:
    """Time step from the stability policy (may be ``inf`` when nothing limits it).

    rk4: cfl * min(dx / (rho / 2 pi), dx^2 / eps).
    ifrk4: the linear part is exact, so only the nonlinear remainder limits
    the step; its stiffest symbol is bounded by (rho / 2 pi) |xi| times
    1 - (1 + K^2)^(-3/2).
    """
    dx = period / n
    c = rho / TWO_PI
    if scheme == "rk4":
        limits = []
        if muskat:
            limits.append(dx / c)
        if eps > 0:
            limits.append(dx * dx / eps)
        return cfl * min(limits) if limits else math.inf
    if not muskat:
        return math.inf
    stiff = c * (1.0 - (1.0 + slope * slope) ** -1.5)
    return cfl * dx / stiff if stiff > 0 else math.inf


class Stepper:
    """Advances a field by one step of the configured scheme."""

    def __init__(self, quad: PvQuadrature | None = None):
        self.quad = quad or PvQuadrature()

    # right-hand sides -----------------------------------------------------

    def full_rhs(self, f: InterfaceField, rho: float, eps: float, muskat: bool) -> np.ndarray:
        out = np.zeros_like(f.values)
        if muskat:
            out += rhs_m2(f, rho, self.quad).values
        if eps:
            out += eps * laplacian(f).values
        return out

    def _remainder_hat(self, c: np.ndarray, period: float, rho: float, muskat: bool) -> np.ndarray:
        if not muskat:
            return np.zeros_like(c)
        n = c.shape[0]
        f = InterfaceField(sfft.ifft2(c * n * n).real, period)
        return sfft.fft2(nonlinear_remainder(f, rho, self.quad).values) / (n * n)

    # schemes ----------------------------------------------------------------

    def step(self, state: StepperState) -> StepperState:
        try:
            if state.scheme == "rk4":
                new = self._rk4(state)
            else:
                new = self._ifrk4(state)
            out = InterfaceField(new, state.field.period)
        except (NonFiniteFieldError, QuadratureError) as exc:
            raise SimulationAborted(f"non-finite state after step at t={state.t:.6g}: {exc}") from exc
        return StepperState(out, state.t + state.dt, state.dt, state.scheme, state.eps, state.rho, state.muskat)

    def _rk4(self, s: StepperState) -> np.ndarray:
        f0 = s.field
        dt = s.dt

        def rhs(v):
            return self.full_rhs(InterfaceField(v, f0.period), s.rho, s.eps, s.muskat)

        u = f0.values
        k1 = rhs(u)
        k2 = rhs(u + 0.5 * dt * k1)
        k3 = rhs(u + 0.5 * dt * k2)
        k4 = rhs(u + dt * k3)
        return u + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)

    def _ifrk4(self, s: StepperState) -> np.ndarray:
        f0 = s.field
        n, L, dt = f0.n, f0.period, s.dt
        lin = linear_multiplier(n, L, s.rho if s.muskat else 0.0, s.eps)
        e = np.exp(0.5 * dt * lin)
        e2 = e * e

        def nl(c):
            return self._remainder_hat(c, L, s.rho, s.muskat)

        u = f0.spectral
        n1 = nl(u)
        ua = e * (u + 0.5 * dt * n1)
        n2 = nl(ua)
        ub = e * u + 0.5 * dt * n2
        n3 = nl(ub)
        uc = e2 * u + dt * e * n3
        n4 = nl(uc)
        new = e2 * u + dt / 6.0 * (e2 * n1 + 2.0 * e * (n2 + n3) + n4)
        return sfft.ifft2(new * n * n).real


def step(state: StepperState, quad: PvQuadrature | None = None) -> StepperState:
    return Stepper(quad).step(state)


# ---------------------------------------------------------------------------
# ledger


@dataclass
class EnergyLedger:
    """Norm reports with the bootstrap integral and the monitor residuals."""

    rho: float = TWO_PI
    reports: list[NormReport] = field(default_factory=list)
    d_of_t: list[float] = field(default_factory=list)
    dt_history: list[float] = field(default_factory=list)
    de_dt: list[float] = field(default_factory=list)
    energy_residual: list[float] = field(default_factory=list)
    slope_residual: list[float] = field(default_factory=list)
    status: str = "running"
    message: str = ""

    def append(self, report: NormReport, d_of_t: float):
        if self.reports and not report.timestamp > self.reports[-1].timestamp:
            raise ValueError("report times must be strictly increasing")
        if not self.reports and d_of_t != 0.0:
            raise ValueError("the bootstrap integral starts at 0")
        if self.d_of_t and d_of_t < self.d_of_t[-1]:
            raise ValueError("the bootstrap integral cannot decrease")
        self.reports.append(report)
        self.d_of_t.append(float(d_of_t))

    def __len__(self):
        return len(self.reports)

    @property
    def t(self) -> np.ndarray:
        return np.array([r.timestamp for r in self.reports])

    @property
    def h2(self) -> np.ndarray:
        return np.array([r.h2 for r in self.reports])

    @property
    def h52(self) -> np.ndarray:
        return np.array([r.h52 for r in self.reports])

    @property
    def lipschitz(self) -> np.ndarray:
        return np.array([r.lipschitz for r in self.reports])

    @property
    def d(self) -> np.ndarray:
        return np.array(self.d_of_t)

    @property
    def dissipation_budget(self) -> np.ndarray:
        return (self.rho / TWO_PI) * self.h52**2 / (1.0 + self.lipschitz**2) ** 1.5

    def check_invariants(self):
        t, d = self.t, self.d
        if len(t) and (np.any(np.diff(t) <= 0)):
            raise AssertionError("ledger times are not strictly increasing")
        if len(d) and (d[0] != 0 or np.any(np.diff(d) < 0)):
            raise AssertionError("bootstrap integral is not a nondecreasing series from 0")

    def finalize(self):
        """Fill the derived columns from the monitors (NaN where undefined)."""
        m = len(self)
        self.de_dt = [math.nan] * m
        self.energy_residual = [math.nan] * m
        self.slope_residual = [math.nan] * m
        if m >= 3:
            er = energy_rate_monitor(self)
            self.de_dt = list(er.de_dt)
            self.energy_residual = list(er.residual)
        if m >= 1:
            sm = slope_monitor(self)
            self.slope_residual = list(-sm.slack)

    def rows(self) -> list[dict]:
        if len(self.de_dt) != len(self):
            self.finalize()
        budget = self.dissipation_budget
        return [
            {
                "t": float(r.timestamp),
                "h2": float(r.h2),
                "h52": float(r.h52),
                "lipschitz": float(r.lipschitz),
                "d_of_t": float(self.d_of_t[i]),
                "de_dt": float(self.de_dt[i]),
                "dissipation_budget": float(budget[i]),
                "energy_residual": float(self.energy_residual[i]),
                "slope_residual": float(self.slope_residual[i]),
            }
            for i, r in enumerate(self.reports)
        ]


# ---------------------------------------------------------------------------
# monitors


class InsufficientSamplesError(ValueError):
    pass


@dataclass(frozen=True)
class EnergyRateResult:
    t: np.ndarray
    de_dt: np.ndarray  # central-difference d/dt of h2^2
    lhs: np.ndarray  # de_dt + (rho/2pi) h52^2 / (1 + K^2)^(3/2)
    rhs: np.ndarray  # h52^2 (h2 + h2^2)
    c_fit: float
    residual: np.ndarray  # lhs - c_fit * rhs
    violations: np.ndarray  # indices where no finite constant works
    linear_ratio: np.ndarray  # de_dt / (-2 (rho/2pi) h52^2)

    @property
    def holds(self) -> bool:
        return self.violations.size == 0


def energy_rate_monitor(ledger: EnergyLedger, window: tuple[float, float] | None = None) -> EnergyRateResult:
    """Check d/dt|f|_{H^2}^2 + dissipation <= C h52^2 (h2 + h2^2) and fit C.

    The derivative is a second-order central difference over the report
    times, independent of the right-hand side used by the solver. ``window``
    limits the fit to reports with t in [t0, t1].
    """
    if len(ledger) < 3:
        raise InsufficientSamplesError(f"need at least 3 reports, ledger has {len(ledger)}")
    t = ledger.t
    e = ledger.h2**2
    de = np.gradient(e, t, edge_order=2)
    h52sq = ledger.h52**2
    lhs = de + ledger.dissipation_budget
    rhs = h52sq * (ledger.h2 + ledger.h2**2)
    sel = np.ones(len(t), dtype=bool)
    if window is not None:
        sel = (t >= window[0]) & (t <= window[1])
        if sel.sum() < 3:
            raise InsufficientSamplesError("fewer than 3 reports inside the window")
    scale = np.abs(de) + ledger.dissipation_budget
    tiny = 1e-12 * max(float(scale.max()), 1e-300)
    pos = sel & (rhs > 0)
    c_fit = float(max(0.0, np.max(lhs[pos] / rhs[pos]))) if pos.any() else 0.0
    violations = np.flatnonzero(sel & (rhs <= 0) & (lhs > tiny))
    ratio = np.full(len(t), np.nan)
    nz = h52sq > 0
    ratio[nz] = de[nz] / (-2.0 * (ledger.rho / TWO_PI) * h52sq[nz])
    return EnergyRateResult(t, de, lhs, rhs, c_fit, lhs - c_fit * rhs, violations, ratio)


@dataclass(frozen=True)
class SlopeResult:
    t: np.ndarray
    k_sq: np.ndarray
    d: np.ndarray
    c_fit: float
    slack: np.ndarray  # K0^2 + c_fit D - K^2

    def holds_with(self, constant: float, tol: float = 1e-12) -> bool:
        k0 = self.k_sq[0]
        return bool(np.all(self.k_sq <= k0 + constant * self.d + tol * max(1.0, k0)))


def slope_monitor(ledger: EnergyLedger) -> SlopeResult:
    """Smallest C with K(t)^2 <= K(0)^2 + C D(t) at every report."""
    if len(ledger) == 0:
        raise InsufficientSamplesError("empty ledger")
    k2 = ledger.lipschitz**2
    d = ledger.d
    excess = k2 - k2[0]
    pos = d > 0
    c_fit = float(max(0.0, np.max(excess[pos] / d[pos]))) if pos.any() else 0.0
    if np.any(~pos & (excess > 1e-12 * max(1.0, k2[0]))):
        c_fit = math.inf
    slack = k2[0] + (c_fit * d if math.isfinite(c_fit) else 0.0) - k2
    return SlopeResult(ledger.t, k2, d, c_fit, slack)


def h2_nonincreasing(ledger: EnergyLedger, after: float, rtol: float = 1e-12) -> bool:
    """True if h2^2 never increases between consecutive reports with t >= after."""
    t, e = ledger.t, ledger.h2**2
    sel = t >= after
    es = e[sel]
    if es.size < 2:
        return True
    return bool(np.all(np.diff(es) <= rtol * max(float(e.max()), 1e-300)))


# ---------------------------------------------------------------------------
# driver


@dataclass
class RunResult:
    ledger: EnergyLedger
    field: InterfaceField
    t: float
    status: str  # "completed" or "aborted"
    message: str = ""
    written: list[Path] = field(default_factory=list)

    @property
    def completed(self) -> bool:
        return self.status == "completed"


def initial_field(config: SimConfig) -> InterfaceField:
    i, g = config.initial, config.grid
    if i.profile == "file":
        f, _ = read_snapshot(i.file)
        if f.n != g.n or f.period != g.period:
            raise ValueError(f"snapshot {i.file} has n={f.n}, L={f.period}; config wants n={g.n}, L={g.period}")
        return f
    params = {
        "zero": {},
        "single_mode": {"amplitude": i.amplitude, "mode": (i.mode_x, i.mode_y)},
        "gaussian_bump": {"amplitude": i.amplitude, "sigma": i.sigma},
        "steep_ridge": {"k_target": i.k_target, "width": i.width},
        "random_bandlimited": {"slope": i.slope, "kmax": i.kmax, "seed": config.run.seed},
    }[i.profile]
    return builtin_profile(i.profile, g.n, g.period, **params)


def run(
    config: SimConfig,
    f0: InterfaceField | None = None,
    write_outputs: bool = True,
    output_dir=None,
    progress=None,
) -> RunResult:
    """Advance the configured problem to t_final, recording a report per cadence.

    Aborts (keeping the ledger and the last good field) on a non-finite
    state, a slope above 1e4 or H^2 growth beyond 1e6 times its start value.
    With ``write_outputs`` the ledger and a final snapshot are written even
    after an abort.
    """
    p, tm = config.physics, config.time
    f = initial_field(config) if f0 is None else f0
    quad = config.pv_quadrature()
    stepper = Stepper(quad)
    ledger = EnergyLedger(rho=p.rho)
    t = 0.0
    rep = norm_report(f, t)
    ledger.append(rep, 0.0)
    h2_0 = rep.h2
    d_int = 0.0
    h52_prev = rep.h52
    status, message = "completed", ""
    cadence = tm.report_every
    next_report = cadence if cadence else None
    eps_t = 1e-12 * max(1.0, tm.t_final)

    while t < tm.t_final - eps_t:
        if tm.dt is not None:
            dt = tm.dt
        else:
            dt = stable_dt(f.n, f.period, p.rho, p.eps, tm.scheme, tm.cfl, lipschitz_seminorm(f), p.muskat)
        target = tm.t_final if next_report is None else min(next_report, tm.t_final)
        dt = min(dt, target - t)
        if target - t - dt < eps_t:
            dt = target - t
        state = StepperState(f, t, dt, tm.scheme, p.eps, p.rho, p.muskat)
        try:
            new = stepper.step(state)
        except SimulationAborted as exc:
            status, message = "aborted", str(exc)
            break
        f_new = new.field
        t_new = target if abs(new.t - target) < eps_t else new.t
        h52 = sobolev_seminorm(f_new, 2.5)
        d_int += 0.5 * dt * (h52_prev**2 + h52**2)
        h52_prev = h52
        ledger.dt_history.append(dt)
        f, t = f_new, t_new
        reached = next_report is None or t >= next_report - eps_t or t >= tm.t_final - eps_t
        rep = norm_report(f, t)
        if reached:
            ledger.append(rep, d_int)
            if next_report is not None:
                while next_report <= t + eps_t:
                    next_report += cadence
        if progress:
            progress(t, rep)
        if rep.lipschitz > MAX_SLOPE:
            status, message = "aborted", f"slope {rep.lipschitz:.3e} exceeds {MAX_SLOPE:g} at t={t:.6g}"
        elif h2_0 > 0 and rep.h2 > MAX_H2_GROWTH * h2_0:
            status, message = "aborted", f"H^2 grew by more than {MAX_H2_GROWTH:g}x at t={t:.6g}"
        if status == "aborted":
            if not reached:
                ledger.append(rep, d_int)
            break

    ledger.status, ledger.message = status, message
    ledger.finalize()
    ledger.check_invariants()
    written = []
    if write_outputs:
        out = Path(output_dir if output_dir is not None else config.output.directory)
        meta = {"config_digest": config.digest(), "status": status}
        written = emit_ledger(ledger.rows(), out, config.output.format, meta=meta)
        snap = out / "final.snap"
        write_snapshot(snap, f, t, config.digest())
        written.append(snap)
    return RunResult(ledger, f, t, status, message, written)
