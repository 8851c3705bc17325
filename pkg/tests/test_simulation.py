import math

import numpy as np
import pytest

from muskat3d import simulation
from muskat3d.config import GridSection, InitialSection, OutputSection, PhysicsSection, SimConfig, TimeSection
from muskat3d.grid import InterfaceField, laplacian
from muskat3d.io import write_snapshot
from muskat3d.norms import norm_report
from muskat3d.profiles import random_bandlimited, single_mode
from muskat3d.simulation import (
    EnergyLedger,
    InsufficientSamplesError,
    Stepper,
    StepperState,
    dissipation_coefficient,
    energy_rate_monitor,
    h2_nonincreasing,
    initial_field,
    run,
    slope_monitor,
    stable_dt,
    step,
)


def make_config(n=32, t_final=1.0, scheme="ifrk4", report_every=None, dt=None, physics=None, **initial):
    return SimConfig(
        grid=GridSection(n=n),
        time=TimeSection(t_final=t_final, scheme=scheme, report_every=report_every, dt=dt),
        physics=PhysicsSection(**(physics or {})),
        initial=InitialSection(**initial),
    )


def advance(f, t_final, dt, scheme="rk4", **kw):
    stepper = Stepper()
    t = 0.0
    while t < t_final - 1e-12:
        s = stepper.step(StepperState(f, t, min(dt, t_final - t), scheme, **kw))
        f, t = s.field, s.t
    return f


class TestDissipationCoefficient:
    def test_values(self):
        assert dissipation_coefficient(0.0) == 0.5
        assert dissipation_coefficient(1.0) == pytest.approx(0.1767766953, abs=1e-10)

    def test_monotone(self):
        k = np.linspace(0, 20, 200)
        vals = [dissipation_coefficient(x) for x in k]
        assert np.all(np.diff(vals) < 0)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            dissipation_coefficient(-0.1)


class TestStepperState:
    @pytest.mark.parametrize("kw", [{"dt": 0.0}, {"dt": -1.0}, {"dt": 0.1, "scheme": "euler"}])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            StepperState(InterfaceField.zeros(8), 0.0, **kw)

    @pytest.mark.parametrize("scheme", ["rk4", "ifrk4"])
    def test_stable_dt_positive_and_shrinks_with_n(self, scheme):
        a = stable_dt(32, 2 * np.pi, 2 * np.pi, 0.1, scheme, 0.25, slope=1.0)
        b = stable_dt(64, 2 * np.pi, 2 * np.pi, 0.1, scheme, 0.25, slope=1.0)
        assert 0 < b < a

    def test_ifrk4_linear_only_unconstrained(self):
        assert stable_dt(32, 2 * np.pi, 2 * np.pi, 0.0, "ifrk4", 0.25, slope=0.0) == math.inf


class TestStepper:
    @pytest.mark.parametrize("scheme", ["rk4", "ifrk4"])
    def test_zero_is_fixed(self, scheme):
        s = step(StepperState(InterfaceField.zeros(16), 0.0, 0.1, scheme))
        assert np.all(s.field.values == 0) and s.t == pytest.approx(0.1)

    def test_pure_diffusion_integrating_factor_exact(self):
        f = single_mode(32, mode=(1, 0))
        g = advance(f, 1.0, 0.1, "ifrk4", eps=1.0, muskat=False)
        assert np.max(np.abs(g.values - math.exp(-1.0) * f.values)) < 1e-12

    def test_pure_diffusion_rk4_stability_polynomial(self):
        f = single_mode(32, mode=(2, 1))
        dt, z = 0.01, -0.01 * 5.0
        g = step(StepperState(f, 0.0, dt, "rk4", eps=1.0, muskat=False)).field
        amp = 1 + z + z * z / 2 + z**3 / 6 + z**4 / 24
        assert np.max(np.abs(g.values - amp * f.values)) < 1e-12

    def test_rhs_includes_viscosity(self):
        f = random_bandlimited(16, slope=1.0, seed=0)
        st = Stepper()
        a = st.full_rhs(f, 2 * np.pi, 0.5, False)
        assert np.allclose(a, 0.5 * laplacian(f).values, atol=1e-12)

    @pytest.mark.parametrize("scheme", ["rk4", "ifrk4"])
    def test_linear_decay(self, scheme):
        f = single_mode(32, amplitude=1e-4)
        g = advance(f, 1.0, 0.05, scheme)
        ratio = norm_report(g).h2 / norm_report(f).h2
        assert ratio == pytest.approx(math.exp(-1.0), rel=1e-2)

    def test_mean_conserved(self):
        f = random_bandlimited(32, slope=1.0, seed=2) + 0.7
        g = advance(f, 0.2, 0.05, "ifrk4")
        l2 = np.sqrt(np.mean(f.values**2)) * f.period
        assert abs(g.values.mean() - f.values.mean()) < 1e-9 * (1 + l2)

    def test_fourth_order_in_dt(self):
        f = random_bandlimited(32, slope=0.8, seed=1, kmax=3)
        ref = advance(f, 0.2, 0.2 / 64, "ifrk4").values
        dts = np.array([0.05, 0.025, 0.0125])
        errs = [np.max(np.abs(advance(f, 0.2, dt, "ifrk4").values - ref)) for dt in dts]
        order = np.polyfit(np.log(dts), np.log(errs), 1)[0]
        assert 3.5 <= order <= 4.5


class TestLedger:
    def test_append_validation(self):
        led = EnergyLedger()
        with pytest.raises(ValueError):
            led.append(norm_report(InterfaceField.zeros(8), 0.0), 1.0)
        led.append(norm_report(InterfaceField.zeros(8), 0.0), 0.0)
        with pytest.raises(ValueError):
            led.append(norm_report(InterfaceField.zeros(8), 0.0), 0.0)
        led.append(norm_report(InterfaceField.zeros(8), 1.0), 0.5)
        with pytest.raises(ValueError):
            led.append(norm_report(InterfaceField.zeros(8), 2.0), 0.1)

    def test_monitors_need_reports(self):
        led = EnergyLedger()
        with pytest.raises(InsufficientSamplesError):
            slope_monitor(led)
        led.append(norm_report(InterfaceField.zeros(8), 0.0), 0.0)
        led.append(norm_report(InterfaceField.zeros(8), 1.0), 0.0)
        with pytest.raises(InsufficientSamplesError):
            energy_rate_monitor(led)
        led.finalize()
        assert all(math.isnan(x) for x in led.de_dt)

    def test_zero_data_run(self, tmp_path):
        res = run(make_config(t_final=1.0, report_every=0.25, profile="zero"), output_dir=tmp_path)
        assert res.completed
        led = res.ledger
        assert np.allclose(led.t, [0, 0.25, 0.5, 0.75, 1.0])
        assert np.all(led.h2 == 0) and np.all(led.d == 0)
        er, sm = energy_rate_monitor(led), slope_monitor(led)
        assert er.c_fit == 0 and er.holds and sm.c_fit == 0
        assert {p.name for p in res.written} == {"ledger.csv", "ledger.json", "final.snap"}


@pytest.fixture(scope="module")
def linear():
    cfg = make_config(t_final=1.0, report_every=0.1, profile="single_mode", amplitude=1e-3)
    return run(cfg, write_outputs=False)


class TestRuns:
    def test_linear_energy_decay(self, linear):
        led = linear.ledger
        assert led.h2[-1] / led.h2[0] == pytest.approx(math.exp(-1.0), rel=1e-2)
        assert h2_nonincreasing(led, after=0.0)

    def test_linear_ratio_within_five_percent(self, linear):
        ratio = energy_rate_monitor(linear.ledger).linear_ratio
        assert np.all(np.abs(ratio - 1) < 0.05)

    def test_bootstrap_integral_trapezoid(self, linear):
        # single mode, linear regime: h52^2 = h52(0)^2 exp(-2t)
        led = linear.ledger
        exact = led.h52[0] ** 2 * (1 - math.exp(-2.0)) / 2
        assert led.d[-1] == pytest.approx(exact, rel=1e-2)

    def test_slope_monitor_linear(self, linear):
        sm = slope_monitor(linear.ledger)
        assert sm.holds_with(1.0) and np.all(sm.slack >= -1e-12)

    def test_moderate_slope_completes(self):
        cfg = make_config(t_final=0.5, report_every=0.25, profile="random_bandlimited", slope=2.0, kmax=3)
        res = run(cfg, write_outputs=False)
        assert res.completed and res.t == pytest.approx(0.5)
        res.ledger.check_invariants()

    def test_small_data_monotone(self):
        cfg = make_config(t_final=1.0, report_every=0.2, profile="random_bandlimited", slope=0.05, kmax=3)
        res = run(cfg, write_outputs=False)
        assert h2_nonincreasing(res.ledger, after=0.0)

    def test_abort_keeps_ledger(self, monkeypatch, tmp_path):
        monkeypatch.setattr(simulation, "MAX_SLOPE", 0.5)
        cfg = make_config(t_final=1.0, report_every=0.25, profile="single_mode", amplitude=1.0)
        res = run(cfg, output_dir=tmp_path)
        assert res.status == "aborted" and "slope" in res.message
        res.ledger.check_invariants()
        assert (tmp_path / "final.snap").exists()
        assert "aborted" in (tmp_path / "ledger.json").read_text()

    def test_fixed_dt(self):
        cfg = make_config(t_final=0.3, dt=0.1, profile="single_mode", amplitude=1e-3, scheme="rk4")
        res = run(cfg, write_outputs=False)
        assert np.allclose(res.ledger.dt_history, 0.1)
        assert len(res.ledger) == 4


class TestInitialField:
    def test_profiles(self):
        f = initial_field(make_config(profile="single_mode", amplitude=0.5, mode_x=2, mode_y=1))
        assert np.allclose(f.values, single_mode(32, amplitude=0.5, mode=(2, 1)).values)

    def test_snapshot_size_mismatch(self, tmp_path):
        p = tmp_path / "f.snap"
        write_snapshot(p, InterfaceField.zeros(16), 0.0)
        with pytest.raises(ValueError, match="n=16"):
            initial_field(make_config(profile="file", file=str(p)))

    def test_snapshot_round_trip(self, tmp_path):
        p = tmp_path / "f.snap"
        f = random_bandlimited(32, seed=3)
        write_snapshot(p, f, 0.0)
        assert np.array_equal(initial_field(make_config(profile="file", file=str(p))).values, f.values)


def test_output_section_default_format():
    assert OutputSection().format == "both"
