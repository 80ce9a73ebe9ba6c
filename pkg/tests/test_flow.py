import math

import numpy as np
import pytest

from icflow import background as bg
from icflow import curvature as cf
from icflow import flow
from icflow import geometry as geo
from icflow import sphere as sp
from icflow.errors import ConfigError, InadmissibleState, StepUnderflow


def make_config(**kw):
    defaults = dict(
        background=bg.BackgroundParams(m=0.0, n=2),
        grid_mode="axisymmetric1d",
        grid_resolution=64,
        initial=flow.InitialData(kind="constant", r0=1.0),
        f=cf.from_name("mean", 2),
        t_end=1.0,
    )
    defaults.update(kw)
    return flow.FlowConfig(**defaults)


@pytest.fixture(scope="module")
def prof_m0():
    return bg.build_warp_profile(bg.BackgroundParams(m=0.0, n=2), r_max=8.0)


@pytest.fixture(scope="module")
def prof_m2():
    return bg.build_warp_profile(bg.BackgroundParams(m=2.0, n=2), r_max=8.0)


def unit_sphere_state(prof_m0, n=48):
    grid = sp.build_grid("axisymmetric1d", n)
    return geo.state_from_radius(grid, prof_m0, np.full(n, 1.0))


class TestRhs:
    def test_closed_form_unit_sphere(self, prof_m0):
        # v=1, lambda=sinh1, F=2 coth 1: speed = 1/(2 cosh 1)
        state = unit_sphere_state(prof_m0)
        speed = flow.rhs(state, cf.from_name("mean", 2))
        want = 1.0 / (2.0 * math.cosh(1.0))
        assert abs(want - 0.3240271368319427) < 1e-15
        assert np.max(np.abs(speed.values - want)) < 1e-13

    def test_umbilic_reduces_to_radial_law(self, prof_m2):
        # constant data: speed = 1/(n lambda')
        grid = sp.build_grid("axisymmetric1d", 32)
        r0 = float(prof_m2.radius_from_lambda(2.0))
        state = geo.state_from_radius(grid, prof_m2, np.full(32, r0))
        speed = flow.rhs(state, cf.from_name("mean", 2))
        lam_p = float(prof_m2.lambda_p_of_lambda(2.0))
        assert np.max(np.abs(speed.values - 1.0 / (2.0 * lam_p))) < 1e-12

    def test_inadmissible_state_raises(self, prof_m0):
        # a deep thin dimple drives one principal curvature negative enough
        # to leave the mean-curvature cone
        grid = sp.build_grid("axisymmetric1d", 96)
        r = 1.0 - 0.65 * np.exp(-((grid.theta - np.pi / 2) ** 2) / 0.02)
        state = geo.state_from_radius(grid, prof_m0, r)
        ext = geo.compute_extrinsic(state)
        assert np.min(np.sum(ext.kappa, axis=-1)) < 0  # fixture sanity
        with pytest.raises(InadmissibleState) as exc:
            flow.rhs(state, cf.from_name("mean", 2))
        assert exc.value.node is not None
        assert exc.value.kappa is not None


class TestStableDt:
    def test_umbilic_scale(self, prof_m0):
        state = unit_sphere_state(prof_m0)
        f = cf.from_name("mean", 2)
        dt = flow.stable_dt(state, f, cfl=0.2, dt_max=np.inf)
        lam = math.sinh(1.0)
        fval = 2.0 * math.cosh(1.0) / math.sinh(1.0)
        h = state.grid.d_theta
        want = 0.2 * h * h * (lam * fval) ** 2
        assert abs(dt - want) < 1e-12 * want

    def test_resolution_quarters_dt(self, prof_m0):
        f = cf.from_name("mean", 2)
        dts = []
        for n in (32, 64):
            grid = sp.build_grid("axisymmetric1d", n)
            state = geo.state_from_radius(grid, prof_m0, np.full(n, 1.0))
            dts.append(flow.stable_dt(state, f, cfl=0.2, dt_max=np.inf))
        assert abs(dts[0] / dts[1] - 4.0) < 1e-12

    def test_underflow(self, prof_m0):
        state = unit_sphere_state(prof_m0)
        with pytest.raises(StepUnderflow):
            flow.stable_dt(state, cf.from_name("mean", 2), cfl=0.2, dt_min=1.0)


class TestStep:
    def test_single_euler_step(self, prof_m0):
        state = unit_sphere_state(prof_m0)
        new = flow.step(state, cf.from_name("mean", 2), 0.01, "euler")
        dphi = new.phi.values - state.phi.values
        want = 0.01 / (2.0 * math.cosh(1.0))
        assert np.max(np.abs(dphi - want)) < 1e-15
        assert abs(np.max(dphi) - 0.003240271368319427) < 1e-12

    def test_constant_stays_constant(self, prof_m0):
        state = unit_sphere_state(prof_m0)
        f = cf.from_name("mean", 2)
        for _ in range(5):
            state = flow.step(state, f, 0.01, "rk2")
        spread = np.max(state.phi.values) - np.min(state.phi.values)
        assert spread <= 1e-13

    def test_time_convergence_orders(self, prof_m0):
        # umbilic closed form: lambda(t) = sinh(1) e^(t/2)
        f = cf.from_name("mean", 2)

        def final_error(dt, integrator):
            grid = sp.build_grid("axisymmetric1d", 16)
            state = geo.state_from_radius(grid, prof_m0, np.full(16, 1.0))
            steps = round(1.0 / dt)
            for _ in range(steps):
                state = flow.step(state, f, dt, integrator)
            lam = float(prof_m0.lambda_of_r(state.r.values[0]))
            return abs(lam - math.sinh(1.0) * math.exp(0.5 * state.t))

        orders = {}
        for integ in ("euler", "rk2"):
            errs = [final_error(dt, integ) for dt in (4e-3, 2e-3, 1e-3)]
            orders[integ] = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
        assert all(abs(o - 1.0) <= 0.1 for o in orders["euler"])
        assert all(abs(o - 2.0) <= 0.1 for o in orders["rk2"])

    def test_retry_halving(self, prof_m0, monkeypatch):
        state = unit_sphere_state(prof_m0)
        f = cf.from_name("mean", 2)
        calls = {"n": 0}
        real = flow._advance

        def flaky(s, F, dt, integrator):
            calls["n"] += 1
            if calls["n"] <= 2:
                raise InadmissibleState("synthetic", t=s.t, node=(0,), kappa=None)
            return real(s, F, dt, integrator)

        monkeypatch.setattr(flow, "_advance", flaky)
        events = []
        new = flow.step(state, f, 0.01, "rk2", events=events)
        assert calls["n"] == 3
        assert len(events) == 2
        assert all(e.kind == "admissibility_violation" for e in events)
        assert abs((new.t - state.t) - 0.0025) < 1e-15

    def test_retry_exhaustion(self, prof_m0, monkeypatch):
        state = unit_sphere_state(prof_m0)

        def always_bad(s, F, dt, integrator):
            raise InadmissibleState("synthetic", t=s.t, node=(0,), kappa=None)

        monkeypatch.setattr(flow, "_advance", always_bad)
        with pytest.raises(InadmissibleState):
            flow.step(state, cf.from_name("mean", 2), 0.01, "rk2")


class TestRun:
    def test_umbilic_mass2_exponential_law(self):
        cfg = make_config(
            background=bg.BackgroundParams(m=2.0, n=2),
            initial=flow.InitialData(kind="constant", r0=0.0),  # replaced below
            t_end=3.0,
        )
        prof = bg.build_warp_profile(cfg.background, 6.0)
        r0 = float(prof.radius_from_lambda(2.0))
        cfg = make_config(
            background=cfg.background,
            initial=flow.InitialData(kind="constant", r0=r0),
            t_end=3.0,
        )
        final, series, events = flow.run(cfg)
        for state in series.states:
            lam = float(np.max(state.profile.lambda_of_r(state.r.values)))
            assert abs(lam * math.exp(-state.t / 2.0) / 2.0 - 1.0) <= 1e-5
        assert events[-1].kind == "completed"

    def test_massless_sinh_law(self):
        cfg = make_config(t_end=4.0)
        final, series, _ = flow.run(cfg)
        for state in series.states:
            r = float(np.max(state.r.values))
            want = math.sinh(1.0) * math.exp(state.t / 2.0)
            assert abs(math.sinh(r) / want - 1.0) <= 1e-5

    def test_zero_t_end(self):
        cfg = make_config(t_end=0.0)
        final, series, events = flow.run(cfg)
        assert final.t == 0.0
        assert series.records == []
        assert [e.kind for e in events] == ["completed"]

    def test_snapshot_times_and_event_order(self):
        cfg = make_config(t_end=0.55, output_every=0.1)
        _, series, events = flow.run(cfg)
        times = series.times
        assert abs(times[0]) < 1e-12
        assert abs(times[-1] - 0.55) < 1e-9
        expected = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.55]
        assert len(times) == len(expected)
        assert np.max(np.abs(times - np.array(expected))) < 1e-9
        ts = [e.t for e in events]
        assert all(a <= b + 1e-12 for a, b in zip(ts, ts[1:]))

    def test_symmetry_preserved_in_2d(self):
        cfg = make_config(
            grid_mode="latlong2d",
            grid_resolution=(16, 32),
            initial=flow.InitialData(kind="cosine_perturbation", r0=1.0,
                                     amplitude=0.1, wavenumber=1),
            t_end=0.02,
            output_every=0.01,
        )
        final, _, _ = flow.run(cfg)
        var = np.max(final.phi.values, axis=1) - np.min(final.phi.values, axis=1)
        assert np.max(var) <= 1e-10

    def test_pinching_and_gradient_monotone(self):
        cfg = make_config(
            background=bg.BackgroundParams(m=1.0, n=2),
            grid_resolution=128,
            initial=flow.InitialData(kind="cosine_perturbation", r0=2.0,
                                     amplitude=0.3, wavenumber=1),
            t_end=1.5,
        )
        _, series, _ = flow.run(cfg)
        assert all(r.pinch_low_ok for r in series.records)
        assert all(r.pinch_high_ok for r in series.records)
        g0 = series.meta["sup_grad0"]
        assert all(r.sup_grad_phi_sq <= g0 * (1 + 1e-6) for r in series.records)

    def test_config_validation(self):
        with pytest.raises(ConfigError):
            make_config(cfl=0.9)
        with pytest.raises(ConfigError):
            make_config(t_end=-1.0)
        with pytest.raises(ConfigError):
            make_config(integrator="rk7")


class TestCheckpoint:
    def test_roundtrip_bits(self, tmp_path, prof_m0):
        grid = sp.build_grid("axisymmetric1d", 32)
        r = 1.0 + 0.2 * np.cos(grid.theta)
        state = geo.state_from_radius(grid, prof_m0, r, t=0.75)
        path = tmp_path / "ck.json"
        flow.save_checkpoint(state, path)
        cfg = make_config(grid_resolution=32, t_end=2.0)
        loaded = flow.load_checkpoint(path, cfg)
        assert loaded.t == state.t
        assert np.array_equal(loaded.phi.values, state.phi.values)

    def test_resume_matches_uninterrupted(self, tmp_path):
        cfg_full = make_config(
            grid_resolution=48,
            initial=flow.InitialData(kind="cosine_perturbation", r0=1.0,
                                     amplitude=0.2, wavenumber=1),
            t_end=2.0,
        )
        _, series_full, _ = flow.run(cfg_full)

        cfg_half = make_config(
            grid_resolution=48,
            initial=cfg_full.initial,
            t_end=1.0,
        )
        mid, _, _ = flow.run(cfg_half)
        path = tmp_path / "ck.json"
        flow.save_checkpoint(mid, path)
        resumed_state = flow.load_checkpoint(path, cfg_full)
        _, series_res, _ = flow.run(cfg_full, initial_state=resumed_state)

        for rec in series_res.records:
            match = [r for r in series_full.records if abs(r.t - rec.t) < 1e-9]
            assert match
            ref = match[0]
            assert abs(rec.r_tilde_max - ref.r_tilde_max) < 1e-9
            assert abs(rec.sup_grad_phi_sq - ref.sup_grad_phi_sq) < 1e-9

    def test_mismatched_config_rejected(self, tmp_path, prof_m0):
        state = unit_sphere_state(prof_m0, 32)
        path = tmp_path / "ck.json"
        flow.save_checkpoint(state, path)
        cfg = make_config(grid_resolution=64)
        with pytest.raises(ConfigError):
            flow.load_checkpoint(path, cfg)
