import math

import numpy as np
import pytest

from icflow import background as bg
from icflow import curvature as cf
from icflow import diagnostics as dg
from icflow import flow
from icflow import geometry as geo
from icflow import sphere as sp
from icflow.errors import InsufficientData


def synthetic_series(times, values):
    s = dg.DiagnosticsSeries()
    for t, y in zip(times, values):
        s.records.append(dg.DiagnosticsRecord(
            t=t, sup_kappa_dev=y, sup_grad_phi_sq=y, sup_hess_phi=y,
            F_min=1.0, F_max=2.0, r_tilde_min=0.0, r_tilde_max=0.0,
            chi_scaled_min=1.0, chi_scaled_max=1.0,
            pinch_low_ok=True, pinch_high_ok=True,
        ))
    return s


@pytest.fixture(scope="module")
def umbilic_run():
    cfg = flow.FlowConfig(
        background=bg.BackgroundParams(m=0.0, n=2),
        grid_mode="axisymmetric1d",
        grid_resolution=32,
        initial=flow.InitialData(kind="constant", r0=1.0),
        f=cf.from_name("mean", 2),
        t_end=9.0,
        dt_max=2e-3,
    )
    final, series, events = flow.run(cfg)
    return final, series, events


class TestSnapshot:
    def test_umbilic_mass2_kappa_is_one(self):
        # at lambda = 2, m = 2: lambda'^2 = 1 + 4 - 1 = 4, kappa = 1 exactly
        prof = bg.build_warp_profile(bg.BackgroundParams(m=2.0, n=2), 6.0)
        grid = sp.build_grid("axisymmetric1d", 32)
        r0 = float(prof.radius_from_lambda(2.0))
        state = geo.state_from_radius(grid, prof, np.full(32, r0))
        ext = geo.compute_extrinsic(state)
        rec = dg.snapshot(state, ext, cf.from_name("mean", 2), pinch_ref=(2.0, 2.0))
        assert rec.sup_kappa_dev < 1e-10
        assert rec.sup_grad_phi_sq == 0.0
        assert rec.pinch_low_ok and rec.pinch_high_ok

    def test_unit_hyperbolic_sphere(self):
        prof = bg.build_warp_profile(bg.BackgroundParams(m=0.0, n=2), 6.0)
        grid = sp.build_grid("axisymmetric1d", 32)
        state = geo.state_from_radius(grid, prof, np.full(32, 1.0))
        ext = geo.compute_extrinsic(state)
        rec = dg.snapshot(state, ext, cf.from_name("mean", 2),
                          pinch_ref=(math.sinh(1.0), math.sinh(1.0)))
        want = 1.0 / math.tanh(1.0) - 1.0
        assert abs(rec.sup_kappa_dev - want) < 1e-12
        assert abs(want - 0.3130352854993312) < 1e-15
        assert rec.sup_grad_phi_sq == 0.0
        assert rec.r_tilde_max >= rec.r_tilde_min
        assert np.isfinite(rec.r_tilde_min)


class TestFitRate:
    def test_exact_exponential(self):
        t = np.linspace(0, 5, 20)
        s = synthetic_series(t, 5.0 * np.exp(-t))
        fit = dg.fit_rate(s, "sup_kappa_dev", (0.0, 5.0), 1.0, 0.1)
        assert abs(fit.slope + 1.0) < 1e-9
        assert fit.r_squared > 1 - 1e-12
        assert fit.passed and fit.status == "fit"

    def test_constant_series_fails_but_fits(self):
        t = np.linspace(0, 5, 20)
        s = synthetic_series(t, np.full(20, 0.25))
        fit = dg.fit_rate(s, "sup_kappa_dev", (0.0, 5.0), 1.0, 0.1)
        assert fit.status == "fit"
        assert abs(fit.slope) < 1e-12
        assert not fit.passed

    def test_too_few_snapshots(self):
        t = np.linspace(0, 5, 5)
        s = synthetic_series(t, np.exp(-t))
        with pytest.raises(InsufficientData):
            dg.fit_rate(s, "sup_kappa_dev", (0.0, 5.0), 1.0, 0.1)

    def test_floor_passes(self):
        t = np.linspace(0, 5, 20)
        s = synthetic_series(t, np.full(20, 1e-15))
        fit = dg.fit_rate(s, "sup_kappa_dev", (0.0, 5.0), 1.0, 0.1)
        assert fit.status == "floor"
        assert fit.passed

    def test_slope_too_shallow_fails(self):
        t = np.linspace(0, 5, 20)
        s = synthetic_series(t, np.exp(-0.3 * t))
        fit = dg.fit_rate(s, "sup_kappa_dev", (0.0, 5.0), 1.0, 0.1)
        assert not fit.passed


class TestLimitProfile:
    def test_umbilic_limit_value(self, umbilic_run):
        _, series, _ = umbilic_run
        prof = dg.limit_profile(series)
        want = math.log(2.0 * math.sinh(1.0))
        assert abs(want - 0.8545865421311408) < 1e-15
        assert np.max(np.abs(prof.f_hat - want)) < 1e-3
        assert prof.gap < 1e-4
        assert prof.f_hat_spread < 1e-10
        assert prof.metric_residual_final < 5e-3

    def test_umbilic_mass2_limit_value(self):
        # constant data at lambda_0 = 2: r - t/2 -> log(2 lambda_0) = log 4
        prof = bg.build_warp_profile(bg.BackgroundParams(m=2.0, n=2), 8.0)
        r0 = float(prof.radius_from_lambda(2.0))
        cfg = flow.FlowConfig(
            background=bg.BackgroundParams(m=2.0, n=2),
            grid_mode="axisymmetric1d",
            grid_resolution=32,
            initial=flow.InitialData(kind="constant", r0=r0),
            f=cf.from_name("mean", 2),
            t_end=8.0,
            dt_max=2e-3,
        )
        _, series, _ = flow.run(cfg)
        prof_fit = dg.limit_profile(series)
        assert np.max(np.abs(prof_fit.f_hat - math.log(4.0))) < 1e-3

    def test_insufficient(self):
        s = dg.DiagnosticsSeries()
        with pytest.raises(InsufficientData):
            dg.limit_profile(s)


class TestTheoremReport:
    def test_umbilic_report_passes(self, umbilic_run):
        _, series, _ = umbilic_run
        rep = dg.theorem_report(series, dg.ReportConfig())
        assert rep["overall_pass"], dg.report_lines(rep)
        by_name = {r["name"]: r for r in rep["rates"]}
        # gradient and Hessian collapse to the floor on exact umbilic data
        assert by_name["sup_grad_phi_sq"]["status"] == "floor"
        assert by_name["sup_hess_phi"]["status"] == "floor"
        # curvature deviation decays like e^(-2t/n) = e^(-t)
        assert by_name["sup_kappa_dev"]["status"] == "fit"
        assert by_name["sup_kappa_dev"]["slope"] <= -0.85
        assert rep["pinching_pass"]
        assert rep["umbilic_profile_constant_pass"]
        lines = dg.report_lines(rep)
        assert any(line.startswith("OVERALL: PASS") for line in lines)

    def test_short_run_reports_insufficient(self):
        cfg = flow.FlowConfig(
            background=bg.BackgroundParams(m=0.0, n=2),
            grid_mode="axisymmetric1d",
            grid_resolution=32,
            initial=flow.InitialData(kind="constant", r0=1.0),
            f=cf.from_name("mean", 2),
            t_end=0.5,
        )
        _, series, _ = flow.run(cfg)
        rep = dg.theorem_report(series, dg.ReportConfig())
        statuses = {r["name"]: r["status"] for r in rep["rates"]}
        assert all(s in ("insufficient", "floor") for s in statuses.values())
        assert rep["pinching_pass"]
        assert rep["gradient_monotone_pass"]
