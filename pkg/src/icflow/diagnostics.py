"""Per-snapshot scalar extraction, rate fitting and theorem-style checks.

Each snapshot condenses a flow state into the handful of scalars the
qualitative theory controls: the worst deviation of the principal
curvatures from 1, the gauge-gradient and gauge-Hessian sup norms, the
range of the curvature function, the drift-corrected radius r - t/n and
the rescaled support function (lambda/v) e^(-t/n), plus the two pinching
flags comparing lambda(r) e^(-t/n) against its initial range.

Exponential rates are estimated by least squares on (t, log y): a bound
of the form y <= C e^(-mu t) is accepted when the fitted slope is at most
-mu + tolerance with r^2 >= 0.95. Quantities that have already collapsed
to the floating-point floor pass trivially; windows with fewer than eight
usable snapshots report insufficient data instead of failure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import curvature as cf
from .errors import InsufficientData
from .geometry import GraphState, compute_extrinsic
from .sphere import tensor_sup_norm

FLOOR = 1e-13
_FLOOR_PASS = 1e-10

SERIES_COLUMNS = (
    "t", "sup_kappa_dev", "sup_grad_phi_sq", "sup_hess_phi",
    "F_min", "F_max", "r_tilde_min", "r_tilde_max",
    "chi_scaled_min", "chi_scaled_max", "pinch_low_ok", "pinch_high_ok",
)


@dataclass
class DiagnosticsRecord:
    t: float
    sup_kappa_dev: float
    sup_grad_phi_sq: float
    sup_hess_phi: float
    F_min: float
    F_max: float
    r_tilde_min: float
    r_tilde_max: float
    chi_scaled_min: float
    chi_scaled_max: float
    pinch_low_ok: bool
    pinch_high_ok: bool
    neg_drift_scaled: float = 0.0   # sup (1/n - v/F)_+ e^(t/n); not serialized


def snapshot(state: GraphState, ext, F: cf.CurvatureFunction,
             pinch_ref: tuple) -> DiagnosticsRecord:
    """Condense one state; pinch_ref = (lambda(inf r_0), lambda(sup r_0))."""
    n = state.profile.params.n
    t = state.t
    f_vals = cf.f_eval(F, ext.kappa)
    scaled = ext.lam * math.exp(-t / n)
    chi_scaled = ext.chi * math.exp(-t / n)
    eps = 1e-6 * pinch_ref[1]
    drift = (1.0 / n - ext.v / f_vals) * math.exp(t / n)
    return DiagnosticsRecord(
        t=t,
        sup_kappa_dev=float(np.max(np.abs(ext.kappa - 1.0))),
        sup_grad_phi_sq=float(np.max(ext.grad_phi_sq)),
        sup_hess_phi=tensor_sup_norm(ext.hess_phi_mixed, state.grid),
        F_min=float(np.min(f_vals)),
        F_max=float(np.max(f_vals)),
        r_tilde_min=float(np.min(state.r.values)) - t / n,
        r_tilde_max=float(np.max(state.r.values)) - t / n,
        chi_scaled_min=float(np.min(chi_scaled)),
        chi_scaled_max=float(np.max(chi_scaled)),
        pinch_low_ok=bool(np.min(scaled) >= pinch_ref[0] - eps),
        pinch_high_ok=bool(np.max(scaled) <= pinch_ref[1] + eps),
        neg_drift_scaled=float(max(0.0, np.max(drift))),
    )


@dataclass
class DiagnosticsSeries:
    """Snapshot records plus the retained states they were taken from."""

    records: list = field(default_factory=list)
    states: list = field(default_factory=list)
    pinch_ref: tuple = (0.0, 0.0)
    meta: dict = field(default_factory=dict)

    @staticmethod
    def start(state: GraphState, F: cf.CurvatureFunction) -> "DiagnosticsSeries":
        prof = state.profile
        r = state.r.values
        # reference for the pinching flags is the scaled warp value at the
        # series start, so resumed runs check monotonicity from their own t0
        scale0 = math.exp(-state.t / prof.params.n)
        lam_lo = float(prof.lambda_of_r(np.min(r))) * scale0
        lam_hi = float(prof.lambda_of_r(np.max(r))) * scale0
        lam = prof.lambda_of_r(r)
        umb = prof.lambda_p_of_lambda(lam) / lam
        ext0 = compute_extrinsic(state)
        meta = {
            "n": prof.params.n,
            "m": prof.params.m,
            "f_umb0": prof.params.n * float(np.max(umb)),
            "sup_grad0": float(np.max(ext0.grad_phi_sq)),
            "t0": state.t,
            "initial_constant": bool(np.max(r) - np.min(r) < 1e-12),
        }
        return DiagnosticsSeries(pinch_ref=(lam_lo, lam_hi), meta=meta)

    def append(self, state: GraphState, record: DiagnosticsRecord) -> None:
        self.records.append(record)
        self.states.append(state)

    @property
    def times(self):
        return np.array([r.t for r in self.records])

    def column(self, name):
        return np.array([getattr(r, name) for r in self.records])


@dataclass
class RateFit:
    quantity: str
    window: tuple
    slope: Optional[float]
    intercept: Optional[float]
    r_squared: Optional[float]
    target_rate: float
    tolerance: float
    passed: bool
    status: str                    # "fit" | "floor" | "insufficient"


def fit_rate(series: DiagnosticsSeries, quantity: str, window: tuple,
             target_rate: float, tolerance: float) -> RateFit:
    """Least squares on (t, log y) over snapshots in the window.

    Values below the floating-point floor are excluded; a window whose
    values have all collapsed to the floor passes trivially. Fewer than
    eight usable snapshots raise InsufficientData.
    """
    t = series.times
    y = series.column(quantity)
    in_win = (t >= window[0] - 1e-12) & (t <= window[1] + 1e-12)
    if int(np.sum(in_win)) < 8:
        raise InsufficientData(
            f"only {int(np.sum(in_win))} snapshots in window {window} for {quantity}"
        )
    tw, yw = t[in_win], y[in_win]
    usable = yw > FLOOR
    if int(np.sum(usable)) < 8:
        if float(np.max(yw)) <= _FLOOR_PASS:
            return RateFit(quantity, window, None, None, None,
                           target_rate, tolerance, True, "floor")
        raise InsufficientData(
            f"only {int(np.sum(usable))} positive values in window for {quantity}"
        )
    tf, yf = tw[usable], np.log(yw[usable])
    slope, intercept = np.polyfit(tf, yf, 1)
    fitted = slope * tf + intercept
    ss_res = float(np.sum((yf - fitted) ** 2))
    ss_tot = float(np.sum((yf - np.mean(yf)) ** 2))
    if ss_tot <= 1e-30:
        r2 = 1.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    passed = bool(slope <= -target_rate + tolerance and r2 >= 0.95)
    return RateFit(quantity, window, float(slope), float(intercept), float(r2),
                   target_rate, tolerance, passed, "fit")


@dataclass
class LimitProfile:
    theta: np.ndarray
    f_hat: np.ndarray              # r - t/n at the final snapshot
    gap: float                     # sup |f_hat - r_tilde(penultimate)|
    metric_residual_final: float
    metric_residual_mid: float
    t_final: float
    t_mid: float
    drift_constant: float
    drift_ok: bool
    f_hat_spread: float


def _metric_residual(state: GraphState, f_hat_2d, n: int) -> float:
    """sup over nodes of || e^(-2t/n) g - (1/4) e^(2 f_hat) sigma ||.

    The quarter is the square of lambda e^(-r) -> 1/2; with it the rescaled
    metrics converge to the conformal limit determined by r - t/n.
    """
    ext = compute_extrinsic(state)
    target = 0.25 * np.exp(2.0 * f_hat_2d)
    scale = math.exp(-2.0 * state.t / n)
    diff = scale * ext.g_cov - target[..., None, None] * ext.sigma
    s = state.grid.sin_theta
    a = diff[..., 0, 0]
    b = diff[..., 0, 1] / s
    d = diff[..., 1, 1] / (s * s)
    return float(np.sqrt(np.max(a * a + 2.0 * b * b + d * d)))


def limit_profile(series: DiagnosticsSeries, mid_fraction: float = 0.6) -> LimitProfile:
    """Radial limit profile and convergence measures of a completed run.

    The drift envelope is calibrated on the first half of the run: with
    C = sup of the observed negative drift rate scaled by e^(t/n), every
    late pair of snapshots must satisfy
        min (r_tilde(b) - r_tilde(a)) >= -C n (e^(-a/n) - e^(-b/n)).
    """
    if len(series.states) < 2:
        raise InsufficientData("limit profile requires at least two retained states")
    n = series.meta["n"]
    final = series.states[-1]
    penult = series.states[-2]
    f_hat_2d = final.r.values - final.t / n
    gap = float(np.max(np.abs(f_hat_2d - (penult.r.values - penult.t / n))))

    t_final = final.t
    t_target = mid_fraction * t_final
    times = series.times
    mid_idx = int(np.argmin(np.abs(times - t_target)))
    if mid_idx == len(series.states) - 1 and mid_idx > 0:
        mid_idx -= 1
    mid_state = series.states[mid_idx]

    res_final = _metric_residual(final, f_hat_2d, n)
    res_mid = _metric_residual(mid_state, f_hat_2d, n)

    t0 = series.meta.get("t0", 0.0)
    t_half = t0 + 0.5 * (t_final - t0)
    first = [r for r in series.records if r.t <= t_half]
    c_drift = 1.1 * max((r.neg_drift_scaled for r in first), default=0.0) + 1e-12
    drift_ok = True
    prev = None
    for k, rec in enumerate(series.records):
        if rec.t < t_half:
            continue
        if prev is not None:
            a, b = prev, k
            ta, tb = series.records[a].t, series.records[b].t
            drop = float(np.min(
                (series.states[b].r.values - tb / n)
                - (series.states[a].r.values - ta / n)
            ))
            envelope = -c_drift * n * (math.exp(-ta / n) - math.exp(-tb / n)) - 1e-12
            if drop < envelope:
                drift_ok = False
        prev = k

    if final.grid.mode == "latlong2d":
        theta = final.grid.theta
        f_hat = f_hat_2d[:, 0]
        spread = float(np.max(f_hat_2d) - np.min(f_hat_2d))
    else:
        theta = final.grid.theta
        f_hat = f_hat_2d
        spread = float(np.max(f_hat) - np.min(f_hat))
    return LimitProfile(
        theta=theta, f_hat=f_hat, gap=gap,
        metric_residual_final=res_final, metric_residual_mid=res_mid,
        t_final=t_final, t_mid=mid_state.t,
        drift_constant=c_drift, drift_ok=drift_ok,
        f_hat_spread=spread,
    )


@dataclass
class ReportConfig:
    window: Optional[tuple] = None         # default [0.4, 0.9] t_end
    tol_rate_kappa: float = 0.15
    tol_rate_grad: float = 0.15
    tol_rate_hess: float = 0.10
    limit_gap_tol: float = 0.02
    metric_residual_tol: float = 5e-3
    chi_ratio_max: float = 10.0
    enable_rates: bool = True
    enable_pinching: bool = True
    enable_f_bounds: bool = True
    enable_gradient_monotone: bool = True
    enable_chi_ratio: bool = True
    enable_limit_profile: bool = True


def theorem_report(series: DiagnosticsSeries, report_cfg: ReportConfig,
                   config_echo: Optional[dict] = None) -> dict:
    """Aggregate pass/fail summary of a completed run.

    Checks with insufficient data are reported as such and do not fail the
    run; disabled checks are skipped entirely.
    """
    n = series.meta["n"]
    t = series.times
    t_end = float(t[-1])
    window = report_cfg.window or (0.4 * t_end, 0.9 * t_end)

    report = {
        "config_echo": config_echo or {},
        "rates": [],
        "overall_pass": True,
        "insufficient": [],
    }

    def add_result(key, value):
        report[key] = value
        if value is False:
            report["overall_pass"] = False

    if report_cfg.enable_rates:
        targets = [
            ("sup_kappa_dev", 2.0 / n, report_cfg.tol_rate_kappa),
            ("sup_grad_phi_sq", 2.0 / n, report_cfg.tol_rate_grad),
            ("sup_hess_phi", 1.0 / n, report_cfg.tol_rate_hess),
        ]
        for name, target, tol in targets:
            try:
                fit = fit_rate(series, name, window, target, tol)
                report["rates"].append({
                    "name": name, "slope": fit.slope, "target": target,
                    "tolerance": tol, "r_squared": fit.r_squared,
                    "pass": fit.passed, "status": fit.status,
                })
                if not fit.passed:
                    report["overall_pass"] = False
            except InsufficientData as exc:
                report["rates"].append({
                    "name": name, "slope": None, "target": target,
                    "tolerance": tol, "r_squared": None,
                    "pass": None, "status": "insufficient",
                })
                report["insufficient"].append(f"rate:{name}: {exc}")

    if report_cfg.enable_pinching:
        add_result("pinching_pass", bool(
            all(r.pinch_low_ok for r in series.records)
            and all(r.pinch_high_ok for r in series.records)
        ))

    if report_cfg.enable_f_bounds:
        fmax0 = series.records[0].F_max
        bound = 1.1 * max(fmax0, series.meta["f_umb0"])
        fmin = series.column("F_min")
        fmax = series.column("F_max")
        late = fmin[t >= 1.0 - 1e-12]
        floor_ok = True
        if late.size:
            floor_ok = bool(np.min(fmin) >= 0.5 * float(np.min(late)))
        add_result("f_bounds_pass", bool(
            np.all(fmin > 0.0) and np.max(fmax) <= bound and floor_ok
        ))

    if report_cfg.enable_gradient_monotone:
        # absolute floor covers the rounding-level gradients of constant data
        g0 = series.meta["sup_grad0"]
        grads = series.column("sup_grad_phi_sq")
        add_result("gradient_monotone_pass",
                   bool(np.all(grads <= g0 * (1.0 + 1e-6) + 1e-20)))

    if report_cfg.enable_chi_ratio:
        sel = t >= 1.0 - 1e-12
        if int(np.sum(sel)) >= 2:
            hi = float(np.max(series.column("chi_scaled_max")[sel]))
            lo = float(np.min(series.column("chi_scaled_min")[sel]))
            report["chi_ratio"] = hi / lo if lo > 0 else math.inf
            add_result("chi_ratio_pass",
                       bool(lo > 0 and hi / lo <= report_cfg.chi_ratio_max))
        else:
            report["insufficient"].append("chi_ratio: run too short")

    if report_cfg.enable_limit_profile:
        try:
            prof = limit_profile(series)
            report["limit_gap"] = prof.gap
            report["metric_residual_final"] = prof.metric_residual_final
            report["metric_residual_mid"] = prof.metric_residual_mid
            report["drift_constant"] = prof.drift_constant
            add_result("limit_gap_pass", bool(prof.gap <= report_cfg.limit_gap_tol))
            # tiny slack so exactly self-similar runs, where both residuals
            # sit at the same floor, do not fail the decrease comparison
            add_result("metric_residual_pass", bool(
                prof.metric_residual_final <= report_cfg.metric_residual_tol
                and prof.metric_residual_final
                <= prof.metric_residual_mid + 0.01 * report_cfg.metric_residual_tol
            ))
            add_result("drift_envelope_pass", prof.drift_ok)
            # the profile is asserted constant only for umbilic initial data
            if series.meta.get("initial_constant"):
                add_result("umbilic_profile_constant_pass",
                           bool(prof.f_hat_spread <= 1e-8))
            # r_tilde stays within its initial range plus the drift allowance
            r0_bound = max(abs(series.records[0].r_tilde_min),
                           abs(series.records[0].r_tilde_max))
            rt = max(np.max(np.abs(series.column("r_tilde_min"))),
                     np.max(np.abs(series.column("r_tilde_max"))))
            add_result("r_tilde_bounded_pass",
                       bool(rt <= r0_bound + n * prof.drift_constant + 1e-9))
        except InsufficientData as exc:
            report["limit_gap"] = None
            report["insufficient"].append(f"limit_profile: {exc}")

    return report


def report_lines(report: dict) -> list:
    """Human-readable one-line-per-check rendering."""
    lines = []
    for r in report.get("rates", []):
        if r["status"] == "insufficient":
            lines.append(f"RATE  {r['name']}: insufficient data")
        elif r["status"] == "floor":
            lines.append(f"RATE  {r['name']}: at floor (pass)")
        else:
            lines.append(
                f"RATE  {r['name']}: slope={r['slope']:+.4f} "
                f"target<=-{r['target']:.3f}+{r['tolerance']:.3f} "
                f"r2={r['r_squared']:.4f} {'PASS' if r['pass'] else 'FAIL'}"
            )
    for key in ("pinching_pass", "f_bounds_pass", "gradient_monotone_pass",
                "chi_ratio_pass", "limit_gap_pass", "metric_residual_pass",
                "drift_envelope_pass", "umbilic_profile_constant_pass",
                "r_tilde_bounded_pass"):
        if key in report:
            lines.append(f"CHECK {key}: {'PASS' if report[key] else 'FAIL'}")
    for note in report.get("insufficient", []):
        lines.append(f"NOTE  {note}")
    lines.append(f"OVERALL: {'PASS' if report['overall_pass'] else 'FAIL'}")
    return lines
