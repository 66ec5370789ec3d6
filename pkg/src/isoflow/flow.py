"""Time integration of the ratio-preserving Willmore flow.

The normal velocity is

    xi = -Delta H - |A0|^2 H + lambda (3H/A - 2/V),

with the nonlocal multiplier

    lambda = Int (Delta H + |A0|^2 H)(3H/A - 2/V) d mu
             / Int |3H/A - 2/V|^2 d mu,

which makes the velocity L^2(d mu)-orthogonal to the gradient of the
isoperimetric ratio, so the ratio is conserved along the semi-discrete flow
and the umbilic bending energy W0 decreases at rate Int |xi|^2 d mu.

Stepping is classical four-stage explicit Runge-Kutta with the multiplier
recomputed at every stage; the step size obeys the fourth-order parabolic
stability restriction dt ~ (arclength spacing)^4.  An optional projection
re-enforces I = sigma after each step to kill the O(dt^p) discrete drift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from . import _kernels
from .errors import (
    ConfigError,
    ConstantMeanCurvature,
    DegenerateDenominator,
    ImmersionLost,
    ProjectionFailed,
    ZeroVolume,
)
from .geometry import GeometricState, compute_geometry, kappa_max
from .profile import ProfileCurve, bare_curve, resample_equal_arclength

# Real-axis stability interval of classical RK4 is |dt * s| <= 2.785; the
# discrete biharmonic symbol of the staggered fourth-order operator peaks
# near 30 / ds^4, and the |A0|^2 H term contributes a second-order part.
_RK4_REAL_AXIS = 2.785
_BIHARMONIC_SYMBOL = 30.0
_SECOND_ORDER_SYMBOL = 4.0


# -- configuration -----------------------------------------------------------


@dataclass
class FlowConfig:
    """Run parameters for the flow driver."""

    sigma: float
    t_end: float
    dt_safety: float = 0.5
    max_steps: int = 1_000_000
    projection: bool = True
    redistribute_every: int = 0
    monitor_rho: float = 0.0          # 0 = use the curve diameter
    stationarity_tol: float = 1e-6    # on the dimensionless residual
    snapshot_every: int = 0           # steps between stored snapshots (0 = none)
    record_every: int = 1             # steps between monitor records
    kappa_every: int = 16             # steps between kappa re-evaluations

    def __post_init__(self):
        if not (0.0 < self.sigma < 1.0):
            raise ConfigError(
                f"sigma must lie strictly inside (0, 1), got {self.sigma}; "
                "at sigma = 1 only round spheres qualify and the multiplier "
                "denominator vanishes, making the flow equation singular"
            )
        if not (0.0 < self.dt_safety <= 1.0):
            raise ConfigError(f"dt_safety must be in (0, 1], got {self.dt_safety}")
        if self.t_end <= 0.0:
            raise ConfigError(f"t_end must be positive, got {self.t_end}")
        if self.max_steps < 1:
            raise ConfigError(f"max_steps must be >= 1, got {self.max_steps}")


@dataclass
class MonitorRecord:
    """Flow diagnostics at one instant."""

    t: float
    W: float
    W0: float
    A: float
    V: float
    I: float
    lam: float
    D: float
    lam_over_A: float
    cum_lambda: float      # running Int lambda^2 / A^2 dt
    dissipation: float     # instantaneous Int |dt f|^2 d mu
    kappa: float
    residual: float        # Helfrich L2 residual (dimensionful)
    dt: float
    # internal diagnostics, not part of the CSV schema
    diss_cum: float = float("nan")   # running Int Int |dt f|^2 d mu dt
    lemma41_margin: float = float("nan")
    lemma42_margin: float = float("nan")


CSV_HEADER = "t,W,W0,A,V,I,lambda,D,lambda_over_A,cum_lambda,dissipation,kappa,residual,dt"

_CSV_FIELDS = (
    "t", "W", "W0", "A", "V", "I", "lam", "D", "lam_over_A",
    "cum_lambda", "dissipation", "kappa", "residual", "dt",
)


@dataclass
class FlowTrace:
    """Everything a finished (or aborted) run produced."""

    initial: ProfileCurve
    config: FlowConfig
    snapshots: list = field(default_factory=list)   # (time, ProfileCurve)
    records: list = field(default_factory=list)     # MonitorRecord
    termination: str = ""
    steps: int = 0
    w0_violations: int = 0
    lemma41_violations: int = 0
    lemma42_violations: int = 0

    @property
    def final_curve(self) -> ProfileCurve:
        return self.snapshots[-1][1]

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(rec, name) for rec in self.records])


def write_monitor_csv(trace: FlowTrace, path):
    """Monitor CSV with shortest round-trip float formatting (deterministic)."""
    lines = [CSV_HEADER]
    for rec in trace.records:
        lines.append(",".join(repr(float(getattr(rec, f))) for f in _CSV_FIELDS))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


# -- velocity evaluation -----------------------------------------------------


class FlowFields(NamedTuple):
    """One velocity evaluation: geometry scalars, multiplier data and xi."""

    w: np.ndarray
    nur: np.ndarray
    nuz: np.ndarray
    H: np.ndarray
    A0_sq: np.ndarray
    lapH: np.ndarray
    gradH_sq: np.ndarray
    mu: np.ndarray
    xi: np.ndarray
    area: float
    volume: float
    willmore: float
    umbilic: float
    num: float
    den: float
    lam: float
    int_xi: float
    int_a0h: float
    dissipation: float

    @property
    def ratio(self) -> float:
        return 36.0 * np.pi * self.volume**2 / self.area**3

    @property
    def residual(self) -> float:
        return math.sqrt(max(self.dissipation, 0.0))

    @property
    def residual_dimensionless(self) -> float:
        return self.residual * self.area


def _check_immersion(r, w, scale):
    if (not np.all(np.isfinite(w))) or np.any(w <= 1e-12 * scale) or np.any(r <= 0.0):
        raise ImmersionLost("node spacing collapsed or profile left the half-plane")


def denominator_floor(den, area, willmore, sigma) -> float:
    """Abort floor for the multiplier denominator.

    Inside the good energy regime W < 4 pi / sigma the natural scale is the
    lower bound D >= 36 (sqrt(4 pi / sigma) - sqrt(W))^2 / A^2; outside it an
    absolute dimensionless floor guards against division blowup.
    """
    gap = math.sqrt(4.0 * math.pi / sigma) - math.sqrt(max(willmore, 0.0))
    if gap > 0.0:
        return 1e-6 * 36.0 * gap * gap / (area * area)
    return 1e-12 / (area * area)


def evaluate_fields(
    curve: ProfileCurve, sigma: float | None = None, guard_denominator: bool = True
) -> FlowFields:
    """Full velocity evaluation with degeneracy guards.

    Uses the fused uniform-grid kernel when possible, otherwise the reference
    geometry pipeline.  ``sigma`` only affects the denominator floor; pass
    None to use the curve's own ratio.
    """
    g = curve.grid
    if g.is_uniform:
        out = _kernels.uniform_fields(curve.radial, curve.height, g.h, g.quad_widths)
        ff = FlowFields(*out)
    else:
        st = compute_geometry(curve)
        P = st.constraint_direction()
        gw0 = st.lapH + st.A0_sq * st.H
        num = float(np.sum(gw0 * P * st.mu_weights))
        den = float(np.sum(P * P * st.mu_weights))
        lam = num / den if den > 0.0 else float("nan")
        xi = -gw0 + lam * P
        ff = FlowFields(
            st.speed, st.normal[:, 0], st.normal[:, 1], st.H, st.A0_sq,
            st.lapH, st.gradH_sq, st.mu_weights, xi,
            st.area, st.volume, st.willmore, st.umbilic, num, den, lam,
            float(np.sum(xi * st.mu_weights)),
            float(np.sum(st.A0_sq * st.H * st.mu_weights)),
            float(np.sum(xi * xi * st.mu_weights)),
        )

    scale = math.sqrt(ff.area / (4.0 * math.pi))
    _check_immersion(curve.radial, ff.w, scale)
    if ff.volume == 0.0:
        raise ZeroVolume("signed volume vanished along the flow")
    if guard_denominator:
        floor = denominator_floor(ff.den, ff.area, ff.willmore,
                                  sigma if sigma is not None else ff.ratio)
        if not (ff.den > floor):
            raise DegenerateDenominator(
                f"multiplier denominator {ff.den:.3e} fell below its floor "
                f"{floor:.3e}; the mean curvature is (numerically) constant"
            )
    return ff


def stable_dt(fields: FlowFields, curve: ProfileCurve, dt_safety: float) -> float:
    """Explicit stability limit dt = c_stab * 2.785 / (stiffness scale)."""
    g = curve.grid
    ds_min = float(np.min(fields.w * g.cell_widths))
    asq_max = float(np.max(fields.A0_sq + 0.5 * fields.H * fields.H))
    stiffness = (
        _BIHARMONIC_SYMBOL / ds_min**4 + _SECOND_ORDER_SYMBOL * asq_max / ds_min**2
    )
    return dt_safety * _RK4_REAL_AXIS / stiffness


# -- multiplier and residual (public operations) -----------------------------


def lagrange_multiplier(state: GeometricState, sigma: float) -> float:
    """Nonlocal multiplier from its defining quotient of quadratures."""
    if state.volume == 0.0:
        raise ZeroVolume("multiplier undefined at V = 0")
    P = state.constraint_direction()
    mu = state.mu_weights
    den = float(np.sum(P * P * mu))
    floor = denominator_floor(den, state.area, state.willmore, sigma)
    if not (den > floor):
        raise DegenerateDenominator(
            f"denominator {den:.3e} below floor {floor:.3e} "
            "(mean curvature nearly constant)"
        )
    num = float(np.sum((state.lapH + state.A0_sq * state.H) * P * mu))
    return num / den


def lagrange_multiplier_ibp(state: GeometricState) -> float:
    """Multiplier via the integrated-by-parts numerator.

    With I = sigma held exactly, 2A/V = s * 12 sqrt(pi/sigma) / sqrt(A) with
    s = sign(V), and the Laplacian term integrates by parts to -3 Int
    |grad H|^2 d mu, leaving no second derivatives of the curvature.  This is
    an independent quadrature pipeline used as a cross-check of
    :func:`lagrange_multiplier`.
    """
    if state.volume == 0.0:
        raise ZeroVolume("multiplier undefined at V = 0")
    sigma = state.ratio
    s = 1.0 if state.volume > 0.0 else -1.0
    mu = state.mu_weights
    beta = s * 12.0 * math.sqrt(math.pi / sigma) / math.sqrt(state.area)
    h3 = 3.0 * state.H - beta
    den = float(np.sum(h3 * h3 * mu))
    if den <= 0.0:
        raise DegenerateDenominator("integrated-by-parts denominator vanished")
    num = (
        -3.0 * float(np.sum(state.gradH_sq * mu))
        + 3.0 * float(np.sum(state.A0_sq * state.H * state.H * mu))
        - beta * float(np.sum(state.A0_sq * state.H * mu))
    )
    return state.area * num / den


class NormalVelocity(NamedTuple):
    xi: np.ndarray
    willmore_part: np.ndarray    # -(Delta H + |A0|^2 H)
    constraint_part: np.ndarray  # lambda (3H/A - 2/V)


def normal_velocity(state: GeometricState, lam: float) -> NormalVelocity:
    """Flow speed split into its bending and constraint contributions."""
    willmore_part = -(state.lapH + state.A0_sq * state.H)
    constraint_part = lam * state.constraint_direction()
    return NormalVelocity(willmore_part + constraint_part, willmore_part, constraint_part)


def helfrich_residual(state: GeometricState, lam: float) -> float:
    """L^2(d mu) residual of Delta H + |A0|^2 H - lam1 H - lam2.

    lam1 = 3 lam / A and lam2 = -2 lam / V are the multipliers of the
    stationary shape equation; the residual vanishes exactly at discrete
    stationary points of the flow.
    """
    lam1 = 3.0 * lam / state.area
    lam2 = -2.0 * lam / state.volume
    res = state.lapH + state.A0_sq * state.H - lam1 * state.H - lam2
    return float(np.sqrt(np.sum(res * res * state.mu_weights)))


# -- projection --------------------------------------------------------------


def _area_volume(curve: ProfileCurve):
    g = curve.grid
    if g.is_uniform:
        return _kernels.uniform_area_volume(curve.radial, curve.height, g.h, g.quad_widths)
    st = compute_geometry(curve)
    return st.area, st.volume


def _ratio_of(curve: ProfileCurve) -> float:
    a, v = _area_volume(curve)
    return 36.0 * math.pi * v * v / a**3


def project_isoperimetric(
    curve: ProfileCurve, sigma: float, tol: float = 1e-12, drift_bound: float = 1e-2
) -> ProfileCurve:
    """Move along the constraint direction until I = sigma to ``tol``.

    The correction is a one-dimensional root solve in the amplitude c of the
    normal field c * (3H/A - 2/V); Newton from the analytic slope I * D is
    polished first and a bracketed bisection is the fallback.
    """
    fields = evaluate_fields(curve)
    ratio0 = fields.ratio
    if abs(ratio0 - sigma) > drift_bound:
        raise ProjectionFailed(
            f"ratio drift |{ratio0:.6f} - {sigma:.6f}| exceeds the bound {drift_bound}"
        )
    if abs(ratio0 - sigma) <= tol:
        return curve

    P = 3.0 * fields.H / fields.area - 2.0 / fields.volume
    dr = P * fields.nur
    dz = P * fields.nuz

    def ratio_at(c):
        return _ratio_of(bare_curve(curve, curve.radial + c * dr, curve.height + c * dz))

    slope = ratio0 * fields.den  # d ratio / dc at c = 0
    c_prev, val_prev = 0.0, ratio0
    c = -(ratio0 - sigma) / slope
    for _ in range(12):
        val = ratio_at(c)
        if abs(val - sigma) <= tol:
            return curve.with_positions(curve.radial + c * dr, curve.height + c * dz)
        if val != val_prev and c != c_prev:
            slope = (val - val_prev) / (c - c_prev)
        c_prev, val_prev = c, val
        c = c - (val - sigma) / slope

    # bracketed fallback
    from scipy.optimize import brentq

    span = abs(ratio0 - sigma) / abs(slope) * 4.0 + 1e-18
    lo, hi = -span, span
    for _ in range(60):
        if (ratio_at(lo) - sigma) * (ratio_at(hi) - sigma) < 0.0:
            break
        lo *= 2.0
        hi *= 2.0
    else:
        raise ProjectionFailed("could not bracket the projection amplitude")
    c = brentq(lambda x: ratio_at(x) - sigma, lo, hi, xtol=1e-18, rtol=8.9e-16)
    out = curve.with_positions(curve.radial + c * dr, curve.height + c * dz)
    if abs(_ratio_of(out) - sigma) > tol:
        raise ProjectionFailed("projection root solve did not reach tolerance")
    return out


# -- stepping ----------------------------------------------------------------


_GUARD_ERRORS = {
    1: (ImmersionLost, "node spacing collapsed during a stage"),
    2: (ZeroVolume, "signed volume vanished during a stage"),
    3: (DegenerateDenominator, "multiplier denominator hit its floor during a stage"),
}


def _rk4_step(curve: ProfileCurve, dt: float, sigma: float, f1: FlowFields | None = None):
    """One classical Runge-Kutta step; the multiplier is rebuilt per stage.

    Returns (new curve, fields at the step start).
    """
    if f1 is None:
        f1 = evaluate_fields(curve, sigma)
    k1r, k1z = f1.xi * f1.nur, f1.xi * f1.nuz
    r0, z0 = curve.radial, curve.height
    g = curve.grid

    if g.is_uniform:
        r_new, z_new, code = _kernels.rk4_tail(
            r0, z0, g.h, g.quad_widths, dt, k1r, k1z, sigma
        )
        if code != 0:
            err, msg = _GUARD_ERRORS[code]
            raise err(msg)
        return bare_curve(curve, r_new, z_new), f1

    c2 = bare_curve(curve, r0 + 0.5 * dt * k1r, z0 + 0.5 * dt * k1z)
    f2 = evaluate_fields(c2, sigma)
    k2r, k2z = f2.xi * f2.nur, f2.xi * f2.nuz

    c3 = bare_curve(curve, r0 + 0.5 * dt * k2r, z0 + 0.5 * dt * k2z)
    f3 = evaluate_fields(c3, sigma)
    k3r, k3z = f3.xi * f3.nur, f3.xi * f3.nuz

    c4 = bare_curve(curve, r0 + dt * k3r, z0 + dt * k3z)
    f4 = evaluate_fields(c4, sigma)
    k4r, k4z = f4.xi * f4.nur, f4.xi * f4.nuz

    new = bare_curve(
        curve,
        r0 + dt / 6.0 * (k1r + 2.0 * k2r + 2.0 * k3r + k4r),
        z0 + dt / 6.0 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z),
    )
    return new, f1


def step(curve: ProfileCurve, config: FlowConfig, dt: float) -> ProfileCurve:
    """Advance one explicit step of size dt (with optional projection)."""
    fields = evaluate_fields(curve, config.sigma)
    limit = stable_dt(fields, curve, 1.0)
    if dt > limit * (1.0 + 1e-9):
        raise ConfigError(
            f"dt = {dt:.3e} exceeds the explicit stability limit {limit:.3e}"
        )
    new, _ = _rk4_step(curve, dt, config.sigma)
    new.check_immersion()
    if config.projection:
        new = project_isoperimetric(new, config.sigma)
    return new


# -- the run loop ------------------------------------------------------------

_PROJECTION_TRIGGER = 2.5e-13


def run(initial: ProfileCurve, config: FlowConfig) -> FlowTrace:
    """Integrate until t_end, stationarity, or an abort.

    Preconditions: I(initial) must match config.sigma to within the
    projection drift bound, and the initial mean curvature must not be
    (numerically) constant -- round spheres are rejected.
    """
    sigma = config.sigma
    fields = evaluate_fields(initial, guard_denominator=False)

    h_span = float(np.max(fields.H) - np.min(fields.H))
    if h_span <= 1e-8 * float(np.mean(np.abs(fields.H))):
        raise ConstantMeanCurvature(
            "initial mean curvature is constant to tolerance; such data "
            "(round spheres) make the multiplier denominator vanish"
        )
    if abs(fields.ratio - sigma) > 1e-2:
        raise ConfigError(
            f"initial isoperimetric ratio {fields.ratio:.8f} does not match "
            f"sigma = {sigma:.8f} within the projection tolerance"
        )

    curve = initial
    if config.projection and abs(fields.ratio - sigma) > _PROJECTION_TRIGGER:
        curve = project_isoperimetric(curve, sigma)

    trace = FlowTrace(initial=initial, config=config)
    trace.snapshots.append((0.0, curve))

    w_initial = fields.willmore
    gap0 = math.sqrt(4.0 * math.pi / sigma) - math.sqrt(w_initial)
    bounds_active = gap0 > 0.0

    t = 0.0
    cum_lambda = 0.0
    cum_diss = 0.0
    last_dt = 0.0
    kappa_val = float("nan")
    fields = evaluate_fields(curve, sigma)
    prev_w0 = fields.umbilic

    def monitor_kappa(fx):
        rho = config.monitor_rho
        if rho <= 0.0:
            r, z = curve.radial, curve.height
            rho = float(math.hypot(2.0 * np.max(r), np.max(z) - np.min(z)))
        density = (fx.A0_sq + 0.5 * fx.H * fx.H) * fx.mu
        return kappa_max(curve.radial, curve.height, density, rho)

    def record(fx, dt_used):
        nonlocal kappa_val
        if trace.steps % config.kappa_every == 0 or math.isnan(kappa_val):
            kappa_val = monitor_kappa(fx)
        lam_over_a = fx.lam / fx.area
        rec = MonitorRecord(
            t=t, W=fx.willmore, W0=fx.umbilic, A=fx.area, V=fx.volume,
            I=fx.ratio, lam=fx.lam, D=fx.den, lam_over_A=lam_over_a,
            cum_lambda=cum_lambda, dissipation=fx.dissipation,
            kappa=kappa_val, residual=fx.residual, dt=dt_used,
            diss_cum=cum_diss,
        )
        if bounds_active:
            bound41 = 36.0 * gap0 * gap0 / (fx.area * fx.area)
            rec.lemma41_margin = fx.den / bound41 - 1.0
            if rec.lemma41_margin < -1e-6:
                trace.lemma41_violations += 1
            gap_now = math.sqrt(4.0 * math.pi / sigma) - math.sqrt(fx.willmore)
            if gap_now > 0.0 and fx.lam != 0.0:
                bound42 = (
                    math.sqrt(fx.area) / (6.0 * gap_now)
                    * abs(fx.int_xi + fx.int_a0h)
                )
                rec.lemma42_margin = bound42 / abs(fx.lam) - 1.0
                if rec.lemma42_margin < -1e-6:
                    trace.lemma42_violations += 1
        trace.records.append(rec)

    record(fields, 0.0)

    while True:
        if fields.residual_dimensionless < config.stationarity_tol:
            trace.termination = "stationary"
            break
        if t >= config.t_end * (1.0 - 1e-14):
            trace.termination = "reached t_end"
            break
        if trace.steps >= config.max_steps:
            trace.termination = "aborted: step budget exhausted"
            break

        dt = min(stable_dt(fields, curve, config.dt_safety), config.t_end - t)
        try:
            new_curve, f_start = _rk4_step(curve, dt, sigma, f1=fields)
            if config.projection and abs(
                _ratio_of(new_curve) - sigma
            ) > _PROJECTION_TRIGGER:
                new_curve = project_isoperimetric(new_curve, sigma)
            if (
                config.redistribute_every > 0
                and (trace.steps + 1) % config.redistribute_every == 0
            ):
                new_curve = resample_equal_arclength(new_curve)
            new_fields = evaluate_fields(new_curve, sigma)
        except (ImmersionLost, DegenerateDenominator, ZeroVolume, ProjectionFailed) as exc:
            trace.termination = f"aborted: {type(exc).__name__}: {exc}"
            break

        x_old = (f_start.lam / f_start.area) ** 2
        x_new = (new_fields.lam / new_fields.area) ** 2
        cum_lambda += 0.5 * dt * (x_old + x_new)
        cum_diss += 0.5 * dt * (f_start.dissipation + new_fields.dissipation)

        t += dt
        last_dt = dt
        trace.steps += 1
        curve = new_curve
        fields = new_fields

        if fields.umbilic > prev_w0 + 1e-9 * abs(prev_w0):
            trace.w0_violations += 1
        prev_w0 = fields.umbilic

        if trace.steps % config.record_every == 0:
            record(fields, dt)
        if config.snapshot_every > 0 and trace.steps % config.snapshot_every == 0:
            trace.snapshots.append((t, curve))

    if trace.records[-1].t < t:
        record(fields, last_dt)
    if trace.snapshots[-1][0] < t:
        trace.snapshots.append((t, curve))
    return trace


# -- parabolic rescaling -----------------------------------------------------


def parabolic_rescale(trace: FlowTrace, factor: float) -> FlowTrace:
    """Apply the parabolic symmetry f -> f / factor, t -> t / factor^4.

    The multiplier is scale-invariant, areas scale by factor^-2, volumes by
    factor^-3, and the running integral of lambda^2 / A^2 is reproduced by
    re-integrating the transformed records, which leaves its final value
    unchanged.  The kappa column keeps its values; they now correspond to the
    co-scaled radius monitor_rho / factor.
    """
    if factor <= 0.0:
        raise ConfigError(f"rescale factor must be positive, got {factor}")
    r = factor
    r2, r3, r4 = r * r, r**3, r**4

    new_cfg = replace(
        trace.config,
        t_end=trace.config.t_end / r4,
        monitor_rho=trace.config.monitor_rho / r if trace.config.monitor_rho > 0 else 0.0,
    )
    out = FlowTrace(
        initial=trace.initial.scaled(1.0 / r),
        config=new_cfg,
        termination=trace.termination,
        steps=trace.steps,
        w0_violations=trace.w0_violations,
        lemma41_violations=trace.lemma41_violations,
        lemma42_violations=trace.lemma42_violations,
    )
    out.snapshots = [(tt / r4, c.scaled(1.0 / r)) for tt, c in trace.snapshots]

    cum = 0.0
    prev_t = None
    prev_x = None
    for rec in trace.records:
        t_new = rec.t / r4
        x_new = (rec.lam / (rec.A / r2)) ** 2
        if prev_t is not None:
            cum += 0.5 * (t_new - prev_t) * (x_new + prev_x)
        out.records.append(
            MonitorRecord(
                t=t_new, W=rec.W, W0=rec.W0, A=rec.A / r2, V=rec.V / r3,
                I=rec.I, lam=rec.lam, D=rec.D * r4,
                lam_over_A=rec.lam_over_A * r2, cum_lambda=cum,
                dissipation=rec.dissipation * r4, kappa=rec.kappa,
                residual=rec.residual * r2, dt=rec.dt / r4,
                diss_cum=rec.diss_cum,
            )
        )
        prev_t, prev_x = t_new, x_new
    return out


# -- run-configuration files --------------------------------------------------

_CONFIG_KEYS = {
    "sigma": float,
    "dt_safety": float,
    "t_end": float,
    "max_steps": int,
    "projection": None,  # boolean, parsed below
    "redistribute_every": int,
    "monitor_rho": float,
    "stationarity_tol": float,
    "initial_profile": str,
    "snapshot_every": int,
    "output_dir": str,
}


@dataclass
class RunSpec:
    """Parsed run-configuration file."""

    config: FlowConfig
    initial_profile: str
    output_dir: str


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ConfigError(f"cannot parse boolean value {text!r}")


def parse_config(path) -> RunSpec:
    """Parse a `key = value` run configuration file."""
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, _, val = line.partition("=")
            key = key.strip()
            val = val.strip()
            if key not in _CONFIG_KEYS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            if key in values:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            caster = _CONFIG_KEYS[key]
            try:
                values[key] = _parse_bool(val) if caster is None else caster(val)
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc

    for required in ("sigma", "t_end", "initial_profile"):
        if required not in values:
            raise ConfigError(f"{path}: missing required key {required!r}")

    initial_profile = values.pop("initial_profile")
    output_dir = values.pop("output_dir", ".")
    config = FlowConfig(**values)
    return RunSpec(config=config, initial_profile=initial_profile, output_dir=output_dir)
