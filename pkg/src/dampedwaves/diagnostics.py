"""Monitored quantities along trajectories: energies, radii, decay rates.

Time-weighted Wiener norms |·|_{1,μt} apply a relative noise floor (default
1e−13·max|f̂|) before summing: the analytic weights e^{μt|n|} reach e^{60+}
by the end of a run and would otherwise amplify round-off at modes whose true
content decayed like e^{−αn²t} long ago.  The same floor governs the
analyticity-radius fits.

The recorded radius is fitted on the per-mode envelope √(|n||ξ̂|² + |ĥ|²),
which the linear flow contracts smoothly (no phase oscillation), rather than
on a single field whose coefficients pass near zero twice per period.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .elliptic import phi1_dz, solve_phi1, solve_phi2
from .errors import ConfigurationError
from .evolution import (ModelParams, SimState, StepOptions, Trajectory,
                        evaluate_rhs, linear_rhs_arrays)
from .geometry import StripGrid, build_geometry
from .norms import InequalityReport, NormSpec, sobolev_norm
from .spectral import (SpectrumField, dx, lam, mode_numbers, mollify,
                       pad_size, project, values_on_grid)

DEFAULT_NOISE_FLOOR = 1e-13
_EXP_CAP = 700.0  # overflow guard for e^{μt|n|}


def floored_wiener(f: SpectrumField, s: float, lam_t: float,
                   floor_rel: float = DEFAULT_NOISE_FLOOR) -> float:
    """|f|_{s,λ} over modes with |f̂| above the relative noise floor."""
    a = np.abs(f.coeffs)
    scale = a.max(initial=0.0)
    if scale == 0.0:
        return 0.0
    absn = np.abs(f.modes).astype(float)
    keep = a > floor_rel * scale
    expo = np.minimum(lam_t * absn[keep], _EXP_CAP)
    return float(np.sum((1.0 + absn[keep]) ** s * np.exp(expo) * a[keep]))


@dataclass(frozen=True)
class RadiusFit:
    rho: float
    r_squared: float
    n_points: int

    @property
    def defined(self) -> bool:
        return np.isfinite(self.rho)


UNDEFINED_RADIUS = RadiusFit(rho=float("nan"), r_squared=float("nan"), n_points=0)


def analyticity_radius(f: SpectrumField,
                       noise_floor: float | None = None,
                       min_points: int = 4,
                       taper_decades: float = 2.0) -> RadiusFit:
    """Fitted decay slope: ρ = −slope of log|f̂(n)| against |n|.

    Fits over the signed coefficient entries with |n| >= 1 and |f̂(n)| above
    the noise floor (default 1e−13·max|f̂|); returns the undefined sentinel
    when fewer than min_points entries qualify.

    Entries within taper_decades of the floor enter with a weight that fades
    linearly (in log distance) to zero, so the fitted ρ(t) along a decaying
    trajectory is continuous when a mode sinks through the floor instead of
    jumping with the discrete fit set.  Exact log-linear data is recovered
    exactly regardless of the weights.
    """
    a = np.abs(f.coeffs)
    scale = a.max(initial=0.0)
    if scale == 0.0:
        return UNDEFINED_RADIUS
    floor = noise_floor if noise_floor is not None else DEFAULT_NOISE_FLOOR * scale
    absn = np.abs(f.modes).astype(float)
    keep = (a > floor) & (absn >= 1)
    n_pts = int(np.count_nonzero(keep))
    if n_pts < min_points or np.unique(absn[keep]).size < 2:
        return UNDEFINED_RADIUS
    x = absn[keep]
    y = np.log(a[keep])
    if taper_decades > 0:
        wgt = np.clip(np.log10(a[keep] / floor) / taper_decades, 0.0, 1.0)
    else:
        wgt = np.ones_like(x)
    if np.count_nonzero(wgt > 0) < 2 or np.unique(x[wgt > 0]).size < 2:
        return UNDEFINED_RADIUS
    slope, intercept = np.polyfit(x, y, 1, w=np.sqrt(wgt))
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum(wgt * (y - np.average(y, weights=wgt)) ** 2))
    r2 = 1.0 - float(np.sum(wgt * resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return RadiusFit(rho=float(-slope), r_squared=r2, n_points=n_pts)


def envelope_spectrum(h: SpectrumField, xi: SpectrumField) -> SpectrumField:
    """Phase-free per-mode envelope √(|n||ξ̂|² + |ĥ|²) as a spectrum."""
    absn = np.abs(h.modes).astype(float)
    e = np.sqrt(absn * np.abs(xi.coeffs) ** 2 + np.abs(h.coeffs) ** 2)
    return SpectrumField(e.astype(np.complex128))


def decay_rate(times: np.ndarray, values: np.ndarray,
               window: tuple[float, float] | None = None) -> float:
    """δ̂ = −slope of the least-squares fit of log(values) against t."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if window is not None:
        keep = (times >= window[0]) & (times <= window[1])
        times, values = times[keep], values[keep]
    if times.size < 2:
        raise ConfigurationError("decay fit needs at least two samples in the window")
    if np.any(values <= 0):
        raise ConfigurationError("decay fit requires positive values")
    slope = np.polyfit(times, np.log(values), 1)[0]
    return float(-slope)


def check_lyapunov_monotone(times: np.ndarray, values: np.ndarray,
                            slack: float = 1e-6,
                            transient: float | None = None,
                            n_min: int = 1) -> InequalityReport:
    """Nonincreasing after the transient window (default one linear period).

    Reports the worst adjacent pair: lhs = v(t_{i+1}), rhs = v(t_i)(1+slack).
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if transient is None:
        transient = 2.0 * np.pi / np.sqrt(max(n_min, 1))
    idx = np.where(times >= transient)[0]
    if idx.size < 2:
        raise ConfigurationError("monotonicity window holds fewer than two records")
    worst_lhs, worst_rhs = -np.inf, np.inf
    holds = True
    for i in idx[:-1]:
        lhs, rhs = values[i + 1], values[i] * (1.0 + slack)
        if lhs - rhs > worst_lhs - worst_rhs:
            worst_lhs, worst_rhs = lhs, rhs
        if lhs > rhs:
            holds = False
    return InequalityReport(lhs=float(worst_lhs), rhs=float(worst_rhs),
                            constant_used=1.0 + slack, holds=holds,
                            margin=float(worst_rhs - worst_lhs))


# ---------------------------------------------------------------------------
# per-record diagnostics

@dataclass(frozen=True)
class DiagRecord:
    t: float
    sobolev_h3: float
    sobolev_xi3: float
    wiener_h: float          # |h|_{1,μt}, floored
    wiener_xi: float         # |ξ|_{1,μt}, floored
    energy: float            # running boundary max + cumulative bulk integral
    radius: float            # envelope-spectrum fit (nan while undefined)
    lyapunov: float          # wiener_h + wiener_xi

    FIELDS = ("t", "sobolev_h3", "sobolev_xi3", "wiener_h", "wiener_xi",
              "energy", "radius", "lyapunov")

    def row(self) -> tuple:
        return tuple(getattr(self, name) for name in self.FIELDS)


def bulk_gradient_norm(state: SimState, params: ModelParams, grid: StripGrid,
                       opts: StepOptions = StepOptions(),
                       s: float = 2.5) -> float:
    """Proxy for ‖∇φ‖_s²: Σ_n (1+|n|)^{2s} ∫ (|∂₁φ̂|² + |∂₂φ̂|²) dx₂.

    Fractional regularity is charged entirely to the horizontal multiplier
    (equivalent norm for the harmonic-type fields at hand); quadrature is
    trapezoid plus the modeled e^{2|n|x₂} tail.
    """
    hk = mollify(state.h, params.kappa)
    xik = mollify(state.xi, params.kappa)
    bundle = build_geometry(params.epsilon * hk, grid)
    phi1 = solve_phi1(xik, grid)
    esol = solve_phi2(bundle, phi1, tol=opts.picard_tol,
                      max_iter=opts.picard_max_iter)
    u1 = (phi1 + esol.phi2).dx()
    u2 = phi1_dz(phi1) + esol.dzphi2
    dens = np.abs(u1.coeffs) ** 2 + np.abs(u2.coeffs) ** 2
    per_mode = np.trapezoid(dens, dx=grid.dz, axis=1)
    decay = 2.0 * np.maximum(np.abs(grid.modes).astype(float), 1.0)
    per_mode = per_mode + dens[:, 0] / decay
    w = (1.0 + np.abs(grid.modes).astype(float)) ** (2.0 * s)
    return float(np.sum(w * per_mode))


def compute_records(traj: Trajectory,
                    floor_rel: float = DEFAULT_NOISE_FLOOR,
                    opts: StepOptions | None = None) -> list[DiagRecord]:
    """Diagnostics at every recorded state (elliptic re-solved per record)."""
    params = traj.params
    if params.mu > 0 and params.mu >= params.alpha / 2.0:
        raise ConfigurationError(
            f"analyticity diagnostics need mu < alpha/2 (mu={params.mu}, alpha={params.alpha})")
    if opts is None:
        opts = StepOptions.for_dt(traj.dt)
    times = traj.times
    if np.any(np.diff(times) <= 0):
        raise ConfigurationError("trajectory records are not strictly increasing in time")

    records: list[DiagRecord] = []
    boundary_max = 0.0
    bulk_integral = 0.0
    prev_t = None
    prev_bulk = None
    for state in traj.states:
        sh = sobolev_norm(state.h, 3.0)
        sx = sobolev_norm(state.xi, 3.0)
        boundary_max = max(boundary_max, sh ** 2 + sx ** 2)
        bulk = bulk_gradient_norm(state, params, traj.grid, opts)
        if prev_t is not None:
            bulk_integral += 0.5 * (bulk + prev_bulk) * (state.t - prev_t)
        prev_t, prev_bulk = state.t, bulk
        lam_t = params.mu * state.t
        wh = floored_wiener(state.h, 1.0, lam_t, floor_rel)
        wx = floored_wiener(state.xi, 1.0, lam_t, floor_rel)
        env = envelope_spectrum(state.h, state.xi)
        env_scale = float(np.max(np.abs(env.coeffs), initial=0.0))
        fit = analyticity_radius(env, noise_floor=floor_rel * env_scale
                                 if env_scale > 0 else None)
        records.append(DiagRecord(
            t=state.t, sobolev_h3=sh, sobolev_xi3=sx,
            wiener_h=wh, wiener_xi=wx,
            energy=boundary_max + bulk_integral,
            radius=fit.rho, lyapunov=wh + wx))
    return records


def energy_functional(traj: Trajectory, up_to: float,
                      opts: StepOptions | None = None) -> float:
    """𝓔 at the last record time <= up_to (boundary max + bulk integral)."""
    times = traj.times
    if up_to < times[0] - 1e-12 or up_to > times[-1] + 1e-12:
        raise ConfigurationError(
            f"requested time {up_to} outside recorded range [{times[0]}, {times[-1]}]")
    records = compute_records(traj, opts=opts)
    idx = int(np.searchsorted(times, up_to + 1e-12) - 1)
    return records[max(idx, 0)].energy


# ---------------------------------------------------------------------------
# structural checks along runs

def check_xi_energy_budget(traj: Trajectory, floor_rel: float = DEFAULT_NOISE_FLOOR,
                           rel_slack: float = 5e-2,
                           opts: StepOptions | None = None) -> InequalityReport:
    """Discrete check of the ξ energy-estimate structure.

    For consecutive records, the centered difference of |ξ|_{1,μt} must not
    exceed −(α−μ)|Λ²ξ|_{1,μt} + |h|_{1,μt} + |NL|_{1,μt}, where NL is the
    measured nonlinear remainder ξ_t − (−h + αξ,₁₁).  The comparison carries
    a relative slack for the finite-difference-in-time error.
    """
    if opts is None:
        opts = StepOptions.for_dt(traj.dt)
    params = traj.params
    states = traj.states
    if len(states) < 3:
        raise ConfigurationError("budget check needs at least three records")
    modes = mode_numbers(states[0].n_modes)
    worst = None
    holds = True
    for i in range(1, len(states) - 1):
        sm, s0, sp = states[i - 1], states[i], states[i + 1]
        lam_t = params.mu * s0.t
        dxi = (floored_wiener(sp.xi, 1.0, params.mu * sp.t, floor_rel) -
               floored_wiener(sm.xi, 1.0, params.mu * sm.t, floor_rel)) / (sp.t - sm.t)
        r = evaluate_rhs(s0, params, traj.grid, opts)
        u = np.stack([s0.xi.coeffs, s0.h.coeffs])
        nl = r.xi_t.coeffs - linear_rhs_arrays(u, modes, params.alpha, params.kappa)[0]
        rhs = (-(params.alpha - params.mu) *
               floored_wiener(lam(s0.xi, 2.0), 1.0, lam_t, floor_rel)
               + floored_wiener(s0.h, 1.0, lam_t, floor_rel)
               + floored_wiener(SpectrumField(nl), 1.0, lam_t, floor_rel))
        slack = rel_slack * max(abs(dxi), abs(rhs), 1e-14)
        if worst is None or dxi - rhs > worst[0] - worst[1]:
            worst = (dxi, rhs + slack)
        if dxi > rhs + slack:
            holds = False
    return InequalityReport(lhs=worst[0], rhs=worst[1], constant_used=rel_slack,
                            holds=holds, margin=worst[1] - worst[0])


def check_A_deviation(b: SpectrumField, s: float, lam_: float,
                      cap: float = 4.0) -> tuple[InequalityReport, float]:
    """|A(t)−Id|_{s,λ} <= C(s)|Λb|_{s,λ} at the boundary, with empirical C.

    The nonzero entries of A−Id at x₂ = 0 are −b,₁/(1+Λb) and −Λb/(1+Λb);
    the matrix norm is the sum of entry norms.  Returns the report against
    the configured cap and the measured constant.
    """
    from .norms import wiener_norm
    n_modes = b.n_modes
    mpad = pad_size(n_modes, 4)
    d1 = values_on_grid(dx(b), mpad)
    d2 = values_on_grid(lam(b), mpad)
    a21 = project(-d1 / (1.0 + d2), n_modes)
    a22 = project(-d2 / (1.0 + d2), n_modes)
    spec = NormSpec(s, lam_)
    lhs = wiener_norm(a21, spec) + wiener_norm(a22, spec)
    denom = wiener_norm(lam(b), spec)
    c_emp = lhs / denom if denom > 0 else 0.0
    rhs = cap * denom
    return InequalityReport(lhs=lhs, rhs=rhs, constant_used=cap,
                            holds=lhs <= rhs * (1 + 1e-9), margin=rhs - lhs), c_emp


def smallness_flags(records: list[DiagRecord], cap: float) -> list[bool]:
    """True where the admissibility cap was exceeded (flagged, not fatal)."""
    return [rec.lyapunov > cap for rec in records]
