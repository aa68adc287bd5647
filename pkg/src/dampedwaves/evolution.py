"""Boundary evolution of (h, ξ): right-hand sides and time stepping.

The kinematic and dynamic boundary conditions, written on the flattened
strip with ñ = (−εh,₁, 1), are

    h_t  = A^k_j φ,_k ñ_j + α h,₁₁
    ξ_t  = −(ε/2)|Aᵀ∇φ|² − h − α A^ℓ₂(A^k₂ φ,_k),_ℓ + ε A^k₂φ,_k (A^k_jφ,_kñ_j + α h,₁₁)

with the dissipative trace expanded through the elliptic split,

    A²₂(A²₂φ,₂),₂|₀ = (Λ²ξ + ∂₂²φ₂)/w² − δψ,₂₂ φ,₂ / w³,    w = 1 + δψ,₂|₀.

The flattening is built from the scaled interface εh (the physical surface of
the dimensionless problem sits at height εh), so w = 1 + εΛh and the ε→0
limit is exactly the linear system; at ε = 1 the terms reduce to the familiar
rational-in-Λh form.  With mollification strength κ > 0 the heat kernel is
applied where the regularized system places it: the elliptic data are ξ^κ and
εh^κ, the transport bracket of h_t and the whole ξ_t bracket are smoothed
once more, and the h-diffusion uses the doubly smoothed h^{κκ},₁₁.

Time stepping is a Lawson (integrating-factor) Heun scheme: the exact
per-mode exponential of the stiff linear system

    d/dt (ξ̂, ĥ) = M(n)(ξ̂, ĥ),   M(n) = [[−αn², −1], [|n|, −αn²]]

(κ-adjusted when mollified) propagates the linear part, the nonlinear
remainder is advanced explicitly at second order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .elliptic import EllipticSolution, solve_phi1, solve_phi2
from .errors import ConfigurationError
from .geometry import GeometryBundle, StripGrid, build_geometry
from .spectral import (SpectrumField, dx, dxx, lam, mode_numbers, mollify,
                       pad_size, project, values_on_grid)


@dataclass(frozen=True)
class ModelParams:
    """Dimensionless viscosity α, steepness ε, mollification κ, strip rate μ."""

    alpha: float
    epsilon: float = 1.0
    kappa: float = 0.0
    mu: float = 0.0

    def __post_init__(self):
        for name in ("alpha", "epsilon", "kappa", "mu"):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"{name} must be >= 0, got {getattr(self, name)}")


@dataclass(frozen=True)
class StepOptions:
    picard_tol: float = 1e-10
    picard_max_iter: int = 25
    margin_min: float = 0.1
    linear_only: bool = False

    @staticmethod
    def for_dt(dt: float, **kw) -> "StepOptions":
        # elliptic error kept below the integrator's local truncation error
        return StepOptions(picard_tol=min(1e-10, dt ** 3), **kw)


@dataclass(frozen=True)
class EllipticCache:
    key: bytes
    bundle: GeometryBundle
    esol: EllipticSolution


@dataclass(frozen=True)
class SimState:
    h: SpectrumField
    xi: SpectrumField
    t: float
    cache: EllipticCache | None = None

    @property
    def n_modes(self) -> int:
        return self.h.n_modes


def state_key(h: SpectrumField, xi: SpectrumField, params: ModelParams) -> bytes:
    return (h.coeffs.tobytes() + xi.coeffs.tobytes() +
            np.array([params.epsilon, params.kappa]).tobytes())


@dataclass(frozen=True)
class RhsEval:
    h_t: SpectrumField
    xi_t: SpectrumField
    cache: EllipticCache


def evaluate_rhs(state: SimState, params: ModelParams, grid: StripGrid,
                 opts: StepOptions = StepOptions()) -> RhsEval:
    """Full right-hand sides of the boundary system at one state.

    Reuses the state's elliptic cache when it matches, otherwise solves the
    geometry and Picard problems fresh.
    """
    h, xi = state.h, state.xi
    key = state_key(h, xi, params)
    if state.cache is not None and state.cache.key != key:
        raise RuntimeError("stale elliptic cache attached to state")
    if state.cache is not None:
        bundle, esol = state.cache.bundle, state.cache.esol
    else:
        hk = mollify(h, params.kappa)
        xik = mollify(xi, params.kappa)
        bundle = build_geometry(params.epsilon * hk, grid, margin_min=opts.margin_min)
        phi1 = solve_phi1(xik, grid)
        esol = solve_phi2(bundle, phi1, tol=opts.picard_tol,
                          max_iter=opts.picard_max_iter)
    cache = EllipticCache(key=key, bundle=bundle, esol=esol)

    hk = mollify(h, params.kappa)
    xik = mollify(xi, params.kappa)
    b = bundle.boundary                       # = ε h^κ
    n_modes = h.n_modes
    mpad = pad_size(n_modes, 4)

    def vals(sf: SpectrumField) -> np.ndarray:
        return values_on_grid(sf, mpad)

    xi_x = vals(dx(xik))                      # φ,₁|₀
    p2 = vals(esol.traces.dphi1_dz0 + esol.traces.dphi2_dz0)   # φ,₂|₀
    hx = vals(dx(b))                          # δψ,₁|₀
    w = 1.0 + vals(lam(b))                    # 1 + δψ,₂|₀
    a2phi = p2 / w
    a1phi = xi_x - hx * a2phi
    kin = -hx * a1phi + a2phi                 # A^k_j φ,_k ñ_j

    h_t = mollify(project(kin, n_modes), params.kappa) + \
        params.alpha * dxx(mollify(hk, params.kappa))

    lam2xi = vals(lam(xik, 2.0))              # ∂₂²φ₁|₀ = Λ²ξ^κ
    t2 = vals(esol.traces.d2phi2_dz0)         # ∂₂²φ₂|₀
    lam2b = vals(lam(b, 2.0))                 # δψ,₂₂|₀ = Λ²(εh^κ)
    h2x = vals(dxx(hk))                       # h^κ,₁₁
    quad = -0.5 * params.epsilon * (a1phi ** 2 + a2phi ** 2)
    diss = -params.alpha * ((lam2xi + t2) / w ** 2 - lam2b * p2 / w ** 3)
    mixed = params.epsilon * a2phi * (kin + params.alpha * h2x)
    bracket = project(quad + diss + mixed, n_modes) - h
    xi_t = mollify(bracket, params.kappa)
    return RhsEval(h_t=h_t, xi_t=xi_t, cache=cache)


def rhs_interface(state: SimState, params: ModelParams, grid: StripGrid,
                  opts: StepOptions = StepOptions()) -> SpectrumField:
    return evaluate_rhs(state, params, grid, opts).h_t


def rhs_potential(state: SimState, params: ModelParams, grid: StripGrid,
                  opts: StepOptions = StepOptions()) -> SpectrumField:
    return evaluate_rhs(state, params, grid, opts).xi_t


# ---------------------------------------------------------------------------
# exact linear propagator

def _linear_factors(modes: np.ndarray, alpha: float, kappa: float):
    """Coefficients of M = [[−a, −c], [b, −a]] per mode (κ-mollified)."""
    n2 = modes.astype(float) ** 2
    heat = np.exp(-kappa * n2) if kappa > 0 else np.ones_like(n2)
    a = alpha * n2 * heat ** 2
    c = heat.copy()
    b = np.abs(modes).astype(float) * heat ** 2
    return a, b, c


def propagator_entries(modes: np.ndarray, alpha: float, dt: float,
                       kappa: float = 0.0):
    """Entrywise exp(dt·M(n)): arrays (p11, p12, p21, p22).

    exp(dt M) = e^{−a dt} [[cos νdt, −c sin(νdt)/ν], [b sin(νdt)/ν, cos νdt]]
    with ν = √(bc); the ν → 0 limit gives the shear block [[1, −c dt],[0, 1]].
    """
    a, b, c = _linear_factors(modes, alpha, kappa)
    nu = np.sqrt(b * c)
    decay = np.exp(-a * dt)
    cosd = np.cos(nu * dt)
    sincd = np.where(nu > 0, np.sin(nu * dt) / np.where(nu > 0, nu, 1.0), dt)
    return decay * cosd, -decay * c * sincd, decay * b * sincd, decay * cosd


def linear_propagator(n: int, alpha: float, dt: float) -> np.ndarray:
    """Closed-form exp(dt·M(n)) acting on (ξ̂, ĥ) for a single mode."""
    if dt <= 0:
        raise ConfigurationError(f"dt must be positive, got {dt}")
    m = np.array([n])
    p11, p12, p21, p22 = propagator_entries(m, alpha, dt)
    return np.array([[p11[0], p12[0]], [p21[0], p22[0]]])


def linear_rhs_arrays(u: np.ndarray, modes: np.ndarray, alpha: float,
                      kappa: float = 0.0) -> np.ndarray:
    """M·u for the stacked state u = (ξ̂, ĥ)."""
    a, b, c = _linear_factors(modes, alpha, kappa)
    return np.stack([-a * u[0] - c * u[1], b * u[0] - a * u[1]])


# ---------------------------------------------------------------------------
# time stepping

@dataclass(frozen=True)
class StepInfo:
    mean_drift: float
    picard_iters: int


def _pack(state: SimState) -> np.ndarray:
    return np.stack([state.xi.coeffs, state.h.coeffs])


def _unpack(u: np.ndarray, t: float) -> SimState:
    return SimState(h=SpectrumField(u[1]), xi=SpectrumField(u[0]), t=t)


def _apply(p, u: np.ndarray) -> np.ndarray:
    p11, p12, p21, p22 = p
    return np.stack([p11 * u[0] + p12 * u[1], p21 * u[0] + p22 * u[1]])


def step(state: SimState, params: ModelParams, grid: StripGrid, dt: float,
         opts: StepOptions = StepOptions()) -> tuple[SimState, StepInfo]:
    """One Lawson–Heun step: u¹ = P u⁰ + (dt/2)(P N(u⁰) + N(P(u⁰ + dt N(u⁰)))).

    Exact (to round-off) for the pure linear system; the interface mean is
    re-projected to zero afterwards, recording the drift removed.
    """
    if dt <= 0:
        raise ConfigurationError(f"dt must be positive, got {dt}")
    modes = mode_numbers(state.n_modes)
    p = propagator_entries(modes, params.alpha, dt, params.kappa)
    u0 = _pack(state)
    iters = 0

    if opts.linear_only:
        u1 = _apply(p, u0)
    else:
        r0 = evaluate_rhs(state, params, grid, opts)
        iters = max(iters, r0.cache.esol.picard_iters)
        k1 = np.stack([r0.xi_t.coeffs, r0.h_t.coeffs]) - \
            linear_rhs_arrays(u0, modes, params.alpha, params.kappa)
        u_pred = _apply(p, u0 + dt * k1)
        pred = _unpack(u_pred, state.t + dt)
        r1 = evaluate_rhs(pred, params, grid, opts)
        iters = max(iters, r1.cache.esol.picard_iters)
        k2 = np.stack([r1.xi_t.coeffs, r1.h_t.coeffs]) - \
            linear_rhs_arrays(u_pred, modes, params.alpha, params.kappa)
        u1 = _apply(p, u0) + 0.5 * dt * (_apply(p, k1) + k2)

    drift = abs(u1[1][0])
    u1[1][0] = 0.0
    return _unpack(u1, state.t + dt), StepInfo(mean_drift=float(drift),
                                               picard_iters=iters)


@dataclass(frozen=True)
class Trajectory:
    states: tuple[SimState, ...]
    params: ModelParams
    grid: StripGrid
    dt: float
    record_every: int
    max_mean_drift: float
    max_picard_iters: int

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])


def run(h0: SpectrumField, xi0: SpectrumField, params: ModelParams,
        grid: StripGrid, dt: float, t_final: float, record_every: int = 10,
        opts: StepOptions | None = None) -> Trajectory:
    """Advance to t_final, recording every record_every steps (plus endpoints)."""
    if t_final < 0:
        raise ConfigurationError(f"t_final must be >= 0, got {t_final}")
    if record_every < 1:
        raise ConfigurationError("record_every must be >= 1")
    if opts is None:
        opts = StepOptions.for_dt(dt)
    state = SimState(h=h0, xi=xi0, t=0.0)
    records = [state]
    n_steps = int(round(t_final / dt)) if t_final > 0 else 0
    max_drift = 0.0
    max_iters = 0
    for i in range(n_steps):
        state, info = step(state, params, grid, dt, opts)
        max_drift = max(max_drift, info.mean_drift)
        max_iters = max(max_iters, info.picard_iters)
        if (i + 1) % record_every == 0 or i == n_steps - 1:
            records.append(state)
    return Trajectory(states=tuple(records), params=params, grid=grid, dt=dt,
                      record_every=record_every, max_mean_drift=max_drift,
                      max_picard_iters=max_iters)
