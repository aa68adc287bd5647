"""Half-strip potential solver: closed-form linear part plus Picard correction.

The transformed potential problem splits as φ = φ₁ + φ₂ where
φ₁ = e^{x₂Λ}ξ carries the Dirichlet data and φ₂ solves the divergence-form
problem Δφ₂ = −∇·(Q ∇(φ₁ + φ₂)) with zero trace, Q = JAAᵀ − Id.

The Poisson solver uses the periodic half-strip Green's kernels.  For mode
k ≠ 0 and forcing b = ∇·g, the textbook kernel solution is rewritten (by
integrating the ∇·g terms by parts) in a damped form in which every
exponential has a nonpositive exponent:

    φ̂(k,x₂)  = (i·sgn k/2)(E·J₁ − A₁ − B₁) − (1/2)(E·J₂ − A₂ + B₂)
    ∂₂φ̂(k,x₂) = ĝ₂ + (ik/2)(E·J₁ + A₁ − B₁) − (|k|/2)(E·J₂ + A₂ + B₂)

with E = e^{|k|x₂}, Jᵢ = ∫_{−L}^0 ĝᵢ e^{|k|y}dy, Aᵢ(x₂) = ∫_{−L}^{x₂} ĝᵢ
e^{|k|(y−x₂)}dy and Bᵢ(x₂) = ∫_{x₂}^0 ĝᵢ e^{|k|(x₂−y)}dy.  The cumulative
integrals are evaluated by product-trapezoid prefix recursions (exact
exponential kernel against piecewise-linear data), O(N_z) per mode and
second-order accurate uniformly in |k|.  Mode 0 degenerates (the kernels
carry 1/|k|) and is solved by direct integration of ∂₂g₂.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import ConfigurationError, ContractionError
from .geometry import (GeometryBundle, StripField, StripGrid, fd_derivative,
                       harmonic_extension, strip_project, zero_strip)
from .norms import NormSpec, strip_norm
from .spectral import (SpectrumField, dx, lam, pad_size, project,
                       values_on_grid)


def solve_phi1(xi: SpectrumField, grid: StripGrid) -> StripField:
    """Linear part φ₁ = e^{x₂Λ}ξ (flat-domain harmonic extension of ξ)."""
    return harmonic_extension(xi, grid)


def phi1_dz(phi1: StripField, order: int = 1) -> StripField:
    """Vertical derivatives of the extension, multiplier |n| per order."""
    sym = np.abs(phi1.grid.modes).astype(float) ** order
    return StripField(phi1.grid, sym[:, None] * phi1.coeffs)


def _product_trapezoid_weights(theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Left/right node weights of ∫₀¹ f(u) e^{θ(u−1)} du for linear f.

    w0 = (1−e^{−θ})/θ² − e^{−θ}/θ,   w1 = 1/θ − (1−e^{−θ})/θ²,
    with series fallback below θ = 1e−3 to avoid cancellation.
    """
    theta = np.asarray(theta, dtype=float)
    w0 = np.empty_like(theta)
    w1 = np.empty_like(theta)
    small = theta < 1e-3
    t = theta[small]
    w0[small] = 0.5 - t / 3.0 + t ** 2 / 8.0 - t ** 3 / 30.0
    w1[small] = 0.5 - t / 6.0 + t ** 2 / 24.0 - t ** 3 / 120.0
    t = theta[~small]
    em = np.exp(-t)
    w0[~small] = (1.0 - em) / t ** 2 - em / t
    w1[~small] = 1.0 / t - (1.0 - em) / t ** 2
    return w0, w1


@dataclass(frozen=True)
class PoissonSolution:
    """Solution of Δφ = ∇·g with zero top trace and decaying bottom flux."""

    phi: StripField
    dzphi: StripField
    flux_flag: bool        # mode 0 had non-negligible g₂ at depth (no decaying solution)
    tail_defect: float     # relative size of g at the truncation depth

    @property
    def dz_trace(self) -> SpectrumField:
        return SpectrumField(self.dzphi.coeffs[:, -1])


def poisson_divform(g1: StripField, g2: StripField,
                    tail_tol: float = 1e-6) -> PoissonSolution:
    """Solve Δφ = ∇·(g₁, g₂) on the truncated strip; see module docstring."""
    grid = g1.grid
    if g2.grid != grid:
        raise ConfigurationError("g components live on different grids")
    n = grid.modes
    absn = np.abs(n).astype(float)
    nz = grid.n_depth
    dz = grid.dz

    f = np.stack([g1.coeffs, g2.coeffs])          # (2, N, Nz)
    scale = np.max(np.abs(f))
    tail_defect = float(np.max(np.abs(f[:, :, 0])) / scale) if scale > 0 else 0.0
    if tail_defect > tail_tol:
        warnings.warn(
            f"forcing has not decayed at depth -L_d (relative size {tail_defect:.2e}); "
            "truncation error exceeds tail_tol", stacklevel=2)

    theta = absn * dz
    w0, w1 = _product_trapezoid_weights(theta)
    damp = np.exp(-theta)

    inc_up = dz * (w0[None, :, None] * f[:, :, :-1] + w1[None, :, None] * f[:, :, 1:])
    inc_dn = dz * (w1[None, :, None] * f[:, :, :-1] + w0[None, :, None] * f[:, :, 1:])

    # one combined prefix loop: rows 0..1 accumulate upward (A), rows 2..3
    # accumulate the depth-reversed downward integrals (B)
    inc = np.concatenate([inc_up, inc_dn[:, :, ::-1]], axis=0)
    acc = np.zeros_like(inc[:, :, 0])
    stacked = np.zeros((4, f.shape[1], nz), dtype=np.complex128)
    for m in range(nz - 1):
        acc = damp * acc + inc[:, :, m]
        stacked[:, :, m + 1] = acc
    a = stacked[:2]
    b = stacked[2:, :, ::-1]

    j0 = a[:, :, -1]
    e_prof = np.exp(absn[:, None] * grid.z[None, :])
    isg = 1j * np.sign(n).astype(float)

    phi = (0.5 * isg[:, None] * (e_prof * j0[0][:, None] - a[0] - b[0])
           - 0.5 * (e_prof * j0[1][:, None] - a[1] + b[1]))
    dzphi = (f[1]
             + 0.5 * (1j * n.astype(float))[:, None] * (e_prof * j0[0][:, None] + a[0] - b[0])
             - 0.5 * absn[:, None] * (e_prof * j0[1][:, None] + a[1] + b[1]))

    # mode 0: φ'' = ∂₂ĝ₂ integrated directly with φ(0) = 0, φ' → ĝ₂ (decaying)
    g20 = f[1, 0, :]
    flux = abs(g20[0])
    flux_flag = bool(scale > 0 and flux > tail_tol * scale)
    if flux_flag:
        warnings.warn(
            f"mode 0 has nonzero net flux at depth ({flux:.2e}); "
            "no decaying solution exists", stacklevel=2)
    prim = cumulative_trapezoid(g20, dx=dz, initial=0.0)
    phi[0, :] = prim - prim[-1]
    dzphi[0, :] = g20

    return PoissonSolution(phi=StripField(grid, phi),
                           dzphi=StripField(grid, dzphi),
                           flux_flag=flux_flag, tail_defect=tail_defect)


# ---------------------------------------------------------------------------
# Picard iteration for the divergence-form correction

@dataclass(frozen=True)
class TraceSet:
    dphi1_dz0: SpectrumField    # ∂₂φ₁|₀ = Λξ
    dphi2_dz0: SpectrumField    # ∂₂φ₂|₀
    d2phi2_dz0: SpectrumField   # ∂₂²φ₂|₀ = (∇·g)|₀


@dataclass(frozen=True)
class EllipticSolution:
    phi1: StripField
    phi2: StripField
    dzphi2: StripField
    g1: StripField              # final right-hand side, g = −Q∇(φ₁+φ₂)
    g2: StripField
    traces: TraceSet
    picard_iters: int
    residual: float             # discrete-Laplacian defect / rms(∇φ), see solve_phi2
    increments: tuple[float, ...] = field(default=())


def _q_values(bundle: GeometryBundle, m: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    return (bundle.q11.values(m), bundle.q12.values(m), bundle.q22.values(m))


def _rms(x: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.abs(x) ** 2)))


def discrete_laplacian(u: StripField, acc: int = 4) -> StripField:
    """−n²û + ∂₂²û with the FD stencil of the given order (oracle use)."""
    n2 = (u.grid.modes.astype(float) ** 2)[:, None]
    return StripField(u.grid, -n2 * u.coeffs + fd_derivative(u.coeffs, u.grid.dz, 2, acc))


def solve_phi2(bundle: GeometryBundle, phi1: StripField,
               tol: float = 1e-10, max_iter: int = 25) -> EllipticSolution:
    """Fixed-point iteration φ₂ ← Poisson(−Q∇(φ₁+φ₂)), φ₂⁽⁰⁾ = 0.

    Stops when the successive-iterate change in the k=0 strip norm falls
    below tol.  Raises ContractionError when the increments stop contracting
    (the amplitude left the smallness regime) or max_iter is exhausted.

    The recorded residual is the RMS of the discrete Laplacian applied to the
    final fixed-point increment, normalized by the RMS of ∇φ: the size of the
    equation defect in the solver's own discretization.
    """
    grid = bundle.grid
    if bundle.diffeo_margin <= 0:
        raise ContractionError("geometry margin is not positive")
    m = pad_size(grid.n_modes, 2)
    q11v, q12v, q22v = _q_values(bundle, m)
    dz1 = phi1_dz(phi1)

    phi2 = zero_strip(grid)
    dz2 = zero_strip(grid)
    increments: list[float] = []
    sol = None
    last_inc_field = None
    g1 = g2 = None
    converged = False
    for _ in range(max_iter):
        u1 = (phi1 + phi2).dx()
        u2 = dz1 + dz2
        u1v = u1.values(m)
        u2v = u2.values(m)
        g1 = strip_project(grid, -(q11v * u1v + q12v * u2v))
        g2 = strip_project(grid, -(q12v * u1v + q22v * u2v))
        sol = poisson_divform(g1, g2)
        last_inc_field = sol.phi - phi2
        inc = strip_norm(last_inc_field, NormSpec(0.0, 0.0, 0))
        increments.append(inc)
        phi2, dz2 = sol.phi, sol.dzphi
        if inc <= tol:
            converged = True
            break
        if len(increments) >= 3 and increments[-1] > increments[-2] > increments[-3]:
            raise ContractionError(
                "amplitude outside contraction regime: Picard increments grew "
                f"({increments[-3]:.3e} -> {increments[-1]:.3e})")
    if not converged:
        raise ContractionError(
            f"Picard did not reach tol={tol:g} in {max_iter} iterations "
            f"(last increment {increments[-1]:.3e})")

    u1 = (phi1 + phi2).dx()
    u2 = dz1 + dz2
    grad_rms = max(_rms(u1.coeffs), _rms(u2.coeffs))
    defect = _rms(discrete_laplacian(last_inc_field).coeffs)
    residual = defect / grad_rms if grad_rms > 0 else 0.0

    xi = phi1.trace()
    d2trace = second_trace_primary(bundle, xi, sol.dz_trace, g1)
    traces = TraceSet(dphi1_dz0=lam(xi), dphi2_dz0=sol.dz_trace,
                      d2phi2_dz0=d2trace)
    return EllipticSolution(phi1=phi1, phi2=phi2, dzphi2=dz2, g1=g1, g2=g2,
                            traces=traces, picard_iters=len(increments),
                            residual=residual, increments=tuple(increments))


# ---------------------------------------------------------------------------
# boundary traces

def second_trace_primary(bundle: GeometryBundle, xi: SpectrumField,
                         dphi2_dz0: SpectrumField, g1: StripField) -> SpectrumField:
    """∂₂²φ₂|₀ from the boundary identity ∂₂²φ₂|₀ = (∇·g)|₀.

    g = −Q∇φ contains ∂₂²φ₂|₀ itself through ∂₂(∇φ)₂, so the identity is a
    scalar pointwise equation (1 + Q²₂|₀)·T = known, with 1 + Q²₂|₀ =
    (1 + (δψ,₁)²)/(1 + δψ,₂) > 0 on admissible geometry.
    """
    b = bundle.boundary
    n_modes = b.n_modes
    mpad = pad_size(n_modes, 4)

    def vals(sf: SpectrumField) -> np.ndarray:
        return values_on_grid(sf, mpad)

    d1 = vals(dx(b))
    d2 = vals(lam(b))
    d12 = vals(dx(lam(b)))
    d22 = vals(lam(b, 2.0))
    u1 = vals(dx(xi))
    u2 = vals(lam(xi)) + vals(dphi2_dz0)
    du1 = vals(dx(lam(xi) + dphi2_dz0))       # ∂₁(∂₂φ)|₀
    p1_d2 = vals(lam(xi, 2.0))                # ∂₂²φ₁|₀
    dg1 = vals(dx(g1.trace()))                # ∂₁g₁|₀

    j0 = 1.0 + d2
    q12 = -d1
    dq12 = -d12
    q22 = (d1 * d1 - d2) / j0
    dq22 = (2.0 * d1 * d12 - d22) / j0 - (d1 * d1 - d2) * d22 / j0 ** 2

    known = dg1 - (dq12 * u1 + q12 * du1 + dq22 * u2 + q22 * p1_d2)
    t = known / (1.0 + q22)
    return project(t, n_modes)


def second_trace_kernel(g1: StripField, g2: StripField, acc: int = 4) -> SpectrumField:
    """Cross-check route: (∇·g)|₀ with a one-sided FD stencil for ∂₂ĝ₂|₀."""
    dg2 = fd_derivative(g2.coeffs, g2.grid.dz, 1, acc)[:, -1]
    return dx(g1.trace()) + SpectrumField(dg2)


# ---------------------------------------------------------------------------
# independent residual oracle

def ale_laplacian_residual(bundle: GeometryBundle, phi1: StripField,
                           phi2: StripField, dzphi2: StripField,
                           acc: int = 4) -> tuple[float, float]:
    """FD-stencil residual of Δφ₂ + ∇·(Q∇φ) = 0 (per Piola this is J times
    the transformed Laplacian A^ℓ_j(A^k_jφ,_k),_ℓ).

    Returns (max residual, rms of ∇φ).  ∂₁ is spectral, all vertical
    derivatives here use FD stencils, independent of the kernel quadrature.
    """
    grid = bundle.grid
    m = pad_size(grid.n_modes, 2)
    u1 = (phi1 + phi2).dx()
    u2 = phi1_dz(phi1) + dzphi2
    q11v, q12v, q22v = _q_values(bundle, m)
    u1v, u2v = u1.values(m), u2.values(m)
    f1 = strip_project(grid, q11v * u1v + q12v * u2v)
    f2 = strip_project(grid, q12v * u1v + q22v * u2v)
    lapl = discrete_laplacian(phi2, acc=acc)
    div = f1.dx() + f2.deriv_z(1, acc=acc)
    res = lapl + div
    interior = res.coeffs[:, 2:-2]     # edge stencil rows excluded
    grad_rms = max(_rms(u1.coeffs), _rms(u2.coeffs))
    return float(np.max(np.abs(interior))), grad_rms


# ---------------------------------------------------------------------------
# explicit kernels (bounded closed forms, spot-check use)

def kernel_pi_derivative(which: int, j: int, l: int, k: int,
                         y2, x2) -> np.ndarray:
    """∂^j_{x₂}∂^l_{y₂}Π_which(|k|, y₂, x₂) from the closed forms.

    Π₁ is defined for y₂ <= x₂, Π₂ for x₂ <= y₂ <= 0; both expressions below
    keep every exponent nonpositive on their domains.  y₂ and x₂ broadcast.
    """
    ak = abs(k)
    y2 = np.asarray(y2, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if which == 1:
        return 0.5 * ak ** (j + l) * (np.exp(ak * (y2 + x2)) -
                                      (-1.0) ** j * np.exp(ak * (y2 - x2)))
    if which == 2:
        return 0.5 * ak ** (j + l) * (np.exp(ak * (y2 + x2)) -
                                      (-1.0) ** l * np.exp(-ak * (y2 - x2)))
    raise ConfigurationError("which must be 1 or 2")
