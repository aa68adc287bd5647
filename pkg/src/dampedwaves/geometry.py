"""Flattening diffeomorphism and geometric tensors on the half-strip.

The reference domain is Ω = 𝕋 × (−∞, 0], truncated to [−L_d, 0] on a uniform
depth grid.  Given an interface b (the boundary trace used for flattening),
δψ is its harmonic extension, ψ = e + (0, δψ), and

    J = 1 + δψ,₂
    A = (∇ψ)⁻¹ = (1/J) [[J, 0], [−δψ,₁, 1]]
    Q = J A Aᵀ − Id = [[δψ,₂, −δψ,₁], [−δψ,₁, ((δψ,₁)² − δψ,₂)/J]]

Everything is stored mode-wise; vertical derivatives of closed-form
extensions use the analytic multiplier |n|, finite-difference stencils are
reserved for residual checks.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import ConfigurationError, DiffeomorphismError
from .spectral import (SpectrumField, _pad_coeffs, _truncate_coeffs,
                       mode_numbers, pad_size)


@dataclass(frozen=True)
class StripGrid:
    """Truncated half-strip discretization: N modes × N_z depth nodes."""

    n_modes: int
    depth: float = 8.0
    n_depth: int = 257

    def __post_init__(self):
        if self.n_modes < 4 or self.n_modes % 2 != 0:
            raise ConfigurationError(f"n_modes must be even >= 4, got {self.n_modes}")
        if self.depth <= 0:
            raise ConfigurationError(f"depth must be positive, got {self.depth}")
        if self.n_depth < 8:
            raise ConfigurationError(f"n_depth must be >= 8, got {self.n_depth}")

    @property
    def z(self) -> np.ndarray:
        """Depth nodes from −L_d up to 0 (boundary last)."""
        return np.linspace(-self.depth, 0.0, self.n_depth)

    @property
    def dz(self) -> float:
        return self.depth / (self.n_depth - 1)

    @property
    def modes(self) -> np.ndarray:
        return mode_numbers(self.n_modes)


@dataclass(frozen=True)
class StripField:
    """Scalar field on the strip, one Fourier column per mode.

    coeffs has shape (n_modes, n_depth); Hermitian symmetry in the mode index
    holds at every depth node for real fields.
    """

    grid: StripGrid
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.complex128)  # own copy
        if c.shape != (self.grid.n_modes, self.grid.n_depth):
            raise ConfigurationError(
                f"coeff shape {c.shape} does not match grid "
                f"({self.grid.n_modes}, {self.grid.n_depth})")
        c[self.grid.n_modes // 2, :] = 0.0
        object.__setattr__(self, "coeffs", c)

    def trace(self) -> SpectrumField:
        """Boundary values at x₂ = 0."""
        return SpectrumField(self.coeffs[:, -1])

    def dx(self, order: int = 1) -> "StripField":
        sym = (1j * self.grid.modes.astype(float)) ** order
        return StripField(self.grid, sym[:, None] * self.coeffs)

    def deriv_z(self, order: int = 1, acc: int = 4) -> "StripField":
        """Vertical derivative by finite differences (residual checks only)."""
        d = fd_derivative(self.coeffs, self.grid.dz, order, acc)
        return StripField(self.grid, d)

    def values(self, m: int | None = None) -> np.ndarray:
        """Physical samples, shape (m, n_depth)."""
        m = self.grid.n_modes if m is None else m
        return np.real(np.fft.ifft(_pad_coeffs(self.coeffs.T, m), axis=1).T * m)

    def __add__(self, other: "StripField") -> "StripField":
        return StripField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other: "StripField") -> "StripField":
        return StripField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, scalar: float) -> "StripField":
        return StripField(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "StripField":
        return StripField(self.grid, -self.coeffs)


def zero_strip(grid: StripGrid) -> StripField:
    return StripField(grid, np.zeros((grid.n_modes, grid.n_depth), dtype=np.complex128))


def strip_project(grid: StripGrid, samples: np.ndarray) -> StripField:
    """Project physical samples (m, n_depth) back onto the grid's modes."""
    m = samples.shape[0]
    c = np.fft.fft(samples.T, axis=1).T / m
    return StripField(grid, _truncate_coeffs(c.T, grid.n_modes).T)


def strip_pointwise(grid: StripGrid,
                    func: Callable[..., np.ndarray],
                    *fields: StripField,
                    pad_factor: float = 2.0) -> StripField:
    """Pointwise evaluation of func over padded physical samples of fields."""
    m = max(pad_size(grid.n_modes, 2),
            int(np.ceil(pad_factor * grid.n_modes / 2)) * 2)
    return strip_project(grid, func(*[f.values(m) for f in fields]))


def strip_product(u: StripField, v: StripField) -> StripField:
    """Dealiased pointwise product of strip fields."""
    m = pad_size(u.grid.n_modes, order=2)
    return strip_project(u.grid, u.values(m) * v.values(m))


# ---------------------------------------------------------------------------
# finite-difference stencils (Fornberg weights on a uniform grid)

def fornberg_weights(x0: float, xs: np.ndarray, m: int) -> np.ndarray:
    """Weights of the m-th derivative at x0 from nodes xs (Fornberg 1988)."""
    n = len(xs)
    c = np.zeros((n, m + 1))
    c[0, 0] = 1.0
    c1 = 1.0
    c4 = xs[0] - x0
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = xs[i] - x0
        for j in range(i):
            c3 = xs[i] - xs[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, m].copy()


@lru_cache(maxsize=None)
def _stencil_table(n_nodes: int, deriv: int, acc: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-row stencil offsets and weights (unit spacing) for a uniform grid.

    Returns (offsets, weights) with shapes (n_nodes, width); centered in the
    interior, one-sided near the ends.
    """
    width = deriv + acc
    if width % 2 == 0:
        width += 1
    if n_nodes < width:
        raise ConfigurationError(
            f"grid with {n_nodes} nodes too coarse for derivative {deriv} at order {acc}")
    half = width // 2
    offsets = np.empty((n_nodes, width), dtype=int)
    weights = np.empty((n_nodes, width))
    for i in range(n_nodes):
        start = min(max(i - half, 0), n_nodes - width)
        offs = np.arange(start, start + width) - i
        offsets[i] = offs
        weights[i] = fornberg_weights(0.0, offs.astype(float), deriv)
    return offsets, weights


def fd_derivative(values: np.ndarray, dz: float, deriv: int, acc: int = 4) -> np.ndarray:
    """Finite-difference z-derivative along the last axis."""
    n = values.shape[-1]
    offsets, weights = _stencil_table(n, deriv, acc)
    idx = offsets + np.arange(n)[:, None]
    out = np.einsum("...nw,nw->...n", values[..., idx.ravel()].reshape(
        values.shape[:-1] + idx.shape), weights)
    return out / dz ** deriv


# ---------------------------------------------------------------------------
# harmonic extension and geometry

def harmonic_extension(h: SpectrumField, grid: StripGrid) -> StripField:
    """Solution of Δδψ = 0 on the strip with trace h: δψ̂(n,x₂) = e^{|n|x₂}ĥ(n)."""
    if h.n_modes != grid.n_modes:
        raise ConfigurationError("interface and grid mode counts differ")
    prof = np.exp(np.abs(grid.modes.astype(float))[:, None] * grid.z[None, :])
    return StripField(grid, prof * h.coeffs[:, None])


def extension_derivative(h: SpectrumField, grid: StripGrid,
                         dx_order: int = 0, dz_order: int = 0) -> StripField:
    """∂₁^a ∂₂^b of the harmonic extension, by the analytic multipliers."""
    n = grid.modes.astype(float)
    sym = (1j * n) ** dx_order * np.abs(n) ** dz_order
    prof = np.exp(np.abs(n)[:, None] * grid.z[None, :])
    return StripField(grid, sym[:, None] * prof * h.coeffs[:, None])


@dataclass(frozen=True)
class GeometryBundle:
    """δψ and the tensors J, A, Q = JAAᵀ − Id derived from one interface.

    A¹₁ ≡ 1 and A¹₂ ≡ 0 are not materialized.  diffeo_margin is the minimum
    of J over the padded sampling grid; admissible states keep it positive.
    """

    grid: StripGrid
    boundary: SpectrumField          # the trace the flattening was built from
    delta_psi: StripField
    dpsi1: StripField                # δψ,₁
    dpsi2: StripField                # δψ,₂  (= J − 1, analytic)
    a21: StripField                  # A²₁ = −δψ,₁ / J
    a22: StripField                  # A²₂ = 1 / J
    q11: StripField                  # Q¹₁ = δψ,₂
    q12: StripField                  # Q¹₂ = Q²₁ = −δψ,₁
    q22: StripField                  # Q²₂ = ((δψ,₁)² − δψ,₂)/J
    diffeo_margin: float

    @property
    def j_field(self) -> StripField:
        c = self.dpsi2.coeffs.copy()
        c[0, :] += 1.0
        return StripField(self.grid, c)


def build_geometry(h: SpectrumField, grid: StripGrid,
                   margin_min: float = 0.1) -> GeometryBundle:
    """Geometry bundle for the flattening built from interface trace h.

    Raises DiffeomorphismError when min(1 + δψ,₂) <= margin_min, mirroring
    the smallness requirement that makes ψ injective.
    """
    delta_psi = harmonic_extension(h, grid)
    dpsi1 = extension_derivative(h, grid, dx_order=1)
    dpsi2 = extension_derivative(h, grid, dz_order=1)

    m = max(pad_size(grid.n_modes, 2), 2 * grid.n_modes)
    d1 = dpsi1.values(m)
    d2 = dpsi2.values(m)
    j = 1.0 + d2
    margin = float(np.min(j))
    if margin <= margin_min:
        raise DiffeomorphismError(
            f"not a diffeomorphism at this amplitude: min J = {margin:.4f} "
            f"<= margin_min = {margin_min:g}")

    a22 = strip_project(grid, 1.0 / j)
    a21 = strip_project(grid, -d1 / j)
    q22 = strip_project(grid, (d1 * d1 - d2) / j)
    return GeometryBundle(
        grid=grid, boundary=h, delta_psi=delta_psi,
        dpsi1=dpsi1, dpsi2=dpsi2, a21=a21, a22=a22,
        q11=dpsi2, q12=-dpsi1, q22=q22, diffeo_margin=margin)


def identity_defect(bundle: GeometryBundle) -> float:
    """Max-norm residual of A·∇ψ = Id over the physical grid.

    Row 1 is the identity exactly; row 2 gives the two nontrivial entries
    A²₁ + A²₂ δψ,₁ = 0 and A²₂ (1 + δψ,₂) = 1.
    """
    m = max(pad_size(bundle.grid.n_modes, 2), 2 * bundle.grid.n_modes)
    a21 = bundle.a21.values(m)
    a22 = bundle.a22.values(m)
    d1 = bundle.dpsi1.values(m)
    d2 = bundle.dpsi2.values(m)
    r21 = a21 + a22 * d1
    r22 = a22 * (1.0 + d2) - 1.0
    return float(max(np.max(np.abs(r21)), np.max(np.abs(r22))))


def check_piola(bundle: GeometryBundle, acc: int = 4) -> float:
    """Max residual of Piola's identity (J A^k_i),_k = 0.

    J A = [[J, 0], [−δψ,₁, 1]]; ∂₁ is spectral, ∂₂ uses an FD stencil of the
    given order.  The i = 2 column is identically satisfied.
    """
    dj_dx = bundle.dpsi2.dx()               # ∂₁ J = ∂₁ δψ,₂
    d2_col = (-bundle.dpsi1).deriv_z(1, acc=acc)
    res = dj_dx + d2_col
    return float(np.max(np.abs(res.values())))
