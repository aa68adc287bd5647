"""Periodic Fourier representation of boundary functions.

A real 2π-periodic function v(x₁) is stored by its Fourier coefficients
v̂(n), n ∈ [−N/2, N/2), in numpy FFT layout.  The Nyquist entry (n = −N/2,
unpaired for even N) is kept at zero so that every multiplier m(n) acts on a
symmetric mode set and real fields stay real.

Fourier-multiplier operators (Λ = |n|, ∂₁ = in, heat kernel e^{−κn²}, the
analytic weight e^{λ|n|}, ...) act diagonally on the coefficients.  Pointwise
nonlinearities are evaluated on a zero-padded physical grid and projected
back, which implements two-thirds-rule dealiasing: with padding factor 3/2,
every retained mode of a quadratic product is the exact projection of the
true product.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigurationError, NumericsError, SingularityError

_ZERO_MEAN_TOL = 1e-14


def _check_n_modes(n_modes: int) -> None:
    if n_modes < 4 or n_modes % 2 != 0:
        raise ConfigurationError(
            f"n_modes must be even and >= 4, got {n_modes}")


def mode_numbers(n_modes: int) -> np.ndarray:
    """Signed integer mode numbers in numpy FFT order."""
    return np.fft.fftfreq(n_modes, d=1.0 / n_modes).astype(int)


@dataclass(frozen=True)
class SpectrumField:
    """Real periodic function of x₁ stored as Fourier coefficients.

    coeffs[k] is v̂(n_k) with n_k = mode_numbers(n_modes)[k]; Hermitian
    symmetry coeff(−n) = conj(coeff(n)) is maintained by construction for
    every operation on real input.
    """

    coeffs: np.ndarray
    zero_mean: bool = False

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        _check_n_modes(c.size)
        c = c.copy()
        c[c.size // 2] = 0.0  # Nyquist stays zeroed
        object.__setattr__(self, "coeffs", c)
        if self.zero_mean:
            scale = np.max(np.abs(c))
            if scale > 0 and abs(c[0]) > _ZERO_MEAN_TOL * scale:
                raise ConfigurationError(
                    f"field flagged zero-mean has coeff(0)={c[0]:.3e}")

    @property
    def n_modes(self) -> int:
        return self.coeffs.size

    @property
    def modes(self) -> np.ndarray:
        return mode_numbers(self.n_modes)

    def coeff(self, n: int) -> complex:
        return complex(self.coeffs[n % self.n_modes])

    def hermitian_defect(self) -> float:
        """Max |coeff(−n) − conj(coeff(n))| over represented modes."""
        c = self.coeffs
        cr = np.roll(c[::-1], 1)  # entry at −n
        return float(np.max(np.abs(cr - np.conj(c))))

    def __add__(self, other: "SpectrumField") -> "SpectrumField":
        return SpectrumField(self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectrumField") -> "SpectrumField":
        return SpectrumField(self.coeffs - other.coeffs)

    def __mul__(self, scalar: float) -> "SpectrumField":
        return SpectrumField(self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "SpectrumField":
        return SpectrumField(-self.coeffs)


def zero_field(n_modes: int) -> SpectrumField:
    _check_n_modes(n_modes)
    return SpectrumField(np.zeros(n_modes, dtype=np.complex128))


def cosine(n: int, amplitude: float, n_modes: int, phase: float = 0.0) -> SpectrumField:
    """a·cos(n x₁ + φ) as a spectrum (coefficients a e^{±iφ}/2 at ±n)."""
    _check_n_modes(n_modes)
    if not 0 <= n < n_modes // 2:
        raise ConfigurationError(f"mode {n} not representable with N={n_modes}")
    c = np.zeros(n_modes, dtype=np.complex128)
    if n == 0:
        c[0] = amplitude * np.cos(phase)
    else:
        c[n] = 0.5 * amplitude * np.exp(1j * phase)
        c[-n] = np.conj(c[n])
    return SpectrumField(c)


def sine(n: int, amplitude: float, n_modes: int) -> SpectrumField:
    return cosine(n, amplitude, n_modes, phase=-np.pi / 2.0)


def grid_points(n_modes: int) -> np.ndarray:
    """Uniform collocation grid on [0, 2π)."""
    return 2.0 * np.pi * np.arange(n_modes) / n_modes


def transform(samples: np.ndarray) -> SpectrumField:
    """Forward transform of real samples on the uniform grid."""
    samples = np.asarray(samples, dtype=float)
    _check_n_modes(samples.size)
    return SpectrumField(np.fft.fft(samples) / samples.size)


def _pad_coeffs(coeffs: np.ndarray, m: int) -> np.ndarray:
    """Embed FFT-layout coefficients into a length-m layout (m >= len)."""
    n = coeffs.shape[-1]
    if m == n:
        return coeffs.copy()
    out_shape = coeffs.shape[:-1] + (m,)
    out = np.zeros(out_shape, dtype=np.complex128)
    half = n // 2
    out[..., :half] = coeffs[..., :half]
    out[..., m - half:] = coeffs[..., n - half:]
    return out


def _truncate_coeffs(coeffs: np.ndarray, n: int) -> np.ndarray:
    m = coeffs.shape[-1]
    if m == n:
        return coeffs.copy()
    out_shape = coeffs.shape[:-1] + (n,)
    out = np.zeros(out_shape, dtype=np.complex128)
    half = n // 2
    out[..., :half] = coeffs[..., :half]
    out[..., n - half:] = coeffs[..., m - half:]
    out[..., half] = 0.0
    return out


def pad_size(n_modes: int, order: int = 2) -> int:
    """Grid size that dealiases products of the given polynomial order."""
    m = (order + 1) * (n_modes // 2 - 1) + 2
    m = max(m, n_modes)
    return m + (m % 2)


def values_on_grid(f: SpectrumField, m: int | None = None) -> np.ndarray:
    """Real samples of f on an m-point uniform grid (default: its own grid)."""
    m = f.n_modes if m is None else m
    return np.real(np.fft.ifft(_pad_coeffs(f.coeffs, m)) * m)


def inverse(f: SpectrumField) -> np.ndarray:
    return values_on_grid(f)


def project(samples: np.ndarray, n_modes: int) -> SpectrumField:
    """Project physical samples (any even length >= n_modes) onto n_modes."""
    samples = np.asarray(samples, dtype=float)
    c = np.fft.fft(samples) / samples.size
    return SpectrumField(_truncate_coeffs(c, n_modes))


def apply_multiplier(f: SpectrumField, symbol: Callable[[np.ndarray], np.ndarray]) -> SpectrumField:
    """coeff_out(n) = symbol(n)·coeff_in(n).

    symbol receives the signed integer mode array; it must be finite on every
    represented mode.
    """
    m = np.asarray(symbol(f.modes), dtype=np.complex128)
    if not np.all(np.isfinite(m)):
        bad = f.modes[~np.isfinite(m)]
        raise NumericsError(f"multiplier not finite at mode(s) {bad[:5].tolist()}")
    return SpectrumField(m * f.coeffs)


def lam(f: SpectrumField, power: float = 1.0) -> SpectrumField:
    """Calderon operator Λ^r, the multiplier |n|^r (with 0^r = 0 for r > 0)."""
    if power == 1.0:
        return apply_multiplier(f, lambda n: np.abs(n).astype(float))
    return apply_multiplier(f, lambda n: np.power(np.abs(n).astype(float), power))


def dx(f: SpectrumField) -> SpectrumField:
    """Tangential derivative ∂₁, multiplier in."""
    return apply_multiplier(f, lambda n: 1j * n)


def dxx(f: SpectrumField) -> SpectrumField:
    """Second tangential derivative ∂₁², multiplier −n²."""
    return apply_multiplier(f, lambda n: -(n.astype(float) ** 2))


def mollify(f: SpectrumField, kappa: float) -> SpectrumField:
    """Periodic heat-kernel smoothing, multiplier e^{−κn²}; κ=0 is identity."""
    if kappa < 0:
        raise ConfigurationError(f"mollification strength must be >= 0, got {kappa}")
    if kappa == 0.0:
        return f
    return apply_multiplier(f, lambda n: np.exp(-kappa * n.astype(float) ** 2))


def pointwise_product(f: SpectrumField, g: SpectrumField) -> SpectrumField:
    """Dealiased product: the retained modes equal the projection of f·g."""
    if f.n_modes != g.n_modes:
        raise ConfigurationError(
            f"mode-count mismatch: {f.n_modes} vs {g.n_modes}")
    m = pad_size(f.n_modes, order=2)
    return project(values_on_grid(f, m) * values_on_grid(g, m), f.n_modes)


def pointwise_power(f: SpectrumField, n: int) -> SpectrumField:
    """Dealiased integer power fⁿ (padding matched to the product order)."""
    if n < 1:
        raise ConfigurationError(f"power must be >= 1, got {n}")
    m = pad_size(f.n_modes, order=n)
    return project(values_on_grid(f, m) ** n, f.n_modes)


def pointwise_apply(func: Callable[..., np.ndarray],
                    *fields: SpectrumField,
                    pad_factor: float = 2.0,
                    guard: Callable[[np.ndarray], None] | None = None) -> SpectrumField:
    """Evaluate func on padded physical samples of the fields and re-project.

    Used for the rational nonlinearities (1/(1+Λh) and friends), which are
    evaluated pointwise rather than by their geometric series.  `guard`, if
    given, sees the tuple of sample arrays before evaluation and may raise.
    """
    n_modes = fields[0].n_modes
    m = max(pad_size(n_modes, 2), int(np.ceil(pad_factor * n_modes / 2)) * 2)
    sample_sets = [values_on_grid(f, m) for f in fields]
    if guard is not None:
        guard(*sample_sets)
    return project(func(*sample_sets), n_modes)


def reciprocal_guard(threshold: float = 0.0):
    """Guard raising SingularityError where samples are <= threshold."""

    def _guard(values: np.ndarray, *_rest: np.ndarray) -> None:
        j = int(np.argmin(values))
        if values[j] <= threshold:
            x = 2.0 * np.pi * j / values.size
            raise SingularityError(
                f"denominator {values[j]:.3e} <= {threshold:g} at x1={x:.4f}")

    return _guard
