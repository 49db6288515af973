"""Geometric transforms on fields: fiber dilation, translation, barycenter."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import (
    Field,
    apply_complex_multiplier,
    evaluate_scaled,
    irfft,
    l2_norm,
    rfft,
    spectral_gradient,
)

DEFAULT_H_MAX = 6.0
ALIASING_TOL = 1e-6
# beta needs the truncated average to stay away from the periodic seam
SHELL_FRACTION = 0.1


class AliasingError(ValueError):
    """A dilation pushed significant mass out of the box or out of the band."""


class BarycenterError(ValueError):
    pass


def _out_of_band_fraction(f: Field, factor: float) -> float:
    """Fraction of ||f||^2 carried by modes with |k_i| > factor * k_nyquist on some axis."""
    grid = f.grid
    fh = rfft(f.values)
    power = grid.parseval_weights * (fh.real**2 + fh.imag**2)
    kcut = factor * np.pi * grid.n / (2 * grid.L)
    mask = np.zeros(grid.half_shape, dtype=bool)
    for kk in grid.half_wavenumbers:
        mask = mask | (np.abs(kk) > kcut * (1 + 1e-12))
    total = power.sum()
    return float(power[mask].sum() / total) if total > 0 else 0.0


def _outside_box_fraction(f: Field, factor: float) -> float:
    """Fraction of ||f||^2 located where max_i |x_i| >= factor * L."""
    grid = f.grid
    sup = np.max(np.abs(grid.points), axis=0)
    v2 = f.values**2
    total = v2.sum()
    return float(v2[sup >= factor * grid.L].sum() / total) if total > 0 else 0.0


def fiber_scale(f: Field, h: float, h_max: float = DEFAULT_H_MAX, tol: float = ALIASING_TOL) -> Field:
    """Mass-preserving dilation e^{dh/2} f(e^h x) by band-limited resampling.

    Samples outside the box are taken as zero rather than periodized.
    """
    if abs(h) > h_max:
        raise ValueError(f"|h|={abs(h)} exceeds h_max={h_max}")
    if h == 0:
        return Field(f.grid, f.values)
    factor = float(np.exp(h))
    if h < 0:
        lost = _outside_box_fraction(f, factor)
    else:
        lost = _out_of_band_fraction(f, 1.0 / factor)
    if lost > tol:
        raise AliasingError(f"aliasing: dilation h={h:.4g} loses {lost:.3e} of the squared mass")
    vals = np.exp(0.5 * f.grid.d * h) * evaluate_scaled(f, factor)
    return Field(f.grid, vals)


@dataclass(frozen=True)
class FiberPoint:
    """Lazy h * base; ``realize`` resamples onto the base grid."""

    h: float
    base: Field

    def realize(self, h_max: float = DEFAULT_H_MAX) -> Field:
        return fiber_scale(self.base, self.h, h_max=h_max)


def _translation_multiplier(f: Field, z) -> np.ndarray:
    grid = f.grid
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if z.shape != (grid.d,):
        raise ValueError(f"shift must have {grid.d} components")
    k = grid.wavenumbers
    nyq = grid.n // 2
    factors = []
    for za in z:
        phase = np.exp(-1j * k * za)
        # symmetric treatment of the unpaired Nyquist mode keeps the output real
        phase[nyq] = np.cos(k[nyq] * za)
        factors.append(phase)
    if grid.d == 1:
        return factors[0]
    return factors[0][:, None] * factors[1][None, :]


def translate(f: Field, z) -> Field:
    """f(x - z) with periodic wrap, exact for trigonometric polynomials."""
    if not np.any(np.asarray(z, dtype=float)):
        return Field(f.grid, f.values)
    return apply_complex_multiplier(f, _translation_multiplier(f, z))


def reflect(f: Field, axis: int) -> Field:
    """f with x_axis -> -x_axis (grid index j -> n - j mod n)."""
    idx = (-np.arange(f.grid.n)) % f.grid.n
    return Field(f.grid, np.take(f.values, idx, axis=axis))


def dilation_generator(f: Field) -> Field:
    """d/dh (h * f) at h = 0, i.e. (d/2) f + x . grad f."""
    grads = spectral_gradient(f)
    out = 0.5 * f.grid.d * f.values
    for xa, ga in zip(f.grid.coords, grads):
        out = out + xa * ga.values
    return Field(f.grid, out)


def _ball_kernel_hat(grid) -> np.ndarray:
    """Real-FFT of the discrete unit-ball averaging kernel centred at the origin."""
    cache = grid._symbols
    key = ("ball", 1.0)
    if key not in cache:
        h = grid.spacing
        offsets = h * (np.fft.fftfreq(grid.n, d=1.0 / grid.n))
        if grid.d == 1:
            r2 = offsets**2
        else:
            r2 = offsets[:, None] ** 2 + offsets[None, :] ** 2
        ind = (r2 <= 1.0 + 1e-12).astype(float)
        ind /= ind.sum()
        cache[key] = rfft(ind)
    return cache[key]


def local_average(f: Field) -> Field:
    """Unit-ball average of |f| by spectral convolution with a normalized indicator."""
    grid = f.grid
    if grid.spacing >= 1.0:
        raise ValueError(f"grid spacing {grid.spacing} does not resolve the unit ball")
    absf = np.abs(f.values)
    nu = irfft(rfft(absf) * _ball_kernel_hat(grid), grid)
    nu = np.clip(nu, 0.0, absf.max())
    return Field(grid, nu)


def barycenter(f: Field) -> np.ndarray:
    """Centre of the truncated local average (nu - max(nu)/2)^+ in box coordinates."""
    grid = f.grid
    if l2_norm(f) == 0:
        raise BarycenterError("undefined barycenter: zero field")
    nu = local_average(f).values
    u_hat = np.maximum(nu - 0.5 * nu.max(), 0.0)
    mass = u_hat.sum()
    if mass <= 0:
        raise BarycenterError("undefined barycenter: empty truncation")
    shell = np.max(np.abs(grid.points), axis=0) > (1.0 - SHELL_FRACTION) * grid.L
    if np.any(u_hat[shell] > 0):
        raise BarycenterError("truncated average reaches the outer shell; centre the field in the box")
    return np.array([np.sum(u_hat * xa) / mass for xa in grid.coords])
