"""Periodic pseudospectral discretization of fields on [-L, L)^d.

The fractional Laplacian is the Fourier multiplier |k|^{2s}; every integral
is the rectangle rule on the uniform grid, which is spectrally consistent with
the discrete Fourier transform (Parseval holds to roundoff).
"""

from __future__ import annotations

import os
import struct
from collections.abc import Callable
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Union

import numpy as np
from scipy import fft as sp_fft

MAGIC = b"FNLSFLD1"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<8sIIIddd")

# Imaginary residue tolerated after an inverse transform, relative to the field norm.
IMAG_RESIDUE_TOL = 1e-10

_threads: int | None = None


def set_threads(n: int | None) -> None:
    """Set the FFT worker count (``None`` falls back to ``FNLS_THREADS`` or 1)."""
    global _threads
    if n is not None and n < 1:
        raise ValueError("thread count must be >= 1")
    _threads = n


def fft_workers() -> int:
    if _threads is not None:
        return _threads
    env = os.environ.get("FNLS_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


class FieldFormatError(ValueError):
    """Raised when a field file cannot be decoded."""


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Uniform periodic lattice on [-L, L)^d with n points per axis."""

    d: int
    n: int
    L: float

    def __post_init__(self) -> None:
        if self.d not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.d}")
        if not isinstance(self.n, (int, np.integer)) or not _is_power_of_two(int(self.n)) or self.n < 8:
            raise ValueError(f"points per axis must be a power of two >= 8, got {self.n}")
        if not np.isfinite(self.L) or self.L <= 0:
            raise ValueError(f"half-width must be positive, got {self.L}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "L", float(self.L))

    @property
    def spacing(self) -> float:
        return 2.0 * self.L / self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    @property
    def size(self) -> int:
        return self.n**self.d

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.d

    @cached_property
    def axis(self) -> np.ndarray:
        """Grid coordinates along one axis: -L + j*h."""
        return -self.L + self.spacing * np.arange(self.n)

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        if self.d == 1:
            return (self.axis,)
        return tuple(np.meshgrid(self.axis, self.axis, indexing="ij"))

    @cached_property
    def points(self) -> np.ndarray:
        """Coordinates stacked as an array of shape (d, n, ..., n)."""
        return np.stack(self.coords)

    @cached_property
    def radius_sq(self) -> np.ndarray:
        return np.sum(self.points**2, axis=0)

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """k_j = pi*j/L in FFT order, j in {-n/2, ..., n/2-1}."""
        return (np.pi / self.L) * np.fft.fftfreq(self.n, d=1.0 / self.n)

    @cached_property
    def half_wavenumbers(self) -> tuple[np.ndarray, ...]:
        """Per-axis wavenumbers broadcastable onto the real-FFT layout."""
        k = self.wavenumbers
        kr = (np.pi / self.L) * np.fft.rfftfreq(self.n, d=1.0 / self.n)
        if self.d == 1:
            return (kr,)
        return (k[:, None], kr[None, :])

    @cached_property
    def half_shape(self) -> tuple[int, ...]:
        return self.shape[:-1] + (self.n // 2 + 1,)

    @cached_property
    def ksq(self) -> np.ndarray:
        """|k|^2 on the real-FFT layout."""
        out = np.zeros(self.half_shape)
        for kk in self.half_wavenumbers:
            out = out + kk**2
        return out

    @cached_property
    def parseval_weights(self) -> np.ndarray:
        """Multiplicity of each real-FFT coefficient in the full spectrum."""
        w = np.full(self.n // 2 + 1, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        return np.broadcast_to(w, self.half_shape)

    @cached_property
    def _symbols(self) -> dict:
        return {}

    def symbol(self, s: float) -> np.ndarray:
        """|k|^{2s} on the real-FFT layout (zero mode maps to 0)."""
        key = float(s)
        sym = self._symbols.get(key)
        if sym is None:
            sym = self.ksq**key
            sym[(0,) * self.d] = 0.0
            sym.setflags(write=False)
            self._symbols[key] = sym
        return sym

    def scaled(self, factor: float) -> Grid:
        """Same lattice with every coordinate multiplied by ``factor``."""
        return Grid(self.d, self.n, self.L * factor)


def make_grid(d: int, n: int, L: float) -> Grid:
    return Grid(d, n, L)


Scalar = Union[int, float, np.floating]


@dataclass(frozen=True, eq=False)
class Field:
    """Real samples of a function on a Grid; immutable."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.array(self.values, dtype=np.float64, copy=True)
        if vals.shape != self.grid.shape:
            raise ValueError(f"values shape {vals.shape} does not match grid shape {self.grid.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable[..., np.ndarray]) -> Field:
        return cls(grid, np.broadcast_to(fn(*grid.coords), grid.shape))

    @classmethod
    def zeros(cls, grid: Grid) -> Field:
        return cls(grid, np.zeros(grid.shape))

    def with_values(self, values: np.ndarray) -> Field:
        return Field(self.grid, values)

    def _other(self, other):
        if isinstance(other, Field):
            if other.grid != self.grid:
                raise ValueError("fields live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return Field(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return Field(self.grid, self.values - self._other(other))

    def __rsub__(self, other):
        return Field(self.grid, self._other(other) - self.values)

    def __mul__(self, other):
        return Field(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return Field(self.grid, self.values / self._other(other))

    def __neg__(self):
        return Field(self.grid, -self.values)

    def __abs__(self):
        return Field(self.grid, np.abs(self.values))


@dataclass(frozen=True)
class PhysParams:
    """Physical parameters (d, s, p, c).

    ``strict`` enforces the mass-supercritical, Sobolev-subcritical window
    2 + 4s/d < p < 2d/(d - 2s); oracle tests relax it to p > 2.
    """

    d: int
    s: float
    p: float
    c: float = 1.0
    strict: bool = True

    def __post_init__(self) -> None:
        if self.d not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.d}")
        if not 0 < self.s <= 1:
            raise ValueError(f"fractional order must lie in (0, 1], got {self.s}")
        if self.c <= 0:
            raise ValueError(f"mass must be positive, got {self.c}")
        if self.p <= 2:
            raise ValueError(f"nonlinearity exponent must exceed 2, got {self.p}")
        if self.strict:
            if self.s < 1 and self.d <= 2 * self.s:
                raise ValueError("need d > 2s for s < 1")
            lo, hi = self.p_window
            if not lo < self.p < hi:
                raise ValueError(f"p={self.p} outside the admissible window ({lo}, {hi})")

    @property
    def p_window(self) -> tuple[float, float]:
        lo = 2.0 + 4.0 * self.s / self.d
        hi = 2.0 * self.d / (self.d - 2.0 * self.s) if self.d > 2 * self.s else np.inf
        return lo, hi

    @property
    def fiber_exponent(self) -> float:
        """(p - 2) d / 2: the growth rate of the potential term along the fiber."""
        return 0.5 * (self.p - 2.0) * self.d

    @property
    def supercritical_gap(self) -> float:
        """d(p-2) - 4s, positive exactly in the mass-supercritical regime."""
        return self.d * (self.p - 2.0) - 4.0 * self.s

    def with_mass(self, c: float) -> PhysParams:
        return PhysParams(self.d, self.s, self.p, c, self.strict)


# -- transforms -----------------------------------------------------------------


def rfft(values: np.ndarray) -> np.ndarray:
    return sp_fft.rfftn(values, workers=fft_workers())


def irfft(spec: np.ndarray, grid: Grid) -> np.ndarray:
    return sp_fft.irfftn(spec, s=grid.shape, workers=fft_workers())


def spectral_sum(grid: Grid, weight: np.ndarray, a_hat: np.ndarray, b_hat: np.ndarray | None = None) -> float:
    """Quadrature of a bilinear form given real-FFT coefficients.

    Returns h^d / n^d * sum_k weight(k) Re(a_hat conj(b_hat)) over the full spectrum.
    """
    if b_hat is None:
        prod = a_hat.real**2 + a_hat.imag**2
    else:
        prod = (a_hat * np.conj(b_hat)).real
    return float(np.sum(grid.parseval_weights * weight * prod) * grid.cell_volume / grid.size)


def apply_symbol(f: Field, symbol: np.ndarray) -> Field:
    """Apply a real, even Fourier multiplier given on the real-FFT layout."""
    return Field(f.grid, irfft(symbol * rfft(f.values), f.grid))


def apply_complex_multiplier(f: Field, multiplier: np.ndarray) -> Field:
    """Apply a multiplier given on the full FFT layout and return the real part.

    The imaginary residue must be below IMAG_RESIDUE_TOL of the field norm.
    """
    out = sp_fft.ifftn(multiplier * sp_fft.fftn(f.values, workers=fft_workers()), workers=fft_workers())
    scale = np.linalg.norm(f.values)
    resid = np.linalg.norm(out.imag)
    if resid > IMAG_RESIDUE_TOL * max(scale, np.finfo(float).tiny):
        raise ValueError(f"imaginary residue {resid:.3e} exceeds tolerance (field norm {scale:.3e})")
    return Field(f.grid, out.real)


def frac_laplacian(f: Field, s: float) -> Field:
    """(-Delta)^s as the periodic multiplier |k|^{2s}."""
    if not 0 < s <= 1:
        raise ValueError(f"fractional order must lie in (0, 1], got {s}")
    return apply_symbol(f, f.grid.symbol(s))


def gagliardo_energy(f: Field, s: float) -> float:
    """||(-Delta)^{s/2} f||_2^2 = sum |k|^{2s} |f_hat|^2 with quadrature weights."""
    if not 0 < s <= 1:
        raise ValueError(f"fractional order must lie in (0, 1], got {s}")
    return spectral_sum(f.grid, f.grid.symbol(s), rfft(f.values))


def lp_norm(f: Field, q: float) -> float:
    if q < 1:
        raise ValueError(f"exponent must be >= 1, got {q}")
    if np.isinf(q):
        return float(np.max(np.abs(f.values)))
    return float((f.grid.cell_volume * np.sum(np.abs(f.values) ** q)) ** (1.0 / q))


def lp_power(f: Field, q: float) -> float:
    """||f||_q^q without the final root."""
    return float(f.grid.cell_volume * np.sum(np.abs(f.values) ** q))


def l2_inner(f: Field, g: Field) -> float:
    if f.grid != g.grid:
        raise ValueError("fields live on different grids")
    return float(f.grid.cell_volume * np.vdot(f.values.ravel(), g.values.ravel()))


def l2_norm(f: Field) -> float:
    return float(np.sqrt(f.grid.cell_volume) * np.linalg.norm(f.values))


def spectral_gradient(f: Field) -> tuple[Field, ...]:
    """Partial derivatives by spectral differentiation (Nyquist mode dropped)."""
    fh = rfft(f.values)
    grid = f.grid
    out = []
    for axis, kk in enumerate(grid.half_wavenumbers):
        k = np.array(kk, copy=True)
        nyq = np.isclose(np.abs(k), np.pi * grid.n / (2 * grid.L))
        k[nyq] = 0.0
        out.append(Field(grid, irfft(1j * k * fh, grid)))
    return tuple(out)


# -- band-limited resampling ----------------------------------------------------


def dirichlet_kernel(grid: Grid, t: np.ndarray) -> np.ndarray:
    """Periodic interpolation kernel for even n with a symmetric Nyquist term."""
    theta = np.pi * np.asarray(t, dtype=float) / grid.L
    theta = np.mod(theta + np.pi, 2 * np.pi) - np.pi
    half = 0.5 * theta
    small = np.abs(np.sin(half)) < 1e-13
    safe = np.where(small, 1.0, half)
    val = np.sin(0.5 * grid.n * theta) / (grid.n * np.tan(safe))
    return np.where(small, 1.0, val)


def interpolation_matrix(grid: Grid, targets: np.ndarray, outside_zero: bool = True) -> np.ndarray:
    """Matrix evaluating the 1D trigonometric interpolant at ``targets``.

    Targets outside [-L, L) get a zero row when ``outside_zero`` (the field is
    taken to vanish outside the box instead of being periodized).
    """
    targets = np.asarray(targets, dtype=float)
    mat = dirichlet_kernel(grid, targets[:, None] - grid.axis[None, :])
    if outside_zero:
        h = grid.spacing
        inside = (targets >= -grid.L - 1e-12 * h) & (targets < grid.L - 1e-12 * h)
        mat[~inside, :] = 0.0
    return mat


def apply_axiswise(values: np.ndarray, mat: np.ndarray) -> np.ndarray:
    out = values
    for axis in range(values.ndim):
        out = np.moveaxis(np.tensordot(mat, out, axes=([1], [axis])), 0, axis)
    return out


def evaluate_scaled(f: Field, factor: float) -> np.ndarray:
    """Samples of the interpolant of f at factor * x for every grid point x."""
    mat = interpolation_matrix(f.grid, factor * f.grid.axis)
    return apply_axiswise(f.values, mat)


def resample(f: Field, target: Grid) -> Field:
    """Evaluate the interpolant of f on the points of another grid (zero outside f's box)."""
    if target.d != f.grid.d:
        raise ValueError("dimension mismatch")
    mat = interpolation_matrix(f.grid, target.axis)
    return Field(target, apply_axiswise(f.values, mat))


# -- persistence ---------------------------------------------------------------


def save_field(f: Field, path: str | os.PathLike, s: float = 0.0, p: float = 0.0) -> None:
    """Write the FNLSFLD1 binary format (little-endian header + row-major f64 samples)."""
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, f.grid.d, f.grid.n, f.grid.L, float(s), float(p))
    payload = np.ascontiguousarray(f.values, dtype="<f8").tobytes()
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(header)
        fh.write(payload)
    os.replace(tmp, path)


@dataclass(frozen=True)
class FieldMetadata:
    s: float
    p: float
    version: int


def load_field_with_metadata(path: str | os.PathLike) -> tuple[Field, FieldMetadata]:
    data = Path(path).read_bytes()
    if len(data) < 8 or data[:8] != MAGIC:
        raise FieldFormatError("bad magic")
    if len(data) < _HEADER.size:
        raise FieldFormatError("truncated header")
    _, version, d, n, L, s, p = _HEADER.unpack_from(data)
    if version != FORMAT_VERSION:
        raise FieldFormatError(f"unsupported version {version}")
    try:
        grid = Grid(d, n, L)
    except ValueError as exc:
        raise FieldFormatError(f"dimension mismatch: {exc}") from exc
    expected = grid.size * 8
    payload = data[_HEADER.size:]
    if len(payload) < expected:
        raise FieldFormatError(f"truncated payload: {len(payload)} bytes, expected {expected}")
    if len(payload) > expected:
        raise FieldFormatError(f"dimension mismatch: {len(payload)} payload bytes, expected {expected}")
    values = np.frombuffer(payload, dtype="<f8").reshape(grid.shape)
    return Field(grid, values), FieldMetadata(s=s, p=p, version=version)


def load_field(path: str | os.PathLike) -> Field:
    return load_field_with_metadata(path)[0]
