"""Energy functionals, their L2 gradients, the constrained residual and Pohozaev-type scalars.

Four flavors share one implementation: the potential is either a Potential
instance or None (a = 1), and the multiplier term is added when lam is given.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import DEFAULT_H_MAX
from .potential import Potential
from .spectral import (
    Field,
    PhysParams,
    apply_symbol,
    gagliardo_energy,
    l2_inner,
    l2_norm,
    rfft,
    spectral_sum,
)


@dataclass(frozen=True)
class EnergyBreakdown:
    kinetic: float
    potential_term: float
    mass_term: float
    total: float

    def to_dict(self):
        return dict(self.__dict__)


def _a_values(u: Field, a: Potential | None):
    if a is None:
        return None
    return a.sample(u.grid)[0]


def _potential_integral(u: Field, a: Potential | None, p: float) -> float:
    up = np.abs(u.values) ** p
    av = _a_values(u, a)
    if av is not None:
        up = av * up
    return float(u.grid.cell_volume * np.sum(up))


def _W_integral(u: Field, a: Potential | None, p: float) -> float:
    if a is None:
        return 0.0
    _, w = a.sample(u.grid)
    return float(u.grid.cell_volume * np.sum(w * np.abs(u.values) ** p))


def _breakdown(u: Field, a: Potential | None, params: PhysParams, lam: float | None) -> EnergyBreakdown:
    kin = 0.5 * gagliardo_energy(u, params.s)
    pot = _potential_integral(u, a, params.p) / params.p
    mass = 0.0 if lam is None else 0.5 * lam * l2_norm(u) ** 2
    return EnergyBreakdown(kin, pot, mass, kin - pot - mass)


def energy_F(u: Field, a: Potential | None, params: PhysParams) -> EnergyBreakdown:
    return _breakdown(u, a, params, None)


def energy_Finf(u: Field, params: PhysParams) -> EnergyBreakdown:
    return _breakdown(u, None, params, None)


def energy_Flambda(u: Field, a: Potential | None, lam: float, params: PhysParams) -> float:
    return _breakdown(u, a, params, lam).total


def energy_Finf_lambda(u: Field, lam: float, params: PhysParams) -> float:
    return _breakdown(u, None, params, lam).total


def nonlinearity(u: Field, a: Potential | None, p: float) -> np.ndarray:
    """a |u|^{p-2} u as a plain array."""
    au = np.abs(u.values)
    out = au ** (p - 2.0) * u.values
    av = _a_values(u, a)
    return out if av is None else av * out


def gradient_F(u: Field, a: Potential | None, params: PhysParams) -> Field:
    """L2 representative (-Delta)^s u - a |u|^{p-2} u."""
    lap = apply_symbol(u, u.grid.symbol(params.s))
    return Field(u.grid, lap.values - nonlinearity(u, a, params.p))


def gradient_Flambda(u: Field, a: Potential | None, lam: float, params: PhysParams) -> Field:
    g = gradient_F(u, a, params)
    return Field(u.grid, g.values - lam * u.values)


def multiplier(u: Field, a: Potential | None, params: PhysParams, grad: Field | None = None) -> float:
    """<F'(u), u> / ||u||^2."""
    nrm2 = l2_norm(u) ** 2
    if nrm2 == 0:
        raise ValueError("multiplier undefined for the zero field")
    if grad is None:
        grad = gradient_F(u, a, params)
    return l2_inner(grad, u) / nrm2


def tangent_residual(u: Field, a: Potential | None, params: PhysParams, grad: Field | None = None) -> Field:
    """Projection of the gradient onto the tangent space of the mass sphere through u."""
    if grad is None:
        grad = gradient_F(u, a, params)
    lam = multiplier(u, a, params, grad)
    return Field(u.grid, grad.values - lam * u.values)


def weighted_norm(r: Field, s: float) -> float:
    """||(1 + (-Delta)^s)^{-1/2} r||_2, a proxy for the H^{-s} dual norm."""
    rh = rfft(r.values)
    return math.sqrt(spectral_sum(r.grid, 1.0 / (1.0 + r.grid.symbol(s)), rh))


def pohozaev_residual(u: Field, a: Potential | None, params: PhysParams) -> float:
    """s K - (d(p-2)/2p) int a |u|^p + (1/p) int W |u|^p."""
    d, s, p = params.d, params.s, params.p
    kin = gagliardo_energy(u, s)
    return s * kin - d * (p - 2) / (2 * p) * _potential_integral(u, a, p) + _W_integral(u, a, p) / p


def _dilated_a(u: Field, a: Potential | None, h: float):
    """(a(e^{-h} x), W(e^{-h} x)) at the grid points, or None for a = 1."""
    if a is None:
        return None
    pts = math.exp(-h) * u.grid.points
    return np.broadcast_to(a.value(pts), u.grid.shape), np.broadcast_to(a.W(pts), u.grid.shape)


def fiber_parts(u: Field, a: Potential | None, h: float, params: PhysParams) -> tuple[float, float, float]:
    """(K, int a(e^{-h}x)|u|^p, int W(e^{-h}x)|u|^p) for the dilation of u by h.

    The change of variables y = e^h x moves the dilation onto the potential, so
    no resampling of u is needed: K(h * u) = e^{2sh} K(u) and
    int a |h * u|^p = e^{(p-2)dh/2} int a(e^{-h} y) |u(y)|^p dy.
    """
    kin = gagliardo_energy(u, params.s)
    up = np.abs(u.values) ** params.p
    dv = u.grid.cell_volume
    aw = _dilated_a(u, a, h)
    if aw is None:
        ip = float(dv * np.sum(up))
        return kin, ip, 0.0
    av, wv = aw
    return kin, float(dv * np.sum(av * up)), float(dv * np.sum(wv * up))


def fiber_energy(u: Field, a: Potential | None, h: float, params: PhysParams, parts=None) -> float:
    """F(h * u) evaluated exactly through the change of variables."""
    kin, ip, _ = parts if parts is not None else fiber_parts(u, a, h, params)
    g = params.fiber_exponent
    return 0.5 * math.exp(2 * params.s * h) * kin - math.exp(g * h) * ip / params.p


def fiber_derivative(
    u: Field, a: Potential | None, h: float, params: PhysParams, parts=None, h_max: float = DEFAULT_H_MAX
) -> float:
    """d/dh F(h * u); equals the Pohozaev residual of h * u."""
    if abs(h) > h_max:
        raise ValueError(f"|h|={abs(h)} exceeds h_max={h_max}")
    kin, ip, iw = parts if parts is not None else fiber_parts(u, a, h, params)
    d, s, p = params.d, params.s, params.p
    g = params.fiber_exponent
    return s * math.exp(2 * s * h) * kin - d * (p - 2) / (2 * p) * math.exp(g * h) * ip + math.exp(g * h) * iw / p
