"""Ground state of the limit equation and its exact mass-rescaling family."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .functionals import (
    energy_Finf,
    gradient_F,
    multiplier,
    tangent_residual,
    weighted_norm,
)
from .geometry import (
    ALIASING_TOL,
    AliasingError,
    _out_of_band_fraction,
    _outside_box_fraction,
)
from .potential import theta_value
from .spectral import (
    Field,
    Grid,
    PhysParams,
    apply_axiswise,
    gagliardo_energy,
    interpolation_matrix,
    irfft,
    l2_norm,
    lp_power,
    rfft,
)

log = logging.getLogger(__name__)

GAMMA_BOUNDS = (1e-6, 1e6)


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class GroundState:
    w: Field
    params: PhysParams
    c0: float
    m_c0: float
    residual: float
    iterations: int
    history: tuple = field(default=(), repr=False)
    elapsed: float = 0.0

    @property
    def kinetic(self) -> float:
        return gagliardo_energy(self.w, self.params.s)


@dataclass(frozen=True)
class ScaledState:
    wc: Field
    c: float
    lambda_c: float
    theta: float
    m_c: float
    params: PhysParams

    @property
    def kinetic(self) -> float:
        return gagliardo_energy(self.wc, self.params.s)


def theta(params: PhysParams) -> float:
    """(4N - 2p(N - 2s)) / (N(p - 2) - 4s); raises ConditionError outside the supercritical window."""
    return theta_value(params)


def lambda_c(c: float, c0: float, th: float) -> float:
    if c <= 0 or c0 <= 0:
        raise ValueError("masses must be positive")
    return -((c / c0) ** (-th - 2.0))


def mass_ratio_energy(c: float, c0: float, th: float, m_c0: float) -> float:
    """m_c = (c / c0)^{-theta} m_{c0}."""
    return (c / c0) ** (-th) * m_c0


def _initial_guess(grid: Grid) -> np.ndarray:
    width = grid.L / 10.0
    return np.exp(-grid.radius_sq / (2.0 * width**2))


def solve_limit_equation(
    grid: Grid,
    params: PhysParams,
    tol: float = 1e-10,
    max_iter: int = 2000,
    initial: Field | None = None,
    callback=None,
) -> GroundState:
    """Petviashvili iteration for (-Delta)^s w + w = w^{p-1}, w > 0.

    The residual ||(-Delta)^s u + u - u^{p-1}||_2 / ||u||_2 of the current iterate
    is available in Fourier space at no extra cost and drives the stopping rule.
    """
    s, p = params.s, params.p
    rho = (p - 1.0) / (p - 2.0)
    op = 1.0 + grid.symbol(s)
    wts = grid.parseval_weights
    u = _initial_guess(grid) if initial is None else np.array(initial.values, dtype=float)
    uh = rfft(u)
    history = []
    t0 = time.perf_counter()
    resid = math.inf
    for it in range(max_iter + 1):
        nl = np.maximum(u, 0.0) ** (p - 1.0)
        nh = rfft(nl)
        num = np.sum(wts * op * (uh.real**2 + uh.imag**2))
        den = np.sum(wts * (uh * np.conj(nh)).real)
        if not den > 0:
            raise SolverError(f"iterate collapsed (<u, u^(p-1)> = {den:.3e}) at iteration {it}")
        gamma = num / den
        if not GAMMA_BOUNDS[0] <= gamma <= GAMMA_BOUNDS[1]:
            raise SolverError(f"stabilizing factor {gamma:.3e} left [1e-6, 1e6] at iteration {it}")
        rh = op * uh - nh
        resid = math.sqrt(np.sum(wts * (rh.real**2 + rh.imag**2)) / np.sum(wts * (uh.real**2 + uh.imag**2)))
        history.append((it, float(gamma), resid))
        if callback is not None:
            callback(it, gamma, resid)
        if resid <= tol:
            break
        if it == max_iter:
            raise SolverError(f"no convergence in {max_iter} iterations (residual {resid:.3e})")
        uh = gamma**rho * nh / op
        u = irfft(uh, grid)
    w = Field(grid, np.maximum(u, 0.0))
    c0 = l2_norm(w)
    m = energy_Finf(w, params).total
    elapsed = time.perf_counter() - t0
    log.info("ground state: %d iterations, residual %.3e, %.1fs", it, resid, elapsed)
    return GroundState(w, params, c0, m, resid, it, tuple(history), elapsed)


def limit_residual(w: Field, params: PhysParams, lam: float = -1.0) -> float:
    """||(-Delta)^s w - lam w - |w|^{p-2} w||_2 / ||w||_2."""
    g = gradient_F(w, None, params)
    return l2_norm(Field(w.grid, g.values - lam * w.values)) / l2_norm(w)


def rescale_to_mass(gs: GroundState, c: float, target: Grid | None = None, tol: float = ALIASING_TOL) -> ScaledState:
    """w_c(x) = (-lambda_c)^{1/(p-2)} w((-lambda_c)^{1/(2s)} x).

    By default the profile is carried onto the co-scaled grid with half-width
    L / kappa, kappa = (-lambda_c)^{1/(2s)}, where it is exact: the samples are
    w's samples times the amplitude, and every functional scales exactly. With
    ``target`` the interpolant of w is evaluated at kappa x on that grid instead,
    subject to the aliasing checks.
    """
    if c <= 0:
        raise ValueError("mass must be positive")
    params = gs.params
    th = theta(params)
    lam = lambda_c(c, gs.c0, th)
    kappa = (-lam) ** (1.0 / (2.0 * params.s))
    amp = (-lam) ** (1.0 / (params.p - 2.0))
    grid = gs.w.grid
    if target is None:
        wc = Field(grid.scaled(1.0 / kappa), amp * gs.w.values)
    else:
        if target.d != grid.d:
            raise ValueError("dimension mismatch")
        # kappa x must stay inside w's box and w(kappa .) inside target's band
        if kappa * target.L > grid.L:
            lost = _outside_box_fraction(gs.w, target.L * kappa / grid.L)
            if lost > tol:
                raise AliasingError(f"aliasing: rescaled profile loses {lost:.3e} of its mass outside the box")
        band_ratio = (target.n / target.L) / (kappa * grid.n / grid.L)
        if band_ratio < 1.0:
            lost = _out_of_band_fraction(gs.w, band_ratio)
            if lost > tol:
                raise AliasingError(f"aliasing: rescaled profile loses {lost:.3e} of its energy above the band")
        vals = apply_axiswise(gs.w.values, interpolation_matrix(grid, kappa * target.axis))
        wc = Field(target, amp * vals)
    m = energy_Finf(wc, params).total
    return ScaledState(wc, c, lam, th, m, params.with_mass(c))


def scaled_diagnostics(ss: ScaledState, gs: GroundState) -> dict:
    """Identity checks for one member of the family."""
    params = gs.params
    N, s, p = params.d, params.s, params.p
    gap = params.supercritical_gap
    wc = ss.wc
    K = gagliardo_energy(wc, s)
    P = lp_power(wc, p)
    mass = l2_norm(wc)
    lam_num = multiplier(wc, None, params)
    expected_m = mass_ratio_energy(ss.c, gs.c0, ss.theta, gs.m_c0)
    return {
        "c": ss.c,
        "mass": mass,
        "mass_rel_err": abs(mass - ss.c) / ss.c,
        "lambda_c": ss.lambda_c,
        "lambda_numeric": lam_num,
        "lambda_rel_err": abs(lam_num - ss.lambda_c) / abs(ss.lambda_c),
        "m_c": ss.m_c,
        "m_c_predicted": expected_m,
        "energy_ratio_rel_err": abs(ss.m_c - expected_m) / abs(expected_m),
        "residual": limit_residual(wc, params, ss.lambda_c),
        "tangent_residual_weighted": weighted_norm(tangent_residual(wc, None, params), s),
        "kinetic": K,
        "e1_kinetic_rel_err": abs(K - 2 * N * (p - 2) / gap * ss.m_c) / K,
        "e1_lp_rel_err": abs(P - 4 * s * p / gap * ss.m_c) / P,
        "e1_note": "||w_c||_p^p identity carries the factor m_c",
        "pohozaev_rel": (s * K - N * (p - 2) / (2 * p) * P) / (s * K),
    }


def multiplier_consistency(gs: GroundState) -> float:
    """(N(p-2) - 2ps)/(N(p-2) - 4s) * 2 m_{c0} / c0^2; equals -1 for an exact ground state."""
    params = gs.params
    N, s, p = params.d, params.s, params.p
    return (N * (p - 2) - 2 * p * s) / params.supercritical_gap * 2 * gs.m_c0 / gs.c0**2


@dataclass(frozen=True)
class CurvePoint:
    c: float
    m_c: float
    lambda_c: float


def mass_energy_curve(gs: GroundState, c_list) -> list[CurvePoint]:
    out = []
    for c in sorted(float(c) for c in c_list):
        if c <= 0:
            raise ValueError("masses must be positive")
        ss = rescale_to_mass(gs, c)
        out.append(CurvePoint(c, ss.m_c, ss.lambda_c))
    return out

