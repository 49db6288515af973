"""Numerical checks of the quantitative lemmas: the two-variable minimum, the h0 bound,
splitting additivity, the scaling family and gradient consistency."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .functionals import (
    energy_F,
    energy_Finf_lambda,
    energy_Flambda,
    gradient_F,
    gradient_Flambda,
)
from .geometry import translate
from .groundstate import (
    GroundState,
    multiplier_consistency,
    rescale_to_mass,
    scaled_diagnostics,
    theta,
)
from .potential import Potential
from .spectral import (
    Field,
    Grid,
    PhysParams,
    gagliardo_energy,
    l2_inner,
    l2_norm,
    lp_power,
)


class PreconditionError(ValueError):
    pass


# -- two-variable minimum ------------------------------------------------------


@dataclass
class MinInequalityResult:
    theta: float
    A: float
    grid_n: int
    min_value: float
    argmin: tuple[float, float]
    bound: float
    passed: bool
    grid_min: float
    boundary_min: float

    def to_dict(self):
        return dict(self.__dict__, argmin=list(self.argmin))


def _objective(x, y, theta, A):
    return x ** (-theta / 2) + y ** (-theta / 2) + A * (x + y)


def verify_min_inequality(theta: float, A: float, grid_n: int = 2000) -> MinInequalityResult:
    """Brute-force min of x^{-theta/2} + y^{-theta/2} + A(x+y) over x, y > 0, x + y <= 1,
    compared with 1.5 theta + 2."""
    if not theta > 0:
        raise PreconditionError("theta must be positive")
    if not A > theta:
        raise PreconditionError(f"need A > theta, got A={A}, theta={theta}")
    if grid_n < 1000:
        raise PreconditionError("grid_n must be at least 1000")
    ax = np.arange(1, grid_n + 1) / grid_n
    best, arg = math.inf, (math.nan, math.nan)
    # row blocks keep the working set small
    block = max(1, 2_000_000 // grid_n)
    for i0 in range(0, grid_n, block):
        x = ax[i0 : i0 + block, None]
        vals = _objective(x, ax[None, :], theta, A)
        vals = np.where(x + ax[None, :] <= 1.0 + 1e-12, vals, np.inf)
        k = int(np.argmin(vals))
        if vals.flat[k] < best:
            best = float(vals.flat[k])
            arg = (float(x[k // grid_n, 0]), float(ax[k % grid_n]))
    grid_min = best
    # boundary x + y = 1, refined by a bounded scalar minimization around the best sample
    t = np.linspace(0.0, 1.0, 20 * grid_n + 1)[1:-1]
    bvals = _objective(t, 1.0 - t, theta, A)
    kb = int(np.argmin(bvals))
    lo, hi = t[max(kb - 1, 0)], t[min(kb + 1, len(t) - 1)]
    res = optimize.minimize_scalar(lambda s: _objective(s, 1.0 - s, theta, A), bounds=(lo, hi), method="bounded",
                                   options={"xatol": 1e-14})
    boundary_min = float(min(res.fun, bvals[kb]))
    if boundary_min < best:
        best = boundary_min
        xb = float(res.x) if res.fun <= bvals[kb] else float(t[kb])
        arg = (xb, 1.0 - xb)
    bound = 1.5 * theta + 2.0
    return MinInequalityResult(theta, A, grid_n, best, arg, bound, bool(best >= bound - 1e-6), grid_min, boundary_min)


def min_inequality_oracle(theta: float, A: float) -> float:
    """Closed-form minimum: the symmetric interior stationary point if admissible, else x = y = 1/2."""
    x = (theta / (2 * A)) ** (2 / (theta + 2))
    if 2 * x <= 1:
        return float(_objective(x, x, theta, A))
    return float(_objective(0.5, 0.5, theta, A))


# -- h0 bound -------------------------------------------------------------------


@dataclass
class H0Result:
    h0: float
    factor: float
    brace: float
    proxy: float
    passed: bool

    def to_dict(self):
        return dict(self.__dict__)


def verify_h0_bound(params: PhysParams, wc: Field, m_c: float, proxy: float) -> H0Result:
    """e^{(p-2)N h0/2} = {(gap / (N(p-2) m_c)) (K/2 + proxy/p)}^{N(p-2)/gap} and the test factor < 2.

    ``proxy`` stands for the Hoelder product term, passed in directly.
    """
    if proxy < 0:
        raise PreconditionError("proxy must be nonnegative")
    N, s, p = params.d, params.s, params.p
    gap = params.supercritical_gap
    K = gagliardo_energy(wc, s)
    brace = gap / (N * (p - 2) * m_c) * (0.5 * K + proxy / p)
    factor = brace ** (N * (p - 2) / gap)
    h0 = math.log(factor) / (0.5 * (p - 2) * N)
    return H0Result(h0, factor, brace, proxy, bool(factor < 2.0))


def holder_proxy(a: Potential, wc: Field, p: float) -> float:
    """int (1 - a) |w_c|^p, the quantity the Hoelder product is meant to bound."""
    av = a.sample(wc.grid)[0]
    return float(wc.grid.cell_volume * np.sum((1.0 - av) * np.abs(wc.values) ** p))


# -- splitting additivity -------------------------------------------------------


@dataclass
class SplittingRow:
    separation: float
    mass_err: float
    energy_err: float
    overlap: float


@dataclass
class SplittingResult:
    rows: list[SplittingRow]
    mass_monotone: bool
    energy_monotone: bool
    final_mass_err: float
    final_energy_err: float
    passed: bool
    warnings: list[str] = field(default_factory=list)

    def to_dict(self):
        return {
            "rows": [r.__dict__ for r in self.rows],
            "mass_monotone": self.mass_monotone,
            "energy_monotone": self.energy_monotone,
            "final_mass_err": self.final_mass_err,
            "final_energy_err": self.final_energy_err,
            "passed": self.passed,
            "warnings": self.warnings,
        }


def _support_radius(f: Field, frac: float = 1e-8) -> float:
    """Radius outside which f carries less than frac of its squared mass."""
    r = np.sqrt(f.grid.radius_sq).ravel()
    w = (f.values**2).ravel()
    order = np.argsort(r)[::-1]
    tail = np.cumsum(w[order])
    k = np.searchsorted(tail, frac * w.sum())
    return float(r[order][min(k, len(r) - 1)])


def verify_splitting_additivity(
    v: Field,
    u1: Field,
    a: Potential | None,
    lam: float,
    separations,
    params: PhysParams,
    tol: float = 1e-3,
) -> SplittingResult:
    """Mass and energy additivity errors for v + u1(. - z), z along the first axis."""
    grid = v.grid
    seps = [float(z) for z in separations]
    if any(z == 0 for z in seps):
        raise PreconditionError("separation 0 is excluded")
    if any(abs(z) >= grid.L for z in seps):
        raise PreconditionError("separations must fit the box")
    notes = []
    reach = _support_radius(v) + _support_radius(u1)
    mv = l2_norm(v) ** 2
    mu = l2_norm(u1) ** 2
    fv = energy_Flambda(v, a, lam, params)
    rows = []
    for z in sorted(seps, key=abs):
        shift = np.zeros(grid.d)
        shift[0] = z
        uz = translate(u1, shift)
        w = v + uz
        if abs(z) < reach:
            notes.append(f"separation {z} is below the combined support radius {reach:.3g}")
        mass_err = abs(l2_norm(w) ** 2 - mv - mu)
        energy_err = abs(energy_Flambda(w, a, lam, params) - fv - energy_Finf_lambda(uz, lam, params))
        rows.append(SplittingRow(z, mass_err, energy_err, abs(l2_inner(v, uz))))
    for msg in notes:
        warnings.warn(msg, stacklevel=2)
    mass_mono = all(b.mass_err <= a_.mass_err * (1 + 1e-9) + 1e-15 for a_, b in zip(rows, rows[1:]))
    energy_mono = all(b.energy_err <= a_.energy_err * (1 + 1e-9) + 1e-15 for a_, b in zip(rows, rows[1:]))
    last = rows[-1]
    passed = bool(mass_mono and energy_mono and last.mass_err < tol and last.energy_err < tol)
    return SplittingResult(rows, mass_mono, energy_mono, last.mass_err, last.energy_err, passed, notes)


# -- scaling family ---------------------------------------------------------------


SCALING_TOLS = {
    "mass": 1e-8,
    "energy_ratio": 1e-5,
    "multiplier": 1e-4,
    "pohozaev": 1e-6,
    "e1": 1e-5,
    "mu_consistency": 1e-4,
}


def verify_scaling_suite(gs: GroundState, c_ratios=(0.5, 1.0, 2.0), tols: dict | None = None) -> dict:
    """Rescale to c = r c0 for each ratio and check mass, energy law, multiplier law,
    Pohozaev and the kinetic-energy identity."""
    tols = dict(SCALING_TOLS, **(tols or {}))
    rows = []
    for r in c_ratios:
        ss = rescale_to_mass(gs, r * gs.c0)
        diag = scaled_diagnostics(ss, gs)
        diag["ratio"] = r
        diag["energy_ratio"] = ss.m_c / gs.m_c0
        diag["energy_ratio_expected"] = r ** (-ss.theta)
        diag["multiplier_expected"] = -(r ** (-ss.theta - 2))
        diag["verdicts"] = {
            "mass": bool(diag["mass_rel_err"] <= tols["mass"]),
            "energy_ratio": bool(diag["energy_ratio_rel_err"] <= tols["energy_ratio"]),
            "multiplier": bool(diag["lambda_rel_err"] <= tols["multiplier"]),
            "pohozaev": bool(abs(diag["pohozaev_rel"]) <= tols["pohozaev"]),
            "e1": bool(diag["e1_kinetic_rel_err"] <= tols["e1"]),
        }
        rows.append(diag)
    mc = multiplier_consistency(gs)
    out = {
        "c0": gs.c0,
        "m_c0": gs.m_c0,
        "m_c0_over_c0_sq": gs.m_c0 / gs.c0**2,
        "theta": theta(gs.params),
        "mu_consistency": mc,
        "mu_consistency_ok": bool(abs(mc + 1.0) <= tols["mu_consistency"]),
        "rows": rows,
        "tolerances": tols,
    }
    out["passed"] = bool(out["mu_consistency_ok"] and all(all(r["verdicts"].values()) for r in rows))
    return out


# -- gradient consistency --------------------------------------------------------


def random_smooth_field(grid: Grid, rng: np.random.Generator, width: float | None = None) -> Field:
    """A few random Gaussian bumps of either sign."""
    width = grid.L / 8 if width is None else width
    out = np.zeros(grid.shape)
    for _ in range(3):
        centre = rng.uniform(-grid.L / 3, grid.L / 3, size=grid.d).reshape((-1,) + (1,) * grid.d)
        amp = rng.uniform(-1.0, 1.0)
        w = width * rng.uniform(0.7, 1.3)
        r2 = np.sum((grid.points - centre) ** 2, axis=0)
        out = out + amp * np.exp(-r2 / (2 * w * w))
    return Field(grid, out)


def verify_gradient(
    grid: Grid,
    params: PhysParams,
    a: Potential | None = None,
    lam: float | None = None,
    count: int = 20,
    seed: int = 0,
    eps: float = 1e-5,
) -> dict:
    """Central differences of F (or F_lambda) along random smooth directions against <grad, phi>."""
    rng = np.random.default_rng(seed)
    errs = []
    for _ in range(count):
        u = random_smooth_field(grid, rng)
        phi = random_smooth_field(grid, rng)
        if lam is None:
            fn = lambda f: energy_F(f, a, params).total
            grad = gradient_F(u, a, params)
        else:
            fn = lambda f: energy_Flambda(f, a, lam, params)
            grad = gradient_Flambda(u, a, lam, params)
        fd = (fn(u + eps * phi) - fn(u - eps * phi)) / (2 * eps)
        exact = l2_inner(grad, phi)
        errs.append(abs(fd - exact) / max(abs(exact), 1e-300))
    return {"count": count, "seed": seed, "eps": eps, "max_rel_err": max(errs), "rel_errs": errs}


def pohozaev_from_norms(u: Field, params: PhysParams) -> float:
    """s K - (d(p-2)/2p) ||u||_p^p, the a = 1 Pohozaev scalar written with norms."""
    return params.s * gagliardo_energy(u, params.s) - params.d * (params.p - 2) / (2 * params.p) * lp_power(u, params.p)
