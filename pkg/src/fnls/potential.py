"""Potential families a(x) and quantitative checks of the admissibility conditions.

Every family supplies a, grad a and W = x . grad a in closed form so that sign
conditions and suprema are exact rather than finite-differenced.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .spectral import Field, Grid, PhysParams, lp_norm, lp_power, spectral_gradient

SIGN_TOL = 1e-12
STRICT_TOL = 1e-10


class ConditionError(ValueError):
    pass


class Potential:
    """Base class; ``points`` always has shape (d, ...)."""

    family = "abstract"
    a_inf: float = 1.0
    # closed-form tails certify box extrema as global
    certified = True

    def value(self, points: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def gradient(self, points: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def W(self, points: np.ndarray) -> np.ndarray:
        return np.sum(np.asarray(points) * self.gradient(points), axis=0)

    def infimum(self, grid: Grid | None = None) -> float:
        raise NotImplementedError

    def W_sup(self, grid: Grid | None = None) -> float:
        raise NotImplementedError

    def one_minus_a_sup(self, grid: Grid | None = None) -> float:
        raise NotImplementedError

    def is_even(self) -> bool:
        return True

    def sample(self, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
        """(a, W) on the grid, cached per grid."""
        cache = self.__dict__.setdefault("_samples", {})
        if grid not in cache:
            a = np.broadcast_to(self.value(grid.points), grid.shape).copy()
            w = np.broadcast_to(self.W(grid.points), grid.shape).copy()
            a.setflags(write=False)
            w.setflags(write=False)
            cache.clear()
            cache[grid] = (a, w)
        return cache[grid]

    def to_config(self) -> dict[str, Any]:
        raise NotImplementedError


class ConstantPotential(Potential):
    family = "constant"

    def __init__(self, a0: float = 1.0):
        if a0 <= 0:
            raise ValueError("constant potential must be positive")
        self.a0 = float(a0)
        self.a_inf = self.a0

    def value(self, points):
        return np.full(np.shape(points)[1:], self.a0)

    def gradient(self, points):
        return np.zeros(np.shape(points))

    def W(self, points):
        return np.zeros(np.shape(points)[1:])

    def infimum(self, grid=None):
        return self.a0

    def W_sup(self, grid=None):
        return 0.0

    def one_minus_a_sup(self, grid=None):
        return abs(1.0 - self.a0)

    def to_config(self):
        return {"family": "constant", "a0": self.a0}

    def __repr__(self):
        return f"ConstantPotential(a0={self.a0})"


class InversePowerWell(Potential):
    """a(x) = 1 - mu (1 + |x|^2)^{-q}; minimum 1 - mu at the origin."""

    family = "inverse_power_well"
    a_inf = 1.0

    def __init__(self, mu: float, q: float):
        if not 0 < mu < 1:
            raise ValueError("well depth mu must lie in (0, 1)")
        if q <= 0:
            raise ValueError("decay exponent q must be positive")
        self.mu = float(mu)
        self.q = float(q)

    def value(self, points):
        r2 = np.sum(np.asarray(points) ** 2, axis=0)
        return 1.0 - self.mu * (1.0 + r2) ** (-self.q)

    def gradient(self, points):
        points = np.asarray(points)
        r2 = np.sum(points**2, axis=0)
        return 2.0 * self.q * self.mu * points * (1.0 + r2) ** (-self.q - 1.0)

    def W(self, points):
        r2 = np.sum(np.asarray(points) ** 2, axis=0)
        return 2.0 * self.q * self.mu * r2 * (1.0 + r2) ** (-self.q - 1.0)

    def infimum(self, grid=None):
        return 1.0 - self.mu

    def W_sup(self, grid=None):
        # max of t (1+t)^{-q-1} is attained at t = |x|^2 = 1/q
        return 2.0 * self.mu * (self.q / (self.q + 1.0)) ** (self.q + 1.0)

    def one_minus_a_sup(self, grid=None):
        return self.mu

    def a4_symbolic(self, d: int) -> bool:
        """d a + W - d = mu (1+r^2)^{-q-1} ((2q - d) r^2 - d) <= 0 for all r iff 2q <= d."""
        return 2.0 * self.q <= d

    def to_config(self):
        return {"family": "inverse_power_well", "mu": self.mu, "q": self.q}

    def __repr__(self):
        return f"InversePowerWell(mu={self.mu}, q={self.q})"


class SampledPotential(Potential):
    """Potential known only through samples on one grid.

    W is obtained by spectral differentiation, so sign conditions are only
    numerically checked.
    """

    family = "sampled"
    certified = False

    def __init__(self, field: Field, a_inf: float = 1.0):
        self.field = field
        self.a_inf = float(a_inf)
        grads = spectral_gradient(field)
        self._W = sum(xa * g.values for xa, g in zip(field.grid.coords, grads))

    def _check(self, points):
        if np.shape(points) != self.field.grid.points.shape or not np.allclose(points, self.field.grid.points):
            raise ValueError("sampled potential can only be evaluated on its own grid")

    def value(self, points):
        self._check(points)
        return self.field.values

    def W(self, points):
        self._check(points)
        return self._W

    def gradient(self, points):
        self._check(points)
        return np.stack([g.values for g in spectral_gradient(self.field)])

    def infimum(self, grid=None):
        return min(float(self.field.values.min()), self.a_inf)

    def W_sup(self, grid=None):
        return float(np.abs(self._W).max())

    def one_minus_a_sup(self, grid=None):
        return max(float(np.abs(1.0 - self.field.values).max()), abs(1.0 - self.a_inf))

    def is_even(self):
        return False

    def to_config(self):
        return {"family": "sampled", "a_inf": self.a_inf}


def potential_from_config(cfg: dict[str, Any] | None) -> Potential:
    if cfg is None:
        return ConstantPotential(1.0)
    family = cfg.get("family")
    if family == "constant":
        return ConstantPotential(float(cfg.get("a0", 1.0)))
    if family == "inverse_power_well":
        return InversePowerWell(float(cfg["mu"]), float(cfg.get("q", 1.0)))
    raise ValueError(f"unknown potential family {family!r}")


# -- conditions -----------------------------------------------------------------


@dataclass
class Verdict:
    name: str
    passed: bool | None
    margin: float | None = None
    detail: dict[str, Any] = field(default_factory=dict)
    note: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {"name": self.name, "passed": self.passed, "margin": self.margin, "detail": self.detail, "note": self.note}


def a1_threshold(params: PhysParams) -> float:
    N, s, p = params.d, params.s, params.p
    return max(N * (N - 2 * s) / (N**2 - 2 * s * (N - 2 * s)), 2 * N / (N * p - 4 * s))


def check_A1(a: Potential, params: PhysParams, grid: Grid | None = None) -> Verdict:
    a_star = a.infimum(grid)
    if grid is not None:
        box_min = float(np.min(a.sample(grid)[0]))
        a_star = min(a_star, box_min, a.a_inf)
    thr = a1_threshold(params)
    margin = a_star - thr
    return Verdict("A1", bool(margin > 0), margin, {"a_star": a_star, "threshold": thr})


def check_A2(a: Potential) -> Verdict:
    gap = abs(a.a_inf - 1.0)
    return Verdict("A2", bool(gap <= SIGN_TOL), -gap, {"a_inf": a.a_inf})


def check_A3(a: Potential, grid: Grid) -> Verdict:
    _, w = a.sample(grid)
    w_min = float(w.min())
    strict_measure = float(np.count_nonzero(w > STRICT_TOL) * grid.cell_volume)
    passed = bool(w_min >= -SIGN_TOL and strict_measure > 0)
    note = "" if a.certified else "numerically checked only"
    return Verdict("A3", passed, w_min, {"W_min": w_min, "strict_measure": strict_measure}, note)


def check_A4(a: Potential, params: PhysParams, grid: Grid) -> Verdict:
    vals, w = a.sample(grid)
    d = params.d
    excess = float(np.max(d * vals + w - d))
    numeric = bool(excess <= SIGN_TOL)
    detail: dict[str, Any] = {"max_excess": excess, "numeric": numeric}
    passed = numeric
    note = "" if a.certified else "numerically checked only"
    if isinstance(a, InversePowerWell):
        symbolic = a.a4_symbolic(d)
        detail["symbolic"] = symbolic
        passed = symbolic
        if symbolic != numeric:
            note = "symbolic and box verdicts disagree (box too small to see the tail)"
    return Verdict("A4", passed, -excess, detail, note)


def a5_rhs(params: PhysParams, a_star: float) -> float:
    N, s, p = params.d, params.s, params.p
    return (2 * N + p * (2 * s - N)) * ((N * p - 4 * s) * a_star - 2 * N) / (8 * (p - 2) * s)


def check_A5(a: Potential, params: PhysParams, grid: Grid | None = None) -> Verdict:
    a_star = a.infimum(grid)
    w_inf = a.W_sup(grid)
    if grid is not None:
        box = float(np.max(np.abs(a.sample(grid)[1])))
        if not a.certified:
            w_inf = max(w_inf, box)
    rhs = a5_rhs(params, a_star)
    detail = {"W_inf": w_inf, "rhs": rhs, "a_star": a_star}
    if rhs <= 0:
        return Verdict("A5", False, rhs - w_inf, detail, "right-hand side nonpositive (A1 must hold first)")
    return Verdict("A5", bool(w_inf <= rhs), rhs - w_inf, detail)


def a6_exponents(params: PhysParams) -> tuple[float, float]:
    """(t1, t2) as printed; t1 is nonpositive throughout the supercritical window."""
    N, s, p = params.d, params.s, params.p
    den1 = 2 * N - N * p + 4 * s
    t1 = 2 * N / den1 if den1 != 0 else math.inf
    t2 = 2 * N / (N * p - 4 * s)
    return t1, t2


def a6_rhs(params: PhysParams, wc: Field, m_c: float) -> float:
    N, s, p = params.d, params.s, params.p
    _, t2 = a6_exponents(params)
    wnorm = lp_norm(wc, t2 * p) ** p
    gap = N * (p - 2) - 4 * s
    return (2 ** (1 - 4 * s / (N * (p - 2))) - 1) * N * p * (p - 2) / (gap * wnorm) * m_c


def check_A6(a: Potential, params: PhysParams, wc: Field, m_c: float) -> Verdict:
    t1, t2 = a6_exponents(params)
    N, s, p = params.d, params.s, params.p
    admissible = bool(2 * N - N * p + 4 * s > 0 and t1 > 1)
    rhs = a6_rhs(params, wc, m_c) if t2 * p >= 1 else float("nan")
    one_minus = np.abs(1.0 - a.sample(wc.grid)[0])
    detail: dict[str, Any] = {"t1": t1, "t2": t2, "t1_admissible": admissible, "rhs": rhs}
    if a.one_minus_a_sup(wc.grid) == 0.0:
        detail["lhs"] = 0.0
        passed = bool(rhs > 0)
        note = "vacuous: 1 - a vanishes identically"
        if not admissible:
            note += "; t1 inadmissible-as-printed"
        return Verdict("A6", passed, rhs, detail, note)
    if not admissible:
        return Verdict("A6", None, None, detail, "inadmissible-as-printed")
    lhs = float((wc.grid.cell_volume * np.sum(one_minus**t1)) ** (1.0 / t1))
    detail["lhs"] = lhs
    return Verdict("A6", bool(lhs < rhs), rhs - lhs, detail)


@dataclass
class SupGap:
    threshold: float
    sup_one_minus_a: float
    passed: bool

    def to_dict(self):
        return {"threshold": self.threshold, "sup_one_minus_a": self.sup_one_minus_a, "passed": self.passed}


def sup_gap_threshold(params: PhysParams, m_c: float, wc: Field, h2: float, a: Potential | None = None) -> SupGap:
    """p m_c / (e^{(p-2) d h2 / 2} ||w_c||_p^p) against sup |1 - a|."""
    thr = params.p * m_c / (math.exp(params.fiber_exponent * h2) * lp_power(wc, params.p))
    sup = 0.0 if a is None else a.one_minus_a_sup(wc.grid)
    return SupGap(thr, sup, bool(sup < thr))


def theta_value(params: PhysParams) -> float:
    gap = params.supercritical_gap
    if gap <= 1e-12:
        raise ConditionError(f"mass-supercritical denominator d(p-2)-4s = {gap} is not positive")
    N, s, p = params.d, params.s, params.p
    return (4 * N - 2 * p * (N - 2 * s)) / gap


@dataclass
class Delta0:
    delta0: float
    lambda0: float
    two_theta: float
    three_theta: float
    W_inf: float
    a_star: float
    in_window: bool
    note: str = "second term uses ||W||_inf"

    def to_dict(self):
        return dict(self.__dict__)


def delta0(params: PhysParams, m_c: float, W_inf: float, a_star: float) -> Delta0:
    """Multiplier-window width delta_0 and lambda_0 = delta_0 / m_c, compared with 3 theta."""
    N, s, p = params.d, params.s, params.p
    gap = params.supercritical_gap
    a1den = (N * p - 4 * s) * a_star - 2 * N
    if a1den <= 0:
        raise ConditionError(f"(Np-4s) a_* - 2N = {a1den} <= 0: A1 fails, delta_0 undefined")
    th = theta_value(params)
    lam0 = 4 * (p * (2 * s - N) + 2 * N) / gap + (p - 2) * W_inf / gap * 16 * s / a1den
    ok = bool(2 * th <= lam0 * (1 + 1e-14) and lam0 <= 3 * th * (1 + 1e-12))
    note = "second term uses ||W||_inf"
    if lam0 > 3 * th * (1 + 1e-12):
        note += "; lambda_0 exceeds 3 theta (A5 violated)"
    return Delta0(lam0 * m_c, lam0, 2 * th, 3 * th, W_inf, a_star, ok, note)


@dataclass
class ConditionReport:
    verdicts: dict[str, Verdict]
    constants: dict[str, Any]

    @property
    def a1_to_a5(self) -> bool:
        return all(self.verdicts[k].passed for k in ("A1", "A2", "A3", "A4", "A5"))

    def to_dict(self) -> dict[str, Any]:
        return {"verdicts": {k: v.to_dict() for k, v in self.verdicts.items()}, "constants": self.constants}


def check_conditions(
    a: Potential,
    params: PhysParams,
    grid: Grid,
    wc: Field | None = None,
    m_c: float | None = None,
    h2: float | None = None,
) -> ConditionReport:
    """Run A1-A6 plus the derived constants that are computable from the inputs."""
    verdicts = {
        "A1": check_A1(a, params, grid),
        "A2": check_A2(a),
        "A3": check_A3(a, grid),
        "A4": check_A4(a, params, grid),
        "A5": check_A5(a, params, grid),
    }
    a_star = verdicts["A1"].detail["a_star"]
    w_inf = verdicts["A5"].detail["W_inf"]
    t1, t2 = a6_exponents(params)
    consts: dict[str, Any] = {
        "a_star": a_star,
        "W_inf": w_inf,
        "t1": t1,
        "t2": t2,
        "t1_admissible": bool(2 * params.d - params.d * params.p + 4 * params.s > 0 and t1 > 1),
        "A1_threshold": verdicts["A1"].detail["threshold"],
        "A5_rhs": verdicts["A5"].detail["rhs"],
        "sup_one_minus_a": a.one_minus_a_sup(grid),
    }
    try:
        th = theta_value(params)
        consts["theta"] = th
        consts["three_theta"] = 3 * th
    except ConditionError as exc:
        consts["theta_error"] = str(exc)
    # lambda_0 = delta_0 / m_c does not depend on m_c
    try:
        d0 = delta0(params, 1.0 if m_c is None else m_c, w_inf, a_star)
        consts.update({"lambda0": d0.lambda0, "delta0_window_ok": d0.in_window, "delta0_note": d0.note})
        if m_c is not None:
            consts["delta0"] = d0.delta0
    except ConditionError as exc:
        consts["delta0_error"] = str(exc)
    if wc is not None and m_c is not None:
        verdicts["A6"] = check_A6(a, params, wc, m_c)
        consts["A6_rhs"] = verdicts["A6"].detail["rhs"]
        if "lhs" in verdicts["A6"].detail:
            consts["one_minus_a_t1"] = verdicts["A6"].detail["lhs"]
        if h2 is not None:
            sg = sup_gap_threshold(params, m_c, wc, h2, a)
            consts["sup_gap"] = sg.to_dict()
    else:
        t1a = consts["t1_admissible"]
        verdicts["A6"] = Verdict("A6", None, None, {"t1": t1, "t2": t2, "t1_admissible": t1a},
                                 "needs w_c and m_c" if t1a else "inadmissible-as-printed")
    return ConditionReport(verdicts, consts)
