"""Pipelines behind the CLI subcommands.

Each function takes a RunConfig and returns (results, verdicts, artifacts):
a JSON-ready dict, a list of verdict dicts and in-memory outputs (fields,
iteration series) that the caller may persist.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .boundstate import (
    _sphere_directions,
    choose_box,
    family_max,
    family_value,
    realize_family,
    saddle_solve,
    verify_solution,
)
from .config import RunConfig
from .functionals import energy_Finf, fiber_energy, multiplier, pohozaev_residual
from .groundstate import (
    GroundState,
    multiplier_consistency,
    rescale_to_mass,
    solve_limit_equation,
)
from .potential import (
    InversePowerWell,
    check_conditions,
    potential_from_config,
    sup_gap_threshold,
)
from .report import verdict
from .spectral import Field, PhysParams, gagliardo_energy, lp_power, make_grid
from .verification import (
    holder_proxy,
    verify_gradient,
    verify_h0_bound,
    verify_min_inequality,
    verify_scaling_suite,
    verify_splitting_additivity,
)

log = logging.getLogger(__name__)

MINIMAX_CASES = ((1.0, 1.2), (6.0, 6.5), (1.0, 100.0))
SPLITTING_SEPARATIONS = (6.0, 10.0, 14.0, 18.0, 22.0, 26.0)


@dataclass
class RunOutput:
    results: dict
    verdicts: list
    fields: dict = field(default_factory=dict)
    series: list | None = None
    iterations: int = 0


def _ground(cfg: RunConfig, params: PhysParams | None = None) -> GroundState:
    grid = cfg.make_grid()
    params = params or PhysParams(cfg.grid.d, cfg.phys.s, cfg.phys.p, 1.0, strict=False)
    return solve_limit_equation(grid, params, tol=cfg.solver.tol_ground, max_iter=cfg.solver.ground_max_iter)


def ground_summary(gs: GroundState) -> dict:
    params = gs.params
    w = gs.w
    K = gs.kinetic
    P = lp_power(w, params.p)
    out = {
        "c0": gs.c0,
        "mass_sq": gs.c0**2,
        "m_c0": gs.m_c0,
        "kinetic": K,
        "lp_power": P,
        "peak": float(np.max(w.values)),
        "residual": gs.residual,
        "iterations": gs.iterations,
        "multiplier": multiplier(w, None, params),
        "pohozaev_res": pohozaev_residual(w, None, params),
        "pohozaev_rel": pohozaev_residual(w, None, params) / (params.s * K),
    }
    if params.supercritical_gap > 1e-12:
        out["mu_consistency"] = multiplier_consistency(gs)
        out["m_c0_over_c0_sq"] = gs.m_c0 / gs.c0**2
    return out


def run_ground(cfg: RunConfig) -> RunOutput:
    gs = _ground(cfg)
    res = ground_summary(gs)
    res["grid"] = {"d": cfg.grid.d, "n": cfg.grid.n, "L": cfg.grid.L, "spacing": gs.w.grid.spacing}
    tol_p = cfg.solver.tol_pohozaev
    verdicts = [
        verdict("converged", gs.residual <= cfg.solver.tol_ground, residual=gs.residual, tol=cfg.solver.tol_ground),
        verdict("pohozaev", abs(res["pohozaev_rel"]) <= tol_p, pohozaev_rel=res["pohozaev_rel"], tol=tol_p),
    ]
    return RunOutput(res, verdicts, {"w": gs.w}, iterations=gs.iterations)


def run_scale(cfg: RunConfig, ratios=(0.5, 1.0, 2.0)) -> RunOutput:
    params = cfg.params(c=1.0)
    gs = _ground(cfg, PhysParams(params.d, params.s, params.p, 1.0, strict=True))
    suite = verify_scaling_suite(gs, ratios)
    verdicts = [verdict("mu_consistency", suite["mu_consistency_ok"], value=suite["mu_consistency"], expected=-1.0)]
    for row in suite["rows"]:
        for name, ok in row["verdicts"].items():
            verdicts.append(verdict(f"{name}@{row['ratio']}", ok, c=row["c"]))
    fields = {}
    if cfg.phys.c is not None:
        ss = rescale_to_mass(gs, cfg.phys.c)
        fields["w"] = ss.wc
        suite["requested"] = {"c": cfg.phys.c, "lambda_c": ss.lambda_c, "m_c": ss.m_c, "grid_L": ss.wc.grid.L}
    suite["ground"] = ground_summary(gs)
    return RunOutput(suite, verdicts, fields, iterations=gs.iterations)


def _condition_verdicts(rep) -> list:
    out = []
    for name, v in rep.verdicts.items():
        out.append(verdict(name, v.passed, margin=v.margin, detail=v.detail, note=v.note))
    if "lambda0" in rep.constants:
        out.append(verdict("lambda0_le_3theta", rep.constants["delta0_window_ok"],
                           lambda0=rep.constants["lambda0"], three_theta=rep.constants.get("three_theta")))
    return out


def run_check_potential(cfg: RunConfig, with_ground: bool = False) -> RunOutput:
    grid = cfg.make_grid()
    params = cfg.params(c=cfg.phys.c or 1.0)
    a = potential_from_config(cfg.potential)
    wc = m_c = None
    extra = {}
    if with_ground:
        gs = _ground(cfg, PhysParams(params.d, params.s, params.p, 1.0, strict=True))
        c = cfg.phys.c or gs.c0
        ss = rescale_to_mass(gs, c, target=grid)
        wc, m_c = ss.wc, ss.m_c
        extra = {"c": c, "c0": gs.c0, "m_c": m_c, "lambda_c": ss.lambda_c}
    rep = check_conditions(a, params, grid, wc, m_c)
    res = {"potential": a.to_config(), **rep.to_dict(), **extra}
    return RunOutput(res, _condition_verdicts(rep))


def run_bound(cfg: RunConfig, callback=None) -> RunOutput:
    grid = cfg.make_grid()
    base = cfg.params(c=1.0)
    a = potential_from_config(cfg.potential)
    gs = _ground(cfg, PhysParams(base.d, base.s, base.p, 1.0, strict=True))
    c = cfg.phys.c if cfg.phys.c is not None else gs.c0
    params = base.with_mass(c)
    ss = rescale_to_mass(gs, c, target=grid)
    wc, m_c = ss.wc, ss.m_c
    rep = check_conditions(a, params, grid, wc, m_c)
    verdicts = _condition_verdicts(rep)
    res: dict = {"c": c, "c0": gs.c0, "m_c0": gs.m_c0, "m_c": m_c, "lambda_c": ss.lambda_c, "theta": ss.theta,
                 "ground": ground_summary(gs), "conditions": rep.to_dict()}
    sv = cfg.solver
    box = choose_box(wc, a, params, m_c, eps=sv.linking_eps * m_c, h_max=sv.h_max,
                     radial_samples=sv.radial_samples, angular_samples=sv.angular_samples, h_samples=sv.h_samples)
    fmax, (y, h) = family_max(box, wc, a, params)
    sg = sup_gap_threshold(params, m_c, wc, box.h2, a)
    res["box"] = box.to_dict()
    res["family_max"] = {"value": fmax, "y": y, "h": h}
    res["sup_gap"] = sg.to_dict()
    verdicts.append(verdict("sup_gap", sg.passed, threshold=sg.threshold, sup_one_minus_a=sg.sup_one_minus_a))
    verdicts.append(verdict("family_max_in_window", m_c < fmax < 2 * m_c, value=fmax, m_c=m_c))
    u0 = realize_family(wc, y, h)
    sol = saddle_solve(u0, a, params, tol=sv.tol_grad, max_iter=sv.max_iter, lambda_ref=ss.lambda_c,
                       nonneg=sv.nonneg, m_c=m_c, delta0=rep.constants.get("delta0"), family_upper=fmax,
                       callback=callback)
    check = verify_solution(sol, a, params)
    res["solution"] = sol.summary(params)
    res["recheck"] = check
    win = sol.windows(params)
    spacing = grid.spacing
    beta = None if sol.barycenter is None else float(np.linalg.norm(sol.barycenter))
    verdicts += [
        verdict("tangent_residual", sol.tangent_res <= sv.tol_grad, value=sol.tangent_res, tol=sv.tol_grad),
        verdict("lambda_window", win.get("lambda_in_window"), value=sol.lambda_, window=win.get("lambda_window")),
        verdict("energy_window", win.get("energy_in_window"), value=sol.energy, window=win.get("energy_window")),
        verdict("pohozaev", abs(win["pohozaev_rel"]) <= sv.tol_pohozaev, pohozaev_rel=win["pohozaev_rel"],
                tol=sv.tol_pohozaev),
        verdict("barycenter", beta is not None and beta <= 2 * spacing, norm=beta, bound=2 * spacing),
        verdict("boundary_below_energy", box.boundary_max < sol.energy, boundary_max=box.boundary_max,
                energy=sol.energy),
        verdict("mass", check["mass_rel_err"] <= 1e-8, mass_rel_err=check["mass_rel_err"]),
    ]
    return RunOutput(res, verdicts, {"u": sol.u, "w": wc}, series=sol.history, iterations=sol.iterations)


# -- verify suites ----------------------------------------------------------------


def suite_minimax(cases=MINIMAX_CASES, grid_n: int = 2000):
    rows, verdicts = [], []
    for th, A in cases:
        r = verify_min_inequality(th, A, grid_n)
        rows.append(r.to_dict())
        verdicts.append(verdict(f"min_inequality(theta={th},A={A})", r.passed, min_value=r.min_value, bound=r.bound))
    return {"cases": rows}, verdicts


def suite_h0(cfg: RunConfig):
    base = cfg.params(c=1.0)
    gs = _ground(cfg, PhysParams(base.d, base.s, base.p, 1.0, strict=True))
    a = potential_from_config(cfg.potential)
    c = cfg.phys.c or gs.c0
    ss = rescale_to_mass(gs, c)
    proxy = holder_proxy(a, ss.wc, base.p)
    zero = verify_h0_bound(base.with_mass(c), ss.wc, ss.m_c, 0.0)
    r = verify_h0_bound(base.with_mass(c), ss.wc, ss.m_c, proxy)
    res = {"proxy": proxy, "with_proxy": r.to_dict(), "zero_proxy": zero.to_dict()}
    return res, [
        verdict("h0_factor_below_2", r.passed, factor=r.factor, proxy=proxy),
        verdict("h0_zero_proxy_unit", abs(zero.factor - 1.0) <= 1e-6, factor=zero.factor),
    ]


def splitting_pair(n: int = 2048, L: float = 64.0):
    """Classical d=1, s=1, p=3 pair 1.5 sech^2(x/2) (exponentially localized) and the mu=0.05 well."""
    grid = make_grid(1, n, L)
    params = PhysParams(1, 1.0, 3.0, 1.0, strict=False)
    v = Field.from_function(grid, lambda x: 1.5 / np.cosh(x / 2) ** 2)
    u1 = Field.from_function(grid, lambda x: 0.8 / np.cosh(0.7 * x))
    return grid, params, v, u1, InversePowerWell(0.05, 1.0)


def suite_splitting(separations=SPLITTING_SEPARATIONS):
    grid, params, v, u1, a = splitting_pair()
    r = verify_splitting_additivity(v, u1, a, -1.0, separations, params)
    return r.to_dict(), [
        verdict("splitting_mass_monotone", r.mass_monotone),
        verdict("splitting_energy_monotone", r.energy_monotone),
        verdict("splitting_final_below_tol", r.final_mass_err < 1e-3 and r.final_energy_err < 1e-3,
                mass_err=r.final_mass_err, energy_err=r.final_energy_err),
    ]


def suite_scaling(cfg: RunConfig):
    out = run_scale(cfg)
    return out.results, out.verdicts


def suite_gradient(cfg: RunConfig):
    grid = cfg.make_grid()
    params = PhysParams(cfg.grid.d, cfg.phys.s, cfg.phys.p, 1.0, strict=False)
    a = potential_from_config(cfg.potential)
    r = verify_gradient(grid, params, a, count=20, seed=cfg.seed)
    rl = verify_gradient(grid, params, a, lam=-0.7, count=20, seed=cfg.seed)
    worst = max(r["max_rel_err"], rl["max_rel_err"])
    return {"F": r, "F_lambda": rl}, [verdict("gradient_fd", worst <= 1e-6, max_rel_err=worst)]


SUITES = ("minimax", "h0", "splitting", "scaling", "gradient")


def run_verify(cfg: RunConfig, suites) -> RunOutput:
    res, verdicts = {}, []
    for name in suites:
        if name == "minimax":
            r, v = suite_minimax()
        elif name == "h0":
            r, v = suite_h0(cfg)
        elif name == "splitting":
            r, v = suite_splitting()
        elif name == "scaling":
            r, v = suite_scaling(cfg)
        elif name == "gradient":
            r, v = suite_gradient(cfg)
        else:
            raise ValueError(f"unknown suite {name!r}")
        res[name] = r
        verdicts += v
    return RunOutput(res, verdicts)


def fiber_profile(u: Field, a, params: PhysParams, h_lo: float = -1.5, h_hi: float = 1.5, count: int = 121):
    """(hs, F(h * u)) evaluated through the change of variables."""
    hs = np.linspace(h_lo, h_hi, count)
    return hs, np.array([fiber_energy(u, a, float(h), params) for h in hs])


def boundary_strip_values(wc: Field, a, params: PhysParams, cfg: RunConfig):
    """F(h * w_c(. - R e)) over the side of the linking box: (hs, values[direction, h])."""
    m_c = energy_Finf(wc, params).total
    sv = cfg.solver
    box = choose_box(wc, a, params, m_c, eps=sv.linking_eps * m_c, h_max=sv.h_max,
                     angular_samples=sv.angular_samples, h_samples=sv.h_samples)
    K = gagliardo_energy(wc, params.s)
    hs = box.h_nodes()
    dirs = _sphere_directions(wc.grid.d, box.angular_samples)
    return hs, np.array([[family_value(wc, a, box.R * e, h, params, K) for h in hs] for e in dirs])
