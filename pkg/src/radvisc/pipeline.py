"""Per-level evaluation and the eps-sweep built on solver and harness."""
from __future__ import annotations

import dataclasses
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import harness as H
from . import testfunctions as tf
from .config import RunConfig
from .errors import RadviscError
from .model import GasLaw, RadialGrid
from .scheduler import Exponents, schedule
from .solver import SolverConfig, Trajectory, boundary_traces, constant_state, mass_budget, prepare_initial_data, run


def initial_profiles(cfg: RunConfig, rho_bar):
    """Raw ``(rho0, m0)`` callables for the configured profile."""
    pp = cfg.problem.profile_params
    amp = float(pp.get("amplitude", 1.0))
    width = float(pp.get("width", 1.0))
    name = cfg.problem.profile
    if name == "constant":
        return (lambda r: np.full(np.shape(r), rho_bar)), (lambda r: np.zeros(np.shape(r)))
    bump = lambda r: rho_bar + amp * np.exp(-((np.asarray(r) / width) ** 2))  # noqa: E731
    if name == "gaussian_bump":
        return bump, (lambda r: np.zeros(np.shape(r)))
    vel = float(pp.get("velocity", 0.5))
    return bump, (lambda r: vel * np.asarray(r) * np.exp(-((np.asarray(r) / width) ** 2)))


def level_setup(cfg: RunConfig, eps):
    """Schedule, gas law and grid for one viscosity level."""
    ex = Exponents(**cfg.schedule.exponents)
    params = schedule(eps, cfg.problem.n_dim, cfg.problem.gamma, cfg.schedule.m0_budget, ex)
    law = GasLaw(cfg.problem.gamma, params.delta)
    grid = RadialGrid.build(params.a, params.b, cfg.solver.h, cfg.problem.n_dim)
    return params, law, grid


def solver_config(cfg: RunConfig):
    s = cfg.solver
    return SolverConfig(
        T_final=cfg.problem.T,
        cfl=s.cfl,
        scheme=s.scheme,
        n_snapshots=s.n_snapshots,
        density_floor=s.density_floor,
        dissipation_rule=s.dissipation_rule,
    )


@dataclass
class TestSet:
    """Test functions shared by every level of a sweep."""

    __test__ = False

    omega: tf.Profile
    continuity: list
    momentum: list
    multid: tf.MultiDTestFunction


def build_tests(cfg: RunConfig, seed=0):
    h = cfg.harness
    T = cfg.problem.T
    psi = tf.cutoff(h.time_window[0] * T, h.time_window[1] * T)
    chi = tf.cutoff(*h.test_support)
    rng = np.random.default_rng(seed)
    rand = tf.random_tensor_family(rng, h.n_random_tests, h.test_support[1], T)
    cont = [tf.tensor(psi, chi, "chi_psi")] + rand
    mom = [tf.origin_stress(psi, chi, "r_chi_psi")]
    for k in range(h.n_random_tests):
        tc, tw = rng.uniform(0.3, 0.5) * T, rng.uniform(0.2, 0.3) * T
        rs = rng.uniform(0.8, 1.0) * h.test_support[1]
        mom.append(tf.origin_stress(tf.bump(tc, tw), tf.cutoff(0.5 * rs, rs), f"r_random_{k}"))
    md = tf.coordinate_weighted_multid(0, chi, psi, cfg.problem.n_dim)
    return TestSet(tf.omega_cutoff(*h.omega), cont, mom, md)


def evaluate_trajectory(traj: Trajectory, cfg: RunConfig, tests: TestSet, control: Trajectory | None = None):
    """Every harness quantity on one trajectory, as a flat ``name -> float`` mapping."""
    h = cfg.harness
    p = traj.params
    q = {}
    er = H.energy_report(traj, h.energy_tol)
    q.update(E0=er.E0, sup_energy=er.sup_energy, dissipation=er.dissipation, energy_max_total=er.max_total)
    q["energy_pass"] = float(er.passed)
    hi = H.higher_integrability(traj, tests.omega)
    q.update(higher_integrability=hi.total, hi_kinetic=hi.kinetic, hi_pressure=hi.pressure)
    for l in range(traj.grid.n_dim):
        q[f"tail_sup_l{l}"] = H.tail_density_sup(traj, l, p.a)
        q[f"tail_shape_l{l}"] = H.tail_bound_shape(traj, l, p.a)
    q["rho_cubed"] = H.rho_cubed_integral(traj, p.a)
    q["rho_cubed_scaled"] = q["rho_cubed"] / H.rho_cubed_scale(p)
    for D in h.deltas:
        v1, v2 = H.viscous_derivative_integrals(traj, D, tests.omega)
        s1, s2 = H.lemma_shapes(p.eps, p.a, traj.law.gamma, D)
        q[f"lemma_rho_r_D{D}"] = v1
        q[f"lemma_rho_r_over_rho_D{D}"] = v2
        q[f"lemma_rho_r_ratio_D{D}"] = v1 / s1
        q[f"lemma_rho_r_over_rho_ratio_D{D}"] = v2 / s2
        for name in ("quadratic", "log"):
            ir = H.continuity_identity_residual(traj, H.truncation(name, D), tests.omega)
            q[f"identity_{name}_D{D}"] = ir.residual
    for phi in tests.continuity:
        w = H.weak_residual_continuity(traj, phi)
        q[f"cont_euler_{phi.name}"] = w.euler
        q[f"cont_viscous_{phi.name}"] = w.viscous
        q[f"cont_consistency_{phi.name}"] = w.consistency
    for phi in tests.momentum:
        w = H.weak_residual_momentum(traj, phi, tf.vanish_near_origin(phi, p.a))
        q[f"mom_euler_{phi.name}"] = w.euler
        q[f"mom_viscous_{phi.name}"] = w.viscous
        q[f"mom_delta_{phi.name}"] = w.delta_term
        q[f"mom_consistency_{phi.name}"] = w.consistency
    if control is not None:
        for phi in tests.continuity:
            q[f"control_cont_euler_{phi.name}"] = H.weak_residual_continuity(control, phi).euler
        for phi in tests.momentum:
            q[f"control_mom_euler_{phi.name}"] = H.weak_residual_momentum(
                control, phi, tf.vanish_near_origin(phi, p.a)
            ).euler
    eq = H.multiD_equivalence_check(traj, tests.multid, 0, traj.grid.n_dim, h.sphere_order)
    q["equivalence_discrepancy"] = eq.discrepancy
    zeta = tf.radial_test_from_multiD(tests.multid, 0, traj.grid.n_dim, h.sphere_order)
    z0, zr0 = zeta.origin_trace(traj.times)
    q["zeta_origin_max"] = float(np.max(np.abs(z0)))
    q["zeta_r_origin_max"] = float(np.max(np.abs(zr0)))
    bt = boundary_traces(traj)
    q["boundary_trace_max"] = float(max(np.max(np.abs(bt[k])) for k in ("rho_r_a", "m_a", "rho_b", "m_b")))
    q["mass_budget"] = mass_budget(traj)
    q["min_density"] = float(traj.rho.min())
    return q


@dataclass
class LevelResult:
    eps: float
    status: str
    quantities: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    steps: int = 0
    seconds: float = 0.0
    error: str = ""
    trajectory: Trajectory | None = None


def evaluate_level(cfg: RunConfig, eps, seed=0, keep_trajectory=False) -> LevelResult:
    """Schedule, solve, run the constant-state control and evaluate the harness for one ``eps``.

    Failures are captured in the result rather than raised.
    """
    t0 = time.perf_counter()
    try:
        params, law, grid = level_setup(cfg, eps)
    except RadviscError as err:
        return LevelResult(eps, "error", error=f"{type(err).__name__}: {err}")
    info = {"nodes": int(grid.size), "h": cfg.solver.h, "a": grid.a, "b": grid.b}
    try:
        rho0, m0 = initial_profiles(cfg, params.rho_bar)
        init = prepare_initial_data(rho0, m0, params, grid, law)
        scfg = solver_config(cfg)
        traj = run(init, scfg, params, law, grid)
        control = run(constant_state(params, grid), scfg, params, law, grid)
        tests = build_tests(cfg, seed)
        q = evaluate_trajectory(traj, cfg, tests, control)
    except RadviscError as err:
        return LevelResult(
            eps, "error", params=params.to_dict(), grid=info, error=f"{type(err).__name__}: {err}",
            seconds=time.perf_counter() - t0,
        )
    return LevelResult(
        eps,
        "ok",
        q,
        params.to_dict(),
        info,
        traj.steps,
        time.perf_counter() - t0,
        trajectory=traj if keep_trajectory else None,
    )


def _worker(args):
    cfg_dict, eps, seed = args
    from .config import from_dict

    return evaluate_level(from_dict(cfg_dict), eps, seed)


def run_levels(cfg: RunConfig, seed=0, jobs=1, keep_trajectory=False):
    eps_list = list(cfg.schedule.eps)
    if jobs <= 1 or len(eps_list) == 1:
        return [evaluate_level(cfg, e, seed, keep_trajectory) for e in eps_list]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_worker, [(cfg.to_dict(), e, seed) for e in eps_list]))


# criteria -----------------------------------------------------------------


def _prefixed(q, prefix):
    return sorted(k[len(prefix):] for k in q if k.startswith(prefix))


def assess(levels, cfg: RunConfig):
    """Verdicts on the per-level quantities.

    Trend criteria (growth, decay, shape spread) need at least two
    successful levels and are omitted otherwise.
    """
    ok = [lv for lv in levels if lv.status == "ok"]
    out = []
    if not ok:
        return out
    eps = np.array([lv.eps for lv in ok])
    val = lambda k: np.array([lv.quantities[k] for lv in ok])  # noqa: E731

    excess = val("energy_max_total") - val("E0")
    out.append(H.CriterionResult("energy_estimate", bool(np.all(val("energy_pass") == 1.0)),
                                 "max_t(E+D) - E0 per level: " + ", ".join(f"{x:.3g}" for x in excess),
                                 float(excess.max())))

    trends = len(ok) > 1
    if trends:
        hi = val("higher_integrability")
        growth = H.loglog_slope(1.0 / eps, hi)
        spr = H.spread(hi)
        out.append(H.CriterionResult("higher_integrability", bool(spr < 10.0 and growth <= 0.1),
                                     f"max/min={spr:.3g}, growth exponent vs 1/eps={growth:.3g}", growth))

        names = _prefixed(ok[0].quantities, "mom_viscous_")
        slopes = {n: H.loglog_slope(eps, np.abs(val("mom_viscous_" + n))) for n in names}
        out.append(H.CriterionResult("viscous_momentum_decay", all(s > 0.2 for s in slopes.values()),
                                     "decay exponents vs eps: " + ", ".join(f"{k}={v:.3g}" for k, v in slopes.items()),
                                     min(slopes.values(), default=float("nan"))))

    fin = ok[int(np.argmin(eps))].quantities
    ratios = []
    for kind in ("cont", "mom"):
        for n in _prefixed(fin, f"{kind}_euler_"):
            ctrl = abs(fin.get(f"control_{kind}_euler_{n}", float("nan")))
            ratios.append((f"{kind}:{n}", abs(fin[f"{kind}_euler_{n}"]), ctrl))
    euler_ok = all(v <= 10.0 * c for _, v, c in ratios)
    out.append(H.CriterionResult("euler_residual_vs_control", euler_ok,
                                 "; ".join(f"{n}: |res|={v:.3g} ctrl={c:.3g}" for n, v, c in ratios)))

    if trends:
        lem = []
        for D in cfg.harness.deltas:
            for key in (f"lemma_rho_r_ratio_D{D}", f"lemma_rho_r_over_rho_ratio_D{D}"):
                lem.append((key, H.spread(val(key))))
        out.append(H.CriterionResult("lemma_shapes", all(s < 10.0 for _, s in lem),
                                     ", ".join(f"{k}: max/min={s:.3g}" for k, s in lem),
                                     max(s for _, s in lem)))

    disc = val("equivalence_discrepancy")
    z0 = val("zeta_origin_max")
    out.append(H.CriterionResult("multid_equivalence",
                                 bool(np.all(disc < cfg.harness.equivalence_tol) and np.all(z0 <= 1e-10)),
                                 f"max discrepancy={disc.max():.3g}, max |zeta(t,0)|={z0.max():.3g}"))
    return out


def sweep_report(cfg: RunConfig, seed=0, jobs=1, keep_trajectory=False):
    """Run every level, collect rows and fitted trends, and attach verdicts.

    A failed level is recorded in ``failures`` and the rest continue.
    """
    levels = run_levels(cfg, seed, jobs, keep_trajectory)
    rep = H.EstimateReport(eps=[lv.eps for lv in levels])
    for lv in levels:
        if lv.status != "ok":
            rep.failures[lv.eps] = lv.error
            continue
        for k, v in lv.quantities.items():
            rep.rows.append({"eps": lv.eps, "quantity": k, "value": v, "nodes": lv.grid["nodes"],
                             "a": lv.params["a"], "b": lv.params["b"], "delta": lv.params["delta"],
                             "rho_bar": lv.params["rho_bar"]})
    ok = [lv for lv in levels if lv.status == "ok"]
    if len(ok) > 1:
        e = np.array([lv.eps for lv in ok])
        for k in ok[0].quantities:
            rep.slopes[k] = H.loglog_slope(e, np.abs([lv.quantities[k] for lv in ok]))
    rep.criteria = assess(levels, cfg)
    return rep, levels


def refine(cfg: RunConfig, factor=2):
    """``cfg`` with ``h`` and the CFL number divided by ``factor`` and ``factor`` times denser snapshots."""
    s = cfg.solver
    solver = dataclasses.replace(
        s, h=s.h / factor, cfl=s.cfl / factor, n_snapshots=factor * (s.n_snapshots - 1) + 1
    )
    return dataclasses.replace(cfg, solver=solver)


def identity_refinement(cfg: RunConfig, eps, factor=2):
    """Truncated-entropy identity residuals on ``cfg`` and on its ``factor``-refined copy.

    Returns ``{(name, Delta): (coarse, fine)}`` with absolute residuals.
    """
    omega = tf.omega_cutoff(*cfg.harness.omega)
    out = {}
    trajs = []
    for c in (cfg, refine(cfg, factor)):
        params, law, grid = level_setup(c, eps)
        rho0, m0 = initial_profiles(c, params.rho_bar)
        init = prepare_initial_data(rho0, m0, params, grid, law)
        trajs.append(run(init, solver_config(c), params, law, grid))
    for D in cfg.harness.deltas:
        for name in ("quadratic", "log"):
            tr = H.truncation(name, D)
            out[(name, D)] = tuple(abs(H.continuity_identity_residual(t, tr, omega).residual) for t in trajs)
    return out
