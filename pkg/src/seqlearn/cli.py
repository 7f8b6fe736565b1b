"""Command-line front end: ``seqlearn {example1,dp-verify,target,mc,sosd}``.

Exit codes: 0 pass, 1 a certificate or audit failed, 2 bad input.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import platform
import sys
from importlib import metadata
from pathlib import Path

import numpy as np

from . import dp, fpt, montecarlo as mc, scenario as scn, strategies as strat, target as tgt
from .discount import NonConvexDiscount, exponential, hyperbolic, truncated_linear
from .measure import PosteriorLottery, info_cost, quadratic
from .timedist import DecisionTimeDistribution, read_csv, sosd_compare, write_csv

EXIT_PASS, EXIT_FAIL, EXIT_INPUT = 0, 1, 2
EXAMPLE_TIMES = (0.05, 0.1, 0.25, 0.5, 1.0)


class InputError(ValueError):
    pass


class Outputs:
    """Collects written files for the manifest."""

    def __init__(self, root: Path):
        self.root = root
        self.files = []

    def path(self, name: str) -> Path:
        self.files.append(name)
        return self.root / name

    def json(self, name: str, obj) -> Path:
        p = self.path(name)
        p.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")
        return p

    def csv(self, name: str, header, rows) -> Path:
        p = self.path(name)
        with p.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for row in rows:
                w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v
                            for v in row])
        return p

    def dist(self, name: str, d: DecisionTimeDistribution) -> Path:
        self.files.append(name)
        return write_csv(d, self.root / name)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _versions() -> dict:
    out = {"python": platform.python_version()}
    for pkg in ("artifact", "numpy", "scipy", "numba", "jsonschema", "matplotlib"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            pass
    return out


def _write_manifest(out: Outputs, args, status: int):
    scen = None
    if getattr(args, "scenario", None):
        p = Path(args.scenario)
        scen = {"path": str(p), "sha256": _sha256(p)}
    inputs = {k: v for k, v in vars(args).items() if k not in ("func", "out")}
    manifest = {"command": args.command, "inputs": inputs, "scenario": scen,
                "versions": _versions(), "exit_code": status,
                "outputs": {name: _sha256(out.root / name) for name in sorted(set(out.files))}}
    (out.root / "manifest.json").write_text(json.dumps(_jsonable(manifest), indent=2,
                                                       sort_keys=True) + "\n")


def _plot(path: Path, draw):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    plt.rcParams["svg.hashsalt"] = "seqlearn"
    fig, ax = plt.subplots(figsize=(6, 4))
    draw(ax)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _load_scenario(args):
    return scn.load(args.scenario) if args.scenario else None


# -- example1 --------------------------------------------------------------------

def canonical_spec() -> strat.StrategySpec:
    target = PosteriorLottery.from_atoms([(0.0, 0.5), (1.0, 0.5)], 0.5)
    return strat.StrategySpec("poisson", 1.0, quadratic(), target)


def example1_values() -> dict:
    """Values and mean decision times of the three strategies at ``c = 1``, rate-1 discounting."""
    spec = canonical_spec()
    rho = exponential(1.0)
    res = {}
    for kind in strat.KINDS:
        o = strat.run(spec.with_kind(kind))
        res[kind] = o
    vg_analytic = strat.gaussian_value_analytic(0.5, rate=1.0,
                                                sigma2=strat.gaussian_sigma2(spec))
    vals = {"V_A": res["pure_accumulation"].value(rho), "V_G": res["gaussian"].value(rho),
            "V_G_analytic": vg_analytic, "V_P": res["poisson"].value(rho),
            "means": {k: o.mean_time() for k, o in res.items()}}
    return vals, res


def cmd_example1(args) -> int:
    out = Outputs(args.out)
    vals, res = example1_values()
    vals["V_G_route_gap"] = abs(vals["V_G"] - vals["V_G_analytic"])
    d = {k: o.time_dist for k, o in res.items()}
    for k, dist in d.items():
        out.dist(f"cdf_{k}.csv", dist)

    t = np.linspace(0.0, 5.0, 501)
    problem = res["gaussian"].extras["problem"]
    lam = res["poisson"].extras["rate"]
    out.csv("density_integrated_cdf.csv",
            ["t", "pdf_gaussian", "pdf_poisson", "icdf_pure_accumulation", "icdf_gaussian",
             "icdf_poisson"],
            zip(t, fpt.density_series(problem, t), lam * np.exp(-lam * t),
                d["pure_accumulation"].integrated_cdf(t), d["gaussian"].integrated_cdf(t),
                d["poisson"].integrated_cdf(t)))

    sections = [fpt.cross_section(problem, s, n_points=401) for s in EXAMPLE_TIMES]
    out.csv("gaussian_cross_sections.csv", ["t", "belief", "density"],
            [(cs.t, x, f) for cs in sections for x, f in zip(cs.x, cs.density)])
    out.csv("gaussian_barrier_masses.csv", ["t", "mass_lo", "mass_hi", "interior"],
            [(cs.t, cs.mass_lo, cs.mass_hi, cs.interior_mass) for cs in sections])
    ts = np.array(EXAMPLE_TIMES)
    out.csv("poisson_beliefs.csv", ["t", "mass_at_prior", "mass_lo", "mass_hi"],
            zip(ts, np.exp(-lam * ts), 0.5 * -np.expm1(-lam * ts), 0.5 * -np.expm1(-lam * ts)))
    ex = res["pure_accumulation"].extras
    out.csv("accumulation_path.csv", ["t", "belief"], zip(ex["path_t"], ex["path_mu"]))

    v1 = sosd_compare(d["pure_accumulation"], d["gaussian"])
    v2 = sosd_compare(d["gaussian"], d["poisson"])
    v3 = sosd_compare(d["pure_accumulation"], d["poisson"])
    chain = all(v.verdict == "d2_mps_of_d1" for v in (v1, v2, v3))
    out.json("sosd.json", {"pure_accumulation_vs_gaussian": v1.to_json(),
                           "gaussian_vs_poisson": v2.to_json(),
                           "pure_accumulation_vs_poisson": v3.to_json(),
                           "chain_holds": chain})

    checks = {
        "V_A": abs(vals["V_A"] - math.exp(-1)) < 1e-9,
        "V_P": abs(vals["V_P"] - 0.5) < 1e-12,
        "V_G": abs(vals["V_G"] - 0.459) < 1e-3 and abs(vals["V_G_analytic"] - 0.459) < 1e-3,
        "V_G_routes_agree": vals["V_G_route_gap"] < 1e-3,
        "means": all(abs(m - 1.0) < 1e-4 for m in vals["means"].values()),
        "sosd_chain": chain,
    }
    vals["checks"] = checks
    out.json("values.json", vals)

    tt = np.linspace(0, 4, 401)
    _plot(out.path("cdfs.svg"), lambda ax: [ax.plot(tt, d[k].cdf_at(tt), label=k) for k in d])
    _plot(out.path("integrated_cdfs.svg"),
          lambda ax: [ax.plot(tt, d[k].integrated_cdf(tt), label=k) for k in d])
    _plot(out.path("cross_sections.svg"),
          lambda ax: [ax.plot(cs.x, cs.density, label=f"t={cs.t}") for cs in sections[1:]])
    return EXIT_PASS if all(checks.values()) else EXIT_FAIL


# -- dp-verify ---------------------------------------------------------------------

def _oracle_grids(c, I_bar, n_periods, budget, n_req=None):
    """Largest common grid size whose enumeration fits the budget."""
    sizes = [n_req] if n_req else list(range(11, 2, -1))
    for n in sizes:
        pg = dp.default_p_grid(c, I_bar, n)
        ig = np.linspace(0.0, I_bar, n)
        if dp.count_policies(c, I_bar, pg, ig, n_periods) <= budget:
            return pg, ig
    if n_req:
        raise dp.BudgetExceeded(f"grid of {n_req} points exceeds the budget of {budget}")
    return dp.default_p_grid(c, I_bar, 2), np.array([0.0, I_bar])


def cmd_dp_verify(args) -> int:
    out = Outputs(args.out)
    sc = _load_scenario(args)
    raw = sc.raw if sc else {}
    c = sc.c if sc else 0.25
    I_bar = sc.I_bar if sc else 1.0
    Vstar = sc.Vstar if sc else 1.0
    T = int(args.horizon) if args.horizon else (sc.T if sc else 6)
    n_I = args.grid or (sc.grids.get("I", 101) if sc else 101)
    I_grid = dp.default_I_grid(I_bar, n_I)
    cert = {"c": c, "I_bar": I_bar, "Vstar": Vstar, "T": T, "notes": []}
    if c >= I_bar:
        cert["notes"].append("c >= I_bar: stopping immediately is feasible; every value "
                             "equals rho_t V* and the stationary policy stops in period 1")

    bi = dp.backward_induction(c, I_bar, Vstar, T, I_grid)
    cf = dp.closed_form_table(c, I_bar, Vstar, T, I_grid)
    diff = bi.max_abs_diff(cf)
    interior = (c + I_grid) < I_bar
    rows = slice(1, T)
    chosen = bi.best_next[rows][:, interior]
    zero_bank = bool(np.all(chosen == 0)) if chosen.size else True
    cert["table"] = {"max_abs_diff": diff, "optimal_next_I_zero": zero_bank,
                     "monotone_in_I": bi.is_monotone(), "pass": diff < 1e-10 and zero_bank}

    rho = sc.discount if (sc and "discount" in raw) else truncated_linear(T)
    r_T = float(rho(float(T)))
    n_periods = T - 1 if r_T <= 0 else T
    p_req = sc.grids.get("p") if sc else None
    pg, ig = _oracle_grids(c, I_bar, n_periods, dp.DEFAULT_BUDGET, p_req)
    oracle = dp.brute_force_oracle(c, I_bar, Vstar, rho, T, pg, ig)
    cert["oracle"] = {**oracle.to_json(), "discount": rho.to_json(),
                      "p_grid": pg, "I_grid": ig,
                      "dominated_by_closed_form": oracle.value <= oracle.closed_form + 1e-9}
    out.csv("oracle_policy.csv", ["t", "p", "I"],
            [(t + 1, p, I) for t, (p, I) in enumerate(zip(oracle.policy.p, oracle.policy.I))])

    reductions = {}
    for name, r in (("exponential_1", exponential(1.0)), ("hyperbolic_1", hyperbolic(1.0))):
        reductions[name] = dp.convex_reduction(r, c, I_bar, Vstar).to_json()
    if sc and "discount" in raw:
        try:
            reductions["scenario"] = dp.convex_reduction(rho, c, I_bar, Vstar).to_json()
        except (NonConvexDiscount, ValueError) as exc:
            reductions["scenario"] = {"passed": False, "error": str(exc)}
    cert["reductions"] = reductions

    # inside a window ending at rho_T = 0 the maximiser must be the stationary policy itself
    shape_ok = oracle.stationary_shape or r_T > 0
    cert["oracle"]["stationary_shape_required"] = r_T <= 0
    ok = (cert["table"]["pass"] and oracle.certified and shape_ok
          and all(r.get("passed", False) for r in reductions.values()))
    cert["verdict"] = "PASS" if ok else "FAIL"
    if not oracle.certified:
        cert["witness"] = oracle.witness
    out.json("certificate.json", cert)
    out.json("value_table.json", bi.to_json())
    return EXIT_PASS if ok else EXIT_FAIL


# -- target ------------------------------------------------------------------------

def cmd_target(args) -> int:
    out = Outputs(args.out)
    sc = _load_scenario(args) or scn.default()
    opts = sc.target_opts
    grid = None
    if args.grid:
        grid = np.linspace(0.0, 1.0, args.grid) if sc.prior.size == 2 else args.grid
    kw = {"max_iter": opts.get("max_iter", tgt.MAX_ITER), "tol": opts.get("tol", tgt.TOL)}
    try:
        sol = tgt.solve_target(sc.F, sc.H, sc.prior, sc.c, discount=sc.discount, grid=grid, **kw)
    except tgt.NonConvergence as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        print(json.dumps(_jsonable(exc.trace)), file=sys.stderr)
        out.json("nonconvergence.json", {"error": str(exc), "trace": exc.trace})
        return EXIT_FAIL
    report = sol.to_json()
    report["info_cost"] = info_cost(sol.lottery, sc.H)
    report["support_bound_ok"] = sol.lottery.support_size <= 2 * sc.prior.size
    checks = {"support_bound": report["support_bound_ok"], "residual": sol.residual < 1e-6}
    if sc.prior.size == 2 and sc.discount.kind == "exponential":
        rate = sc.discount.params["rate"]
        a, b, v = tgt.two_atom_oracle(sc.F, sc.H, float(sc.prior[1]), sc.c, rate)
        report["oracle"] = {"atoms": [a, b], "value": v, "gap": sol.value - v}
        checks["oracle"] = sol.value >= v - 1e-6
    report["checks"] = checks
    out.json("solution.json", report)

    if opts.get("sweep_priors"):
        if sc.prior.size != 2 or sc.discount.kind != "exponential":
            raise InputError("prior sweeps need a binary, exponentially discounted scenario")
        rows = tgt.prior_sweep(sc.F, sc.H, opts["sweep_priors"], sc.c,
                               sc.discount.params["rate"])
        mono = tgt.comparative_static_holds(rows)
        out.csv("prior_sweep.csv", ["prior", "value", "info_cost", "mean_wait", "lambda"],
                [(r["prior"], r["value"], r["info_cost"], r["mean_wait"], r["lambda"])
                 for r in rows])
        out.json("prior_sweep.json", {"rows": rows, "comparative_static_holds": mono})
        checks["comparative_static"] = mono
    if opts.get("rate_sweep"):
        rows = []
        for r in opts["rate_sweep"]:
            s = tgt.solve_target(sc.F, sc.H, sc.prior, sc.c, rho_rate=r, grid=grid, **kw)
            rows.append({"rate": r, "value": s.value, "lambda": s.lam,
                         "info_cost": info_cost(s.lottery, sc.H),
                         "atoms": s.lottery.posteriors.tolist()})
        out.json("rate_sweep.json", {"rows": rows})
    return EXIT_PASS if all(checks.values()) else EXIT_FAIL


# -- mc ------------------------------------------------------------------------------

def run_mc_audits(sc, seed: int, paths: int, dt: float, horizon=None) -> dict:
    m = sc.mc
    checkpoints = m.get("checkpoints", [0.1, 0.5, 1.0])
    snap = mc.audit_times(checkpoints)
    spec = sc.strategy("poisson")
    cfg = mc.SimConfig(n_paths=paths, dt=dt, seed=seed, horizon=horizon, snapshot_times=snap)
    pb = mc.simulate_poisson(spec, cfg)
    rate = sc.c / spec.I_bar
    report = {"poisson": {
        "summary": pb.summary(),
        "expected_mean": spec.I_bar / sc.c,
        "martingale": mc.martingale_residual(pb, checkpoints),
        "capacity": mc.capacity_audit(pb, sc.H, sc.c, checkpoints),
        "ks": mc.ks_test(pb, mc.exponential_cdf(rate)),
        "terminal": mc.terminal_frequencies(pb, sc.target),
    }}
    bundles = {"poisson": pb}
    try:
        problem = strat.gaussian_problem(sc.strategy("gaussian"), horizon=horizon)
    except strat.UnsupportedConfiguration as exc:
        report["gaussian"] = {"skipped": str(exc)}
        problem = None
    if problem is not None:
        gcfg = mc.SimConfig(n_paths=paths, dt=dt, seed=seed, snapshot_times=snap)
        gb = mc.simulate_gaussian(problem, gcfg)
        mean, se = gb.mean_time()
        interior = [t for t in checkpoints if t > 0]
        hit_hi = float(np.mean(gb.terminal[gb.decided][:, 1] >= problem.hi))
        n_dec = int(gb.decided.sum())
        hit_se = math.sqrt(problem.hit_hi_exact() * (1 - problem.hit_hi_exact()) / max(n_dec, 1))
        report["gaussian"] = {
            "summary": gb.summary(),
            "mean_check": {"expected": problem.mean_exact(), "estimate": mean, "stderr": se,
                           "pass": abs(mean - problem.mean_exact()) <= 3 * se},
            "hit_hi": {"expected": problem.hit_hi_exact(), "estimate": hit_hi, "stderr": hit_se,
                       "pass": abs(hit_hi - problem.hit_hi_exact()) <= 3 * hit_se},
            "martingale": mc.martingale_residual(gb, interior),
            "capacity": mc.capacity_audit(gb, sc.H, sc.c, interior),
            "ks": mc.ks_test(gb, mc.series_cdf(problem)),
        }
        bundles["gaussian"] = gb
        dts = m.get("bias_study_dts", [0.01, 0.001])
        n_b = min(paths, m.get("bias_study_paths", 20_000))
        study = []
        for h in dts:
            row = {"dt": h}
            for bridge in (False, True):
                b = mc.simulate_gaussian(problem, mc.SimConfig(n_paths=n_b, dt=h, seed=seed,
                                                               bridge=bridge))
                mm, ss = b.mean_time()
                row["bridge" if bridge else "raw"] = {"mean": mm, "stderr": ss,
                                                      "bias": mm - problem.mean_exact()}
            study.append(row)
        report["gaussian"]["bias_study"] = study
    return report, bundles


def _collect_passes(obj) -> list:
    found = []
    if isinstance(obj, dict):
        for k, v in obj.items():
            if k == "pass":
                found.append(bool(v))
            else:
                found.extend(_collect_passes(v))
    elif isinstance(obj, list):
        for v in obj:
            found.extend(_collect_passes(v))
    return found


def cmd_mc(args) -> int:
    out = Outputs(args.out)
    sc = _load_scenario(args) or scn.default()
    seed = args.seed if args.seed is not None else sc.seed
    paths = args.paths or sc.mc.get("paths", 100_000)
    dt = args.dt or sc.mc.get("dt", 1e-3)
    horizon = args.horizon or sc.mc.get("horizon")
    report, bundles = run_mc_audits(sc, seed, paths, dt, horizon)
    passes = _collect_passes(report)
    report["all_pass"] = all(passes)
    report["config"] = {"seed": seed, "paths": paths, "dt": dt, "horizon": horizon}
    out.json("audit.json", report)
    for k, b in bundles.items():
        x = np.sort(b.decided_times())
        out.csv(f"decision_times_{k}.csv", ["t"], ((v,) for v in x))
    return EXIT_PASS if report["all_pass"] else EXIT_FAIL


# -- sosd ----------------------------------------------------------------------------

def _build_dist(spec, base: Path) -> DecisionTimeDistribution:
    if isinstance(spec, str):
        spec = {"kind": "csv", "path": spec}
    kind = spec["kind"]
    if kind == "deterministic":
        return DecisionTimeDistribution.deterministic(spec["time"])
    if kind == "exponential":
        return DecisionTimeDistribution.exponential(spec["rate"])
    if kind == "geometric":
        return DecisionTimeDistribution.geometric(spec["q"])
    if kind == "gaussian_fpt":
        return fpt.fpt_series(fpt.FptProblem(spec.get("start", 0.5), spec.get("lo", 0.0),
                                             spec.get("hi", 1.0), spec.get("sigma2", 0.25)))
    p = Path(spec["path"])
    return read_csv(p if p.is_absolute() else base / p)


def cmd_sosd(args) -> int:
    out = Outputs(args.out)
    sc = _load_scenario(args)
    if sc and sc.sosd:
        base = Path(args.scenario).parent
        d1, d2 = _build_dist(sc.sosd["d1"], base), _build_dist(sc.sosd["d2"], base)
        v = sosd_compare(d1, d2)
        out.json("sosd.json", {"d1": sc.sosd["d1"], "d2": sc.sosd["d2"], **v.to_json()})
        return EXIT_PASS
    _, res = example1_values()
    d = {k: o.time_dist for k, o in res.items()}
    pairs = [("pure_accumulation", "gaussian"), ("gaussian", "poisson"),
             ("pure_accumulation", "poisson")]
    verdicts = {f"{a}_vs_{b}": sosd_compare(d[a], d[b]).to_json() for a, b in pairs}
    chain = all(v["verdict"] == "d2_mps_of_d1" for v in verdicts.values())
    out.json("sosd.json", {**verdicts, "chain_holds": chain})
    return EXIT_PASS if chain else EXIT_FAIL


# -- entry point -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="seqlearn", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    cmds = {"example1": cmd_example1, "dp-verify": cmd_dp_verify, "target": cmd_target,
            "mc": cmd_mc, "sosd": cmd_sosd}
    for name, fn in cmds.items():
        p = sub.add_parser(name)
        p.add_argument("--scenario", help="scenario JSON (see docs/scenario.md)")
        p.add_argument("--out", default=f"out/{name}", help="output directory")
        p.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
        p.add_argument("--paths", type=int, help="Monte Carlo paths")
        p.add_argument("--dt", type=float, help="time step")
        p.add_argument("--horizon", type=float, help="time horizon (dp-verify: T)")
        p.add_argument("--grid", type=int, help="grid points")
        p.set_defaults(func=fn)
    return ap


def _validate(args):
    if args.seed is not None and not 0 <= args.seed < 2**64:
        raise InputError("--seed must be an unsigned 64-bit integer")
    for name in ("paths", "grid"):
        v = getattr(args, name)
        if v is not None and v < 1:
            raise InputError(f"--{name} must be positive")
    for name in ("dt", "horizon"):
        v = getattr(args, name)
        if v is not None and not v > 0:
            raise InputError(f"--{name} must be positive")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _validate(args)
        args.out = Path(args.out)
        try:
            args.out.mkdir(parents=True, exist_ok=True)
            probe = args.out / ".write_probe"
            probe.write_text("")
            probe.unlink()
        except OSError as exc:
            raise InputError(f"output directory not writable: {exc}") from None
        status = args.func(args)
    except (InputError, scn.ScenarioError, dp.BudgetExceeded, strat.UnsupportedConfiguration,
            NonConvexDiscount) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    outputs = Outputs(args.out)
    outputs.files = sorted(p.name for p in args.out.iterdir()
                           if p.is_file() and p.name != "manifest.json")
    _write_manifest(outputs, args, status)
    print(f"{args.command}: {'PASS' if status == EXIT_PASS else 'FAIL'} -> {args.out}")
    return status


if __name__ == "__main__":
    sys.exit(main())
