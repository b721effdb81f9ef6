"""Command-line driver for the full experimental pipeline.

Subcommands: gen-scenarios, elicit, solve, bounds, perturb, saa-study,
export-surface.  Table-producing commands write machine-readable CSV next
to a JSON results file and print a short human summary.  Results files
carry no wall-clock numbers; timings go to a sidecar file so a fixed seed
reproduces every artifact byte for byte.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import benchmarks
from .ambiguity import (
    AmbiguitySpec,
    error_bound_inputs,
    feasibility,
    hausdorff_bound,
    slater_margin,
    value_error_bound,
)
from .bundles import (
    ProblemBundle,
    RESULT_HEADER,
    dumps,
    format_z,
    grid_to_dict,
    results_payload,
    transcript_rows,
    utility_from_dict,
    write_csv,
    write_surface_csv,
)
from .dfree import DfreeConfig
from .elicit import run_algorithm
from .errors import UproError
from .models import (
    InconsistencyConfig,
    MaximinResult,
    ScenarioSet,
    inner_inconsistent,
    maximin_constrained,
    maximin_epla,
    maximin_ipla,
    maximin_mixed,
    maximin_true,
    perturb_prefs,
    saa_study,
    single_milp,
)
from .pla import Partition


def _parse_grid_arg(text: str) -> tuple[int, ...]:
    try:
        parts = tuple(int(p) for p in text.lower().split("x"))
    except ValueError:
        raise SystemExit(f"bad --grid {text!r}; expected like 10x10 or 3x3x3")
    if len(parts) not in (2, 3) or any(p < 2 for p in parts):
        raise SystemExit(f"bad --grid {text!r}")
    return parts


def _dfree_config(args) -> DfreeConfig:
    return DfreeConfig(
        budget=args.budget, restarts=args.restarts, seed=args.dfree_seed
    )


def _add_solve_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--budget", type=int, default=400, help="inner evaluations per restart")
    p.add_argument("--restarts", type=int, default=2)
    p.add_argument("--dfree-seed", type=int, default=0)
    p.add_argument("--backend", default=None, help="solver backend name")


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_gen_scenarios(args) -> int:
    if args.k < 1:
        raise SystemExit("--k must be positive")
    sc = benchmarks.uniform_scenarios(args.seed, args.k, args.n)
    payload = {
        "format": "upro-scenarios/1",
        "rng": "numpy-pcg64",
        "seed": args.seed,
        "points": sc.points.tolist(),
        "probs": sc.probs.tolist(),
    }
    Path(args.out).write_text(dumps(payload))
    print(f"wrote {args.k} scenarios (dim {args.n}, seed {args.seed}) to {args.out}")
    return 0


def _load_scenarios(path: str) -> ScenarioSet:
    d = json.loads(Path(path).read_text())
    return ScenarioSet(np.asarray(d["points"]), np.asarray(d["probs"]))


def cmd_elicit(args) -> int:
    out = _out_dir(args)
    if args.grid:
        sizes = _parse_grid_arg(args.grid)
        if len(sizes) != 2:
            raise SystemExit("elicitation grids are 2-D (N1xN2)")
        args.m1, args.m2 = sizes
    if args.m1 is None or args.m2 is None:
        raise SystemExit("provide --m1/--m2 or --grid N1xN2")
    grid = None
    if args.grid_file:
        from .bundles import grid_from_dict

        grid = grid_from_dict(json.loads(Path(args.grid_file).read_text()))
    if args.mode == "sim":
        run = run_algorithm(
            args.m1, args.m2, oracle=benchmarks.exp_utility_2d, seed=args.seed, grid=grid
        )
        records = run.records
        spec = run.spec(benchmarks.solve_shape(args.lipschitz))
    else:
        records, spec = _interactive_elicit(args, grid)
    scenarios = (
        _load_scenarios(args.scenarios)
        if args.scenarios
        else benchmarks.uniform_scenarios(args.seed or 0, args.k)
    )
    bundle = ProblemBundle(
        spec,
        scenarios,
        benchmarks.reward_groups_2d(),
        benchmarks.constraint_groups_2d(),
        {"seed": args.seed, "m1": args.m1, "m2": args.m2},
    )
    bundle.save(out / "problem.json")
    header, rows = transcript_rows(records)
    write_csv(out / "transcript.csv", header, rows)
    (out / "transcript.json").write_text(dumps({"records": records}))
    print(f"asked {len(records)} questions; wrote problem.json and transcript.* to {out}")
    return 0


def _interactive_elicit(args, grid):
    import httpx

    base = args.service_url.rstrip("/")
    body = {"m1": args.m1, "m2": args.m2, "seed": args.seed}
    if grid is not None:
        body["grid"] = grid_to_dict(grid)
    try:
        resp = httpx.post(f"{base}/sessions", json=body, timeout=10.0)
    except httpx.HTTPError as exc:
        raise SystemExit(f"cannot reach the elicitation service at {base}: {exc}")
    resp.raise_for_status()
    sid = resp.json()["id"]
    print(f"session {sid} created; waiting for answers via the console ...")
    while True:
        state = httpx.get(f"{base}/sessions/{sid}", timeout=10.0).json()
        if state["state"] == "done":
            break
        time.sleep(1.0)
    from .bundles import spec_from_dict

    return state["records"], spec_from_dict(state["spec"])


def cmd_solve(args) -> int:
    out = _out_dir(args)
    bundle = ProblemBundle.load(args.problem)
    spec = bundle.spec
    if args.no_curvature:
        from .pla import ShapeSpec

        shape = spec.shape
        spec = AmbiguitySpec(
            spec.grid,
            ShapeSpec(shape.lipschitz, shape.monotone, shape.conservative, (), shape.normalized),
            spec.prefs,
            spec.partition,
        )
    mixed_split = args.scheme == "mixed"
    if args.scheme and not mixed_split:
        spec = AmbiguitySpec(spec.grid, spec.shape, spec.prefs, Partition(args.scheme))
    scenarios = bundle.scenarios
    if args.k:
        scenarios = scenarios.take(args.k)
    cfg = _dfree_config(args)
    t0 = time.time()
    label = args.form
    extra: dict = {"formulation": args.form}
    if args.gamma is not None or args.epsilon is not None:
        icfg = (
            InconsistencyConfig("budget", gamma=args.gamma)
            if args.gamma is not None
            else InconsistencyConfig("mistakes", epsilon=args.epsilon)
        )
        from .dfree import outer_solve

        outer = outer_solve(
            lambda z: inner_inconsistent(
                z, scenarios, bundle.rewards, spec, icfg, args.backend
            ).value,
            bundle.rewards.n_decision,
            cfg,
        )
        final = inner_inconsistent(outer.z, scenarios, bundle.rewards, spec, icfg, args.backend)
        res = MaximinResult(final.value, outer.z, final.u_worst, outer)
        extra["inconsistency"] = {"gamma": args.gamma, "epsilon": args.epsilon}
    elif args.form == "epla" and mixed_split:
        res = maximin_mixed(spec, scenarios, bundle.rewards, cfg, args.backend)
    elif args.form == "epla":
        res = maximin_epla(spec, scenarios, bundle.rewards, cfg, args.backend)
    elif args.form == "ipla":
        res = maximin_ipla(spec, scenarios, bundle.rewards, cfg, args.backend)
    elif args.form == "single-milp":
        sm = single_milp(scenarios, bundle.rewards, spec, args.backend)
        res = MaximinResult(sm.value, sm.z, sm.u_worst, None)
    elif args.form in ("constrained-joint", "constrained-separate"):
        if bundle.constraint_rewards is None:
            raise SystemExit("the problem bundle carries no constraint rewards")
        res = maximin_constrained(
            spec,
            scenarios,
            bundle.rewards,
            bundle.constraint_rewards,
            args.constraint_level,
            "joint" if args.form.endswith("joint") else "separate",
            cfg,
            args.backend,
        )
        extra["constraint_level"] = args.constraint_level
    else:
        raise SystemExit(f"unknown --form {args.form}")
    elapsed = time.time() - t0

    star = maximin_true(scenarios, bundle.rewards, benchmarks.exp_utility_2d, cfg)
    extra["true_value"] = float(star.value)
    extra["error"] = float(star.value - res.value)
    trace = res.outer.trace if res.outer is not None else None
    payload = results_payload(res.value, res.z, res.u_worst, trace, extra)
    (out / "results.json").write_text(dumps(payload))
    write_surface_csv(out / "surface.csv", res.u_worst)
    lotteries = "x".join(str(s) for s in spec.grid.shape)
    write_csv(
        out / "results.csv",
        RESULT_HEADER,
        [[lotteries, format_z(res.z), f"{res.value:.4f}", f"{extra['error']:.4f}", f"{elapsed:.1f}"]],
    )
    (out / "timings.txt").write_text(f"{label}: {elapsed:.2f} s\n")
    print(
        f"{label}: value {res.value:.4f}  error {extra['error']:+.4f}  "
        f"z* {format_z(res.z)}  ({elapsed:.1f}s)"
    )
    return 0


def cmd_bounds(args) -> int:
    bundle = ProblemBundle.load(args.problem)
    spec = bundle.spec
    feas = feasibility(spec, args.backend)
    margin = slater_margin(spec, args.backend) if feas.feasible else None
    inputs = error_bound_inputs(spec, alpha_hat=margin)
    rows = [
        ["beta_1", repr(inputs.beta[0])],
        ["beta_2", repr(inputs.beta[1])],
        ["lipschitz", repr(inputs.lipschitz)],
        ["slater_margin", repr(margin) if margin is not None else ""],
        ["simple_psi", str(inputs.simple_psi).lower()],
        ["hausdorff_kolmogorov", repr(hausdorff_bound(inputs, "kolmogorov"))],
        ["hausdorff_kantorovich", repr(hausdorff_bound(inputs, "kantorovich"))],
        ["value_error", repr(value_error_bound(inputs))],
    ]
    if args.out:
        out = _out_dir(args)
        write_csv(out / "bounds.csv", ["quantity", "value"], rows)
    for name, val in rows:
        print(f"{name:>22}: {val}")
    return 0


def cmd_perturb(args) -> int:
    out = _out_dir(args)
    bundle = ProblemBundle.load(args.problem)
    deltas = [float(d) for d in args.sweep.split(",")] if args.sweep else [args.delta1]
    cfg = _dfree_config(args)
    rows = []
    for d1 in deltas:
        spec_d = perturb_prefs(bundle.spec, d1, args.delta2)
        res = maximin_epla(spec_d, bundle.scenarios, bundle.rewards, cfg, args.backend)
        rows.append([repr(d1), repr(args.delta2), f"{res.value:.6f}", format_z(res.z)])
        print(f"delta1={d1:g}: value {res.value:.4f}")
    write_csv(out / "perturb.csv", ["delta1", "delta2", "value", "z"], rows)
    if len(deltas) == 1:
        ProblemBundle(
            perturb_prefs(bundle.spec, deltas[0], args.delta2),
            bundle.scenarios,
            bundle.rewards,
            bundle.constraint_rewards,
            bundle.options,
        ).save(out / "problem-perturbed.json")
    return 0


def cmd_saa_study(args) -> int:
    out = _out_dir(args)
    bundle = ProblemBundle.load(args.problem)
    sizes = [int(s) for s in args.sizes.split(",")]
    cfg = _dfree_config(args)

    def draw(rng: np.random.Generator, size: int) -> ScenarioSet:
        return ScenarioSet(
            rng.random((size, bundle.rewards.n_decision)), np.full(size, 1.0 / size)
        )

    def solve(sc: ScenarioSet) -> float:
        return maximin_epla(bundle.spec, sc, bundle.rewards, cfg, args.backend).value

    values = saa_study(draw, sizes, args.reps, solve, args.seed)
    rows = [
        [size, rep, repr(float(v))]
        for size in sizes
        for rep, v in enumerate(values[size])
    ]
    write_csv(out / "saa.csv", ["size", "rep", "value"], rows)
    for size in sizes:
        vals = values[size]
        print(
            f"K={size:>5}: median {np.median(vals):.4f}  "
            f"IQR {np.subtract(*np.percentile(vals, [75, 25])):.4f}"
        )
    return 0


def cmd_export_surface(args) -> int:
    payload = json.loads(Path(args.results).read_text())
    u = utility_from_dict(payload["u_worst"])
    write_surface_csv(args.out, u)
    print(f"wrote {u.grid.node_count} gridded values to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="upro", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-scenarios", help="draw uniform scenarios")
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--k", type=int, required=True)
    g.add_argument("--n", type=int, default=8)
    g.add_argument("--out", required=True)
    g.set_defaults(fn=cmd_gen_scenarios)

    e = sub.add_parser("elicit", help="run the questioning pass")
    e.add_argument("--m1", type=int, default=None)
    e.add_argument("--m2", type=int, default=None)
    e.add_argument("--grid", default=None, help="question-grid size, e.g. 10x10")
    e.add_argument("--mode", choices=["sim", "interactive"], default="sim")
    e.add_argument("--seed", type=int, default=None)
    e.add_argument("--grid-file", default=None, help="JSON with explicit coords")
    e.add_argument("--scenarios", default=None, help="scenario file to bundle")
    e.add_argument("--k", type=int, default=1000, help="scenarios when none given")
    e.add_argument("--lipschitz", type=float, default=1.0)
    e.add_argument("--service-url", default="http://127.0.0.1:8000")
    e.add_argument("--out", required=True)
    e.set_defaults(fn=cmd_elicit)

    s = sub.add_parser("solve", help="solve a problem bundle")
    s.add_argument("--problem", required=True)
    s.add_argument(
        "--form",
        default="epla",
        choices=["epla", "ipla", "single-milp", "constrained-joint", "constrained-separate"],
    )
    s.add_argument("--scheme", choices=["type1", "type2", "mixed"], default=None)
    s.add_argument(
        "--no-curvature",
        action="store_true",
        help="drop per-attribute curvature rows (required for --form single-milp)",
    )
    s.add_argument("--k", type=int, default=None, help="truncate to the first K scenarios")
    s.add_argument("--constraint-level", type=float, default=0.1)
    s.add_argument("--gamma", type=float, default=None)
    s.add_argument("--epsilon", type=float, default=None)
    s.add_argument("--out", required=True)
    _add_solve_flags(s)
    s.set_defaults(fn=cmd_solve)

    b = sub.add_parser("bounds", help="mesh-size error-bound diagnostics")
    b.add_argument("--problem", required=True)
    b.add_argument("--out", default=None)
    b.add_argument("--backend", default=None)
    b.set_defaults(fn=cmd_bounds)

    pe = sub.add_parser("perturb", help="shift elicited outcomes and re-solve")
    pe.add_argument("--problem", required=True)
    pe.add_argument("--delta1", type=float, default=0.0)
    pe.add_argument("--delta2", type=float, default=0.0)
    pe.add_argument("--sweep", default=None, help="comma list of delta1 values")
    pe.add_argument("--out", required=True)
    _add_solve_flags(pe)
    pe.set_defaults(fn=cmd_perturb)

    sa = sub.add_parser("saa-study", help="optimal values across resampled scenarios")
    sa.add_argument("--problem", required=True)
    sa.add_argument("--sizes", default="50,100,200,400")
    sa.add_argument("--reps", type=int, default=20)
    sa.add_argument("--seed", type=int, default=0)
    sa.add_argument("--out", required=True)
    _add_solve_flags(sa)
    sa.set_defaults(fn=cmd_saa_study)

    x = sub.add_parser("export-surface", help="gridded CSV of a results file")
    x.add_argument("--results", required=True)
    x.add_argument("--out", required=True)
    x.set_defaults(fn=cmd_export_surface)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except UproError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
