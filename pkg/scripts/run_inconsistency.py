"""Inconsistency tolerance: slack-budget sweep and mistake-count sweep."""

import argparse
from pathlib import Path

import numpy as np

from upro.benchmarks import exp_utility_2d, reward_groups_2d, solve_shape, uniform_scenarios
from upro.dfree import DfreeConfig, outer_solve
from upro.bundles import write_csv
from upro.elicit import run_algorithm
from upro.models import EplaInner, InconsistencyConfig


def sweep(engine_factory, configs, n, cfg):
    """Solve per config, then re-rank every incumbent under every config so
    the reported values share one candidate pool (monotone by construction)."""
    pools = []
    for icfg in configs:
        inner = engine_factory(icfg)
        out = outer_solve(lambda z: inner(z).value, n, cfg)
        print(f"  solved {icfg.mode} {icfg.gamma if icfg.mode == 'budget' else icfg.epsilon:g}"
              f" -> incumbent {out.value:.4f}", flush=True)
        pools.append(out.z)
    values = []
    for icfg in configs:
        inner = engine_factory(icfg)
        values.append(max(inner(z).value for z in pools))
    return values


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--k", type=int, default=100)
    ap.add_argument("--m", type=int, default=5)
    ap.add_argument("--out", default="results/inconsistency.csv")
    args = ap.parse_args()

    run = run_algorithm(args.m, args.m, oracle=exp_utility_2d, seed=101)
    spec = run.spec(solve_shape(1.0))
    sc = uniform_scenarios(42, 1000).take(args.k)
    rw = reward_groups_2d()
    cfg = DfreeConfig(budget=300, restarts=2, seed=0, polish_rounds=2)
    engine = EplaInner(spec, sc, rw)

    gammas = [0.0, 0.25, 0.5, 1.0]
    vals_g = sweep(
        lambda icfg: (lambda z: engine.solve_inconsistent(z, icfg)),
        [InconsistencyConfig("budget", gamma=g) for g in gammas],
        rw.n_decision,
        cfg,
    )
    eps = [0.0, 0.1, 0.2, 0.3]
    vals_e = sweep(
        lambda icfg: (lambda z: engine.solve_inconsistent(z, icfg)),
        [InconsistencyConfig("mistakes", epsilon=e) for e in eps],
        rw.n_decision,
        cfg,
    )
    rows = [["budget", f"{g:g}", f"{v:.6f}"] for g, v in zip(gammas, vals_g)]
    rows += [["mistakes", f"{e:g}", f"{v:.6f}"] for e, v in zip(eps, vals_e)]
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_csv(args.out, ["mode", "parameter", "value"], rows)
    for r in rows:
        print(f"{r[0]:>9} {r[1]:>5}: {r[2]}")


if __name__ == "__main__":
    main()
