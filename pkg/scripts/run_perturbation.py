"""Stability: elicited-outcome shifts and scenario resampling."""

import argparse
from pathlib import Path

import numpy as np

from upro.benchmarks import exp_utility_2d, reward_groups_2d, solve_shape, uniform_scenarios
from upro.bundles import write_csv
from upro.dfree import DfreeConfig
from upro.elicit import run_algorithm
from upro.models import ScenarioSet, maximin_epla, perturb_prefs, saa_study


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--k", type=int, default=200)
    ap.add_argument("--m", type=int, default=5)
    ap.add_argument("--deltas", default="0,0.01,0.02,0.05,0.1")
    ap.add_argument("--saa-sizes", default="50,100,200,400")
    ap.add_argument("--saa-reps", type=int, default=20)
    ap.add_argument("--out-dir", default="results")
    args = ap.parse_args()

    run = run_algorithm(args.m, args.m, oracle=exp_utility_2d, seed=101)
    spec = run.spec(solve_shape(1.0))
    sc = uniform_scenarios(42, 1000).take(args.k)
    rw = reward_groups_2d()
    cfg = DfreeConfig(budget=300, restarts=2, seed=0, polish_rounds=2)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    rows = []
    for d1 in (float(d) for d in args.deltas.split(",")):
        res = maximin_epla(perturb_prefs(spec, d1, 0.0), sc, rw, cfg)
        rows.append([f"{d1:g}", f"{res.value:.6f}"])
        print(f"delta1={d1:g}: {res.value:.4f}")
    write_csv(out_dir / "perturbation.csv", ["delta1", "value"], rows)

    def draw(rng: np.random.Generator, size: int) -> ScenarioSet:
        return ScenarioSet(rng.random((size, 8)), np.full(size, 1.0 / size))

    values = saa_study(
        draw,
        [int(s) for s in args.saa_sizes.split(",")],
        args.saa_reps,
        lambda s: maximin_epla(spec, s, rw, cfg).value,
        seed=1,
    )
    rows = [[k, i, f"{v:.6f}"] for k in values for i, v in enumerate(values[k])]
    write_csv(out_dir / "saa.csv", ["size", "rep", "value"], rows)
    for k, vals in values.items():
        q1, q3 = np.percentile(vals, [25, 75])
        print(f"K={k:>4}: median {np.median(vals):.4f}  IQR {q3-q1:.4f}")


if __name__ == "__main__":
    main()
