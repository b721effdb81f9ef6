"""Tri-attribute solves across grid sizes (implicit-path inner problems)."""

import argparse
import time
from pathlib import Path

from upro.benchmarks import exp_utility_3d, reward_groups_3d, uniform_scenarios
from upro.bundles import format_z, write_csv
from upro.dfree import DfreeConfig
from upro.elicit import ElicitationSession, simulate_dm
from upro.grids import unit_grid
from upro.models import maximin_epla, maximin_true
from upro.pla import ShapeSpec


def elicit_3d(grid, oracle):
    shape = ShapeSpec(lipschitz=None, monotone=True, conservative=False, curvature=(), normalized=True)
    session = ElicitationSession(grid, shape)
    while not session.done:
        session.record_answer(simulate_dm(oracle, session.next_question()))
    return session


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--k", type=int, default=20)
    ap.add_argument("--sizes", default="3,4")
    ap.add_argument("--out", default="results/tri.csv")
    args = ap.parse_args()

    sc = uniform_scenarios(42, 1000).take(args.k)
    rw = reward_groups_3d()
    cfg = DfreeConfig(budget=300, restarts=2, seed=0, polish_rounds=2)
    star = maximin_true(sc, rw, exp_utility_3d, cfg)
    print(f"true optimum {star.value:.4f}")

    solve_shape3 = ShapeSpec(lipschitz=1.0, monotone=True, conservative=False, curvature=())
    rows = []
    for n in (int(s) for s in args.sizes.split(",")):
        t0 = time.time()
        session = elicit_3d(unit_grid([n, n, n]), exp_utility_3d)
        spec = session.spec(solve_shape3)
        res = maximin_epla(spec, sc, rw, cfg)
        elapsed = time.time() - t0
        rows.append([f"{n}x{n}x{n}", format_z(res.z), f"{res.value:.4f}",
                     f"{star.value - res.value:.4f}", f"{elapsed:.1f}"])
        print(f"{n}^3: value {res.value:.4f} error {star.value-res.value:+.4f} ({elapsed:.1f}s)")
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_csv(args.out, ["Lotteries", "Optimal solutions", "Optimal values", "Error", "CPU time (s)"], rows)


if __name__ == "__main__":
    main()
