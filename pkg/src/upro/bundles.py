"""Problem-bundle and results files (JSON) plus the CSV table writers.

All numeric payloads are JSON with full-precision floats (Python's repr,
>= 15 significant digits).  Results files carry no timings so a fixed seed
reproduces them byte for byte; wall-clock numbers go to a sidecar.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .ambiguity import AmbiguitySpec
from .grids import GridProduct
from .lsint import (
    DiscreteLottery,
    GeneralPsi,
    LotteryPair,
    PreferenceConstraint,
    SimplePsi,
)
from .models import LinearGroups, ScenarioSet
from .pla import Partition, PlaUtility, ShapeSpec, mixed_partition

PROBLEM_FORMAT = "upro-problem/1"
RESULTS_FORMAT = "upro-results/1"
RNG_NAME = "numpy-pcg64"


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"not serializable: {type(obj)!r}")


def dumps(payload: dict) -> str:
    return json.dumps(payload, indent=1, default=_jsonable, sort_keys=True)


def grid_to_dict(grid: GridProduct) -> dict:
    return {"coords": [c.tolist() for c in grid.coords]}


def grid_from_dict(d: dict) -> GridProduct:
    return GridProduct(tuple(np.asarray(c, dtype=float) for c in d["coords"]))


def shape_to_dict(shape: ShapeSpec) -> dict:
    return {
        "lipschitz": shape.lipschitz,
        "monotone": shape.monotone,
        "conservative": shape.conservative,
        "curvature": list(shape.curvature),
        "normalized": shape.normalized,
    }


def shape_from_dict(d: dict) -> ShapeSpec:
    return ShapeSpec(
        lipschitz=d.get("lipschitz"),
        monotone=bool(d.get("monotone", True)),
        conservative=bool(d.get("conservative", True)),
        curvature=tuple(d.get("curvature", ())),
        normalized=bool(d.get("normalized", True)),
    )


def partition_to_dict(p: Partition) -> dict:
    out: dict[str, Any] = {"kind": p.kind}
    if p.kind == "mixed":
        out["type1_cells"] = p.type1_cells.astype(int).tolist()
    return out


def partition_from_dict(d: dict) -> Partition:
    if d["kind"] == "mixed":
        return mixed_partition(np.asarray(d["type1_cells"], dtype=bool))
    return Partition(d["kind"])


def _lottery_to_dict(lot: DiscreteLottery) -> dict:
    return {"points": lot.points.tolist(), "probs": lot.probs.tolist()}


def _lottery_from_dict(d: dict) -> DiscreteLottery:
    return DiscreteLottery(np.asarray(d["points"]), np.asarray(d["probs"]))


def pref_to_dict(pref: PreferenceConstraint) -> dict:
    form = pref.form
    if isinstance(form, LotteryPair):
        return {
            "kind": "lottery_pair",
            "preferred": _lottery_to_dict(form.preferred),
            "other": _lottery_to_dict(form.other),
            "rhs": pref.rhs,
        }
    if isinstance(form, SimplePsi):
        return {
            "kind": "simple_psi",
            "cell_constants": form.cell_constants.tolist(),
            "rhs": pref.rhs,
        }
    if isinstance(form, GeneralPsi):
        raise ValueError("evaluator-based preferences are not serializable")
    raise TypeError(type(form).__name__)


def pref_from_dict(d: dict) -> PreferenceConstraint:
    if d["kind"] == "lottery_pair":
        return PreferenceConstraint(
            LotteryPair(_lottery_from_dict(d["preferred"]), _lottery_from_dict(d["other"])),
            float(d.get("rhs", 0.0)),
        )
    if d["kind"] == "simple_psi":
        return PreferenceConstraint(
            SimplePsi(np.asarray(d["cell_constants"], dtype=float)),
            float(d.get("rhs", 0.0)),
        )
    raise ValueError(f"unknown preference kind {d['kind']!r}")


def spec_to_dict(spec: AmbiguitySpec) -> dict:
    return {
        "grid": grid_to_dict(spec.grid),
        "shape": shape_to_dict(spec.shape),
        "partition": partition_to_dict(spec.partition),
        "preferences": [pref_to_dict(p) for p in spec.prefs],
    }


def spec_from_dict(d: dict) -> AmbiguitySpec:
    return AmbiguitySpec(
        grid_from_dict(d["grid"]),
        shape_from_dict(d["shape"]),
        tuple(pref_from_dict(p) for p in d.get("preferences", ())),
        partition_from_dict(d.get("partition", {"kind": "type1"})),
    )


def scenarios_to_dict(sc: ScenarioSet) -> dict:
    return {"points": sc.points.tolist(), "probs": sc.probs.tolist()}


def scenarios_from_dict(d: dict) -> ScenarioSet:
    return ScenarioSet(np.asarray(d["points"]), np.asarray(d["probs"]))


def rewards_to_dict(rw: LinearGroups) -> dict:
    return {"groups": [list(g) for g in rw.groups], "n_decision": rw.n_decision}


def rewards_from_dict(d: dict) -> LinearGroups:
    return LinearGroups(
        tuple(tuple(int(i) for i in g) for g in d["groups"]), int(d["n_decision"])
    )


@dataclass
class ProblemBundle:
    spec: AmbiguitySpec
    scenarios: ScenarioSet
    rewards: LinearGroups
    constraint_rewards: LinearGroups | None = None
    options: dict | None = None

    def to_dict(self) -> dict:
        out = {
            "format": PROBLEM_FORMAT,
            "rng": RNG_NAME,
            **spec_to_dict(self.spec),
            "scenarios": scenarios_to_dict(self.scenarios),
            "rewards": rewards_to_dict(self.rewards),
            "options": self.options or {},
        }
        if self.constraint_rewards is not None:
            out["constraint_rewards"] = rewards_to_dict(self.constraint_rewards)
        return out

    @staticmethod
    def from_dict(d: dict) -> "ProblemBundle":
        if d.get("format") != PROBLEM_FORMAT:
            raise ValueError(f"not a problem bundle: {d.get('format')!r}")
        return ProblemBundle(
            spec_from_dict(d),
            scenarios_from_dict(d["scenarios"]),
            rewards_from_dict(d["rewards"]),
            rewards_from_dict(d["constraint_rewards"])
            if "constraint_rewards" in d
            else None,
            d.get("options") or {},
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(dumps(self.to_dict()))

    @staticmethod
    def load(path: str | Path) -> "ProblemBundle":
        return ProblemBundle.from_dict(json.loads(Path(path).read_text()))


def utility_to_dict(u: PlaUtility) -> dict:
    return {
        "grid": grid_to_dict(u.grid),
        "partition": partition_to_dict(u.partition),
        "values": u.values.tolist(),
    }


def utility_from_dict(d: dict) -> PlaUtility:
    return PlaUtility(
        grid_from_dict(d["grid"]),
        np.asarray(d["values"], dtype=float),
        partition_from_dict(d["partition"]),
    )


def results_payload(
    value: float,
    z: np.ndarray,
    u_worst: PlaUtility,
    trace: list | None = None,
    extra: dict | None = None,
    trace_cap: int = 2000,
) -> dict:
    tr = []
    if trace:
        step = max(1, len(trace) // trace_cap)
        tr = [
            {"z": np.asarray(zz).tolist(), "value": float(vv)}
            for zz, vv in trace[::step]
        ]
    out = {
        "format": RESULTS_FORMAT,
        "value": float(value),
        "z": np.asarray(z).tolist(),
        "u_worst": utility_to_dict(u_worst),
        "trace": tr,
    }
    out.update(extra or {})
    return out


# ---------------------------------------------------------------------------
# CSV tables
# ---------------------------------------------------------------------------


def write_csv(path: str | Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def format_z(z: np.ndarray, digits: int = 4) -> str:
    return "[" + ",".join(f"{v:.{digits}g}" for v in z) + "]"


RESULT_HEADER = ["Lotteries", "Optimal solutions", "Optimal values", "Error", "CPU time (s)"]


def surface_rows(u: PlaUtility) -> tuple[list[str], list[list]]:
    """Gridded table (i, j, x_i, y_j, u_ij) of a bi-attribute utility."""
    if u.grid.dims != 2:
        raise ValueError("surface export is 2-D")
    table = u.as_table()
    xs, ys = u.grid.coords
    rows = []
    for i in range(u.grid.shape[0]):
        for j in range(u.grid.shape[1]):
            rows.append([i, j, repr(float(xs[i])), repr(float(ys[j])), repr(float(table[i, j]))])
    return ["i", "j", "x_i", "y_j", "u_ij"], rows


def write_surface_csv(path: str | Path, u: PlaUtility) -> None:
    header, rows = surface_rows(u)
    write_csv(path, header, rows)


def transcript_rows(records: list[dict]) -> tuple[list[str], list[list]]:
    header = ["l", "x", "y", "I1", "I2", "p", "sign"]
    rows = []
    for l, r in enumerate(records, start=1):
        rows.append(
            [
                l,
                repr(float(r["point"][0])),
                repr(float(r["point"][1])),
                repr(float(r["interval"][0])),
                repr(float(r["interval"][1])),
                repr(float(r["p"])),
                r["sign"],
            ]
        )
    return header, rows


def csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()
