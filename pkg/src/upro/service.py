"""HTTP facade for browser-driven elicitation sessions and solve jobs.

Sessions are persisted as append-only JSONL transcripts keyed by id; a
restarted service rebuilds a session by replaying its answers (the bound
LPs are cheap, so replay beats snapshotting).  Solve jobs run on a small
worker pool and mirror the CLI results payload.
"""

from __future__ import annotations

import json
import os
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from . import benchmarks
from .bundles import (
    ProblemBundle,
    dumps,
    grid_from_dict,
    grid_to_dict,
    results_payload,
    shape_from_dict,
    spec_to_dict,
)
from .dfree import DfreeConfig
from .elicit import ElicitationSession, random_question_grid
from .errors import InfeasibleAmbiguity, UproError
from .grids import GridProduct
from .models import MaximinResult, maximin_epla, maximin_ipla, single_milp


class SessionCreate(BaseModel):
    m1: int
    m2: int
    seed: int | None = None
    grid: dict | None = None
    shape: dict | None = None
    lipschitz: float = 1.0


class AnswerBody(BaseModel):
    sign: int


class SolveBody(BaseModel):
    problem: dict | None = None
    session_id: str | None = None
    scenario_seed: int = 0
    k: int = 50
    formulation: str = "epla"
    budget: int = 300
    restarts: int = 2


class _SessionState:
    def __init__(
        self, sid: str, grid: GridProduct, lipschitz: float, shape: dict | None = None
    ) -> None:
        self.id = sid
        self.lock = threading.Lock()
        self.lipschitz = lipschitz
        self.shape = shape
        self.session = ElicitationSession(
            grid, shape_from_dict(shape) if shape else None
        )

    def question_payload(self) -> dict | None:
        if self.session.done:
            return None
        q = self.session.next_question()
        return {
            "point": list(q.point),
            "index": list(q.index),
            "p": q.p,
            "interval": [q.interval[0], q.interval[1]],
        }

    def state_payload(self) -> dict:
        done = self.session.done
        out: dict[str, Any] = {
            "id": self.id,
            "state": "done" if done else "awaiting-answer",
            "grid": grid_to_dict(self.session.grid),
            "records": self.session.records(),
        }
        if done:
            out["spec"] = spec_to_dict(
                self.session.spec(benchmarks.solve_shape(self.lipschitz))
            )
        else:
            out["question"] = self.question_payload()
        return out


def create_app(data_dir: str | None = None, max_workers: int = 2) -> FastAPI:
    app = FastAPI(title="upro service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=[os.environ.get("UPRO_CONSOLE_ORIGIN", "*")],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    store_dir = Path(data_dir or os.environ.get("UPRO_DATA_DIR", ".upro-sessions"))
    store_dir.mkdir(parents=True, exist_ok=True)
    sessions: dict[str, _SessionState] = {}
    jobs: dict[str, dict] = {}
    pool = ThreadPoolExecutor(max_workers=max_workers)

    # -- persistence: one JSONL file per session, replayed on demand --------

    def _log_path(sid: str) -> Path:
        return store_dir / f"{sid}.jsonl"

    def _append(sid: str, record: dict) -> None:
        with open(_log_path(sid), "a") as fh:
            fh.write(json.dumps(record) + "\n")

    def _restore(sid: str) -> _SessionState | None:
        path = _log_path(sid)
        if not path.exists():
            return None
        lines = [json.loads(ln) for ln in path.read_text().splitlines() if ln.strip()]
        if not lines or lines[0].get("kind") != "created":
            return None
        head = lines[0]
        state = _SessionState(
            sid,
            grid_from_dict(head["grid"]),
            head.get("lipschitz", 1.0),
            head.get("shape"),
        )
        for rec in lines[1:]:
            state.session.next_question()
            state.session.record_answer(int(rec["sign"]))
        return state

    def _get_session(sid: str) -> _SessionState:
        state = sessions.get(sid) or _restore(sid)
        if state is None:
            raise HTTPException(status_code=404, detail="unknown session")
        sessions[sid] = state
        return state

    # -- endpoints ------------------------------------------------------------

    @app.post("/sessions")
    def create_session(body: SessionCreate):
        if body.m1 < 2 or body.m2 < 2:
            raise HTTPException(status_code=400, detail="need m1, m2 >= 2")
        try:
            grid = (
                grid_from_dict(body.grid)
                if body.grid is not None
                else random_question_grid(body.m1, body.m2, body.seed)
            )
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        sid = uuid.uuid4().hex[:12]
        try:
            state = _SessionState(sid, grid, body.lipschitz, body.shape)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        sessions[sid] = state
        _append(
            sid,
            {
                "kind": "created",
                "grid": grid_to_dict(grid),
                "lipschitz": body.lipschitz,
                "shape": body.shape,
            },
        )
        return {"id": sid, "question": state.question_payload()}

    @app.get("/sessions/{sid}")
    def get_session(sid: str):
        return _get_session(sid).state_payload()

    @app.post("/sessions/{sid}/answer")
    def answer(sid: str, body: AnswerBody):
        state = _get_session(sid)
        if body.sign not in (-1, 1):
            raise HTTPException(status_code=400, detail="sign must be +1 or -1")
        with state.lock:
            if state.session.done or state.session.pending is None:
                raise HTTPException(status_code=409, detail="no pending question")
            state.session.record_answer(body.sign)
            _append(sid, {"kind": "answer", "sign": body.sign})
            return state.state_payload()

    @app.post("/solve")
    def submit_solve(body: SolveBody):
        if body.problem is not None:
            try:
                bundle = ProblemBundle.from_dict(body.problem)
            except (ValueError, KeyError) as exc:
                raise HTTPException(status_code=422, detail=f"bad problem: {exc}")
        elif body.session_id is not None:
            state = _get_session(body.session_id)
            if not state.session.done:
                raise HTTPException(status_code=409, detail="session not finished")
            spec = state.session.spec(benchmarks.solve_shape(state.lipschitz))
            bundle = ProblemBundle(
                spec,
                benchmarks.uniform_scenarios(body.scenario_seed, body.k),
                benchmarks.reward_groups_2d(),
            )
        else:
            raise HTTPException(status_code=422, detail="provide a problem or session_id")
        job_id = uuid.uuid4().hex[:12]
        jobs[job_id] = {"status": "running"}
        cfg = DfreeConfig(budget=body.budget, restarts=body.restarts, seed=0)

        def work() -> None:
            try:
                if body.formulation == "epla":
                    res = maximin_epla(bundle.spec, bundle.scenarios, bundle.rewards, cfg)
                elif body.formulation == "ipla":
                    res = maximin_ipla(bundle.spec, bundle.scenarios, bundle.rewards, cfg)
                elif body.formulation == "single-milp":
                    sm = single_milp(bundle.scenarios, bundle.rewards, bundle.spec)
                    res = MaximinResult(sm.value, sm.z, sm.u_worst, None)
                else:
                    jobs[job_id] = {"status": "error", "detail": "unknown formulation"}
                    return
                trace = res.outer.trace if res.outer is not None else None
                jobs[job_id] = {
                    "status": "done",
                    "result": json.loads(
                        dumps(results_payload(res.value, res.z, res.u_worst, trace))
                    ),
                }
            except InfeasibleAmbiguity as exc:
                jobs[job_id] = {"status": "infeasible", "detail": str(exc)}
            except UproError as exc:
                jobs[job_id] = {"status": "error", "detail": str(exc)}

        pool.submit(work)
        return {"id": job_id}

    @app.get("/solve/{job_id}")
    def job_status(job_id: str):
        job = jobs.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail="unknown job")
        if job["status"] == "infeasible":
            raise HTTPException(status_code=422, detail=job.get("detail", "infeasible"))
        return job

    @app.get("/surface/{job_id}")
    def surface(job_id: str):
        job = jobs.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail="unknown job")
        if job["status"] != "done":
            return {"status": job["status"]}
        u = job["result"]["u_worst"]
        return {"status": "done", "surface": u}

    return app


app = create_app()


if __name__ == "__main__":
    import uvicorn

    uvicorn.run(app, host="127.0.0.1", port=int(os.environ.get("UPRO_PORT", "8000")))
