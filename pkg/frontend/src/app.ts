/** Console state machine: one session, one in-flight request, answers are
 * final.  The view model is pure so tests can drive it without a DOM. */

import type { ApiClient } from "./api.js";
import type { JobStatus, SessionRecord, SessionState, SolveResultPayload } from "./types.js";
import { toCardModel } from "./types.js";
import {
  renderDone,
  renderError,
  renderProgress,
  renderQuestionCard,
  renderResult,
} from "./views.js";

export type Phase = "idle" | "asking" | "waiting" | "finished" | "solving" | "solved" | "error";

export class ConsoleSession {
  phase: Phase = "idle";
  state: SessionState | null = null;
  result: SolveResultPayload | null = null;
  errorMessage = "";
  private total = 0;

  constructor(private api: ApiClient) {}

  get records(): SessionRecord[] {
    return this.state?.records ?? [];
  }

  async start(m1: number, m2: number, seed?: number, grid?: { coords: number[][] }): Promise<void> {
    this.total = m1 * m2 - 2;
    const created = await this.api.createSession({ m1, m2, seed, grid });
    this.state = await this.api.getSession(created.id);
    this.phase = this.state.state === "done" ? "finished" : "asking";
  }

  /** Irreversible: posts the sign, then shows the next question or done. */
  async answer(sign: number): Promise<void> {
    if (this.phase !== "asking" || this.state === null) {
      throw new Error("no question is awaiting an answer");
    }
    this.phase = "waiting";
    try {
      this.state = await this.api.answer(this.state.id, sign);
      this.phase = this.state.state === "done" ? "finished" : "asking";
    } catch (err) {
      this.phase = "error";
      this.errorMessage = String(err);
    }
  }

  async solve(k = 50): Promise<void> {
    if (this.state === null || this.state.state !== "done") {
      throw new Error("session is not finished");
    }
    this.phase = "solving";
    const job = await this.api.solve({ session_id: this.state.id, k });
    let status: JobStatus = await this.api.jobStatus(job.id);
    while (status.status === "running") {
      await new Promise((resolve) => setTimeout(resolve, 250));
      status = await this.api.jobStatus(job.id);
    }
    if (status.status === "done" && status.result) {
      this.result = status.result;
      this.phase = "solved";
    } else {
      this.phase = "error";
      this.errorMessage = status.detail ?? "solve failed";
    }
  }

  renderMain(): string {
    if (this.phase === "error") return renderError(this.errorMessage);
    if (this.phase === "solved") return renderResult(this.result);
    if (this.phase === "finished" || this.phase === "solving") {
      return renderDone(this.records.length);
    }
    const q = this.state?.question;
    if (!q || !this.state) return `<section data-testid="empty"></section>`;
    const card = toCardModel(q, this.state.grid, this.records.length + 1, this.total);
    return renderQuestionCard(card, this.phase === "waiting");
  }

  renderSidebar(): string {
    return renderProgress(this.records);
  }
}

/** Browser bootstrap; kept separate so the model stays testable headless. */
export function mount(root: HTMLElement, api: ApiClient): ConsoleSession {
  const session = new ConsoleSession(api);
  const main = document.createElement("div");
  const side = document.createElement("aside");
  root.append(main, side);

  const paint = () => {
    main.innerHTML = session.renderMain();
    side.innerHTML = session.renderSidebar();
    for (const btn of main.querySelectorAll<HTMLButtonElement>("button.answer")) {
      btn.addEventListener("click", async () => {
        await session.answer(Number(btn.dataset.sign));
        paint();
      });
    }
    main.querySelector<HTMLButtonElement>("#solve")?.addEventListener("click", async () => {
      paint();
      await session.solve();
      paint();
    });
    main.querySelector<HTMLButtonElement>("#retry")?.addEventListener("click", paint);
  };

  const form = document.createElement("form");
  form.innerHTML = `
    <label>M1 <input name="m1" type="number" value="5" min="2"></label>
    <label>M2 <input name="m2" type="number" value="5" min="2"></label>
    <label>Seed <input name="seed" type="number" value="0"></label>
    <button type="submit">Start session</button>`;
  form.addEventListener("submit", async (ev) => {
    ev.preventDefault();
    const data = new FormData(form);
    await session.start(Number(data.get("m1")), Number(data.get("m2")), Number(data.get("seed")));
    paint();
  });
  root.prepend(form);
  return session;
}
