/** Pure HTML renderers. Every number is interpolated verbatim from the
 * service payloads (the snapshot tests feed sentinel values through and
 * assert untouched passthrough); the only client-side use of a value is
 * presentational sizing (bar widths, cell shading). */

import type {
  QuestionCardModel,
  SessionRecord,
  SolveResultPayload,
  SurfacePayload,
} from "./types.js";

const esc = (s: string) =>
  s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");

const tuple = (xs: number[]) => `(${xs.map((v) => String(v)).join(", ")})`;

export function renderQuestionCard(card: QuestionCardModel, busy = false): string {
  const pct = card.p * 100;
  return `
<section class="question-card" data-testid="question">
  <header>Question ${card.asked} of ${card.total}</header>
  <div class="choices">
    <article class="certain">
      <h3>Certain outcome</h3>
      <p class="outcome">${esc(tuple(card.certain))} with certainty</p>
      <button class="answer" data-sign="1" ${busy ? "disabled" : ""}>Prefer certain</button>
    </article>
    <article class="risky">
      <h3>Risky lottery</h3>
      <p class="outcome">${esc(tuple(card.riskyTop))} with probability ${String(card.p)}</p>
      <p class="outcome">${esc(tuple(card.riskyBottom))} with probability 1 &minus; ${String(card.p)}</p>
      <div class="prob-bar"><span style="width:${pct}%"></span></div>
      <button class="answer" data-sign="-1" ${busy ? "disabled" : ""}>Prefer risky</button>
    </article>
  </div>
  <footer class="interval">Current range at this outcome: [${String(card.interval[0])}, ${String(card.interval[1])}]</footer>
</section>`;
}

export function renderProgress(records: SessionRecord[]): string {
  if (records.length === 0) {
    return `<section class="progress" data-testid="progress"><p>No answers yet.</p></section>`;
  }
  const rows = records
    .map((r, i) => {
      const left = r.interval[0] * 100;
      const width = (r.interval[1] - r.interval[0]) * 100;
      const chosenLeft = (r.sign > 0 ? r.p : r.interval[0]) * 100;
      const chosenWidth =
        (r.sign > 0 ? r.interval[1] - r.p : r.p - r.interval[0]) * 100;
      return `
  <div class="progress-row" data-width="${String(r.interval[1] - r.interval[0])}">
    <span class="label">Q${i + 1} ${esc(tuple(r.point))}</span>
    <div class="track">
      <span class="interval" style="left:${left}%;width:${width}%"></span>
      <span class="chosen ${r.sign > 0 ? "upper" : "lower"}" style="left:${chosenLeft}%;width:${chosenWidth}%"></span>
    </div>
    <span class="range">[${String(r.interval[0])}, ${String(r.interval[1])}] p=${String(r.p)} ${r.sign > 0 ? "certain" : "risky"}</span>
  </div>`;
    })
    .join("");
  return `<section class="progress" data-testid="progress">${rows}\n</section>`;
}

export function renderHeatmap(surface: SurfacePayload): string {
  const [xs, ys] = surface.grid.coords;
  const n1 = xs.length;
  const n2 = ys.length;
  const cells: string[] = [];
  for (let j = n2 - 1; j >= 0; j--) {
    for (let i = 0; i < n1; i++) {
      const v = surface.values[i + n1 * j];
      cells.push(
        `<div class="cell" data-i="${i}" data-j="${j}" title="u(${String(xs[i])}, ${String(ys[j])}) = ${String(v)}" style="--level:${v}">${String(v)}</div>`,
      );
    }
  }
  return `
<section class="heatmap" data-testid="heatmap" style="grid-template-columns:repeat(${n1},1fr)">
  ${cells.join("\n  ")}
</section>`;
}

export function renderAllocation(z: number[]): string {
  const bars = z
    .map(
      (v, i) => `
  <div class="alloc-row">
    <span class="label">project ${i + 1}</span>
    <div class="bar"><span style="width:${v * 100}%"></span></div>
    <span class="value">${String(v)}</span>
  </div>`,
    )
    .join("");
  return `<section class="allocation" data-testid="allocation">${bars}\n</section>`;
}

export function renderResult(result: SolveResultPayload | null): string {
  if (result === null) {
    return `<section class="result" data-testid="result"><p class="placeholder">No solution yet.</p></section>`;
  }
  return `
<section class="result" data-testid="result">
  <h2>Worst-case value: <strong>${String(result.value)}</strong></h2>
  <h3>Worst-case utility surface</h3>
  ${renderHeatmap(result.u_worst)}
  <h3>Allocation</h3>
  ${renderAllocation(result.z)}
</section>`;
}

export function renderError(message: string, retryId = "retry"): string {
  return `<section class="error" data-testid="error"><p>${esc(message)}</p><button id="${retryId}">Retry</button></section>`;
}

export function renderDone(questionCount: number): string {
  return `<section class="done" data-testid="done"><p>All ${questionCount} comparisons answered.</p><button id="solve">Solve</button></section>`;
}
