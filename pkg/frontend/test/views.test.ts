/** Thin-client checks: the renderers pass payload numbers through
 * verbatim (sentinel round-trip), never computing new figures, and the
 * interactive states disable/enable correctly. */

import { describe, expect, it } from "vitest";

import {
  renderAllocation,
  renderDone,
  renderError,
  renderHeatmap,
  renderProgress,
  renderQuestionCard,
  renderResult,
} from "../src/views.js";
import type { QuestionCardModel, SurfacePayload } from "../src/types.js";

const SENTINELS = [0.1234567890123456, 0.9876543210987654, 0.5555555555555555];

describe("question card", () => {
  const card: QuestionCardModel = {
    certain: [0, 0.3706],
    riskyTop: [1, 1],
    riskyBottom: [0, 0],
    p: SENTINELS[0],
    interval: [SENTINELS[1], SENTINELS[2]],
    asked: 1,
    total: 4,
  };

  it("passes every payload number through verbatim", () => {
    const html = renderQuestionCard(card);
    for (const v of SENTINELS) expect(html).toContain(String(v));
    expect(html).toContain("(0, 0.3706) with certainty");
    expect(html).toContain("(1, 1) with probability");
  });

  it("matches the snapshot", () => {
    expect(renderQuestionCard(card)).toMatchSnapshot();
  });

  it("disables both actions while a request is in flight", () => {
    const busy = renderQuestionCard(card, true);
    expect(busy.match(/disabled/g)?.length).toBe(2);
    expect(renderQuestionCard(card, false)).not.toContain("disabled");
  });
});

describe("heatmap", () => {
  const surface: SurfacePayload = {
    grid: { coords: [[0, 1], [0, 0.3706, 1]] },
    partition: { kind: "type1" },
    values: [0, SENTINELS[0], SENTINELS[1], SENTINELS[2], 0.25, 1],
  };

  it("renders one cell per gridpoint with verbatim values", () => {
    const html = renderHeatmap(surface);
    expect(html.match(/class="cell"/g)?.length).toBe(6);
    for (const v of SENTINELS) expect(html).toContain(String(v));
  });

  it("matches the snapshot", () => {
    expect(renderHeatmap(surface)).toMatchSnapshot();
  });

  it("monotone surface renders monotone shading levels", () => {
    const uniform: SurfacePayload = {
      grid: { coords: [[0, 0.5, 1], [0, 1]] },
      partition: { kind: "type1" },
      values: [0, 0.25, 0.5, 0.5, 0.75, 1],
    };
    const html = renderHeatmap(uniform);
    const levels = [...html.matchAll(/--level:([0-9.]+)/g)].map((m) => Number(m[1]));
    // rows are painted top to bottom; within each row shading increases
    expect(levels.slice(0, 3)).toEqual([0.5, 0.75, 1]);
    expect(levels.slice(3)).toEqual([0, 0.25, 0.5]);
  });
});

describe("allocation bars", () => {
  it("single-point allocation renders a single full bar", () => {
    const z = [0, 0, 1, 0];
    const html = renderAllocation(z);
    expect(html.match(/alloc-row/g)?.length).toBe(4);
    expect(html).toContain("width:100%");
    expect(html.match(/width:0%/g)?.length).toBe(3);
  });

  it("passes allocation entries through verbatim", () => {
    const html = renderAllocation([SENTINELS[0], 1 - SENTINELS[0]]);
    expect(html).toContain(String(SENTINELS[0]));
  });
});

describe("result panel", () => {
  it("placeholder without a solution", () => {
    expect(renderResult(null)).toContain("No solution yet.");
  });

  it("shows the value verbatim", () => {
    const html = renderResult({
      value: SENTINELS[1],
      z: [1],
      u_worst: {
        grid: { coords: [[0, 1], [0, 1]] },
        partition: { kind: "type1" },
        values: [0, 0.5, 0.5, 1],
      },
    });
    expect(html).toContain(`<strong>${String(SENTINELS[1])}</strong>`);
  });
});

describe("auxiliary states", () => {
  it("error view offers retry", () => {
    const html = renderError("connection lost");
    expect(html).toContain("connection lost");
    expect(html).toContain("Retry");
  });

  it("done view reports the question count", () => {
    expect(renderDone(23)).toContain("All 23 comparisons answered.");
  });

  it("empty progress renders an empty chart", () => {
    expect(renderProgress([])).toContain("No answers yet.");
  });
});
