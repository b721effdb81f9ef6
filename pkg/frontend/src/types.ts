/** Payload shapes, mirroring the service bodies exactly. */

export interface QuestionPayload {
  point: number[];
  index: number[];
  p: number;
  interval: [number, number];
}

export interface SessionRecord {
  index: number[];
  point: number[];
  interval: [number, number];
  p: number;
  sign: number;
}

export interface SessionState {
  id: string;
  state: "awaiting-answer" | "done";
  grid: { coords: number[][] };
  records: SessionRecord[];
  question?: QuestionPayload;
  spec?: unknown;
}

export interface CreateResponse {
  id: string;
  question: QuestionPayload | null;
}

export interface SurfacePayload {
  grid: { coords: number[][] };
  partition: { kind: string };
  values: number[];
}

export interface SolveResultPayload {
  value: number;
  z: number[];
  u_worst: SurfacePayload;
}

export interface JobStatus {
  status: "running" | "done" | "error";
  result?: SolveResultPayload;
  detail?: string;
}

/** One question as shown to the decision maker: a certain outcome against
 * a two-outcome risky lottery on the domain corners, plus the interval
 * history behind the displayed probability. */
export interface QuestionCardModel {
  certain: number[];
  riskyTop: number[];
  riskyBottom: number[];
  p: number;
  interval: [number, number];
  asked: number;
  total: number;
}

export function toCardModel(
  q: QuestionPayload,
  grid: { coords: number[][] },
  asked: number,
  total: number,
): QuestionCardModel {
  const low = grid.coords.map((c) => c[0]);
  const high = grid.coords.map((c) => c[c.length - 1]);
  return {
    certain: q.point,
    riskyTop: high,
    riskyBottom: low,
    p: q.p,
    interval: q.interval,
    asked,
    total,
  };
}
