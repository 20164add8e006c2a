import { parseTs } from "./api";
import type { ForecastRecord } from "./types";

// Chart data is assembled strictly from API records: every point carries a
// record's prediction and (when reconciled) its actual. Nothing is forecast
// client-side.

export interface TimelinePoint {
  t: number; // epoch millis of the forecast target time (made_at + horizon)
  madeAt: string;
  predicted: number | null;
  actual: number | null;
  pending: boolean; // scored but not yet reconciled
}

export interface Timeline {
  points: TimelinePoint[];
  nPoints: number;
  nPending: number;
  nUnreconcilable: number;
}

export function buildTimeline(records: ForecastRecord[]): Timeline {
  const points = records
    .slice()
    .sort((a, b) => (a.made_at < b.made_at ? -1 : a.made_at > b.made_at ? 1 : 0))
    .map((r) => ({
      t: parseTs(r.made_at).getTime() + r.horizon_hours * 3_600_000,
      madeAt: r.made_at,
      predicted: r.predicted,
      actual: r.actual,
      pending: r.status === "ok" && r.actual === null && !r.unreconcilable,
    }));
  return {
    points,
    nPoints: points.length,
    nPending: points.filter((p) => p.pending).length,
    nUnreconcilable: records.filter((r) => r.unreconcilable).length,
  };
}

/** uplot column layout: [target times (s), predicted, actual]. */
export function toSeries(tl: Timeline): [number[], (number | null)[], (number | null)[]] {
  return [
    tl.points.map((p) => p.t / 1000),
    tl.points.map((p) => p.predicted),
    tl.points.map((p) => p.actual),
  ];
}
