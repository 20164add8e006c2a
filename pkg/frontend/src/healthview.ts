import type { HealthReport } from "./types";

// The model-health page renders the health report verbatim: one metrics row
// per deployed model plus the alarm list, no re-aggregation client-side.

export interface HealthRow {
  target: string;
  rmse: string;
  mae: string;
  withinFour: string;
  accuracy: string;
  n: number;
  alarmed: boolean;
}

export function buildHealthRows(report: HealthReport): HealthRow[] {
  const alarmedModels = new Set(
    report.alarms.filter((a) => a.reason === "rolling-mae").map((a) => a.name),
  );
  return Object.entries(report.models).map(([target, m]) => ({
    target,
    rmse: m.rmse.toFixed(3),
    mae: m.mae.toFixed(3),
    withinFour: `${m.pct_abs_err_le4.toFixed(1)}%`,
    accuracy: `${m.pct_accuracy_ge70.toFixed(1)}%`,
    n: m.n,
    alarmed: alarmedModels.has(target),
  }));
}

export function alarmSummaries(report: HealthReport): string[] {
  return report.alarms.map(
    (a) => `${a.name}: ${a.reason} ${a.value.toFixed(3)} > ${a.threshold}`,
  );
}
