// Wire formats of the forecasting service API (all timestamps are
// local-clock "YYYY-MM-DDTHH:MM" strings).

export type TargetKey =
  | `census-${2 | 4 | 8}h`
  | `${"emergent" | "urgent" | "nonurgent"}-${2 | 4 | 8}h`;

export type HorizonKey = "2h" | "4h" | "8h";

export interface ForecastRecord {
  made_at: string;
  target: string;
  family: string;
  horizon_hours: number;
  status: "ok" | "skipped-warmup" | "error";
  predicted: number | null;
  actual: number | null;
  abs_err: number | null;
  unreconcilable: boolean;
  display: number | null;
}

export interface ActualsRow {
  timestamp: string;
  census: number;
  arrivals_emergent: number;
  arrivals_urgent: number;
  arrivals_nonurgent: number;
}

export interface MetricsDoc {
  rmse: number;
  mae: number;
  pct_abs_err_le4: number;
  pct_accuracy_ge70: number;
  n: number;
}

export interface Alarm {
  name: string;
  reason: "rolling-mae" | "psi";
  value: number;
  threshold: number;
}

export interface HealthReport {
  window: [string, string];
  models: Record<string, MetricsDoc>;
  feature_psi: Record<string, Record<string, number>>;
  alarms: Alarm[];
}

export interface StaffingCellDoc {
  census_forecast: number;
  nurses: number;
  for_time: string;
}

export interface StaffingDoc {
  at: string;
  horizons: Record<HorizonKey, StaffingCellDoc | null>;
}

export interface ModelsDoc {
  split_date: string;
  deployed: Record<string, { family: string; metrics_on_test: MetricsDoc | null }>;
  grid: Array<{ target: string; family: string } & Partial<MetricsDoc>>;
}

export interface ShiftActionBody {
  shift_id: string;
  timestamp: string;
  action_type: "called-in-staff" | "sent-staff-home" | "no-action";
  free_text?: string;
  request_id?: string;
}

export interface StoredShiftAction extends ShiftActionBody {
  duplicate?: boolean;
}
