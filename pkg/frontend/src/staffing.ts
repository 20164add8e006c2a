import type { HorizonKey, StaffingDoc } from "./types";

/** Nurses needed at the 4:1 patient-to-nurse ratio; must match the API's value. */
export function nursesFor(censusForecast: number): number {
  if (censusForecast < 0 || !Number.isFinite(censusForecast)) {
    throw new RangeError(`census forecast must be a non-negative number, got ${censusForecast}`);
  }
  return Math.ceil(censusForecast / 4);
}

export interface StaffingCell {
  horizon: HorizonKey;
  forTime: string | null;
  forecast: number | null;
  nurses: number | null;
  /** nurses minus scheduled staff; null when no scheduled count was entered */
  delta: number | null;
  /** true when the recommendation deviates from scheduled staff by >= 1 */
  highlight: boolean;
}

export const HORIZONS: HorizonKey[] = ["2h", "4h", "8h"];

export function buildStaffingPanel(doc: StaffingDoc, scheduled: number | null): StaffingCell[] {
  return HORIZONS.map((horizon) => {
    const cell = doc.horizons[horizon];
    if (!cell) {
      return { horizon, forTime: null, forecast: null, nurses: null, delta: null, highlight: false };
    }
    const nurses = nursesFor(cell.census_forecast);
    const delta = scheduled === null ? null : nurses - scheduled;
    return {
      horizon,
      forTime: cell.for_time,
      forecast: cell.census_forecast,
      nurses,
      delta,
      highlight: delta !== null && Math.abs(delta) >= 1,
    };
  });
}
