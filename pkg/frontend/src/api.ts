import type {
  ActualsRow,
  ForecastRecord,
  HealthReport,
  ModelsDoc,
  ShiftActionBody,
  StaffingDoc,
  StoredShiftAction,
} from "./types";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public status: number,
    public body: string,
  ) {
    super(`API error ${status}: ${body}`);
  }
}

/** Local-clock wire format, minute precision. */
export function fmtTs(d: Date): string {
  const pad = (n: number) => String(n).padStart(2, "0");
  return `${d.getFullYear()}-${pad(d.getMonth() + 1)}-${pad(d.getDate())}T${pad(d.getHours())}:${pad(d.getMinutes())}`;
}

export function parseTs(ts: string): Date {
  return new Date(ts); // no zone suffix: interpreted as local time
}

export class EdfApi {
  constructor(
    private baseUrl: string,
    private fetchImpl: FetchLike = (...args) => globalThis.fetch(...args),
    private token: string | null = null,
  ) {}

  private headers(extra: Record<string, string> = {}): Record<string, string> {
    return this.token ? { "X-API-Token": this.token, ...extra } : extra;
  }

  private async getJson<T>(path: string, params: Record<string, string>): Promise<T> {
    const query = new URLSearchParams(params).toString();
    const res = await this.fetchImpl(`${this.baseUrl}${path}?${query}`, {
      headers: this.headers(),
    });
    if (!res.ok) throw new ApiError(res.status, await res.text());
    return (await res.json()) as T;
  }

  forecasts(from: string, to: string, target?: string): Promise<ForecastRecord[]> {
    const params: Record<string, string> = { from, to };
    if (target) params.target = target;
    return this.getJson("/api/v1/forecasts", params);
  }

  actuals(from: string, to: string): Promise<ActualsRow[]> {
    return this.getJson("/api/v1/actuals", { from, to });
  }

  health(windowDays: number): Promise<HealthReport> {
    return this.getJson("/api/v1/health", { window_days: String(windowDays) });
  }

  models(): Promise<ModelsDoc> {
    return this.getJson("/api/v1/models", {});
  }

  staffing(at: string): Promise<StaffingDoc> {
    return this.getJson("/api/v1/staffing", { at });
  }

  shiftActions(from: string, to: string): Promise<StoredShiftAction[]> {
    return this.getJson("/api/v1/shift-actions", { from, to });
  }

  async postShiftAction(body: ShiftActionBody): Promise<StoredShiftAction> {
    const res = await this.fetchImpl(`${this.baseUrl}/api/v1/shift-actions`, {
      method: "POST",
      headers: this.headers({ "Content-Type": "application/json" }),
      body: JSON.stringify(body),
    });
    if (!res.ok) throw new ApiError(res.status, await res.text());
    return (await res.json()) as StoredShiftAction;
  }
}
