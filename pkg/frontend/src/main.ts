import uPlot from "uplot";
import "uplot/dist/uPlot.min.css";
import { EdfApi, fmtTs } from "./api";
import { alarmSummaries, buildHealthRows } from "./healthview";
import { submitShiftAction, ValidationError } from "./shiftform";
import { buildStaffingPanel } from "./staffing";
import { buildTimeline, toSeries } from "./timeline";
import type { StaffingDoc } from "./types";

const api = new EdfApi(import.meta.env.VITE_EDF_API ?? "");

const el = <T extends HTMLElement>(id: string): T => document.getElementById(id) as T;

let chart: uPlot | null = null;
let lastSuccess: Date | null = null;
let latestTick: string | null = null;

function showBanner(message: string | null): void {
  const banner = el<HTMLDivElement>("banner");
  if (message === null) {
    banner.classList.add("hidden");
  } else {
    banner.textContent = message;
    banner.classList.remove("hidden");
  }
}

function targetKey(): string {
  const target = el<HTMLSelectElement>("target-select").value;
  const horizon = el<HTMLSelectElement>("horizon-select").value;
  return `${target}-${horizon}h`;
}

async function latestScoredTick(): Promise<string | null> {
  // walk back from "now" in day-sized windows until records appear
  const now = new Date();
  for (let back = 0; back < 60; back++) {
    const to = new Date(now.getTime() - back * 86_400_000 + 900_000);
    const from = new Date(to.getTime() - 86_400_000);
    const records = await api.forecasts(fmtTs(from), fmtTs(to), "census-2h");
    const last = records[records.length - 1];
    if (last) return last.made_at;
  }
  return null;
}

async function refreshTimeline(): Promise<void> {
  if (!latestTick) return;
  const hours = Number(el<HTMLSelectElement>("window-select").value);
  const end = new Date(new Date(latestTick).getTime() + 900_000);
  const start = new Date(end.getTime() - hours * 3_600_000);
  const records = await api.forecasts(fmtTs(start), fmtTs(end), targetKey());
  const host = el<HTMLDivElement>("timeline");
  const note = el<HTMLParagraphElement>("timeline-note");
  if (records.length === 0) {
    host.innerHTML = '<div class="empty-state">No forecasts in this window yet.</div>';
    note.textContent = "";
    return;
  }
  const tl = buildTimeline(records);
  const data = toSeries(tl);
  const opts: uPlot.Options = {
    width: Math.min(1000, host.clientWidth || 1000),
    height: 300,
    series: [
      {},
      { label: "predicted", stroke: "#2563eb", width: 2 },
      { label: "actual", stroke: "#16a34a", width: 2 },
    ],
    axes: [{}, { label: targetKey() }],
  };
  host.innerHTML = "";
  chart = new uPlot(opts, data as uPlot.AlignedData, host);
  note.textContent =
    `${tl.nPoints} forecasts, ${tl.nPending} pending reconciliation` +
    (tl.nUnreconcilable ? `, ${tl.nUnreconcilable} unreconcilable` : "");
}

function renderStaffing(doc: StaffingDoc): void {
  const raw = el<HTMLInputElement>("scheduled").value;
  const scheduled = raw === "" ? null : Number(raw);
  const tbody = el<HTMLTableElement>("staffing-table").querySelector("tbody")!;
  tbody.innerHTML = "";
  for (const cell of buildStaffingPanel(doc, scheduled)) {
    const tr = document.createElement("tr");
    if (cell.highlight) tr.classList.add("highlight");
    const delta =
      cell.delta === null ? "" : cell.delta > 0 ? `+${cell.delta}` : String(cell.delta);
    tr.innerHTML =
      `<td>${cell.horizon}</td><td>${cell.forTime ?? "–"}</td>` +
      (cell.nurses === null
        ? '<td colspan="3">unavailable</td>'
        : `<td>${cell.forecast!.toFixed(1)}</td><td>${cell.nurses}</td><td>${delta}</td>`);
    tbody.appendChild(tr);
  }
}

async function refreshStaffing(): Promise<void> {
  if (!latestTick) return;
  renderStaffing(await api.staffing(latestTick));
}

async function refreshHealth(): Promise<void> {
  const report = await api.health(7);
  const tbody = el<HTMLTableElement>("health-table").querySelector("tbody")!;
  tbody.innerHTML = "";
  for (const row of buildHealthRows(report)) {
    const tr = document.createElement("tr");
    if (row.alarmed) tr.classList.add("alarmed");
    tr.innerHTML = `<td>${row.target}</td><td>${row.rmse}</td><td>${row.mae}</td><td>${row.withinFour}</td><td>${row.accuracy}</td><td>${row.n}</td>`;
    tbody.appendChild(tr);
  }
  const alarms = el<HTMLDivElement>("alarms");
  const lines = alarmSummaries(report);
  alarms.innerHTML = lines.length
    ? `<ul>${lines.map((l) => `<li>${l}</li>`).join("")}</ul>`
    : '<p class="muted">No active alarms.</p>';
}

async function refreshAll(): Promise<void> {
  try {
    latestTick = await latestScoredTick();
    await Promise.all([refreshTimeline(), refreshStaffing(), refreshHealth()]);
    lastSuccess = new Date();
    el<HTMLSpanElement>("updated").textContent = `updated ${fmtTs(lastSuccess)}`;
    showBanner(null);
  } catch (err) {
    const stamp = lastSuccess ? ` Showing data from ${fmtTs(lastSuccess)}.` : "";
    showBanner(`Could not reach the forecast service.${stamp}`);
  }
}

function msUntilNextQuarterHour(): number {
  const now = Date.now();
  const quarter = 15 * 60_000;
  return quarter - (now % quarter) + 5_000;
}

function schedulePolling(): void {
  setTimeout(() => {
    void refreshAll();
    setInterval(() => void refreshAll(), 15 * 60_000);
  }, msUntilNextQuarterHour());
}

function wireForm(): void {
  const form = el<HTMLFormElement>("shift-form");
  const status = el<HTMLSpanElement>("form-status");
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const data = new FormData(form);
    status.textContent = "submitting…";
    void submitShiftAction(api, {
      shift_id: String(data.get("shift_id") ?? ""),
      timestamp: fmtTs(new Date()),
      action_type: String(data.get("action_type")) as never,
      free_text: String(data.get("free_text") ?? ""),
    })
      .then((stored) => {
        status.textContent = stored.duplicate ? "already recorded" : "recorded";
        form.reset();
      })
      .catch((err) => {
        status.textContent =
          err instanceof ValidationError ? `rejected: ${err.message}` : "failed; please retry";
      });
  });
}

el<HTMLButtonElement>("refresh").addEventListener("click", () => void refreshAll());
el<HTMLSelectElement>("target-select").addEventListener("change", () => void refreshTimeline());
el<HTMLSelectElement>("horizon-select").addEventListener("change", () => void refreshTimeline());
el<HTMLSelectElement>("window-select").addEventListener("change", () => void refreshTimeline());
el<HTMLInputElement>("scheduled").addEventListener("input", () => void refreshStaffing());

wireForm();
void refreshAll();
schedulePolling();
