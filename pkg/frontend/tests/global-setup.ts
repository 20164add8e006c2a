// Boots the forecasting service on a synthetic fixture for the integration
// tests: simulate -> ingest -> train -> serve with an accelerated replay of
// one day plus the following 8 hours.

import { execFileSync, spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import type { TestProject } from "vitest/node";

const PORT = 8753;
const BASE = `http://127.0.0.1:${PORT}`;

export const REPLAY_FROM = "2014-01-31T00:00";
export const REPLAY_TO = "2014-02-01T08:00";
export const DAY_END = "2014-02-01T00:00";

let server: ChildProcess | null = null;
let dataDir: string | null = null;

function edf(args: string[], dir: string): void {
  execFileSync("edf", ["--data-dir", dir, ...args], { stdio: "pipe" });
}

async function waitForReplay(): Promise<void> {
  const deadline = Date.now() + 240_000;
  while (Date.now() < deadline) {
    try {
      const res = await fetch(
        `${BASE}/api/v1/forecasts?from=${REPLAY_FROM}&to=${DAY_END}&target=census-2h`,
      );
      if (res.ok) {
        const records = (await res.json()) as Array<{ actual: number | null }>;
        if (records.length === 96 && records.every((r) => r.actual !== null)) return;
      }
    } catch {
      // server not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 1000));
  }
  throw new Error("service replay did not finish in time");
}

export default async function setup(project: TestProject): Promise<() => void> {
  dataDir = mkdtempSync(join(tmpdir(), "edf-dash-"));
  edf(["simulate", "--span", "2014-01-01..2014-02-02", "--seed", "1234"], dataDir);
  edf(["ingest", join(dataDir, "simulated.csv")], dataDir);
  edf(["train", "--split", "2014-01-28", "--families", "glm"], dataDir);

  server = spawn(
    "edf",
    [
      "--data-dir",
      dataDir,
      "serve",
      "--port",
      String(PORT),
      "--clock",
      "replay",
      "--speed",
      "0",
      "--replay-from",
      REPLAY_FROM,
      "--replay-to",
      REPLAY_TO,
    ],
    { stdio: "ignore" },
  );
  await waitForReplay();

  project.provide("edfBaseUrl", BASE);
  project.provide("replayFrom", REPLAY_FROM);
  project.provide("replayDayEnd", DAY_END);

  return () => {
    server?.kill();
    if (dataDir) rmSync(dataDir, { recursive: true, force: true });
  };
}

declare module "vitest" {
  export interface ProvidedContext {
    edfBaseUrl: string;
    replayFrom: string;
    replayDayEnd: string;
  }
}
