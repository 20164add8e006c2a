// One request id per logical submission intent, so a retry after a network
// failure cannot double-store the action (the server dedups on request_id).

const memory = new Map<string, string>();

function storage(): Pick<Storage, "getItem" | "setItem" | "removeItem"> | null {
  try {
    return typeof sessionStorage === "undefined" ? null : sessionStorage;
  } catch {
    return null; // privacy mode can throw on access
  }
}

function randomId(): string {
  if (typeof crypto !== "undefined" && "randomUUID" in crypto) {
    return crypto.randomUUID();
  }
  return `req-${Date.now()}-${Math.random().toString(36).slice(2, 10)}`;
}

const PREFIX = "edf-idem:";

export function getOrCreateRequestId(intent: string): string {
  const key = PREFIX + intent;
  const store = storage();
  const existing = store ? store.getItem(key) : memory.get(key);
  if (existing) return existing;
  const fresh = randomId();
  if (store) store.setItem(key, fresh);
  else memory.set(key, fresh);
  return fresh;
}

export function clearRequestId(intent: string): void {
  const key = PREFIX + intent;
  const store = storage();
  if (store) store.removeItem(key);
  memory.delete(key);
}
