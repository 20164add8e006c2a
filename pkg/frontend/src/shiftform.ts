import { ApiError, EdfApi } from "./api";
import { clearRequestId, getOrCreateRequestId } from "./idempotency";
import type { ShiftActionBody, StoredShiftAction } from "./types";

export class ValidationError extends Error {}

/**
 * Submit an end-of-shift action with one retry on network failure.
 *
 * Both attempts carry the same client-generated request_id, so the server
 * stores at most one record even if the first attempt succeeded without us
 * seeing the response. 4xx responses are surfaced as ValidationError and
 * never retried.
 */
export async function submitShiftAction(
  api: EdfApi,
  action: Omit<ShiftActionBody, "request_id">,
  retries = 1,
): Promise<StoredShiftAction> {
  const intent = `${action.shift_id}:${action.timestamp}:${action.action_type}`;
  const body: ShiftActionBody = { ...action, request_id: getOrCreateRequestId(intent) };
  let lastError: unknown;
  for (let attempt = 0; attempt <= retries; attempt++) {
    try {
      const stored = await api.postShiftAction(body);
      clearRequestId(intent); // the next distinct submission gets a fresh id
      return stored;
    } catch (err) {
      if (err instanceof ApiError) {
        if (err.status >= 400 && err.status < 500) {
          throw new ValidationError(err.body);
        }
      }
      lastError = err;
    }
  }
  throw lastError;
}
