/** Review-flow logic kept free of the DOM so the contract tests can drive
 *  it directly against recorded API traffic. */

import { ApiClient, newIdempotencyKey } from "./api.js";
import type {
  ChecklistTemplate,
  Decision,
  EntryDetail,
  ItemStatus,
  ReviewPayload,
  ReviewResponse,
} from "./types.js";

export interface ItemInput {
  status: ItemStatus;
  note?: string;
}

/** Assemble the exact payload the service expects from the template the
 *  service itself provided. Items keep template order; missing inputs
 *  default to "pass" with an empty note. */
export function buildReviewPayload(
  reviewer: string,
  decision: Decision,
  template: ChecklistTemplate,
  inputs: Record<string, ItemInput> = {},
  note = "",
): ReviewPayload {
  return {
    reviewer,
    decision,
    checklist: {
      kind: template.kind,
      items: template.items.map((item) => ({
        id: item.id,
        status: inputs[item.id]?.status ?? "pass",
        note: inputs[item.id]?.note ?? "",
        machine: null,
      })),
    },
    note,
  };
}

/** True when the entry changed server-side since the reviewer loaded it;
 *  the UI must prompt for a refresh instead of overwriting silently. */
export function isStale(loaded: EntryDetail, fresh: EntryDetail): boolean {
  return (
    loaded.pending_change !== fresh.pending_change ||
    loaded.pending !== fresh.pending ||
    loaded.current !== fresh.current ||
    loaded.state !== fresh.state
  );
}

/** One reviewer form submission: a single idempotency key for the form's
 *  lifetime and a single-flight guard, so a double-click produces exactly
 *  one review even if two requests race. */
export class ReviewSubmitter {
  readonly key = newIdempotencyKey();
  private inflight: Promise<ReviewResponse> | null = null;

  constructor(
    private readonly client: ApiClient,
    private readonly entryId: string,
  ) {}

  submit(payload: ReviewPayload): Promise<ReviewResponse> {
    if (!this.inflight) {
      this.inflight = this.client
        .submitReview(this.entryId, payload, this.key)
        .finally(() => {
          // keep the settled promise: later clicks replay the same result
        });
    }
    return this.inflight;
  }
}
