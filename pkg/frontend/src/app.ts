/** Browser bootstrap: hash routing and event wiring around the pure
 *  API client, flow logic, and renderers. */

import { ApiClient, ApiError, newIdempotencyKey } from "./api.js";
import { buildReviewPayload, isStale, ReviewSubmitter, type ItemInput } from "./flow.js";
import type { Decision, EntryDetail, ItemStatus } from "./types.js";
import {
  renderAuditTimeline,
  renderChecklistForm,
  renderDiffViewer,
  renderEntryDetail,
  renderEvaluation,
  renderInventory,
  renderRefreshPrompt,
  renderStatement,
  stateBadge,
} from "./views.js";

declare global {
  interface Window {
    SCR_API_BASE?: string;
  }
}

const root = () => document.getElementById("app") as HTMLElement;

function client(): ApiClient {
  const base = window.SCR_API_BASE ?? "";
  let actor = localStorage.getItem("scr-actor");
  if (!actor) {
    actor = window.prompt("Your name (used as reviewer identity):") || "anonymous";
    localStorage.setItem("scr-actor", actor);
  }
  return new ApiClient(base, actor);
}

function showError(err: unknown): void {
  const message =
    err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
  const box = document.createElement("div");
  box.className = "error-banner";
  box.textContent = message;
  root().prepend(box);
}

async function showInventory(api: ApiClient): Promise<void> {
  const entries = await api.inventory();
  root().innerHTML = `<h2>Inventory</h2>${renderInventory(entries)}`;
}

function collectChecklistInputs(form: HTMLFormElement): {
  inputs: Record<string, ItemInput>;
  note: string;
} {
  const inputs: Record<string, ItemInput> = {};
  form.querySelectorAll<HTMLElement>(".check-item").forEach((item) => {
    const id = item.dataset.item as string;
    const status =
      form.querySelector<HTMLInputElement>(`input[name="st-${id}"]:checked`)?.value ?? "pass";
    const note = form.querySelector<HTMLInputElement>(`input[name="note-${id}"]`)?.value ?? "";
    inputs[id] = { status: status as ItemStatus, note };
  });
  const note = form.querySelector<HTMLInputElement>('input[name="review-note"]')?.value ?? "";
  return { inputs, note };
}

async function showEntry(api: ApiClient, entryId: string): Promise<void> {
  const entry = await api.entry(entryId);
  const sections: string[] = [renderEntryDetail(entry)];
  if (entry.pending_change) {
    const change = await api.change(entryId, entry.pending_change);
    sections.push(renderDiffViewer(change));
  }
  if (entry.checklist_template) {
    sections.push(`<h3>Review checklist</h3>`, renderChecklistForm(entry.checklist_template));
  }
  const lastEvaluation = entry.evaluations[entry.evaluations.length - 1];
  if (lastEvaluation) sections.push(renderEvaluation(lastEvaluation));
  const events = await api.audit(entryId);
  sections.push(`<h3>Audit trail</h3>`, renderAuditTimeline(events));
  root().innerHTML = sections.join("\n");

  const form = root().querySelector<HTMLFormElement>("form.checklist");
  if (form && entry.checklist_template) {
    const submitter = new ReviewSubmitter(api, entryId);
    form.querySelectorAll<HTMLButtonElement>("button[data-decision]").forEach((button) => {
      button.addEventListener("click", async () => {
        try {
          const fresh = await api.entry(entryId);
          if (isStale(entry, fresh)) {
            form.insertAdjacentHTML("beforebegin", renderRefreshPrompt());
            root()
              .querySelector('[data-action="refresh"]')
              ?.addEventListener("click", () => void showEntry(api, entryId));
            return;
          }
          const { inputs, note } = collectChecklistInputs(form);
          const payload = buildReviewPayload(
            api.actor,
            button.dataset.decision as Decision,
            entry.checklist_template!,
            inputs,
            note,
          );
          const outcome = await submitter.submit(payload);
          const parts = [
            `<h2>Review recorded ${stateBadge(outcome.state)}</h2>`,
          ];
          if (outcome.record.statement) {
            parts.push(renderStatement(outcome.record.statement));
          }
          parts.push(`<p><a href="#/entries/${entryId}">Back to entry</a></p>`);
          root().innerHTML = parts.join("\n");
        } catch (err) {
          showError(err);
        }
      });
    });
  }

  root()
    .querySelectorAll<HTMLButtonElement>("button[data-evaluate]")
    .forEach((button) =>
      button.addEventListener("click", async () => {
        try {
          await api.submitEvaluation(entryId, newIdempotencyKey());
          await showEntry(api, entryId);
        } catch (err) {
          showError(err);
        }
      }),
    );
}

async function route(): Promise<void> {
  const api = client();
  const hash = window.location.hash || "#/";
  try {
    const entryMatch = hash.match(/^#\/entries\/([^/]+)$/);
    if (entryMatch) {
      await showEntry(api, decodeURIComponent(entryMatch[1]));
    } else {
      await showInventory(api);
    }
  } catch (err) {
    showError(err);
  }
}

window.addEventListener("hashchange", () => void route());
window.addEventListener("DOMContentLoaded", () => void route());
