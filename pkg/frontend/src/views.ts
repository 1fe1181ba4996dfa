/** HTML renderers. Pure string -> string functions: everything shown comes
 *  straight from API payloads (escaped, never recomputed or re-sorted). */

import type {
  AuditEvent,
  ChangeDetail,
  ChecklistTemplate,
  EntryDetail,
  EvaluationReport,
  InventoryEntry,
  RankedChange,
} from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

const esc = escapeHtml;

export function stateBadge(state: string): string {
  return `<span class="badge state-${esc(state)}">${esc(state.replace(/_/g, " "))}</span>`;
}

export function shortId(digest: string | null): string {
  return digest ? digest.slice(0, 12) : "—";
}

export function renderInventory(entries: InventoryEntry[]): string {
  if (!entries.length) return `<p class="empty">Inventory is empty.</p>`;
  const rows = entries
    .map(
      (entry) => `
  <tr data-entry="${esc(entry.id)}">
    <td><a href="#/entries/${esc(entry.id)}">${esc(entry.name)}</a></td>
    <td>${esc(entry.classification)}</td>
    <td>${stateBadge(entry.state)}</td>
    <td>${esc(entry.owner)}</td>
    <td class="mono">${shortId(entry.current)}</td>
  </tr>`,
    )
    .join("");
  return `<table class="inventory">
<thead><tr><th>Name</th><th>Class</th><th>State</th><th>Owner</th><th>Snapshot</th></tr></thead>
<tbody>${rows}
</tbody></table>`;
}

export function renderEntryDetail(entry: EntryDetail): string {
  const pendingRow = entry.pending
    ? `<div>pending <span class="mono">${shortId(entry.pending)}</span> (change <span class="mono">${shortId(entry.pending_change)}</span>)</div>`
    : "";
  const lineage = `<div class="lineage">
<div>current <span class="mono">${shortId(entry.current)}</span></div>
${pendingRow}</div>`;
  return `<header class="entry-head">
<h2>${esc(entry.name)} ${stateBadge(entry.state)}</h2>
<p>${esc(entry.classification)} · owner ${esc(entry.owner)} · updated ${esc(entry.updated)}</p>
${lineage}
</header>`;
}

export interface DiffFilter {
  sheet?: string;
  kind?: string;
}

function sheetOf(address: string): string {
  const bang = address.indexOf("!");
  return bang < 0 ? "" : address.slice(0, bang);
}

function renderRankedRow(change: RankedChange): string {
  const delta = change.delta;
  const rationale = Object.entries(change.rationale)
    .filter(([, points]) => points !== 0)
    .map(([label, points]) => `${esc(label)} ${points}`)
    .join(", ");
  return `
  <tr class="delta kind-${esc(delta.kind)}" data-sheet="${esc(sheetOf(delta.address))}" data-kind="${esc(delta.kind)}">
    <td class="mono">${esc(delta.address)}</td>
    <td class="kind">${esc(delta.kind.replace(/_/g, " "))}</td>
    <td class="mono before">${delta.before === null ? "<em>empty</em>" : esc(delta.before)}</td>
    <td class="mono after">${delta.after === null ? "<em>empty</em>" : esc(delta.after)}</td>
    <td class="score" title="${rationale}">${change.score}</td>
  </tr>`;
}

/** Deltas exactly in the order the service ranked them; filters select
 *  rows but never reorder them. */
export function renderDiffViewer(detail: ChangeDetail, filter: DiffFilter = {}): string {
  const cs = detail.changeset;
  const head = `<header class="change-head">
<h3>Change <span class="mono">${shortId(cs.id)}</span> (${esc(detail.classification)})</h3>
<p>${esc(cs.description)} — ${esc(cs.author)}, ${esc(cs.timestamp)}</p>
</header>`;
  const selected = detail.ranked.filter(
    (change) =>
      (!filter.sheet || sheetOf(change.delta.address) === filter.sheet) &&
      (!filter.kind || change.delta.kind === filter.kind),
  );
  if (!selected.length) {
    return `${head}<p class="empty">No changes.</p>`;
  }
  return `${head}<table class="diff">
<thead><tr><th>Cell</th><th>Kind</th><th>Before</th><th>After</th><th>Risk</th></tr></thead>
<tbody>${selected.map(renderRankedRow).join("")}
</tbody></table>`;
}

export function renderChecklistForm(template: ChecklistTemplate): string {
  const items = template.items
    .map(
      (item) => `
  <fieldset class="check-item" data-item="${esc(item.id)}">
    <legend>${esc(item.title)}${item.automatable ? ' <span class="auto">auto</span>' : ""}</legend>
    <p class="guidance">${esc(item.guidance)}</p>
    <label><input type="radio" name="st-${esc(item.id)}" value="pass" checked> pass</label>
    <label><input type="radio" name="st-${esc(item.id)}" value="fail"> fail</label>
    <label><input type="radio" name="st-${esc(item.id)}" value="na"> n/a</label>
    <input type="text" name="note-${esc(item.id)}" placeholder="note">
  </fieldset>`,
    )
    .join("");
  return `<form class="checklist" data-kind="${esc(template.kind)}">
${items}
  <label>Reviewer note <input type="text" name="review-note"></label>
  <div class="actions">
    <button type="button" data-decision="approve">Approve</button>
    <button type="button" data-decision="decline">Decline</button>
  </div>
</form>`;
}

export function renderStatement(statement: string): string {
  return `<pre class="statement">${esc(statement)}</pre>`;
}

export function renderEvaluation(report: EvaluationReport): string {
  const ratings = Object.entries(report.ratings)
    .map(
      ([metric, rating]) =>
        `<tr><td>${esc(metric)}</td><td class="rating rating-${rating}">${rating}/5</td></tr>`,
    )
    .join("");
  const issues = report.issues
    .map(
      (issue) =>
        `<li><span class="mono">${esc(issue.address ?? issue.area ?? "")}</span> [${esc(issue.metric)}] ${esc(issue.description)}</li>`,
    )
    .join("");
  const areas = report.areas_to_improve.map((area) => `<li class="mono">${esc(area)}</li>`).join("");
  return `<section class="evaluation">
<h3>Evaluation <span class="badge rec-${esc(report.recommendation)}">${esc(report.recommendation)}</span></h3>
<table class="ratings"><tbody>${ratings}</tbody></table>
${issues ? `<h4>Issues</h4><ul class="issues">${issues}</ul>` : ""}
${areas ? `<h4>Areas to improve</h4><ul class="areas">${areas}</ul>` : ""}
</section>`;
}

export function renderAuditTimeline(events: AuditEvent[]): string {
  if (!events.length) return `<p class="empty">No events.</p>`;
  const rows = events
    .map(
      (event) => `
  <li class="event event-${esc(event.kind)}">
    <span class="seq">#${event.sequence}</span>
    <span class="mono">${esc(event.timestamp)}</span>
    <span class="kind">${esc(event.kind)}</span>
    <span class="actor">${esc(event.actor)}</span>
    <span class="payload mono">${esc(JSON.stringify(event.payload))}</span>
  </li>`,
    )
    .join("");
  return `<ol class="timeline">${rows}
</ol>`;
}

export function renderRefreshPrompt(): string {
  return `<div class="stale-warning">
<p>This entry changed on the server while you were reviewing. Reload it before deciding; your form was not submitted.</p>
<button type="button" data-action="refresh">Reload entry</button>
</div>`;
}
