import { describe, expect, it } from "vitest";

import type {
  AuditEvent,
  ChangeDetail,
  EntryDetail,
  EvaluationResponse,
  InventoryEntry,
} from "../src/types.js";
import {
  renderAuditTimeline,
  renderChecklistForm,
  renderDiffViewer,
  renderEntryDetail,
  renderEvaluation,
  renderInventory,
  escapeHtml,
} from "../src/views.js";

import auditFixture from "./fixtures/audit.json";
import changeFixture from "./fixtures/change.json";
import entryPending from "./fixtures/entry_pending.json";
import evaluationResponse from "./fixtures/evaluation_response.json";
import inventoryFixture from "./fixtures/inventory.json";

const change = changeFixture as ChangeDetail;

function cellOrder(html: string): string[] {
  return [...html.matchAll(/<tr class="delta[^"]*" data-sheet[^>]*>\s*<td class="mono">([^<]+)</g)].map(
    (m) => m[1],
  );
}

describe("diff viewer", () => {
  it("lists deltas exactly in the API's risk order", () => {
    const html = renderDiffViewer(change);
    expect(cellOrder(html)).toEqual(change.ranked.map((r) => r.delta.address));
  });

  it("never re-sorts, even when given an order that is not score-descending", () => {
    const scrambled: ChangeDetail = {
      ...change,
      ranked: [...change.ranked].reverse(),
    };
    const html = renderDiffViewer(scrambled);
    expect(cellOrder(html)).toEqual(scrambled.ranked.map((r) => r.delta.address));
  });

  it("shows the API's scores verbatim", () => {
    const html = renderDiffViewer(change);
    for (const ranked of change.ranked) {
      expect(html).toContain(`>${ranked.score}</td>`);
    }
  });

  it("distinguishes formula deltas from value deltas by class", () => {
    const detail: ChangeDetail = {
      ...change,
      ranked: [
        {
          delta: { address: "S1!A1", kind: "formula_changed", before: "=B1", after: "=B1+1", referenced: false },
          score: 5,
          rationale: { formula: 5 },
        },
        {
          delta: { address: "S1!A2", kind: "value_changed", before: "1", after: "2", referenced: false },
          score: 0,
          rationale: {},
        },
      ],
    };
    const html = renderDiffViewer(detail);
    expect(html).toContain('class="delta kind-formula_changed"');
    expect(html).toContain('class="delta kind-value_changed"');
  });

  it("filters by sheet and kind without reordering", () => {
    const detail: ChangeDetail = {
      ...change,
      ranked: [
        {
          delta: { address: "S2!A1", kind: "added", before: null, after: "1", referenced: false },
          score: 0,
          rationale: {},
        },
        ...change.ranked,
      ],
    };
    const bySheet = renderDiffViewer(detail, { sheet: "S1" });
    expect(cellOrder(bySheet)).toEqual(change.ranked.map((r) => r.delta.address));
    const byKind = renderDiffViewer(detail, { kind: "added" });
    expect(cellOrder(byKind)).toEqual(
      detail.ranked.filter((r) => r.delta.kind === "added").map((r) => r.delta.address),
    );
    expect(cellOrder(byKind)[0]).toBe("S2!A1");
  });

  it("renders an explicit empty view for an empty changeset", () => {
    const html = renderDiffViewer({ ...change, ranked: [] });
    expect(html).toContain("No changes.");
  });

  it("escapes cell content", () => {
    const detail: ChangeDetail = {
      ...change,
      ranked: [
        {
          delta: {
            address: "S1!A1",
            kind: "value_changed",
            before: '<script>alert("x")</script>',
            after: "safe",
            referenced: false,
          },
          score: 0,
          rationale: {},
        },
      ],
    };
    const html = renderDiffViewer(detail);
    expect(html).not.toContain("<script>");
    expect(html).toContain(escapeHtml('<script>alert("x")</script>'));
  });
});

describe("inventory and entry views", () => {
  it("renders one row per entry with a state badge", () => {
    const entries = inventoryFixture as InventoryEntry[];
    const html = renderInventory(entries);
    for (const entry of entries) {
      expect(html).toContain(`data-entry="${entry.id}"`);
      expect(html).toContain(`state-${entry.state}`);
    }
  });

  it("shows snapshot lineage for a pending entry", () => {
    const entry = entryPending as EntryDetail;
    const html = renderEntryDetail(entry);
    expect(html).toContain(entry.current.slice(0, 12));
    expect(html).toContain((entry.pending as string).slice(0, 12));
    expect(html).toContain(`state-${entry.state}`);
  });
});

describe("checklist form", () => {
  it("renders every template item with pass/fail/na inputs", () => {
    const template = (entryPending as EntryDetail).checklist_template!;
    const html = renderChecklistForm(template);
    for (const item of template.items) {
      expect(html).toContain(`data-item="${item.id}"`);
      expect(html).toContain(`name="st-${item.id}" value="fail"`);
    }
    expect(html).toContain('data-decision="approve"');
    expect(html).toContain('data-decision="decline"');
  });
});

describe("evaluation view", () => {
  it("shows the service's ratings and recommendation untouched", () => {
    const response = evaluationResponse as EvaluationResponse;
    const html = renderEvaluation(response.report);
    expect(html).toContain(`rec-${response.report.recommendation}`);
    for (const [metric, rating] of Object.entries(response.report.ratings)) {
      expect(html).toContain(`<td>${metric}</td>`);
      expect(html).toContain(`rating-${rating}">${rating}/5`);
    }
  });
});

describe("audit timeline", () => {
  it("keeps events in API order with sequence numbers", () => {
    const events = auditFixture as AuditEvent[];
    const html = renderAuditTimeline(events);
    const sequences = [...html.matchAll(/#(\d+)<\/span>/g)].map((m) => Number(m[1]));
    expect(sequences).toEqual(events.map((e) => e.sequence));
  });
});
