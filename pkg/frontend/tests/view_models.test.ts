import { describe, expect, it } from "vitest";

import { hotkeyLegend, resolveHotkey } from "../src/hotkeys.js";
import { phaseBanner, queueRows } from "../src/queue.js";
import {
  BREAK_CLIP_SECONDS,
  effectiveDisplaySeconds,
  formatClock,
  timerView,
} from "../src/timer.js";
import type { SessionStateView } from "../src/types.js";

function stateWith(overrides: Partial<SessionStateView>): SessionStateView {
  return {
    session_id: "s1",
    teacher_id: "t",
    event_type: "unrest.protest",
    phase: "annotate",
    indicators: [],
    current_indicator: null,
    docs_done_for_indicator: 0,
    pending: null,
    records: [],
    superseded: [],
    skips: [],
    searches: 0,
    elapsed_effective: 0,
    done: false,
    should_stop: false,
    ...overrides,
  };
}

describe("timer", () => {
  it("starts at zero", () => {
    expect(formatClock(0)).toBe("0:00");
    expect(timerView(0, 0).label.startsWith("0:00")).toBe(true);
  });

  it("advances at most the break clip per idle gap", () => {
    expect(effectiveDisplaySeconds(100, 30)).toBe(130);
    expect(effectiveDisplaySeconds(100, 500)).toBe(100 + BREAK_CLIP_SECONDS);
  });

  it("flags the budget without blocking anything", () => {
    const view = timerView(4 * 3600, 0);
    expect(view.budgetReached).toBe(true);
    const fresh = timerView(0, 0);
    expect(fresh.budgetReached).toBe(false);
  });

  it("formats hours when needed", () => {
    expect(formatClock(4 * 3600)).toBe("4:00:00");
    expect(formatClock(61)).toBe("1:01");
  });
});

describe("indicator queue", () => {
  const state = stateWith({
    indicators: [
      { phrase: "marched", priority: 0, origin: "brainstormed", docs_annotated: 10, exhausted: true },
      { phrase: "rallied", priority: 1, origin: "brainstormed", docs_annotated: 3, exhausted: false },
      { phrase: "picketed", priority: -1, origin: "promoted", docs_annotated: 0, exhausted: false },
    ],
    current_indicator: {
      phrase: "picketed",
      priority: -1,
      origin: "promoted",
      docs_annotated: 0,
      exhausted: false,
    },
  });

  it("orders by priority with the promoted entry on top", () => {
    const rows = queueRows(state);
    expect(rows.map((row) => row.phrase)).toEqual(["picketed", "marched", "rallied"]);
    expect(rows[0].promoted).toBe(true);
    expect(rows[0].current).toBe(true);
    expect(rows[1].exhausted).toBe(true);
    expect(rows[2].progress).toBe("3/10");
  });

  it("renders the phase banner", () => {
    expect(phaseBanner(state)).toContain("picketed");
    expect(phaseBanner(stateWith({ phase: "brainstorm" }))).toContain("Brainstorm");
    expect(phaseBanner(stateWith({ phase: "done" }))).toContain("closed");
  });
});

describe("hotkeys", () => {
  it("maps the record kinds and skip reasons", () => {
    expect(resolveHotkey("e")).toEqual({ type: "decision", decision: "event_present" });
    expect(resolveHotkey("N")).toEqual({ type: "decision", decision: "negative" });
    expect(resolveHotkey("m")).toEqual({ type: "skip", reason: "MULTIPLE_INSTANCES" });
    expect(resolveHotkey("a")).toEqual({ type: "mark", kind: "ANCHOR" });
    expect(resolveHotkey("3")).toEqual({ type: "role", index: 2 });
  });

  it("stays quiet while typing or with modifiers", () => {
    expect(resolveHotkey("e", { typingInField: true })).toBeNull();
    expect(resolveHotkey("e", { withModifier: true })).toBeNull();
    expect(resolveHotkey("?")).toBeNull();
  });

  it("documents every binding", () => {
    expect(hotkeyLegend().length).toBeGreaterThanOrEqual(10);
  });
});
