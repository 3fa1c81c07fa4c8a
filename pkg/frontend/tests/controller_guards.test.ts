import { beforeEach, describe, expect, it } from "vitest";

import type { Api } from "../src/api.js";
import { ControllerError, SessionController } from "../src/controller.js";
import type {
  AnnotationRecordView,
  DocView,
  SessionStateView,
} from "../src/types.js";

const DOC: DocView = {
  doc_id: "d1",
  text: "Troops marched in Paris. Crowds rallied.",
  source: "",
  tokens: [
    [0, 6],
    [7, 14],
    [15, 17],
    [18, 23],
    [23, 24],
    [25, 31],
    [32, 39],
    [39, 40],
  ],
  sentences: [
    [0, 5],
    [5, 8],
  ],
};

/** Minimal in-memory stand-in mirroring the service contract closely enough
 * for guard-state tests; the integration suite exercises the real thing. */
class FakeApi implements Api {
  records: AnnotationRecordView[] = [];
  decisions: unknown[] = [];
  phase: "brainstorm" | "annotate" | "done" = "brainstorm";
  indicator = {
    phrase: "marched",
    priority: 0,
    origin: "brainstormed" as const,
    docs_annotated: 0,
    exhausted: false,
  };
  pending: SessionStateView["pending"] = null;
  private counter = 0;

  async createSession() {
    return { session_id: "s1", phase: this.phase };
  }

  async brainstorm() {
    this.phase = "annotate";
    return { indicators: [this.indicator] };
  }

  async nextIndicator() {
    return { indicator: this.indicator };
  }

  async search() {
    return { doc_ids: ["d1"] };
  }

  async doc() {
    return DOC;
  }

  async annotate(payload: {
    session_id: string;
    doc_id: string;
    kind: string;
    span_start: number;
    span_end: number;
    role?: string | null;
    record_id?: string;
  }) {
    const record: AnnotationRecordView = {
      event: "annotation",
      record_id: payload.record_id ?? `r${(this.counter += 1)}`,
      session_id: "s1",
      teacher_id: "t",
      event_type: "unrest.protest",
      doc_id: payload.doc_id,
      kind: payload.kind as AnnotationRecordView["kind"],
      span_start: payload.span_start,
      span_end: payload.span_end,
      role: payload.role ?? null,
      ts: this.records.length,
    };
    this.records.push(record);
    if (this.pending && payload.kind === "ANCHOR") this.pending.anchors += 1;
    return { status: "ok", record };
  }

  async decision(
    _sessionId: string,
    payload: { decision: string; doc_id?: string; sentence_index?: number },
  ) {
    this.decisions.push(payload);
    if (payload.decision === "event_present" || payload.decision === "negative") {
      const kind = payload.decision === "event_present" ? "EVENT_PRESENT" : "NEGATIVE";
      const record = (
        await this.annotate({
          session_id: "s1",
          doc_id: payload.doc_id!,
          kind,
          span_start: 0,
          span_end: 24,
        })
      ).record;
      this.pending = {
        doc_id: payload.doc_id!,
        sentence_index: payload.sentence_index!,
        kind,
        anchors: 0,
      };
      return { status: "ok", record };
    }
    if (payload.decision === "commit") this.pending = null;
    if (payload.decision === "done") this.phase = "done";
    return { status: "ok", converted: null, record: null };
  }

  async promote() {
    return { status: "ok" as const, indicator: this.indicator };
  }

  async state(): Promise<SessionStateView> {
    return {
      session_id: "s1",
      teacher_id: "t",
      event_type: "unrest.protest",
      phase: this.phase,
      indicators: [this.indicator],
      current_indicator: this.phase === "annotate" ? this.indicator : null,
      docs_done_for_indicator: this.indicator.docs_annotated,
      pending: this.pending,
      records: this.records,
      superseded: [],
      skips: [],
      searches: 0,
      elapsed_effective: 0,
      done: this.phase === "done",
      should_stop: false,
    };
  }

  async stats() {
    return { words_read: 0, docs_opened: 0, searches: 0 };
  }
}

describe("protocol guard states", () => {
  let api: FakeApi;
  let controller: SessionController;

  beforeEach(async () => {
    api = new FakeApi();
    controller = new SessionController(api);
    await controller.start("t", "unrest.protest");
  });

  it("starts in brainstorm with everything else disabled", () => {
    const guards = controller.guards();
    expect(guards.canBrainstorm).toBe(true);
    expect(guards.canSearch).toBe(false);
    expect(guards.canClassify).toBe(false);
  });

  it("unlocks classification only for an indicator-bearing sentence", async () => {
    await controller.brainstorm(["marched"]);
    await controller.openDoc("d1");
    expect(controller.guards().canClassify).toBe(false); // nothing selected
    controller.selectSentenceAt(33); // second sentence lacks "marched"
    expect(controller.guards().canClassify).toBe(false);
    controller.selectSentenceAt(8);
    expect(controller.guards().canClassify).toBe(true);
  });

  it("keeps span controls locked before a decision", async () => {
    await controller.brainstorm(["marched"]);
    await controller.openDoc("d1");
    controller.selectSentenceAt(0);
    const guards = controller.guards();
    expect(guards.canAddAnchor).toBe(false);
    expect(guards.canAddArgument).toBe(false);
    expect(guards.canAddInteresting).toBe(false);
    await expect(
      controller.markSpan({ start: 7, end: 14, kind: "ANCHOR" }),
    ).rejects.toThrow(ControllerError);
  });

  it("keeps argument controls locked until the decision is acknowledged", async () => {
    await controller.brainstorm(["marched"]);
    await controller.openDoc("d1");
    controller.selectSentenceAt(0);
    controller.chooseDecision("event_present");
    // staged but not submitted: anchors yes, arguments no
    expect(controller.guards().canAddAnchor).toBe(true);
    expect(controller.guards().canAddArgument).toBe(false);
    await expect(
      controller.markSpan({ start: 0, end: 6, kind: "ARGUMENT", role: "Agent" }),
    ).rejects.toThrow(/unlock/);
    await controller.markSpan({ start: 7, end: 14, kind: "ANCHOR" });
    await controller.classifyAndMark();
    expect(controller.guards().canAddArgument).toBe(true);
    const record = await controller.markSpan({
      start: 0,
      end: 6,
      kind: "ARGUMENT",
      role: "Agent",
    });
    expect(record?.kind).toBe("ARGUMENT");
  });

  it("requires a role on argument selections", async () => {
    await controller.brainstorm(["marched"]);
    await controller.openDoc("d1");
    controller.selectSentenceAt(0);
    controller.chooseDecision("event_present");
    await controller.markSpan({ start: 7, end: 14, kind: "ANCHOR" });
    await controller.classifyAndMark();
    await expect(
      controller.markSpan({ start: 0, end: 6, kind: "ARGUMENT" }),
    ).rejects.toThrow(/role/);
  });

  it("rejects selections outside the selected sentence", async () => {
    await controller.brainstorm(["marched"]);
    await controller.openDoc("d1");
    controller.selectSentenceAt(0);
    controller.chooseDecision("event_present");
    await expect(
      controller.markSpan({ start: 25, end: 31, kind: "ANCHOR" }),
    ).rejects.toThrow(/outside/);
  });

  it("converts an anchor-less event sentence after confirmation", async () => {
    const prompts: string[] = [];
    controller = new SessionController(api, (message) => {
      prompts.push(message);
      return true;
    });
    await controller.start("t", "unrest.protest");
    await controller.brainstorm(["marched"]);
    await controller.openDoc("d1");
    controller.selectSentenceAt(0);
    controller.chooseDecision("event_present");
    await controller.classifyAndMark();
    expect(prompts).toHaveLength(1);
    const posted = api.decisions.at(-1) as { decision: string; skip_reason?: string };
    expect(posted.decision).toBe("skip");
    expect(posted.skip_reason).toBe("NO_ANCHOR");
  });

  it("declining the conversion keeps the sentence unsubmitted", async () => {
    controller = new SessionController(api, () => false);
    await controller.start("t", "unrest.protest");
    await controller.brainstorm(["marched"]);
    await controller.openDoc("d1");
    controller.selectSentenceAt(0);
    controller.chooseDecision("event_present");
    await expect(controller.classifyAndMark()).rejects.toThrow(/cancelled/);
    expect(api.decisions).toHaveLength(0);
  });

  it("negative sentences accept interesting spans but not anchors", async () => {
    await controller.brainstorm(["marched"]);
    await controller.openDoc("d1");
    controller.selectSentenceAt(0);
    controller.chooseDecision("negative");
    expect(controller.guards().canAddAnchor).toBe(false);
    expect(controller.guards().canAddInteresting).toBe(true);
    await controller.markSpan({ start: 0, end: 6, kind: "INTERESTING" });
    const records = await controller.classifyAndMark();
    expect(records.map((r) => r.kind)).toEqual(["NEGATIVE", "INTERESTING"]);
  });

  it("blocks promoting the indicator currently being served", async () => {
    await controller.brainstorm(["marched"]);
    await expect(controller.promoteAnchor("marched")).rejects.toThrow(/already/);
  });
});
