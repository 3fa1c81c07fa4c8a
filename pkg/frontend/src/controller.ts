/** Teaching-session controller: owns the protocol guards and the submission
 * order. Rendered state is never invented locally: after every acknowledged
 * write the session state is refetched from the service.
 *
 * Submission order for one sentence: the classification decision first,
 * then the staged spans in the order they were marked, then arguments
 * (which only unlock once the classification is acknowledged), then commit.
 * The guard rules are a strict subset of the server's validation, so a log
 * produced through this controller always replays cleanly.
 */
import type { Api } from "./api.js";
import {
  findPhrase,
  sentenceAt,
  sentenceContainsPhrase,
  sliceByPoints,
  spanInsideSentence,
} from "./selection.js";
import type {
  AnnotationRecordView,
  Decision,
  DocView,
  RecordKind,
  SessionStateView,
  SkipReason,
  SpanSelection,
} from "./types.js";

export type ConfirmFn = (message: string) => boolean | Promise<boolean>;

export interface Guards {
  canBrainstorm: boolean;
  canSearch: boolean;
  canClassify: boolean;
  canAddAnchor: boolean;
  canAddArgument: boolean;
  canAddInteresting: boolean;
  canSubmit: boolean;
  canCommit: boolean;
}

export class ControllerError extends Error {}

export class SessionController {
  state: SessionStateView | null = null;
  doc: DocView | null = null;
  selectedSentence: number | null = null;
  /** Decision staged locally; nothing is posted until submit. */
  stagedDecision: Decision | null = null;
  stagedSkipReason: SkipReason | null = null;
  /** Anchor and interesting spans marked before submission. */
  stagedSelections: SpanSelection[] = [];
  /** Set once the sentence classification has been acknowledged. */
  acceptedKind: RecordKind | null = null;
  anchorsSubmitted = 0;
  lastSearchResults: string[] = [];
  findSpans: [number, number][] = [];
  private recordCounter = 0;

  constructor(
    private readonly api: Api,
    private readonly confirm: ConfirmFn = () => true,
    private readonly idPrefix: string = `ui-${Date.now().toString(36)}`,
  ) {}

  get sessionId(): string {
    if (this.state === null) throw new ControllerError("no session started");
    return this.state.session_id;
  }

  get decisionAccepted(): boolean {
    return this.acceptedKind !== null;
  }

  private nextRecordId(): string {
    this.recordCounter += 1;
    return `${this.idPrefix}-${this.recordCounter}`;
  }

  async start(teacherId: string, eventType: string): Promise<void> {
    const created = await this.api.createSession(teacherId, eventType);
    this.state = await this.api.state(created.session_id);
  }

  async refresh(): Promise<SessionStateView> {
    this.state = await this.api.state(this.sessionId);
    return this.state;
  }

  async brainstorm(phrases: string[]): Promise<void> {
    if (!this.guards().canBrainstorm) {
      throw new ControllerError("indicator list already brainstormed");
    }
    await this.api.brainstorm(this.sessionId, phrases);
    await this.refresh();
  }

  /** The search box defaults to the indicator being served. */
  currentIndicatorPhrase(): string | null {
    return this.state?.current_indicator?.phrase ?? null;
  }

  async runSearch(phrase?: string, limit = 20): Promise<string[]> {
    const query = phrase ?? this.currentIndicatorPhrase();
    if (!query) throw new ControllerError("nothing to search");
    const result = await this.api.search(query, limit, this.sessionId);
    this.lastSearchResults = result.doc_ids;
    await this.refresh();
    return result.doc_ids;
  }

  /** Load a document; find-in-document is pre-seeded with the indicator. */
  async openDoc(docId: string): Promise<DocView> {
    this.doc = await this.api.doc(docId);
    this.clearSentence();
    const phrase = this.currentIndicatorPhrase();
    this.findSpans = phrase && this.doc ? findPhrase(this.doc, phrase) : [];
    return this.doc;
  }

  /** Clicking any token selects its whole sentence for classification. */
  selectSentenceAt(offset: number): number | null {
    if (this.doc === null) throw new ControllerError("no document open");
    const sentence = sentenceAt(this.doc, offset);
    if (sentence === null) return null;
    if (this.selectedSentence !== sentence) this.clearSentence();
    this.selectedSentence = sentence;
    return sentence;
  }

  clearSentence(): void {
    this.selectedSentence = null;
    this.stagedDecision = null;
    this.stagedSkipReason = null;
    this.stagedSelections = [];
    this.acceptedKind = null;
    this.anchorsSubmitted = 0;
  }

  /** Disabled-state source of truth; one flag per protocol rule. */
  guards(): Guards {
    const state = this.state;
    const annotate = state !== null && state.phase === "annotate" && !state.done;
    const sentenceChosen =
      annotate && this.doc !== null && this.selectedSentence !== null;
    const eventStaged =
      this.stagedDecision === "event_present" && !this.decisionAccepted;
    const eventAccepted = this.acceptedKind === "EVENT_PRESENT";
    return {
      canBrainstorm: state !== null && state.phase === "brainstorm",
      canSearch: annotate && state!.current_indicator !== null,
      canClassify:
        sentenceChosen &&
        state!.current_indicator !== null &&
        sentenceContainsPhrase(
          this.doc!,
          this.selectedSentence!,
          state!.current_indicator!.phrase,
        ) &&
        this.stagedDecision === null &&
        !this.decisionAccepted,
      canAddAnchor: sentenceChosen && (eventStaged || eventAccepted),
      // arguments stay locked until the classification is acknowledged
      canAddArgument: sentenceChosen && eventAccepted,
      canAddInteresting:
        sentenceChosen &&
        ((this.stagedDecision !== null && this.stagedDecision !== "skip") ||
          this.acceptedKind === "EVENT_PRESENT" ||
          this.acceptedKind === "NEGATIVE"),
      canSubmit:
        sentenceChosen && this.stagedDecision !== null && !this.decisionAccepted,
      canCommit: this.decisionAccepted,
    };
  }

  /** Stage the classification; nothing is posted until submit. */
  chooseDecision(decision: Decision, skipReason?: SkipReason): void {
    if (!this.guards().canClassify) {
      throw new ControllerError("sentence cannot be classified now");
    }
    if (decision === "skip" && !skipReason) {
      throw new ControllerError("skip needs a reason");
    }
    this.stagedDecision = decision;
    this.stagedSkipReason = skipReason ?? null;
  }

  private validateSpan(selection: Omit<SpanSelection, "doc_id">): void {
    if (this.doc === null || this.selectedSentence === null) {
      throw new ControllerError("no sentence selected");
    }
    if (selection.kind === "ARGUMENT" && !selection.role) {
      throw new ControllerError("argument needs a role");
    }
    if (
      !spanInsideSentence(this.doc, this.selectedSentence, selection.start, selection.end)
    ) {
      throw new ControllerError("selection lies outside the selected sentence");
    }
  }

  /** Mark a span: staged before submission, posted directly afterwards. */
  async markSpan(
    selection: Omit<SpanSelection, "doc_id">,
  ): Promise<AnnotationRecordView | null> {
    this.validateSpan(selection);
    const guards = this.guards();
    if (selection.kind === "ANCHOR" && !guards.canAddAnchor) {
      throw new ControllerError("anchors need an event-present classification");
    }
    if (selection.kind === "ARGUMENT" && !guards.canAddArgument) {
      throw new ControllerError(
        "arguments unlock once the event sentence is accepted",
      );
    }
    if (selection.kind === "INTERESTING" && !guards.canAddInteresting) {
      throw new ControllerError("classify the sentence first");
    }
    const full: SpanSelection = { ...selection, doc_id: this.doc!.doc_id };
    if (!this.decisionAccepted) {
      this.stagedSelections.push(full);
      return null;
    }
    return this.postSpan(full);
  }

  selectionText(selection: SpanSelection): string {
    if (this.doc === null) throw new ControllerError("no document open");
    return sliceByPoints(this.doc.text, selection.start, selection.end);
  }

  /** Submit the staged decision, then the staged spans, in marking order.
   *
   * An event-present sentence without one staged anchor is converted, after
   * confirmation, into a NO_ANCHOR skip before anything reaches the server.
   */
  async classifyAndMark(): Promise<AnnotationRecordView[]> {
    if (this.doc === null || this.selectedSentence === null) {
      throw new ControllerError("no sentence selected");
    }
    if (this.stagedDecision === null) {
      throw new ControllerError("choose a decision first");
    }
    let decision = this.stagedDecision;
    let skipReason = this.stagedSkipReason;
    const anchors = this.stagedSelections.filter((s) => s.kind === "ANCHOR");
    if (decision === "event_present" && anchors.length === 0) {
      const ok = await this.confirm(
        "No anchors are marked; record this visit as a NO_ANCHOR skip?",
      );
      if (!ok) throw new ControllerError("submission cancelled");
      decision = "skip";
      skipReason = "NO_ANCHOR";
    }
    const payload: Parameters<Api["decision"]>[1] = {
      decision,
      doc_id: this.doc.doc_id,
      sentence_index: this.selectedSentence,
      record_id: this.nextRecordId(),
    };
    if (decision === "skip" && skipReason) payload.skip_reason = skipReason;
    const outcome = await this.api.decision(this.sessionId, payload);
    const submitted: AnnotationRecordView[] = [];
    if (outcome.record) submitted.push(outcome.record);
    if (decision === "skip") {
      this.clearSentence();
      await this.refresh();
      return submitted;
    }
    this.acceptedKind = decision === "event_present" ? "EVENT_PRESENT" : "NEGATIVE";
    const staged = this.stagedSelections;
    this.stagedSelections = [];
    for (const selection of staged) {
      submitted.push(await this.postSpan(selection));
    }
    await this.refresh();
    return submitted;
  }

  private async postSpan(selection: SpanSelection): Promise<AnnotationRecordView> {
    const result = await this.api.annotate({
      session_id: this.sessionId,
      doc_id: selection.doc_id,
      kind: selection.kind,
      span_start: selection.start,
      span_end: selection.end,
      role: selection.role ?? null,
      record_id: this.nextRecordId(),
    });
    if (selection.kind === "ANCHOR") this.anchorsSubmitted += 1;
    return result.record;
  }

  /** One-click promotion of a submitted anchor phrase. */
  async promoteAnchor(phrase: string): Promise<"ok" | "noop"> {
    const current = this.currentIndicatorPhrase();
    if (current !== null && phrase.toLowerCase() === current.toLowerCase()) {
      throw new ControllerError("already the indicator being served");
    }
    const result = await this.api.promote(this.sessionId, phrase);
    await this.refresh();
    return result.status;
  }

  async commitSentence(): Promise<string | null> {
    if (!this.decisionAccepted) throw new ControllerError("nothing to commit");
    if (this.acceptedKind === "EVENT_PRESENT" && this.anchorsSubmitted === 0) {
      const ok = await this.confirm(
        "No anchors were submitted; convert this sentence to a NO_ANCHOR skip?",
      );
      if (!ok) throw new ControllerError("commit cancelled");
    }
    const outcome = await this.api.decision(this.sessionId, { decision: "commit" });
    this.clearSentence();
    await this.refresh();
    return outcome.converted ?? null;
  }

  async nextIndicator() {
    const result = await this.api.nextIndicator(this.sessionId);
    await this.refresh();
    return result.indicator;
  }

  async markDone(): Promise<void> {
    await this.api.decision(this.sessionId, { decision: "done" });
    this.clearSentence();
    await this.refresh();
  }
}
