/** Wire types mirroring the service payloads. */

export type RecordKind =
  | "EVENT_PRESENT"
  | "NEGATIVE"
  | "ANCHOR"
  | "ARGUMENT"
  | "INTERESTING";

export type Decision = "event_present" | "negative" | "skip";

export type SkipReason = "MULTIPLE_INSTANCES" | "UNCLEAR" | "NO_ANCHOR";

export interface IndicatorView {
  phrase: string;
  priority: number;
  origin: "brainstormed" | "promoted";
  docs_annotated: number;
  exhausted: boolean;
}

export interface AnnotationRecordView {
  event: "annotation";
  record_id: string;
  session_id: string;
  teacher_id: string;
  event_type: string;
  doc_id: string;
  kind: RecordKind;
  span_start: number;
  span_end: number;
  role: string | null;
  ts: number;
}

export interface SkipView {
  doc_id: string;
  sentence_index: number;
  reason: SkipReason;
  ts: number;
}

export interface SessionStateView {
  session_id: string;
  teacher_id: string;
  event_type: string;
  phase: "brainstorm" | "annotate" | "done";
  indicators: IndicatorView[];
  current_indicator: IndicatorView | null;
  docs_done_for_indicator: number;
  pending: {
    doc_id: string;
    sentence_index: number;
    kind: RecordKind;
    anchors: number;
  } | null;
  records: AnnotationRecordView[];
  superseded: string[];
  skips: SkipView[];
  searches: number;
  elapsed_effective: number;
  done: boolean;
  should_stop: boolean;
}

export interface DocView {
  doc_id: string;
  text: string;
  source: string;
  tokens: [number, number][];
  sentences: [number, number][];
}

export interface SessionStatsView {
  words_read: number;
  docs_opened: number;
  searches: number;
}

/** A span the teacher has marked but not yet submitted. */
export interface SpanSelection {
  doc_id: string;
  start: number; // code point offsets into the server-provided text
  end: number;
  kind: "ANCHOR" | "ARGUMENT" | "INTERESTING";
  role?: string;
}
