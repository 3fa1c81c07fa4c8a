/** Indicator queue view model: serving order, badges, budget counter. */
import type { IndicatorView, SessionStateView } from "./types.js";

export const PER_INDICATOR_BUDGET = 10;

export interface QueueRow {
  phrase: string;
  priority: number;
  promoted: boolean;
  exhausted: boolean;
  current: boolean;
  progress: string; // "n/10"
}

export function queueRows(state: SessionStateView): QueueRow[] {
  const ordered = [...state.indicators].sort((a, b) => a.priority - b.priority);
  const current = ordered.find((ind) => !ind.exhausted) ?? null;
  return ordered.map((ind) => ({
    phrase: ind.phrase,
    priority: ind.priority,
    promoted: ind.origin === "promoted",
    exhausted: ind.exhausted,
    current: current !== null && ind.priority === current.priority,
    progress: `${ind.docs_annotated}/${PER_INDICATOR_BUDGET}`,
  }));
}

export function servingRow(state: SessionStateView): QueueRow | null {
  return queueRows(state).find((row) => row.current) ?? null;
}

export function phaseBanner(state: SessionStateView): string {
  if (state.phase === "brainstorm") return "Brainstorm an indicator list to begin";
  if (state.phase === "done") return "Session closed";
  const serving = state.current_indicator;
  return serving === null
    ? "All indicators exhausted"
    : `Serving "${serving.phrase}" (${state.docs_done_for_indicator}/${PER_INDICATOR_BUDGET} documents)`;
}

export function isKnownIndicator(state: SessionStateView, phrase: string): boolean {
  const folded = phrase.toLowerCase();
  return state.indicators.some((ind: IndicatorView) => ind.phrase === folded);
}
