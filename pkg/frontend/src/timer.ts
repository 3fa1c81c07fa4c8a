/** Session timer mirroring the server's break-clipped accounting.
 *
 * The server only accrues effective time when actions land, so between
 * state refreshes the display advances locally by at most the two-minute
 * clip per idle stretch, exactly like the server will account for the gap
 * once the next action arrives. The four-hour budget is advisory: the cue
 * flips on, annotation stays possible.
 */

export const BREAK_CLIP_SECONDS = 120;
export const SESSION_BUDGET_SECONDS = 4 * 3600;

export interface TimerView {
  displaySeconds: number;
  budgetReached: boolean;
  label: string;
}

export function effectiveDisplaySeconds(
  serverElapsed: number,
  secondsSinceLastAction: number,
): number {
  const idle = Math.max(0, secondsSinceLastAction);
  return serverElapsed + Math.min(idle, BREAK_CLIP_SECONDS);
}

export function formatClock(totalSeconds: number): string {
  const seconds = Math.floor(totalSeconds);
  const h = Math.floor(seconds / 3600);
  const m = Math.floor((seconds % 3600) / 60);
  const s = seconds % 60;
  const mm = String(m).padStart(2, "0");
  const ss = String(s).padStart(2, "0");
  return h > 0 ? `${h}:${mm}:${ss}` : `${m}:${ss}`;
}

export function timerView(
  serverElapsed: number,
  secondsSinceLastAction: number,
  budget: number = SESSION_BUDGET_SECONDS,
): TimerView {
  const displaySeconds = effectiveDisplaySeconds(serverElapsed, secondsSinceLastAction);
  return {
    displaySeconds,
    budgetReached: displaySeconds >= budget,
    label: `${formatClock(displaySeconds)} / ${formatClock(budget)}`,
  };
}
