/** Browser wiring: three panes (search box, document list, text pane) plus
 * the indicator queue, role picker, timer, and hotkeys. All offsets come
 * from the server payload's token table; the DOM renders one span per
 * token carrying its index, so a click or drag maps back to code point
 * offsets without ever measuring markup.
 */
import { ApiClient } from "./api.js";
import { SessionController } from "./controller.js";
import { resolveHotkey, hotkeyLegend } from "./hotkeys.js";
import { phaseBanner, queueRows } from "./queue.js";
import { sliceByPoints, snapToTokens } from "./selection.js";
import { timerView } from "./timer.js";
import type { SpanSelection } from "./types.js";

const api = new ApiClient("");
const controller = new SessionController(api, (msg) => window.confirm(msg));

let roles: string[] = [];
let activeRole: string | null = null;
let lastAnchorText: string | null = null;
let lastActionAt = Date.now();

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function note(message: string, isError = false): void {
  const banner = el<HTMLDivElement>("notice");
  banner.textContent = message;
  banner.className = isError ? "notice error" : "notice";
}

async function guarded(work: () => Promise<void>): Promise<void> {
  try {
    await work();
    lastActionAt = Date.now();
    render();
  } catch (error) {
    note(error instanceof Error ? error.message : String(error), true);
    render();
  }
}

function render(): void {
  const state = controller.state;
  if (state === null) return;
  el<HTMLDivElement>("phase-banner").textContent = phaseBanner(state);

  const queue = el<HTMLUListElement>("queue");
  queue.innerHTML = "";
  for (const row of queueRows(state)) {
    const item = document.createElement("li");
    item.textContent = `${row.phrase}  ${row.progress}`;
    if (row.promoted) item.textContent += "  [promoted]";
    if (row.current) item.classList.add("current");
    if (row.exhausted) item.classList.add("exhausted");
    queue.appendChild(item);
  }

  const timer = timerView(state.elapsed_effective, (Date.now() - lastActionAt) / 1000);
  const clock = el<HTMLSpanElement>("timer");
  clock.textContent = timer.label;
  clock.className = timer.budgetReached ? "timer over-budget" : "timer";

  const guards = controller.guards();
  el<HTMLButtonElement>("btn-event").disabled = !guards.canClassify;
  el<HTMLButtonElement>("btn-negative").disabled = !guards.canClassify;
  el<HTMLButtonElement>("btn-skip-multiple").disabled = !guards.canClassify;
  el<HTMLButtonElement>("btn-skip-unclear").disabled = !guards.canClassify;
  el<HTMLButtonElement>("btn-submit").disabled = !guards.canSubmit;
  el<HTMLButtonElement>("btn-commit").disabled = !guards.canCommit;
  el<HTMLButtonElement>("btn-anchor").disabled = !guards.canAddAnchor;
  el<HTMLButtonElement>("btn-argument").disabled =
    !guards.canAddArgument || activeRole === null;
  el<HTMLButtonElement>("btn-interesting").disabled = !guards.canAddInteresting;
  el<HTMLButtonElement>("btn-promote").disabled = lastAnchorText === null;
  el<HTMLDivElement>("staged").textContent = controller.stagedSelections
    .map((s) => `${s.kind}${s.role ? `(${s.role})` : ""}: "${controller.selectionText(s)}"`)
    .join("   ");
}

function renderDoc(): void {
  const doc = controller.doc;
  const pane = el<HTMLDivElement>("text-pane");
  pane.innerHTML = "";
  if (doc === null) return;
  const finds = new Set<number>();
  for (const [start] of controller.findSpans) finds.add(start);
  let cursor = 0;
  doc.tokens.forEach(([start, end], index) => {
    if (start > cursor) {
      pane.appendChild(document.createTextNode(sliceByPoints(doc.text, cursor, start)));
    }
    const span = document.createElement("span");
    span.textContent = sliceByPoints(doc.text, start, end);
    span.dataset.token = String(index);
    span.dataset.start = String(start);
    span.dataset.end = String(end);
    span.className = "token";
    if (finds.has(start)) span.classList.add("find-hit");
    if (controller.selectedSentence !== null) {
      const [first, last] = doc.sentences[controller.selectedSentence];
      if (first <= index && index < last) span.classList.add("selected-sentence");
    }
    pane.appendChild(span);
    cursor = end;
  });
}

function selectedTokenRange(): [number, number] | null {
  const selection = window.getSelection();
  if (!selection || selection.rangeCount === 0 || selection.isCollapsed) return null;
  const range = selection.getRangeAt(0);
  const tokens = Array.from(
    el<HTMLDivElement>("text-pane").querySelectorAll<HTMLSpanElement>("span.token"),
  ).filter((span) => range.intersectsNode(span));
  if (tokens.length === 0) return null;
  const start = Number(tokens[0].dataset.start);
  const end = Number(tokens[tokens.length - 1].dataset.end);
  return controller.doc ? snapToTokens(controller.doc, start, end) : null;
}

function markSelection(kind: "ANCHOR" | "ARGUMENT" | "INTERESTING"): void {
  const range = selectedTokenRange();
  if (range === null) {
    note("select tokens in the document first", true);
    return;
  }
  const selection: Omit<SpanSelection, "doc_id"> = {
    start: range[0],
    end: range[1],
    kind,
  };
  if (kind === "ARGUMENT") {
    if (activeRole === null) {
      note("pick a role before marking arguments", true);
      return;
    }
    selection.role = activeRole;
  }
  guarded(async () => {
    await controller.markSpan(selection);
    if (kind === "ANCHOR" && controller.doc) {
      lastAnchorText = sliceByPoints(controller.doc.text, range[0], range[1]);
    }
  });
}

async function loadRoles(): Promise<void> {
  roles = (el<HTMLInputElement>("roles").value || "")
    .split(",")
    .map((role) => role.trim())
    .filter((role) => role.length > 0);
  const picker = el<HTMLDivElement>("role-picker");
  picker.innerHTML = "";
  roles.forEach((role, index) => {
    const button = document.createElement("button");
    button.textContent = `${index + 1}: ${role}`;
    button.onclick = () => {
      activeRole = role;
      note(`role: ${role}`);
      render();
    };
    picker.appendChild(button);
  });
}

function wire(): void {
  el<HTMLButtonElement>("btn-start").onclick = () =>
    guarded(async () => {
      await controller.start(
        el<HTMLInputElement>("teacher").value || "teacher",
        el<HTMLInputElement>("event-type").value || "unrest.protest",
      );
      await loadRoles();
      note(`session ${controller.sessionId} started`);
    });

  el<HTMLButtonElement>("btn-brainstorm").onclick = () =>
    guarded(async () => {
      const phrases = el<HTMLTextAreaElement>("phrases")
        .value.split("\n")
        .map((line) => line.trim())
        .filter((line) => line.length > 0);
      await controller.brainstorm(phrases);
      const current = controller.currentIndicatorPhrase();
      if (current) el<HTMLInputElement>("search-box").value = current;
      note("indicator list queued");
    });

  el<HTMLButtonElement>("btn-search").onclick = () =>
    guarded(async () => {
      const docIds = await controller.runSearch(
        el<HTMLInputElement>("search-box").value || undefined,
      );
      const list = el<HTMLUListElement>("doc-list");
      list.innerHTML = "";
      if (docIds.length === 0) {
        list.innerHTML = "<li>no documents</li>";
        return;
      }
      for (const docId of docIds) {
        const item = document.createElement("li");
        const link = document.createElement("a");
        link.textContent = docId;
        link.href = "#";
        link.onclick = (event) => {
          event.preventDefault();
          guarded(async () => {
            await controller.openDoc(docId);
            renderDoc();
          });
        };
        item.appendChild(link);
        list.appendChild(item);
      }
    });

  el<HTMLDivElement>("text-pane").onclick = (event) => {
    const target = event.target as HTMLElement;
    if (!target.dataset?.start) return;
    controller.selectSentenceAt(Number(target.dataset.start));
    renderDoc();
    render();
  };

  el<HTMLButtonElement>("btn-event").onclick = () =>
    guarded(async () => controller.chooseDecision("event_present"));
  el<HTMLButtonElement>("btn-negative").onclick = () =>
    guarded(async () => controller.chooseDecision("negative"));
  el<HTMLButtonElement>("btn-skip-multiple").onclick = () =>
    guarded(async () => controller.chooseDecision("skip", "MULTIPLE_INSTANCES"));
  el<HTMLButtonElement>("btn-skip-unclear").onclick = () =>
    guarded(async () => controller.chooseDecision("skip", "UNCLEAR"));

  el<HTMLButtonElement>("btn-anchor").onclick = () => markSelection("ANCHOR");
  el<HTMLButtonElement>("btn-argument").onclick = () => markSelection("ARGUMENT");
  el<HTMLButtonElement>("btn-interesting").onclick = () => markSelection("INTERESTING");

  el<HTMLButtonElement>("btn-submit").onclick = () =>
    guarded(async () => {
      const records = await controller.classifyAndMark();
      note(`${records.length} records accepted`);
      renderDoc();
    });

  el<HTMLButtonElement>("btn-commit").onclick = () =>
    guarded(async () => {
      const converted = await controller.commitSentence();
      note(converted ? `converted to skip (${converted})` : "sentence committed");
      renderDoc();
    });

  el<HTMLButtonElement>("btn-promote").onclick = () =>
    guarded(async () => {
      if (lastAnchorText === null) return;
      const status = await controller.promoteAnchor(lastAnchorText);
      note(status === "ok" ? `promoted "${lastAnchorText}"` : "already queued");
    });

  el<HTMLButtonElement>("btn-next").onclick = () =>
    guarded(async () => {
      const indicator = await controller.nextIndicator();
      if (indicator) el<HTMLInputElement>("search-box").value = indicator.phrase;
      note(indicator ? `serving "${indicator.phrase}"` : "all indicators exhausted");
    });

  el<HTMLButtonElement>("btn-done").onclick = () =>
    guarded(async () => controller.markDone());

  document.addEventListener("keydown", (event) => {
    const action = resolveHotkey(event.key, {
      typingInField:
        event.target instanceof HTMLInputElement ||
        event.target instanceof HTMLTextAreaElement,
      withModifier: event.ctrlKey || event.metaKey || event.altKey,
    });
    if (action === null) return;
    event.preventDefault();
    if (action.type === "decision") {
      guarded(async () => controller.chooseDecision(action.decision));
    } else if (action.type === "skip") {
      guarded(async () => controller.chooseDecision("skip", action.reason));
    } else if (action.type === "mark") {
      markSelection(action.kind);
    } else if (action.type === "role") {
      if (action.index < roles.length) {
        activeRole = roles[action.index];
        note(`role: ${activeRole}`);
        render();
      }
    } else if (action.type === "submit") {
      el<HTMLButtonElement>("btn-submit").click();
    } else if (action.type === "commit") {
      el<HTMLButtonElement>("btn-commit").click();
    } else if (action.type === "promote") {
      el<HTMLButtonElement>("btn-promote").click();
    } else if (action.type === "next") {
      el<HTMLButtonElement>("btn-next").click();
    }
  });

  const legend = el<HTMLUListElement>("hotkey-legend");
  for (const [key, what] of hotkeyLegend()) {
    const item = document.createElement("li");
    item.textContent = `${key} - ${what}`;
    legend.appendChild(item);
  }

  window.setInterval(render, 1000); // keep the timer ticking between actions
}

wire();
