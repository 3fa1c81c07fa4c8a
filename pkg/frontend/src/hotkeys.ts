/** Keyboard mapping: decisions take a couple of seconds, so every record
 * kind and skip reason is one keystroke. Number keys pick argument roles.
 */

export type HotkeyAction =
  | { type: "decision"; decision: "event_present" | "negative" }
  | { type: "skip"; reason: "MULTIPLE_INSTANCES" | "UNCLEAR" }
  | { type: "mark"; kind: "ANCHOR" | "ARGUMENT" | "INTERESTING" }
  | { type: "role"; index: number }
  | { type: "submit" }
  | { type: "commit" }
  | { type: "promote" }
  | { type: "next" };

const KEYMAP: Record<string, HotkeyAction> = {
  e: { type: "decision", decision: "event_present" },
  n: { type: "decision", decision: "negative" },
  m: { type: "skip", reason: "MULTIPLE_INSTANCES" },
  u: { type: "skip", reason: "UNCLEAR" },
  a: { type: "mark", kind: "ANCHOR" },
  g: { type: "mark", kind: "ARGUMENT" },
  i: { type: "mark", kind: "INTERESTING" },
  enter: { type: "submit" },
  c: { type: "commit" },
  p: { type: "promote" },
  x: { type: "next" },
};

for (let digit = 1; digit <= 9; digit += 1) {
  KEYMAP[String(digit)] = { type: "role", index: digit - 1 };
}

/** Resolve a key press; modifier chords and typing fields stay untouched. */
export function resolveHotkey(
  key: string,
  options: { typingInField?: boolean; withModifier?: boolean } = {},
): HotkeyAction | null {
  if (options.typingInField || options.withModifier) return null;
  return KEYMAP[key.toLowerCase()] ?? null;
}

export function hotkeyLegend(): [string, string][] {
  return [
    ["e", "event present"],
    ["n", "negative"],
    ["m", "skip: multiple instances"],
    ["u", "skip: unclear"],
    ["a", "mark anchor"],
    ["g", "mark argument"],
    ["i", "mark interesting"],
    ["1-9", "choose argument role"],
    ["enter", "submit sentence"],
    ["c", "commit"],
    ["p", "promote last anchor"],
    ["x", "next indicator"],
  ];
}
