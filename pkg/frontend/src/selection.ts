/** Offset arithmetic over the server-provided document payload.
 *
 * Server offsets count Unicode code points; JavaScript strings index UTF-16
 * code units. Everything here converts at the boundary so a span submitted
 * from the UI round-trips byte-identically. No offsets are ever derived
 * from rendered markup.
 */
import type { DocView } from "./types.js";

/** UTF-16 index -> code point index. */
export function toCodePoints(text: string, utf16Index: number): number {
  let points = 0;
  let i = 0;
  while (i < utf16Index && i < text.length) {
    const code = text.codePointAt(i)!;
    i += code > 0xffff ? 2 : 1;
    points += 1;
  }
  return points;
}

/** Code point index -> UTF-16 index. */
export function toUtf16(text: string, pointIndex: number): number {
  let i = 0;
  let points = 0;
  while (points < pointIndex && i < text.length) {
    const code = text.codePointAt(i)!;
    i += code > 0xffff ? 2 : 1;
    points += 1;
  }
  return i;
}

/** Slice by code point offsets. */
export function sliceByPoints(text: string, start: number, end: number): string {
  return text.slice(toUtf16(text, start), toUtf16(text, end));
}

export function tokenAt(doc: DocView, offset: number): number | null {
  for (let i = 0; i < doc.tokens.length; i += 1) {
    const [start, end] = doc.tokens[i];
    if (start <= offset && offset < end) return i;
  }
  return null;
}

export function sentenceOfToken(doc: DocView, tokenIndex: number): number | null {
  for (let s = 0; s < doc.sentences.length; s += 1) {
    const [first, last] = doc.sentences[s];
    if (first <= tokenIndex && tokenIndex < last) return s;
  }
  return null;
}

/** Character span of a sentence: first token start to last token end. */
export function sentenceCharSpan(doc: DocView, sentenceIndex: number): [number, number] {
  const [first, last] = doc.sentences[sentenceIndex];
  return [doc.tokens[first][0], doc.tokens[last - 1][1]];
}

/** Sentence containing a character offset, if any token covers it. */
export function sentenceAt(doc: DocView, offset: number): number | null {
  const token = tokenAt(doc, offset);
  return token === null ? null : sentenceOfToken(doc, token);
}

export function spanInsideSentence(
  doc: DocView,
  sentenceIndex: number,
  start: number,
  end: number,
): boolean {
  const [s, e] = sentenceCharSpan(doc, sentenceIndex);
  return s <= start && start < end && end <= e;
}

/** Snap a raw [start, end) range to covered token boundaries. */
export function snapToTokens(
  doc: DocView,
  start: number,
  end: number,
): [number, number] | null {
  let snappedStart: number | null = null;
  let snappedEnd: number | null = null;
  for (const [tokStart, tokEnd] of doc.tokens) {
    if (tokEnd <= start || tokStart >= end) continue;
    if (snappedStart === null) snappedStart = tokStart;
    snappedEnd = tokEnd;
  }
  if (snappedStart === null || snappedEnd === null) return null;
  return [snappedStart, snappedEnd];
}

export function foldedTokens(doc: DocView): string[] {
  return doc.tokens.map(([start, end]) => sliceByPoints(doc.text, start, end).toLowerCase());
}

/** Character ranges where the phrase occurs as consecutive folded tokens.
 * Pre-seeds find-in-document when a search result opens. */
export function findPhrase(doc: DocView, phrase: string): [number, number][] {
  const needle = phrase.toLowerCase().split(" ").filter((part) => part.length > 0);
  if (needle.length === 0) return [];
  const tokens = foldedTokens(doc);
  const spans: [number, number][] = [];
  for (let i = 0; i + needle.length <= tokens.length; i += 1) {
    let hit = true;
    for (let k = 0; k < needle.length; k += 1) {
      if (tokens[i + k] !== needle[k]) {
        hit = false;
        break;
      }
    }
    if (hit) {
      spans.push([doc.tokens[i][0], doc.tokens[i + needle.length - 1][1]]);
    }
  }
  return spans;
}

/** Does the sentence contain the phrase as consecutive folded tokens? */
export function sentenceContainsPhrase(
  doc: DocView,
  sentenceIndex: number,
  phrase: string,
): boolean {
  return findPhrase(doc, phrase).some(
    ([start, end]) => sentenceAt(doc, start) === sentenceIndex && sentenceAt(doc, end - 1) === sentenceIndex,
  );
}
