/** Pure helpers turning (text, segments) into renderable highlighted pieces. */

import { cpLength, cpSlice } from "./offsets.js";
import { sortSegments, type SegmentDraft } from "./validation.js";

export interface Piece {
  text: string;
  /** null for unlabelled gaps between segments */
  label: string | null;
  /** index into the segment list, or null for gaps */
  segmentIndex: number | null;
}

/**
 * Split the document into labelled and unlabelled pieces in text order.
 * Invariant: concatenating the pieces reproduces the text exactly.
 */
export function toPieces(text: string, segments: SegmentDraft[]): Piece[] {
  const indexed = segments.map((seg, i) => ({ seg, i }));
  indexed.sort((a, b) => a.seg.start - b.seg.start || a.seg.end - b.seg.end);
  const pieces: Piece[] = [];
  let cursor = 0;
  for (const { seg, i } of indexed) {
    if (seg.start > cursor) {
      pieces.push({ text: cpSlice(text, cursor, seg.start), label: null, segmentIndex: null });
    }
    pieces.push({ text: cpSlice(text, seg.start, seg.end), label: seg.label, segmentIndex: i });
    cursor = seg.end;
  }
  const total = cpLength(text);
  if (cursor < total) {
    pieces.push({ text: cpSlice(text, cursor, total), label: null, segmentIndex: null });
  }
  return pieces.filter((p) => p.text !== "");
}

const LABEL_COLORS = [
  "#fde68a",
  "#bfdbfe",
  "#bbf7d0",
  "#fbcfe8",
  "#ddd6fe",
  "#fed7aa",
  "#a5f3fc",
  "#e9d5ff",
];

/** Stable color per label from its position in the scenario's label list. */
export function labelColor(label: string, labels: readonly string[]): string {
  const index = labels.indexOf(label);
  const palette = LABEL_COLORS;
  return palette[(index >= 0 ? index : labels.length) % palette.length]!;
}

/** One-line textual summary of a segment for queue cards and status rows. */
export function describeSegments(segments: SegmentDraft[]): string {
  return sortSegments(segments)
    .map((s) => `${s.label}[${s.start},${s.end})`)
    .join(" ");
}
