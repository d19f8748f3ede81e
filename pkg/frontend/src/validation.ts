/**
 * Client-side segment validation, mirroring the review service's rules so
 * the UI never posts a verdict the server would reject:
 *   - every label must belong to the scenario's label set;
 *   - every span must satisfy 0 <= start < end <= length-in-scalars;
 *   - spans, sorted by (start, end), must not overlap.
 */

import { cpLength } from "./offsets.js";

export interface SegmentDraft {
  label: string;
  start: number;
  end: number;
}

export function sortSegments(segments: SegmentDraft[]): SegmentDraft[] {
  return [...segments].sort((a, b) => a.start - b.start || a.end - b.end);
}

/** Returns human-readable problems; an empty list means the verdict is postable. */
export function validateSegments(
  text: string,
  labels: ReadonlySet<string>,
  segments: SegmentDraft[],
): string[] {
  const problems: string[] = [];
  const n = cpLength(text);
  const sorted = sortSegments(segments);
  let prevEnd = 0;
  sorted.forEach((seg, i) => {
    if (!labels.has(seg.label)) {
      problems.push(`segments[${i}]: unknown label "${seg.label}"`);
    }
    if (!Number.isInteger(seg.start) || !Number.isInteger(seg.end)) {
      problems.push(`segments[${i}]: offsets must be integers`);
      return;
    }
    if (!(0 <= seg.start && seg.start < seg.end && seg.end <= n)) {
      problems.push(
        `segments[${i}]: span (${seg.start}, ${seg.end}) outside text of length ${n}`,
      );
      return;
    }
    if (seg.start < prevEnd) {
      problems.push(
        `segments[${i}]: span (${seg.start}, ${seg.end}) overlaps the previous span`,
      );
    }
    prevEnd = Math.max(prevEnd, seg.end);
  });
  return problems;
}
