/**
 * Unicode scalar (code point) offset helpers.
 *
 * The review service counts span offsets in Unicode scalar values, while
 * JavaScript strings index UTF-16 code units, so every DOM selection has to
 * be converted before it touches the API and vice versa.
 */

/** Number of Unicode scalar values in the string. */
export function cpLength(text: string): number {
  let n = 0;
  for (const _ of text) n++;
  return n;
}

/** Convert a code-point index to the corresponding UTF-16 code-unit index. */
export function cpToUtf16(text: string, cpIndex: number): number {
  if (cpIndex < 0) throw new RangeError(`negative offset ${cpIndex}`);
  let units = 0;
  let points = 0;
  for (const ch of text) {
    if (points === cpIndex) return units;
    units += ch.length;
    points++;
  }
  if (points === cpIndex) return units;
  throw new RangeError(`offset ${cpIndex} past end of text (${points} scalars)`);
}

/** Convert a UTF-16 code-unit index back to a code-point index. */
export function utf16ToCp(text: string, utf16Index: number): number {
  if (utf16Index < 0) throw new RangeError(`negative offset ${utf16Index}`);
  let units = 0;
  let points = 0;
  for (const ch of text) {
    if (units >= utf16Index) break;
    units += ch.length;
    points++;
  }
  if (units !== utf16Index) {
    throw new RangeError(
      `offset ${utf16Index} is not on a scalar boundary or past the end`,
    );
  }
  return points;
}

/** Slice by code-point offsets, [start, end). */
export function cpSlice(text: string, start: number, end: number): string {
  return text.slice(cpToUtf16(text, start), cpToUtf16(text, end));
}

/**
 * Snap a UTF-16 index to the nearest scalar boundary at or before it, then
 * return the code-point index. Used when a drag lands inside a surrogate
 * pair.
 */
export function snapToScalar(text: string, utf16Index: number): number {
  let units = 0;
  let points = 0;
  for (const ch of text) {
    if (units + ch.length > utf16Index) return points;
    units += ch.length;
    points++;
  }
  return points;
}
