// The server contract indexes characters by Unicode scalar values.
// Browser strings are UTF-16, so every index crossing the boundary
// goes through one of these converters.

export function scalars(text: string): string[] {
  return Array.from(text);
}

export function scalarLength(text: string): number {
  let n = 0;
  for (let i = 0; i < text.length; ) {
    i += text.codePointAt(i)! > 0xffff ? 2 : 1;
    n += 1;
  }
  return n;
}

/** UTF-16 offset of the scalar at `scalarIndex`. */
export function scalarToUtf16(text: string, scalarIndex: number): number {
  if (scalarIndex < 0) throw new RangeError(`negative index ${scalarIndex}`);
  let seen = 0;
  for (let i = 0; i < text.length; ) {
    if (seen === scalarIndex) return i;
    i += text.codePointAt(i)! > 0xffff ? 2 : 1;
    seen += 1;
  }
  if (seen === scalarIndex) return text.length; // one-past-the-end is valid
  throw new RangeError(`scalar index ${scalarIndex} out of range (${seen})`);
}

/**
 * Scalar index of the character covering `utf16Index`. An offset that
 * lands on a low surrogate maps to the astral character containing it,
 * which is what a click inside a wide glyph should select.
 */
export function utf16ToScalar(text: string, utf16Index: number): number {
  if (utf16Index < 0 || utf16Index > text.length) {
    throw new RangeError(`utf-16 index ${utf16Index} out of range`);
  }
  let seen = 0;
  for (let i = 0; i < text.length; ) {
    const width = text.codePointAt(i)! > 0xffff ? 2 : 1;
    if (utf16Index < i + width) return seen;
    i += width;
    seen += 1;
  }
  return seen;
}

export function scalarAt(text: string, scalarIndex: number): string {
  const offset = scalarToUtf16(text, scalarIndex);
  const cp = text.codePointAt(offset);
  if (cp === undefined) throw new RangeError(`no scalar at ${scalarIndex}`);
  return String.fromCodePoint(cp);
}

/** Uppercase hex, at least four digits, matching the server's spelling. */
export function formatCodepoint(cp: number): string {
  return cp.toString(16).toUpperCase().padStart(4, "0");
}

export function parseCodepoint(hex: string): number {
  if (!/^[0-9A-Fa-f]{1,6}$/.test(hex)) throw new RangeError(`bad hex ${hex}`);
  return parseInt(hex, 16);
}
