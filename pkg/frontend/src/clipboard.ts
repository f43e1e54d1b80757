// Clipboard writes must carry the server's text byte-for-byte, so the
// payload is passed through untouched. When the Clipboard API is
// unavailable or denied, the caller gets "fallback" and should render
// the payload in a selectable box instead.

export interface ClipboardLike {
  writeText(text: string): Promise<void>;
}

export type CopyOutcome = "clipboard" | "fallback";

export async function copyText(
  clipboard: ClipboardLike | undefined,
  text: string,
): Promise<CopyOutcome> {
  if (!clipboard) return "fallback";
  try {
    await clipboard.writeText(text);
    return "clipboard";
  } catch {
    return "fallback";
  }
}
