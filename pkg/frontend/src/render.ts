/**
 * Abstract rendering: plain monospaced text with character-preserving markup.
 *
 * Section labels ("RESULTS:") and already-submitted spans get styling wrappers,
 * but the concatenated text content always equals the raw context string, so
 * offset math over text nodes stays exact (see offsets.ts).
 */

const LABEL_RE = /(^|\s)([A-Z][A-Z/ ]{2,30}:)(?=\s)/g;

export interface HighlightSpan {
  start: number;
  end: number;
}

/** Non-overlapping, sorted, in-bounds copy of the requested highlights. */
export function normalizeHighlights(spans: HighlightSpan[], length: number): HighlightSpan[] {
  const sorted = spans
    .filter((s) => s.start >= 0 && s.end <= length && s.start < s.end)
    .sort((a, b) => a.start - b.start || a.end - b.end);
  const out: HighlightSpan[] = [];
  for (const span of sorted) {
    const last = out[out.length - 1];
    if (last && span.start < last.end) {
      last.end = Math.max(last.end, span.end);
    } else {
      out.push({ ...span });
    }
  }
  return out;
}

/**
 * Render `context` into `container` as text nodes plus <mark> wrappers for
 * submitted spans and <span class="section-label"> wrappers for labels.
 * Invariant: container.textContent === context.
 */
export function renderContext(
  container: HTMLElement,
  context: string,
  highlights: HighlightSpan[] = [],
): void {
  container.textContent = "";
  const merged = normalizeHighlights(highlights, context.length);
  let cursor = 0;
  for (const span of merged) {
    if (span.start > cursor) {
      appendPlain(container, context.slice(cursor, span.start));
    }
    const mark = document.createElement("mark");
    mark.className = "submitted-span";
    mark.textContent = context.slice(span.start, span.end);
    container.appendChild(mark);
    cursor = span.end;
  }
  if (cursor < context.length) {
    appendPlain(container, context.slice(cursor));
  }
}

/** Append text, wrapping section labels without altering characters. */
function appendPlain(container: HTMLElement, text: string): void {
  let cursor = 0;
  LABEL_RE.lastIndex = 0;
  for (const match of text.matchAll(LABEL_RE)) {
    const labelStart = (match.index ?? 0) + match[1].length;
    const label = match[2];
    if (labelStart > cursor) {
      container.appendChild(document.createTextNode(text.slice(cursor, labelStart)));
    }
    const wrapper = document.createElement("span");
    wrapper.className = "section-label";
    wrapper.textContent = label;
    container.appendChild(wrapper);
    cursor = labelStart + label.length;
  }
  if (cursor < text.length) {
    container.appendChild(document.createTextNode(text.slice(cursor)));
  }
}
