/**
 * Selection-to-offset mapping over the rendered abstract.
 *
 * The hard requirement: offsets reported to the server are exact character
 * offsets into the raw context string. Rendering may wrap parts of the text
 * in styling elements (section labels, submitted-span highlights) but must
 * never add, drop or reorder characters, so walking text nodes and counting
 * characters reproduces raw offsets exactly.
 */

export interface SelectionOffsets {
  start: number;
  end: number;
  text: string;
}

/** Absolute character offset of (node, offsetInNode) within container. */
export function absoluteOffset(container: Node, node: Node, offset: number): number {
  if (node.nodeType !== Node.TEXT_NODE) {
    // offset counts child nodes: sum the text length of the skipped children
    let total = 0;
    for (let i = 0; i < offset; i++) {
      total += (node.childNodes[i].textContent ?? "").length;
    }
    return offsetOfNode(container, node) + total;
  }
  return offsetOfNode(container, node) + offset;
}

function offsetOfNode(container: Node, target: Node): number {
  // characters of every text node strictly before `target` in document order
  let total = 0;
  const walker = document.createTreeWalker(container, NodeFilter.SHOW_TEXT);
  let current = walker.nextNode();
  while (current !== null) {
    if (current === target || isAncestor(target, current)) {
      return total;
    }
    const position = target.compareDocumentPosition(current);
    if (position & Node.DOCUMENT_POSITION_FOLLOWING) {
      return total;
    }
    total += (current.textContent ?? "").length;
    current = walker.nextNode();
  }
  return total;
}

function isAncestor(maybeAncestor: Node, node: Node): boolean {
  let current: Node | null = node;
  while (current !== null) {
    if (current === maybeAncestor) return true;
    current = current.parentNode;
  }
  return false;
}

/**
 * Map a DOM Range inside `container` to raw-context offsets.
 * Returns null for collapsed or out-of-container ranges.
 */
export function rangeToOffsets(container: Node, range: Range): SelectionOffsets | null {
  if (range.collapsed) return null;
  if (!isAncestor(container, range.commonAncestorContainer)) return null;
  const start = absoluteOffset(container, range.startContainer, range.startOffset);
  const end = absoluteOffset(container, range.endContainer, range.endOffset);
  if (end <= start) return null;
  const raw = container.textContent ?? "";
  return { start, end, text: raw.slice(start, end) };
}

/** Current window selection mapped to offsets, or null when unusable. */
export function selectionToOffsets(container: Node): SelectionOffsets | null {
  const selection = window.getSelection();
  if (!selection || selection.rangeCount === 0) return null;
  return rangeToOffsets(container, selection.getRangeAt(0));
}

/**
 * The server-side integrity rule, mirrored client-side: the reported span
 * must reproduce the exact context slice.
 */
export function sliceCheck(context: string, spanStart: number, answerText: string): boolean {
  return context.slice(spanStart, spanStart + answerText.length) === answerText;
}
