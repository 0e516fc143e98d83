/**
 * Span segmentation for entity highlighting.
 *
 * Spans come from the interpretation endpoint and index into the
 * summary text directly; the client never re-matches entities, it only
 * slices where the service said to.
 */

import type { EntitySpan } from "./types.js";

/** One run of text; span is null for unhighlighted stretches. */
export interface Segment {
  text: string;
  span: EntitySpan | null;
}

const ESCAPES: Record<string, string> = {
  "&": "&amp;",
  "<": "&lt;",
  ">": "&gt;",
  '"': "&quot;",
  "'": "&#39;",
};

export function escapeHtml(s: string): string {
  return s.replace(/[&<>"']/g, (ch) => ESCAPES[ch]);
}

/**
 * Split text into plain and highlighted segments covering every
 * character exactly once.  The service guarantees non-overlapping
 * in-range spans; a payload that breaks that cannot be rendered
 * truthfully, so segmentation throws instead of guessing.
 */
export function segmentText(text: string, spans: EntitySpan[]): Segment[] {
  const ordered = [...spans].sort((a, b) => a.start - b.start || a.end - b.end);
  const out: Segment[] = [];
  let cursor = 0;
  for (const span of ordered) {
    if (span.start < 0 || span.end > text.length || span.start >= span.end) {
      throw new Error(`span [${span.start}, ${span.end}) out of range for "${span.entity}"`);
    }
    if (span.start < cursor) {
      throw new Error(`overlapping span at ${span.start} for "${span.entity}"`);
    }
    if (span.start > cursor) {
      out.push({ text: text.slice(cursor, span.start), span: null });
    }
    out.push({ text: text.slice(span.start, span.end), span });
    cursor = span.end;
  }
  if (cursor < text.length) {
    out.push({ text: text.slice(cursor), span: null });
  }
  return out;
}
