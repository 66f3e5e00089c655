/** Annotation highlighting inside the machine-translation pane.
 *
 * Excerpts are wrapped in <mark> elements whose title carries the error
 * code's registry description, so hovering an underlined span explains the
 * error class.
 */

import type { Annotation, CodeInfo } from "./types.js";

export type CodeIndex = Map<string, CodeInfo>;

export function buildCodeIndex(codes: CodeInfo[]): CodeIndex {
  return new Map(codes.map((info) => [info.code, info]));
}

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

export interface HighlightResult {
  html: string;
  /** Annotations whose excerpt was not found or whose code is unknown. */
  unmatched: Annotation[];
}

function tooltip(annotation: Annotation, index: CodeIndex): string {
  const info = index.get(annotation.code);
  const parts = [`[${annotation.code}] ${info ? info.description : ""}`.trim()];
  if (annotation.suggestion) {
    parts.push(`Suggestion: ${annotation.suggestion}`);
  }
  return parts.join(" ");
}

/** Wrap the first unhighlighted occurrence of each annotated excerpt.
 *
 * Codes must resolve against the registry; an annotation with an unknown
 * code or an excerpt absent from the text is returned as unmatched instead
 * of being guessed at.
 */
export function highlightAnnotations(
  text: string,
  annotations: Annotation[],
  index: CodeIndex,
): HighlightResult {
  // work over plain-text spans so a later excerpt can't match inside an
  // earlier annotation's markup
  let spans: { text: string; html: string | null }[] = [{ text, html: null }];
  const unmatched: Annotation[] = [];

  for (const annotation of annotations) {
    if (!index.has(annotation.code) || annotation.excerpt === "") {
      unmatched.push(annotation);
      continue;
    }
    let placed = false;
    const next: typeof spans = [];
    for (const span of spans) {
      if (placed || span.html !== null) {
        next.push(span);
        continue;
      }
      const at = span.text.indexOf(annotation.excerpt);
      if (at < 0) {
        next.push(span);
        continue;
      }
      placed = true;
      if (at > 0) next.push({ text: span.text.slice(0, at), html: null });
      const marked =
        `<mark class="ann" data-code="${escapeHtml(annotation.code)}"` +
        ` title="${escapeHtml(tooltip(annotation, index))}">` +
        `${escapeHtml(annotation.excerpt)}</mark>`;
      next.push({ text: annotation.excerpt, html: marked });
      const rest = span.text.slice(at + annotation.excerpt.length);
      if (rest) next.push({ text: rest, html: null });
    }
    spans = next;
    if (!placed) unmatched.push(annotation);
  }

  const html = spans
    .map((span) => (span.html !== null ? span.html : escapeHtml(span.text)))
    .join("");
  return { html, unmatched };
}

/** One-line chip list summarizing a segment's annotations. */
export function annotationChips(
  annotations: Annotation[],
  index: CodeIndex,
): string {
  if (annotations.length === 0) {
    return '<span class="chip chip-none">NONE</span>';
  }
  return annotations
    .map((annotation) => {
      const title = escapeHtml(tooltip(annotation, index));
      return (
        `<span class="chip" title="${title}">` +
        `${escapeHtml(annotation.code)}</span>`
      );
    })
    .join(" ");
}
