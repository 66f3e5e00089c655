/** Pure HTML renderers for the two-pane review layout.
 *
 * Everything returns a string so the logic is testable without a DOM; the
 * browser bootstrap assigns the results to innerHTML.
 */

import {
  annotationChips,
  escapeHtml,
  highlightAnnotations,
  type CodeIndex,
} from "./annotations.js";
import type {
  DocumentSummary,
  Job,
  SegmentView,
  SheetRow,
  SystemScore,
} from "./types.js";
import { progressLabel } from "./jobs.js";

export function renderDocumentList(documents: DocumentSummary[]): string {
  const items = documents.map((doc) => {
    const edited = doc.edited > 0 ? ` · ${doc.edited} edited` : "";
    return (
      `<li class="doc" data-doc-id="${escapeHtml(doc.doc_id)}">` +
      `${escapeHtml(doc.doc_id)} <small>${doc.segments} segments${edited}</small></li>`
    );
  });
  return `<ul class="doc-list">${items.join("")}</ul>`;
}

export function originBadge(origin: string): string {
  return `<span class="badge badge-${escapeHtml(origin)}">${escapeHtml(origin)}</span>`;
}

/** One segment row: source pane | MT pane with inline highlights, then the
 * editable final text and the annotation chips. */
export function renderSegmentRow(
  segment: SegmentView,
  codes: CodeIndex,
): string {
  const mt = segment.machine_translation;
  const highlighted =
    mt === null
      ? '<em class="no-mt">not yet machine translated</em>'
      : highlightAnnotations(mt, segment.annotations, codes).html;
  const finalText = escapeHtml(segment.final ?? "");
  return (
    `<section class="segment" data-seg-id="${segment.seg_id}" data-version="${segment.version}">` +
    `<header>#${segment.seg_id} ${originBadge(segment.origin)} ` +
    `${annotationChips(segment.annotations, codes)}</header>` +
    `<div class="panes">` +
    `<div class="pane pane-source">${escapeHtml(segment.source)}</div>` +
    `<div class="pane pane-mt">${highlighted}</div>` +
    `</div>` +
    `<textarea class="final" data-seg-id="${segment.seg_id}">${finalText}</textarea>` +
    `</section>`
  );
}

export function renderDocument(
  segments: SegmentView[],
  codes: CodeIndex,
): string {
  return segments.map((segment) => renderSegmentRow(segment, codes)).join("");
}

export function renderJob(job: Job): string {
  const error = job.error ? ` — ${escapeHtml(job.error)}` : "";
  return (
    `<div class="job job-${job.state}" data-job-id="${escapeHtml(job.job_id)}">` +
    `${escapeHtml(job.config_summary)} ${escapeHtml(progressLabel(job))}${error}</div>`
  );
}

/** Blinded sheet view: rows carry opaque tokens only, never system ids. */
export function renderBlindedSheet(rows: SheetRow[]): string {
  const body = rows
    .map(
      (row) =>
        `<tr><td>${row.segment_no}.${row.sentence_no}</td>` +
        `<td>${escapeHtml(row.source)}</td>` +
        `<td>${escapeHtml(row.blinded_id)}</td>` +
        `<td>${escapeHtml(row.translation)}</td>` +
        `<td class="score-cell" data-dim="a"></td>` +
        `<td class="score-cell" data-dim="c"></td>` +
        `<td class="score-cell" data-dim="s"></td></tr>`,
    )
    .join("");
  return (
    `<table class="sheet"><thead><tr><th>Seg</th><th>Source</th>` +
    `<th>System</th><th>Translation</th><th>A</th><th>C</th><th>S</th>` +
    `</tr></thead><tbody>${body}</tbody></table>`
  );
}

/** Post-scoring view: identities are revealed by the server, not locally. */
export function renderScoreTable(scores: SystemScore[]): string {
  const body = scores
    .map((score) => {
      const deltas = score.deltas
        ? ` <small>${escapeHtml(score.deltas["acs"] ?? "")}</small>`
        : "";
      return (
        `<tr><td>${escapeHtml(score.system_id)}</td>` +
        `<td>${score.a.toFixed(2)}</td><td>${score.c.toFixed(2)}</td>` +
        `<td>${score.s.toFixed(2)}</td><td>${score.acs.toFixed(2)}${deltas}</td></tr>`
      );
    })
    .join("");
  return (
    `<table class="scores"><thead><tr><th>System</th><th>A</th><th>C</th>` +
    `<th>S</th><th>ACS</th></tr></thead><tbody>${body}</tbody></table>`
  );
}
