/** Per-segment editing state: draft text, pre-submit undo, chunk replace.
 *
 * The editor never talks to the network; it produces the submission payload
 * and the workspace round-trips it through the API.
 */

import type { Annotation, EditRequest, SegmentView } from "./types.js";

export class SegmentEditor {
  private baseline: SegmentView;
  private draft: string;
  private annotations: Annotation[] | undefined;

  constructor(
    segment: SegmentView,
    private readonly allowAuthoring = false,
  ) {
    this.baseline = segment;
    this.draft = segment.final ?? "";
  }

  get segment(): SegmentView {
    return this.baseline;
  }

  get text(): string {
    return this.draft;
  }

  get dirty(): boolean {
    return (
      this.draft !== (this.baseline.final ?? "") || this.annotations !== undefined
    );
  }

  edit(text: string): void {
    this.draft = text;
  }

  /** Client-side undo: restore the text the segment was loaded with. */
  undo(): void {
    this.draft = this.baseline.final ?? "";
    this.annotations = undefined;
  }

  /** Editors may author annotations only when the flag is on. */
  setAnnotations(records: Annotation[]): void {
    if (!this.allowAuthoring) {
      throw new Error("annotation authoring is disabled");
    }
    this.annotations = records;
  }

  /** Whether a replace control should be enabled for this selection. */
  canReplace(find: string): boolean {
    return find !== "" && this.draft.includes(find);
  }

  /** Replace only the current chunk: the first occurrence in this draft. */
  replaceChunk(find: string, replace: string): boolean {
    if (!this.canReplace(find)) return false;
    const at = this.draft.indexOf(find);
    this.draft =
      this.draft.slice(0, at) + replace + this.draft.slice(at + find.length);
    return true;
  }

  get canSubmit(): boolean {
    return this.dirty && this.draft.trim() !== "";
  }

  submission(): EditRequest {
    const edit: EditRequest = {
      doc_id: this.baseline.doc_id,
      scope: "segment",
      seg_id: this.baseline.seg_id,
      edited_translation: this.draft,
      base_version: this.baseline.version,
    };
    if (this.annotations !== undefined) {
      edit.editor_annotations = this.annotations;
    }
    return edit;
  }

  /** Adopt the server's post-save state as the new baseline. */
  applyServerUpdate(segment: SegmentView): void {
    this.baseline = segment;
    this.draft = segment.final ?? "";
    this.annotations = undefined;
  }

  /** Rebase the draft onto a newer server version, keeping local text. */
  rebase(segment: SegmentView): void {
    this.baseline = segment;
  }
}
