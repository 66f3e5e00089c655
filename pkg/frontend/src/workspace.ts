/** Document workspace: the list of segments under review plus the save,
 * conflict, replace-all, and run flows. All state changes round-trip
 * through the service; the workspace holds only what the server returned.
 */

import { ApiClient, StaleVersionError } from "./api.js";
import type { CodeIndex } from "./annotations.js";
import { buildCodeIndex } from "./annotations.js";
import { SegmentEditor } from "./editor.js";
import { JobPoller, type PollOptions } from "./jobs.js";
import type {
  Job,
  ReplaceAllResult,
  RunRequest,
  SegmentView,
} from "./types.js";

export type SaveResult =
  | { kind: "saved"; segment: SegmentView }
  | { kind: "conflict"; conflict: EditConflict };

/** A stale-version save: the caller shows the diff and may re-apply. */
export interface EditConflict {
  detail: string;
  /** What this editor wanted to save. */
  mine: string;
  /** The segment as the server has it now. */
  theirs: SegmentView;
  /** Re-submit the local text against the server's current version. */
  reapply(): Promise<SegmentView>;
}

export class Workspace {
  private segments = new Map<number, SegmentView>();
  private codeIndex: CodeIndex = new Map();

  constructor(
    private readonly api: ApiClient,
    readonly docId: string,
  ) {}

  async load(): Promise<void> {
    const [codes, segments] = await Promise.all([
      this.api.codes(),
      this.api.getSegments(this.docId),
    ]);
    this.codeIndex = buildCodeIndex(codes);
    this.segments = new Map(segments.map((seg) => [seg.seg_id, seg]));
  }

  get codes(): CodeIndex {
    return this.codeIndex;
  }

  list(): SegmentView[] {
    return [...this.segments.values()].sort((a, b) => a.seg_id - b.seg_id);
  }

  get(segId: number): SegmentView {
    const segment = this.segments.get(segId);
    if (!segment) {
      throw new Error(`segment ${segId} is not loaded`);
    }
    return segment;
  }

  openEditor(segId: number, allowAuthoring = false): SegmentEditor {
    return new SegmentEditor(this.get(segId), allowAuthoring);
  }

  private adopt(segment: SegmentView): void {
    this.segments.set(segment.seg_id, segment);
  }

  /** Save an editor's draft; a stale version comes back as a conflict. */
  async save(editor: SegmentEditor): Promise<SaveResult> {
    try {
      const segment = await this.api.submitEdit(editor.submission());
      this.adopt(segment);
      editor.applyServerUpdate(segment);
      return { kind: "saved", segment };
    } catch (error) {
      if (!(error instanceof StaleVersionError)) throw error;
      const refreshed = await this.api.getSegments(this.docId);
      for (const segment of refreshed) this.adopt(segment);
      const theirs = this.get(editor.segment.seg_id);
      const conflict: EditConflict = {
        detail: error.detail,
        mine: editor.text,
        theirs,
        reapply: async () => {
          editor.rebase(theirs);
          const segment = await this.api.submitEdit(editor.submission());
          this.adopt(segment);
          editor.applyServerUpdate(segment);
          return segment;
        },
      };
      return { kind: "conflict", conflict };
    }
  }

  /** Document-wide find/replace; returns the server's change counts. */
  async replaceAll(find: string, replace: string): Promise<ReplaceAllResult> {
    const result = await this.api.replaceAll(this.docId, find, replace);
    const refreshed = await this.api.getSegments(this.docId);
    for (const segment of refreshed) this.adopt(segment);
    return result;
  }

  /** Start a pipeline run and poll it to completion. */
  async run(
    config: Record<string, unknown>,
    options: PollOptions & { seg_ids?: number[] } = {},
  ): Promise<Job> {
    const request: RunRequest = { doc_id: this.docId, config };
    if (options.seg_ids) request.seg_ids = options.seg_ids;
    const job = await this.api.startRun(request);
    const poller = new JobPoller(this.api);
    const settled = await poller.poll(job.job_id, options);
    const refreshed = await this.api.getSegments(this.docId);
    for (const segment of refreshed) this.adopt(segment);
    return settled;
  }
}
