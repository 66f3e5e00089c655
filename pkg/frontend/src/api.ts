/** Thin fetch client over the service API.
 *
 * Every state change in the UI round-trips through here; nothing is
 * computed locally. The fetch implementation is injectable for tests.
 */

import type {
  Annotation,
  CodeInfo,
  DocumentSummary,
  EditRequest,
  Job,
  ReplaceAllResult,
  RunCost,
  RunLogRecord,
  RunRequest,
  ScoreRow,
  SegmentView,
  Sheet,
  SystemScore,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "ApiError";
  }
}

export class NotFoundError extends ApiError {
  constructor(detail: string) {
    super(404, detail);
    this.name = "NotFoundError";
  }
}

/** 409 from a base_version that no longer matches the segment. */
export class StaleVersionError extends ApiError {
  constructor(detail: string) {
    super(409, detail);
    this.name = "StaleVersionError";
  }
}

/** Any other 409, e.g. editing while a run holds the document. */
export class ConflictError extends ApiError {
  constructor(detail: string) {
    super(409, detail);
    this.name = "ConflictError";
  }
}

export class ValidationError extends ApiError {
  constructor(detail: string) {
    super(422, detail);
    this.name = "ValidationError";
  }
}

async function errorDetail(response: Response): Promise<string> {
  try {
    const body = (await response.json()) as { detail?: unknown };
    if (typeof body.detail === "string") return body.detail;
    return JSON.stringify(body.detail ?? body);
  } catch {
    return response.statusText || `status ${response.status}`;
  }
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(
    method: string,
    path: string,
    query?: Record<string, string>,
    body?: unknown,
  ): Promise<T> {
    let url = this.baseUrl + path;
    if (query) {
      const params = new URLSearchParams(query);
      url += `?${params.toString()}`;
    }
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "Content-Type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchImpl(url, init);
    if (!response.ok) {
      const detail = await errorDetail(response);
      if (response.status === 404) throw new NotFoundError(detail);
      if (response.status === 409) {
        throw detail.includes("stale")
          ? new StaleVersionError(detail)
          : new ConflictError(detail);
      }
      if (response.status === 422) throw new ValidationError(detail);
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  health(): Promise<{ status: string }> {
    return this.request("GET", "/health");
  }

  codes(): Promise<CodeInfo[]> {
    return this.request("GET", "/codes");
  }

  listDocuments(): Promise<DocumentSummary[]> {
    return this.request("GET", "/documents");
  }

  getSegments(docId: string): Promise<SegmentView[]> {
    return this.request("GET", "/documents/segments", { doc_id: docId });
  }

  submitEdit(edit: EditRequest): Promise<SegmentView> {
    return this.request("POST", "/documents/edits", undefined, edit);
  }

  editSegment(
    docId: string,
    segId: number,
    editedTranslation: string,
    baseVersion: number,
    editorAnnotations?: Annotation[],
  ): Promise<SegmentView> {
    const edit: EditRequest = {
      doc_id: docId,
      scope: "segment",
      seg_id: segId,
      edited_translation: editedTranslation,
      base_version: baseVersion,
    };
    if (editorAnnotations !== undefined) {
      edit.editor_annotations = editorAnnotations;
    }
    return this.submitEdit(edit);
  }

  replaceAll(
    docId: string,
    find: string,
    replace: string,
  ): Promise<ReplaceAllResult> {
    return this.request("POST", "/documents/edits", undefined, {
      doc_id: docId,
      scope: "replace-all-occurrences",
      find,
      replace,
    } satisfies EditRequest);
  }

  startRun(run: RunRequest): Promise<Job> {
    return this.request("POST", "/runs", undefined, run);
  }

  listJobs(): Promise<Job[]> {
    return this.request("GET", "/runs");
  }

  getJob(jobId: string): Promise<Job> {
    return this.request("GET", `/runs/${jobId}`);
  }

  runLog(jobId: string): Promise<{ job_id: string; records: RunLogRecord[] }> {
    return this.request("GET", `/runs/${jobId}/log`);
  }

  runCost(jobId: string): Promise<RunCost> {
    return this.request("GET", `/runs/${jobId}/cost`);
  }

  createSheet(body: {
    doc_id: string;
    systems: { system_id: string; translations: Record<number, string> }[];
    seed?: number;
    sample_size?: number;
  }): Promise<Sheet> {
    return this.request("POST", "/eval/sheets", undefined, body);
  }

  scoreSheet(
    sheetId: string,
    rows: ScoreRow[],
    baseline?: string,
  ): Promise<SystemScore[]> {
    return this.request("POST", `/eval/sheets/${sheetId}/scores`, undefined, {
      rows,
      baseline: baseline ?? null,
    });
  }
}
