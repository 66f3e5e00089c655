export {
  ApiClient,
  ApiError,
  ConflictError,
  NotFoundError,
  StaleVersionError,
  ValidationError,
  type FetchLike,
} from "./api.js";
export {
  annotationChips,
  buildCodeIndex,
  escapeHtml,
  highlightAnnotations,
  type CodeIndex,
  type HighlightResult,
} from "./annotations.js";
export { SegmentEditor } from "./editor.js";
export { JobPoller, progressLabel, type PollOptions, type SleepFn } from "./jobs.js";
export {
  Workspace,
  type EditConflict,
  type SaveResult,
} from "./workspace.js";
export {
  originBadge,
  renderBlindedSheet,
  renderDocument,
  renderDocumentList,
  renderJob,
  renderScoreTable,
  renderSegmentRow,
} from "./render.js";
export type * from "./types.js";
