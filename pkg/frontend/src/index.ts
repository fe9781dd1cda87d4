export { AnnotationClient, ApiError } from "./api.js";
export type { ClientConfig, FetchLike } from "./api.js";
export { AnnotationSession } from "./controller.js";
export { DraftStore } from "./draft.js";
export type { StorageLike } from "./draft.js";
export { sha256Hex, verifyServedText } from "./hash.js";
export { renderReportText, renderT1, renderT2 } from "./render.js";
export {
  T1SubmissionSchema,
  T1TaskSchema,
  T2JudgmentSchema,
  T2TaskSchema,
  TaskSchema,
} from "./schema.js";
export type {
  Question,
  Span,
  T1Judgment,
  T1TaskPayload,
  T2Judgment,
  T2TaskPayload,
  TaskPayload,
} from "./schema.js";
export { normalizeSpans, T1TaskState, T2TaskState } from "./state.js";
export type { QuestionAnswer, SubmissionStatus } from "./state.js";
