/**
 * Session controller: fetches tasks, keeps drafts in sync, submits, and maps
 * server rejections back onto the offending question.
 */

import { AnnotationClient, ApiError } from "./api.js";
import { DraftStore } from "./draft.js";
import { verifyServedText } from "./hash.js";
import type { QuestionAnswer } from "./state.js";
import { T1TaskState, T2TaskState } from "./state.js";

export interface SessionOptions {
  client: AnnotationClient;
  drafts: DraftStore;
  annotator: string;
  /** Called when a restored draft was written by another tab. */
  onForeignDraft?: (taskId: string) => void;
}

export class AnnotationSession {
  private readonly client: AnnotationClient;
  private readonly drafts: DraftStore;
  private readonly annotator: string;
  private readonly onForeignDraft: (taskId: string) => void;

  constructor(options: SessionOptions) {
    this.client = options.client;
    this.drafts = options.drafts;
    this.annotator = options.annotator;
    this.onForeignDraft = options.onForeignDraft ?? (() => undefined);
  }

  /** Fetch the next T1 task, verify its text hash, and restore any draft. */
  async openT1(): Promise<T1TaskState | null> {
    const task = await this.client.nextTask("t1");
    if (task === null) return null;
    if (task.kind !== "t1") throw new Error(`expected a t1 task, got ${task.kind}`);
    await verifyServedText(task.report_text, task.report_sha256);
    const state = new T1TaskState(task);
    const draft = this.drafts.load<Record<number, QuestionAnswer>>(this.annotator, task.task_id);
    if (draft) {
      state.restore(draft.data);
      if (draft.foreignWrite) this.onForeignDraft(task.task_id);
    }
    return state;
  }

  async openT2(): Promise<T2TaskState | null> {
    const task = await this.client.nextTask("t2");
    if (task === null) return null;
    if (task.kind !== "t2") throw new Error(`expected a t2 task, got ${task.kind}`);
    await verifyServedText(task.passage_text, task.passage_sha256);
    const state = new T2TaskState(task);
    const draft = this.drafts.load<Record<number, number | null>>(this.annotator, task.task_id);
    if (draft) {
      state.restore(draft.data);
      if (draft.foreignWrite) this.onForeignDraft(task.task_id);
    }
    return state;
  }

  saveDraft(state: T1TaskState | T2TaskState): void {
    this.drafts.save(this.annotator, state.task.task_id, state.snapshot());
  }

  /** Submit a complete T1 task; clears the draft on success. */
  async submitT1(state: T1TaskState): Promise<boolean> {
    const body = state.buildSubmission();
    state.status = "submitting";
    try {
      await this.client.submitT1(state.task.task_id, body);
    } catch (error) {
      if (error instanceof ApiError) {
        state.applyServerError(error.detail);
        return false;
      }
      // Transport failure: keep local state, let the view show a retry banner.
      state.status = "error";
      state.hint = "submission failed, answers kept locally";
      throw error;
    }
    state.status = "submitted";
    this.drafts.clear(this.annotator, state.task.task_id);
    return true;
  }

  /** Submit all T2 ratings, one post per question as the API requires. */
  async submitT2(state: T2TaskState): Promise<boolean> {
    const body = state.buildSubmission();
    state.status = "submitting";
    for (const judgment of body) {
      try {
        await this.client.submitT2(state.task.task_id, judgment);
      } catch (error) {
        if (error instanceof ApiError) {
          state.applyServerError(judgment.question_idx, error.detail);
          return false;
        }
        state.status = "error";
        throw error;
      }
    }
    state.status = "submitted";
    this.drafts.clear(this.annotator, state.task.task_id);
    return true;
  }
}
