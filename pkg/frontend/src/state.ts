/**
 * View-model state for the two annotation tasks.
 *
 * The state machines are renderless: the DOM layer binds to them, and the
 * tests drive them directly. Client-side validation mirrors the server rules
 * exactly, so a submission that passes `canSubmit` can never draw a 422 for
 * span or answer completeness.
 */

import type { Span, T1Judgment, T1TaskPayload, T2Judgment, T2TaskPayload } from "./schema.js";
import { T1SubmissionSchema, T2JudgmentSchema } from "./schema.js";

export type SubmissionStatus = "idle" | "submitting" | "submitted" | "error";

export interface QuestionAnswer {
  answerable: boolean | null;
  spans: Span[];
}

/** Sort and merge overlapping or touching spans (same rule as the server). */
export function normalizeSpans(spans: Span[]): Span[] {
  const sorted = [...spans].sort((a, b) => a[0] - b[0] || a[1] - b[1]);
  const merged: Span[] = [];
  for (const [start, end] of sorted) {
    const last = merged[merged.length - 1];
    if (last && start <= last[1]) {
      last[1] = Math.max(last[1], end);
    } else {
      merged.push([start, end]);
    }
  }
  return merged;
}

export class T1TaskState {
  readonly task: T1TaskPayload;
  activeQuestion: number | null = null;
  status: SubmissionStatus = "idle";
  hint: string | null = null;
  /** Server-reported error per question index, from mapped 422 details. */
  questionErrors = new Map<number, string>();
  private answers = new Map<number, QuestionAnswer>();

  constructor(task: T1TaskPayload) {
    this.task = task;
    for (const q of task.questions) {
      this.answers.set(q.idx, { answerable: null, spans: [] });
    }
  }

  answer(idx: number): QuestionAnswer {
    const entry = this.answers.get(idx);
    if (!entry) throw new Error(`question ${idx} is not part of this task`);
    return entry;
  }

  reveal(idx: number): void {
    this.answer(idx);
    this.activeQuestion = idx;
    this.hint = null;
  }

  setAnswerable(idx: number, answerable: boolean): void {
    this.answer(idx).answerable = answerable;
    this.questionErrors.delete(idx);
  }

  /**
   * Text selection handler. Spans bind to the active question; selecting with
   * no active question is a no-op that surfaces a hint instead.
   */
  addHighlight(start: number, end: number): boolean {
    if (this.activeQuestion === null) {
      this.hint = "pick a question before highlighting";
      return false;
    }
    const length = this.task.report_text.length;
    if (!(Number.isInteger(start) && Number.isInteger(end) && 0 <= start && start < end && end <= length)) {
      throw new Error(`span (${start}, ${end}) out of bounds for report of length ${length}`);
    }
    const entry = this.answer(this.activeQuestion);
    entry.spans = normalizeSpans([...entry.spans, [start, end]]);
    return true;
  }

  clearSpans(idx: number): void {
    this.answer(idx).spans = [];
  }

  questionComplete(idx: number): boolean {
    const entry = this.answer(idx);
    if (entry.answerable === null) return false;
    return entry.answerable ? entry.spans.length > 0 : true;
  }

  /** Every question answered, every "answerable" justified by >= 1 span. */
  canSubmit(): boolean {
    return (
      this.status !== "submitting" &&
      this.task.questions.every((q) => this.questionComplete(q.idx))
    );
  }

  buildSubmission(): T1Judgment[] {
    if (!this.canSubmit()) {
      throw new Error("submission incomplete: every question needs an answer and spans");
    }
    const body = this.task.questions.map((q) => {
      const entry = this.answer(q.idx);
      return {
        question_idx: q.idx,
        answerable: entry.answerable as boolean,
        spans: normalizeSpans(entry.spans),
      };
    });
    return T1SubmissionSchema.parse(body);
  }

  /** Map a server 422 detail such as "question 3: ..." onto its question. */
  applyServerError(detail: string): void {
    this.status = "error";
    const match = /question (\d+)/.exec(detail);
    if (match) {
      this.questionErrors.set(Number(match[1]), detail);
    } else {
      this.hint = detail;
    }
  }

  snapshot(): Record<number, QuestionAnswer> {
    const out: Record<number, QuestionAnswer> = {};
    for (const [idx, entry] of this.answers) {
      out[idx] = { answerable: entry.answerable, spans: entry.spans.map((s) => [...s] as Span) };
    }
    return out;
  }

  restore(snapshot: Record<number, QuestionAnswer>): void {
    for (const q of this.task.questions) {
      const saved = snapshot[q.idx];
      if (saved) {
        this.answers.set(q.idx, {
          answerable: saved.answerable,
          spans: normalizeSpans(saved.spans.map((s) => [...s] as Span)),
        });
      }
    }
  }
}

export class T2TaskState {
  readonly task: T2TaskPayload;
  status: SubmissionStatus = "idle";
  questionErrors = new Map<number, string>();
  private ratings = new Map<number, number | null>();

  constructor(task: T2TaskPayload) {
    this.task = task;
    for (const q of task.questions) {
      this.ratings.set(q.idx, null);
    }
  }

  setRating(idx: number, rating: number): void {
    if (!this.ratings.has(idx)) throw new Error(`question ${idx} is not part of this task`);
    if (!Number.isInteger(rating) || rating < 0 || rating > 5) {
      throw new Error(`rating ${rating} outside the 0..5 scale`);
    }
    this.ratings.set(idx, rating);
    this.questionErrors.delete(idx);
  }

  rating(idx: number): number | null {
    const value = this.ratings.get(idx);
    return value === undefined ? null : value;
  }

  canSubmit(): boolean {
    return (
      this.status !== "submitting" &&
      this.task.questions.every((q) => this.ratings.get(q.idx) !== null)
    );
  }

  buildSubmission(): T2Judgment[] {
    if (!this.canSubmit()) {
      throw new Error("submission incomplete: every question needs a rating");
    }
    return this.task.questions.map((q) =>
      T2JudgmentSchema.parse({ question_idx: q.idx, rating: this.ratings.get(q.idx) }),
    );
  }

  applyServerError(questionIdx: number, detail: string): void {
    this.status = "error";
    this.questionErrors.set(questionIdx, detail);
  }

  snapshot(): Record<number, number | null> {
    return Object.fromEntries(this.ratings);
  }

  restore(snapshot: Record<number, number | null>): void {
    for (const q of this.task.questions) {
      const saved = snapshot[q.idx];
      if (saved !== undefined && saved !== null) this.setRating(q.idx, saved);
    }
  }
}
