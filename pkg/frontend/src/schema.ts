/**
 * Wire schemas for the annotation service API.
 *
 * Parsed with zod at the boundary so a drifting server payload fails loudly
 * instead of silently rendering garbage.
 */

import { z } from "zod";

export const QuestionSchema = z.object({
  idx: z.number().int().nonnegative(),
  text: z.string().min(1),
});

export const T1TaskSchema = z.object({
  task_id: z.string().min(1),
  kind: z.literal("t1"),
  topic_id: z.string().min(1),
  report_text: z.string(),
  report_sha256: z.string().length(64),
  questions: z.array(QuestionSchema).min(1),
});

export const T2TaskSchema = z.object({
  task_id: z.string().min(1),
  kind: z.literal("t2"),
  topic_id: z.string().min(1),
  passage_text: z.string(),
  passage_sha256: z.string().length(64),
  questions: z.array(QuestionSchema).min(1),
  rubric_version: z.string().min(1),
});

export const TaskSchema = z.discriminatedUnion("kind", [T1TaskSchema, T2TaskSchema]);

// Outgoing bodies. Mirrors the server-side validation: a span is a pair of
// character offsets with start < end; answerable requires at least one span.
export const SpanSchema = z
  .tuple([z.number().int().nonnegative(), z.number().int().nonnegative()])
  .refine(([start, end]) => start < end, { message: "span start must precede end" });

export const T1JudgmentSchema = z
  .object({
    question_idx: z.number().int().nonnegative(),
    answerable: z.boolean(),
    spans: z.array(SpanSchema),
  })
  .refine((j) => !j.answerable || j.spans.length > 0, {
    message: "answerable requires at least one span",
  });

export const T1SubmissionSchema = z.array(T1JudgmentSchema).min(1);

export const T2JudgmentSchema = z.object({
  question_idx: z.number().int().nonnegative(),
  rating: z.number().int().min(0).max(5),
});

export type Question = z.infer<typeof QuestionSchema>;
export type T1TaskPayload = z.infer<typeof T1TaskSchema>;
export type T2TaskPayload = z.infer<typeof T2TaskSchema>;
export type TaskPayload = z.infer<typeof TaskSchema>;
export type Span = z.infer<typeof SpanSchema>;
export type T1Judgment = z.infer<typeof T1JudgmentSchema>;
export type T2Judgment = z.infer<typeof T2JudgmentSchema>;
