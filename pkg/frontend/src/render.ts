/**
 * HTML rendering of the view-model state. Pure string templates so the layer
 * is testable without a DOM; the entry script mounts the output and wires
 * events back into the state objects.
 */

import type { T1TaskState, T2TaskState } from "./state.js";

function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

/** Report text with the active question's spans wrapped in <mark>. */
export function renderReportText(state: T1TaskState): string {
  const text = state.task.report_text;
  if (state.activeQuestion === null) return escapeHtml(text);
  const spans = state.answer(state.activeQuestion).spans;
  let cursor = 0;
  const parts: string[] = [];
  for (const [start, end] of spans) {
    parts.push(escapeHtml(text.slice(cursor, start)));
    parts.push(`<mark>${escapeHtml(text.slice(start, end))}</mark>`);
    cursor = end;
  }
  parts.push(escapeHtml(text.slice(cursor)));
  return parts.join("");
}

export function renderT1(state: T1TaskState): string {
  const buttons = state.task.questions
    .map((q, i) => {
      const active = state.activeQuestion === q.idx ? " active" : "";
      const done = state.questionComplete(q.idx) ? " done" : "";
      return `<button class="question${active}${done}" data-idx="${q.idx}">Q-${i}</button>`;
    })
    .join("");
  const question =
    state.activeQuestion === null
      ? `<p class="hint">${escapeHtml(state.hint ?? "select a question to begin")}</p>`
      : renderActiveQuestion(state);
  const disabled = state.canSubmit() ? "" : " disabled";
  return [
    `<article class="report" data-task="${escapeHtml(state.task.task_id)}">${renderReportText(state)}</article>`,
    `<nav class="questions">${buttons}</nav>`,
    question,
    `<button class="submit"${disabled}>Submit</button>`,
  ].join("\n");
}

function renderActiveQuestion(state: T1TaskState): string {
  const idx = state.activeQuestion as number;
  const q = state.task.questions.find((entry) => entry.idx === idx);
  const answer = state.answer(idx);
  const error = state.questionErrors.get(idx);
  const checked = (value: boolean) => (answer.answerable === value ? " checked" : "");
  return [
    `<section class="active-question" data-idx="${idx}">`,
    `<p>${escapeHtml(q?.text ?? "")}</p>`,
    `<label><input type="radio" name="answerable" value="1"${checked(true)}>1</label>`,
    `<label><input type="radio" name="answerable" value="0"${checked(false)}>0</label>`,
    `<span class="spans">${answer.spans.length} span(s)</span>`,
    error ? `<p class="error">${escapeHtml(error)}</p>` : "",
    `</section>`,
  ].join("");
}

const RUBRIC_LINES = [
  "5: context fully answers the question",
  "4: context answers the question with minor gaps",
  "3: context answers the core of the question",
  "2: context is related but answers little",
  "1: context only touches the topic",
  "0: context cannot answer the question",
];

export function renderT2(state: T2TaskState): string {
  const rubric = RUBRIC_LINES.map((line) => `<li>${escapeHtml(line)}</li>`).join("");
  const questions = state.task.questions
    .map((q) => {
      const scale = [0, 1, 2, 3, 4, 5]
        .map((value) => {
          const checked = state.rating(q.idx) === value ? " checked" : "";
          return `<label><input type="radio" name="rating-${q.idx}" value="${value}"${checked}>${value}</label>`;
        })
        .join("");
      const error = state.questionErrors.get(q.idx);
      return [
        `<section class="t2-question" data-idx="${q.idx}">`,
        `<p>${escapeHtml(q.text)}</p>`,
        scale,
        error ? `<p class="error">${escapeHtml(error)}</p>` : "",
        `</section>`,
      ].join("");
    })
    .join("\n");
  const disabled = state.canSubmit() ? "" : " disabled";
  return [
    `<article class="passage">${escapeHtml(state.task.passage_text)}</article>`,
    `<ul class="rubric">${rubric}</ul>`,
    questions,
    `<button class="submit"${disabled}>Submit</button>`,
  ].join("\n");
}
