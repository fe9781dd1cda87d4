/**
 * Browser entry point: mounts the annotation UI into #app and wires DOM
 * events into the view-model state. Configuration comes from query
 * parameters: ?service=<base url>&annotator=<id>.
 */

import { AnnotationClient } from "./api.js";
import { AnnotationSession } from "./controller.js";
import { DraftStore } from "./draft.js";
import { renderT1, renderT2 } from "./render.js";
import type { T1TaskState, T2TaskState } from "./state.js";

function selectionOffsets(container: HTMLElement): [number, number] | null {
  const selection = window.getSelection();
  if (!selection || selection.rangeCount === 0 || selection.isCollapsed) return null;
  const range = selection.getRangeAt(0);
  if (!container.contains(range.commonAncestorContainer)) return null;
  // Map the selection to offsets in the canonical text by measuring the
  // text preceding the range start inside the container.
  const prefix = document.createRange();
  prefix.selectNodeContents(container);
  prefix.setEnd(range.startContainer, range.startOffset);
  const start = prefix.toString().length;
  const end = start + range.toString().length;
  return start < end ? [start, end] : null;
}

async function runT1(root: HTMLElement, session: AnnotationSession): Promise<boolean> {
  const state = await session.openT1();
  if (state === null) return false;
  const redraw = () => {
    root.innerHTML = renderT1(state);
    bind(state);
  };
  const bind = (s: T1TaskState) => {
    root.querySelectorAll<HTMLButtonElement>("button.question").forEach((button) => {
      button.onclick = () => {
        s.reveal(Number(button.dataset.idx));
        redraw();
      };
    });
    root.querySelectorAll<HTMLInputElement>('input[name="answerable"]').forEach((input) => {
      input.onchange = () => {
        if (s.activeQuestion !== null) {
          s.setAnswerable(s.activeQuestion, input.value === "1");
          session.saveDraft(s);
          redraw();
        }
      };
    });
    const report = root.querySelector<HTMLElement>("article.report");
    if (report) {
      report.onmouseup = () => {
        const offsets = selectionOffsets(report);
        if (offsets && s.addHighlight(offsets[0], offsets[1])) {
          session.saveDraft(s);
        }
        redraw();
      };
    }
    const submit = root.querySelector<HTMLButtonElement>("button.submit");
    if (submit) {
      submit.onclick = () => {
        void session.submitT1(s).then((ok) => {
          if (ok) void mount(root, session);
          else redraw();
        });
      };
    }
  };
  redraw();
  return true;
}

async function runT2(root: HTMLElement, session: AnnotationSession): Promise<boolean> {
  const state = await session.openT2();
  if (state === null) return false;
  const redraw = () => {
    root.innerHTML = renderT2(state);
    bind(state);
  };
  const bind = (s: T2TaskState) => {
    root.querySelectorAll<HTMLInputElement>('input[type="radio"]').forEach((input) => {
      input.onchange = () => {
        const idx = Number(input.name.replace("rating-", ""));
        s.setRating(idx, Number(input.value));
        session.saveDraft(s);
        redraw();
      };
    });
    const submit = root.querySelector<HTMLButtonElement>("button.submit");
    if (submit) {
      submit.onclick = () => {
        void session.submitT2(s).then((ok) => {
          if (ok) void mount(root, session);
          else redraw();
        });
      };
    }
  };
  redraw();
  return true;
}

async function mount(root: HTMLElement, session: AnnotationSession): Promise<void> {
  if (await runT1(root, session)) return;
  if (await runT2(root, session)) return;
  root.innerHTML = "<p>All tasks complete. Thank you.</p>";
}

export function start(): void {
  const params = new URLSearchParams(window.location.search);
  const baseUrl = params.get("service") ?? "";
  const annotator = params.get("annotator") ?? "";
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app mount point");
  if (!baseUrl || !annotator) {
    root.innerHTML = "<p>Missing ?service= and ?annotator= configuration.</p>";
    return;
  }
  const client = new AnnotationClient({ baseUrl, annotator });
  const session = new AnnotationSession({
    client,
    drafts: new DraftStore(window.localStorage),
    annotator,
    onForeignDraft: () => {
      window.alert("This task was edited in another tab; showing the latest draft.");
    },
  });
  void mount(root, session);
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  start();
}
