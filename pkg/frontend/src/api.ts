/**
 * Typed client for the annotation service.
 *
 * The fetch implementation is injectable so tests can run against a stub.
 * Every response body crosses a zod schema before reaching the view-model.
 */

import type { T1Judgment, T2Judgment, TaskPayload } from "./schema.js";
import { TaskSchema } from "./schema.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export interface ClientConfig {
  baseUrl: string;
  annotator: string;
  fetchImpl?: FetchLike;
}

export class ApiError extends Error {
  readonly status: number;
  readonly detail: string;

  constructor(status: number, detail: string) {
    super(`HTTP ${status}: ${detail}`);
    this.status = status;
    this.detail = detail;
  }
}

async function detailOf(response: Response): Promise<string> {
  try {
    const body = (await response.json()) as { detail?: unknown };
    if (typeof body.detail === "string") return body.detail;
    return JSON.stringify(body.detail ?? body);
  } catch {
    return response.statusText || "request failed";
  }
}

export class AnnotationClient {
  private readonly baseUrl: string;
  private readonly annotator: string;
  private readonly fetchImpl: FetchLike;

  constructor(config: ClientConfig) {
    this.baseUrl = config.baseUrl.replace(/\/+$/, "");
    this.annotator = config.annotator;
    this.fetchImpl = config.fetchImpl ?? ((url, init) => fetch(url, init));
  }

  /** Next incomplete task for this annotator, or null when none remain. */
  async nextTask(kind: "t1" | "t2"): Promise<TaskPayload | null> {
    const url = `${this.baseUrl}/tasks/next?annotator=${encodeURIComponent(this.annotator)}&kind=${kind}`;
    const response = await this.fetchImpl(url);
    if (response.status === 404) return null;
    if (!response.ok) throw new ApiError(response.status, await detailOf(response));
    return TaskSchema.parse(await response.json());
  }

  async submitT1(taskId: string, judgments: T1Judgment[]): Promise<void> {
    await this.post(`/tasks/${encodeURIComponent(taskId)}/t1`, judgments);
  }

  async submitT2(taskId: string, judgment: T2Judgment): Promise<void> {
    await this.post(`/tasks/${encodeURIComponent(taskId)}/t2`, judgment);
  }

  private async post(path: string, body: unknown): Promise<void> {
    const url = `${this.baseUrl}${path}?annotator=${encodeURIComponent(this.annotator)}`;
    const response = await this.fetchImpl(url, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!response.ok) throw new ApiError(response.status, await detailOf(response));
  }
}
