/** Thin fetch client for the review service JSON API. */

import {
  decodeExportRow,
  decodeProgress,
  decodeScenarioList,
  decodeTask,
  decodeTaskList,
  type ExportRow,
  type Progress,
  type ScenarioSummary,
  type Task,
  type TaskList,
  type TaskStatus,
} from "./types.js";
import type { SegmentDraft } from "./validation.js";

export class ApiError extends Error {
  constructor(
    readonly errorKind: string,
    readonly detail: string,
    readonly status: number,
  ) {
    super(`${errorKind}: ${detail}`);
  }
}

export interface Verdict {
  status: "accepted" | "corrected";
  segments?: SegmentDraft[];
  reviewer?: string;
}

async function raiseForStatus(response: Response): Promise<void> {
  if (response.ok) return;
  let kind = "HttpError";
  let detail = response.statusText;
  try {
    const body = (await response.json()) as { error_kind?: string; detail?: string };
    if (body.error_kind) kind = body.error_kind;
    if (body.detail) detail = body.detail;
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ApiError(kind, detail, response.status);
}

export class ReviewApi {
  constructor(readonly baseUrl: string) {}

  private async getJson(path: string): Promise<unknown> {
    const response = await fetch(this.baseUrl + path);
    await raiseForStatus(response);
    return response.json();
  }

  async scenarios(): Promise<ScenarioSummary[]> {
    return decodeScenarioList(await this.getJson("/api/scenarios"));
  }

  async tasks(
    scenarioId: string,
    options: { status?: TaskStatus; limit?: number; offset?: number } = {},
  ): Promise<TaskList> {
    const query = new URLSearchParams();
    if (options.status) query.set("status", options.status);
    if (options.limit !== undefined) query.set("limit", String(options.limit));
    if (options.offset !== undefined) query.set("offset", String(options.offset));
    const suffix = query.size > 0 ? `?${query}` : "";
    return decodeTaskList(
      await this.getJson(`/api/scenarios/${encodeURIComponent(scenarioId)}/tasks${suffix}`),
    );
  }

  async task(taskId: string): Promise<Task> {
    return decodeTask(await this.getJson(`/api/tasks/${encodeURIComponent(taskId)}`));
  }

  async submitVerdict(taskId: string, verdict: Verdict): Promise<Task> {
    const response = await fetch(
      `${this.baseUrl}/api/tasks/${encodeURIComponent(taskId)}/verdict`,
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(verdict),
      },
    );
    await raiseForStatus(response);
    return decodeTask(await response.json());
  }

  async progress(scenarioId: string): Promise<Progress> {
    return decodeProgress(
      await this.getJson(`/api/scenarios/${encodeURIComponent(scenarioId)}/progress`),
    );
  }

  async exportValidated(
    scenarioId: string,
    kind: "test" | "in_context" | "all" = "all",
  ): Promise<ExportRow[]> {
    const response = await fetch(
      `${this.baseUrl}/api/scenarios/${encodeURIComponent(scenarioId)}/export?kind=${kind}`,
    );
    await raiseForStatus(response);
    const text = await response.text();
    return text
      .split("\n")
      .filter((line) => line.trim() !== "")
      .map((line) => decodeExportRow(JSON.parse(line)));
  }
}
