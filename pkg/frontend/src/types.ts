/** API payload types and runtime decoders for the review service. */

export interface ApiSegment {
  label: string;
  start: number;
  end: number;
}

export interface ScenarioSummary {
  id: string;
  name: string;
  labels: string[];
  task_count: number;
}

export type TaskStatus = "pending" | "accepted" | "corrected";

export interface Task {
  task_id: string;
  doc_id: string;
  scenario_id: string;
  status: TaskStatus;
  teacher_segments: ApiSegment[];
  verdict_segments: ApiSegment[] | null;
  reviewer: string | null;
  text?: string;
}

export interface TaskList {
  total: number;
  tasks: Task[];
}

export interface Progress {
  by_status: Record<string, number>;
  validated_per_label: Record<string, number>;
}

export interface ExportRow {
  doc_id: string;
  source: string;
  model_id: string | null;
  segments: ApiSegment[];
}

export class DecodeError extends Error {}

function asObject(value: unknown, what: string): Record<string, unknown> {
  if (typeof value !== "object" || value === null || Array.isArray(value)) {
    throw new DecodeError(`${what}: expected an object`);
  }
  return value as Record<string, unknown>;
}

function asString(value: unknown, what: string): string {
  if (typeof value !== "string") throw new DecodeError(`${what}: expected a string`);
  return value;
}

function asNumber(value: unknown, what: string): number {
  if (typeof value !== "number" || !Number.isFinite(value)) {
    throw new DecodeError(`${what}: expected a number`);
  }
  return value;
}

function asArray(value: unknown, what: string): unknown[] {
  if (!Array.isArray(value)) throw new DecodeError(`${what}: expected an array`);
  return value;
}

export function decodeSegment(value: unknown, what = "segment"): ApiSegment {
  const obj = asObject(value, what);
  return {
    label: asString(obj.label, `${what}.label`),
    start: asNumber(obj.start, `${what}.start`),
    end: asNumber(obj.end, `${what}.end`),
  };
}

export function decodeScenario(value: unknown): ScenarioSummary {
  const obj = asObject(value, "scenario");
  return {
    id: asString(obj.id, "scenario.id"),
    name: asString(obj.name, "scenario.name"),
    labels: asArray(obj.labels, "scenario.labels").map((l, i) =>
      asString(l, `scenario.labels[${i}]`),
    ),
    task_count: asNumber(obj.task_count, "scenario.task_count"),
  };
}

export function decodeScenarioList(value: unknown): ScenarioSummary[] {
  return asArray(value, "scenarios").map(decodeScenario);
}

const STATUSES: TaskStatus[] = ["pending", "accepted", "corrected"];

export function decodeTask(value: unknown): Task {
  const obj = asObject(value, "task");
  const status = asString(obj.status, "task.status");
  if (!STATUSES.includes(status as TaskStatus)) {
    throw new DecodeError(`task.status: unexpected value "${status}"`);
  }
  const task: Task = {
    task_id: asString(obj.task_id, "task.task_id"),
    doc_id: asString(obj.doc_id, "task.doc_id"),
    scenario_id: asString(obj.scenario_id, "task.scenario_id"),
    status: status as TaskStatus,
    teacher_segments: asArray(obj.teacher_segments, "task.teacher_segments").map(
      (s, i) => decodeSegment(s, `task.teacher_segments[${i}]`),
    ),
    verdict_segments:
      obj.verdict_segments == null
        ? null
        : asArray(obj.verdict_segments, "task.verdict_segments").map((s, i) =>
            decodeSegment(s, `task.verdict_segments[${i}]`),
          ),
    reviewer: obj.reviewer == null ? null : asString(obj.reviewer, "task.reviewer"),
  };
  if (obj.text !== undefined) task.text = asString(obj.text, "task.text");
  return task;
}

export function decodeTaskList(value: unknown): TaskList {
  const obj = asObject(value, "task list");
  return {
    total: asNumber(obj.total, "task list total"),
    tasks: asArray(obj.tasks, "task list tasks").map(decodeTask),
  };
}

export function decodeProgress(value: unknown): Progress {
  const obj = asObject(value, "progress");
  const byStatus = asObject(obj.by_status, "progress.by_status");
  const perLabel = asObject(obj.validated_per_label, "progress.validated_per_label");
  const numbers = (src: Record<string, unknown>, what: string) =>
    Object.fromEntries(
      Object.entries(src).map(([k, v]) => [k, asNumber(v, `${what}.${k}`)]),
    );
  return {
    by_status: numbers(byStatus, "progress.by_status"),
    validated_per_label: numbers(perLabel, "progress.validated_per_label"),
  };
}

export function decodeExportRow(value: unknown): ExportRow {
  const obj = asObject(value, "export row");
  return {
    doc_id: asString(obj.doc_id, "export row doc_id"),
    source: asString(obj.source, "export row source"),
    model_id: obj.model_id == null ? null : asString(obj.model_id, "export row model_id"),
    segments: asArray(obj.segments, "export row segments").map((s, i) =>
      decodeSegment(s, `export row segments[${i}]`),
    ),
  };
}
