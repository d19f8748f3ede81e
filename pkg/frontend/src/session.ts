/**
 * Review session state machine: queue, current task, local edits, submit.
 *
 * All edits are validated client-side with the same rules the server
 * enforces, and submission is refused while any problem remains, so the
 * session never posts a verdict the service would reject.
 */

import { ReviewApi } from "./api.js";
import type { Progress, ScenarioSummary, Task } from "./types.js";
import {
  sortSegments,
  validateSegments,
  type SegmentDraft,
} from "./validation.js";

export type SessionListener = () => void;

export class ReviewSession {
  scenario: ScenarioSummary | null = null;
  queue: string[] = [];
  current: Task | null = null;
  drafts: SegmentDraft[] = [];
  selected = 0;
  progress: Progress | null = null;
  lastError: string | null = null;
  private listeners: SessionListener[] = [];

  constructor(readonly api: ReviewApi, readonly reviewer: string = "expert") {}

  onChange(listener: SessionListener): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) listener();
  }

  private labelSet(): ReadonlySet<string> {
    return new Set(this.scenario?.labels ?? []);
  }

  /** Load the scenario and its pending-task queue in server order. */
  async loadQueue(): Promise<void> {
    const scenarios = await this.api.scenarios();
    if (scenarios.length === 0) throw new Error("no scenarios on the server");
    this.scenario = scenarios[0]!;
    const list = await this.api.tasks(this.scenario.id, { status: "pending" });
    this.queue = list.tasks.map((t) => t.task_id);
    this.progress = await this.api.progress(this.scenario.id);
    this.lastError = null;
    this.notify();
  }

  get done(): boolean {
    return this.scenario !== null && this.queue.length === 0 && this.current === null;
  }

  /** Open the next pending task (or a specific one) for review. */
  async openNext(taskId?: string): Promise<Task | null> {
    const id = taskId ?? this.queue[0];
    if (id === undefined) {
      this.current = null;
      this.drafts = [];
      this.notify();
      return null;
    }
    const task = await this.api.task(id);
    this.current = task;
    this.drafts = task.teacher_segments.map((s) => ({ ...s }));
    this.selected = 0;
    this.lastError = null;
    this.notify();
    return task;
  }

  /** True when the local drafts differ from the teacher's segments. */
  get dirty(): boolean {
    if (this.current === null) return false;
    const original = sortSegments(this.current.teacher_segments.map((s) => ({ ...s })));
    const edited = sortSegments(this.drafts);
    return (
      original.length !== edited.length ||
      original.some(
        (seg, i) =>
          seg.label !== edited[i]!.label ||
          seg.start !== edited[i]!.start ||
          seg.end !== edited[i]!.end,
      )
    );
  }

  /** Current validation problems; empty means the verdict is postable. */
  get problems(): string[] {
    if (this.current === null) return ["no task open"];
    return validateSegments(this.current.text ?? "", this.labelSet(), this.drafts);
  }

  get canSubmit(): boolean {
    return this.current !== null && this.problems.length === 0;
  }

  selectSegment(index: number): void {
    if (index >= 0 && index < this.drafts.length) {
      this.selected = index;
      this.notify();
    }
  }

  /** Relabel the selected segment. Unknown labels are refused locally. */
  relabel(label: string): void {
    const draft = this.drafts[this.selected];
    if (draft === undefined) return;
    if (!this.labelSet().has(label)) {
      this.lastError = `unknown label "${label}"`;
      this.notify();
      return;
    }
    draft.label = label;
    this.lastError = null;
    this.notify();
  }

  /** Move one boundary of the selected segment by a scalar-count delta. */
  nudgeBoundary(edge: "start" | "end", delta: number): void {
    const draft = this.drafts[this.selected];
    if (draft === undefined) return;
    const updated = { ...draft, [edge]: draft[edge] + delta };
    if (updated.start >= updated.end) {
      this.lastError = "a segment cannot be empty";
      this.notify();
      return;
    }
    this.drafts[this.selected] = updated;
    this.lastError = null;
    this.notify();
  }

  /** Set both boundaries of the selected segment (drag-handle release). */
  setBounds(start: number, end: number): void {
    const draft = this.drafts[this.selected];
    if (draft === undefined) return;
    this.drafts[this.selected] = { ...draft, start, end };
    this.notify();
  }

  /** Accept the teacher's annotation as-is. */
  async accept(): Promise<Task> {
    if (this.current === null) throw new Error("no task open");
    const task = await this.api.submitVerdict(this.current.task_id, {
      status: "accepted",
      reviewer: this.reviewer,
    });
    await this.advance(task);
    return task;
  }

  /**
   * Submit the edited segments as a correction. Refuses locally (without a
   * request) while validation problems remain.
   */
  async submitCorrection(): Promise<Task> {
    if (this.current === null) throw new Error("no task open");
    const problems = this.problems;
    if (problems.length > 0) {
      this.lastError = problems.join("; ");
      this.notify();
      throw new Error(`verdict not submitted: ${this.lastError}`);
    }
    const task = await this.api.submitVerdict(this.current.task_id, {
      status: "corrected",
      segments: sortSegments(this.drafts),
      reviewer: this.reviewer,
    });
    await this.advance(task);
    return task;
  }

  private async advance(submitted: Task): Promise<void> {
    this.queue = this.queue.filter((id) => id !== submitted.task_id);
    if (this.scenario !== null) {
      this.progress = await this.api.progress(this.scenario.id);
    }
    await this.openNext();
  }

  /**
   * Keyboard-first flow: Enter accepts as-is (or submits a dirty correction),
   * digits 1-9 relabel the selected segment from the scenario's label list,
   * Tab cycles selection, [ ] and { } nudge the selected boundaries.
   */
  async handleKey(key: string): Promise<void> {
    if (this.current === null) return;
    if (key === "Enter") {
      if (this.dirty) await this.submitCorrection();
      else await this.accept();
      return;
    }
    if (key === "Tab") {
      this.selectSegment((this.selected + 1) % Math.max(this.drafts.length, 1));
      return;
    }
    if (/^[1-9]$/.test(key)) {
      const label = this.scenario?.labels[Number(key) - 1];
      if (label !== undefined) this.relabel(label);
      return;
    }
    const nudges: Record<string, ["start" | "end", number]> = {
      "[": ["start", -1],
      "]": ["start", 1],
      "{": ["end", -1],
      "}": ["end", 1],
    };
    const nudge = nudges[key];
    if (nudge !== undefined) this.nudgeBoundary(nudge[0], nudge[1]);
  }
}
