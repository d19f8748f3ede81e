/**
 * End-to-end acceptance: drive the real review service with the client.
 *
 * A 10-task queue is built (10 synthetic teacher-annotated documents), then
 * the session accepts 7 tasks and corrects 3 — one relabel, one boundary
 * edit, one both. The exported set must reflect exactly those verdicts, and
 * the server must never reject a verdict the client posts.
 */

import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join, resolve } from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ReviewApi } from "../src/api.js";
import { ReviewSession } from "../src/session.js";
import type { ApiSegment } from "../src/types.js";

const PKG_ROOT = resolve(dirname(fileURLToPath(import.meta.url)), "..", "..");

let workspace: string;
let serverProc: ChildProcess;
let baseUrl: string;
let rejectedPosts = 0;

function cli(...args: string[]): void {
  const result = spawnSync(
    "python3",
    ["-m", "tagdistill.cli", "--workspace", workspace, ...args],
    { cwd: PKG_ROOT, encoding: "utf-8" },
  );
  if (result.status !== 0) {
    throw new Error(`cli ${args.join(" ")} failed: ${result.stderr}`);
  }
}

async function startServer(): Promise<void> {
  serverProc = spawn(
    "python3",
    ["-m", "tagdistill.cli", "--workspace", workspace, "serve-review", "--port", "0"],
    { cwd: PKG_ROOT },
  );
  const port = await new Promise<number>((resolvePort, rejectPort) => {
    let buffer = "";
    serverProc.stdout!.on("data", (chunk: Buffer) => {
      buffer += chunk.toString();
      const match = buffer.match(/listening on [\d.]+:(\d+)/);
      if (match !== null) resolvePort(Number(match[1]));
    });
    serverProc.on("exit", (code) =>
      rejectPort(new Error(`server exited early (code ${code}): ${buffer}`)),
    );
    setTimeout(() => rejectPort(new Error(`server start timeout: ${buffer}`)), 15000);
  });
  baseUrl = `http://127.0.0.1:${port}`;
}

beforeAll(async () => {
  workspace = mkdtempSync(join(tmpdir(), "review-ui-"));
  cli("synth", "--docs", "10", "--labels", "3");
  cli("annotate", "--mock");
  await startServer();
  // count any server rejection of a verdict the client chose to post
  const realFetch = globalThis.fetch;
  globalThis.fetch = async (input, init) => {
    const response = await realFetch(input, init);
    if (String(input).includes("/verdict") && !response.ok) rejectedPosts++;
    return response;
  };
}, 60000);

afterAll(() => {
  serverProc?.kill();
  rmSync(workspace, { recursive: true, force: true });
});

describe("review UI against the live service", () => {
  const corrections: Record<string, ApiSegment[]> = {};
  const accepted: string[] = [];
  let session: ReviewSession;

  it("loads a 10-task queue", async () => {
    session = new ReviewSession(new ReviewApi(baseUrl), "dr-acceptance");
    await session.loadQueue();
    expect(session.queue).toHaveLength(10);
    expect(session.scenario?.labels).toHaveLength(3);
    await session.openNext();
    expect(session.current?.text).toBeTruthy();
  });

  it("accepts 7 and corrects 3 (one relabel, one boundary edit, one both)", async () => {
    const labels = session.scenario!.labels;
    const otherLabel = (current: string) => labels.find((l) => l !== current)!;

    for (let i = 0; i < 10; i++) {
      const task = session.current!;
      if (i === 0) {
        // relabel only
        session.selectSegment(0);
        session.relabel(otherLabel(session.drafts[0]!.label));
        expect(session.dirty).toBe(true);
        corrections[task.task_id] = structuredClone(session.drafts);
        await session.submitCorrection();
      } else if (i === 1) {
        // boundary edit only: trim one scalar off the first segment's end
        session.selectSegment(0);
        session.nudgeBoundary("end", -1);
        expect(session.dirty).toBe(true);
        corrections[task.task_id] = structuredClone(session.drafts);
        await session.submitCorrection();
      } else if (i === 2) {
        // both: relabel and move the start forward by one scalar
        session.selectSegment(0);
        session.relabel(otherLabel(session.drafts[0]!.label));
        session.nudgeBoundary("start", 1);
        expect(session.dirty).toBe(true);
        corrections[task.task_id] = structuredClone(session.drafts);
        await session.submitCorrection();
      } else {
        accepted.push(task.task_id);
        await session.accept();
      }
    }
    expect(session.done).toBe(true);
    expect(accepted).toHaveLength(7);
    expect(Object.keys(corrections)).toHaveLength(3);
  });

  it("progress reflects the verdicts", async () => {
    const progress = await session.api.progress(session.scenario!.id);
    expect(progress.by_status).toMatchObject({
      pending: 0,
      accepted: 7,
      corrected: 3,
    });
  });

  it("export reflects exactly those verdicts", async () => {
    const rows = await session.api.exportValidated(session.scenario!.id, "all");
    expect(rows).toHaveLength(10);
    const byDoc = new Map(rows.map((row) => [row.doc_id, row]));

    for (const [taskId, drafts] of Object.entries(corrections)) {
      const row = byDoc.get(taskId)!;
      const sorted = [...drafts].sort((a, b) => a.start - b.start || a.end - b.end);
      expect(row.segments).toEqual(sorted);
      expect(row.source).toBe("expert");
    }
    for (const taskId of accepted) {
      const row = byDoc.get(taskId)!;
      const task = await session.api.task(taskId);
      expect(row.segments).toEqual(task.teacher_segments);
    }
  });

  it("never had a verdict rejected by the server", () => {
    expect(rejectedPosts).toBe(0);
  });

  it("refuses to post a rejectable verdict locally", async () => {
    // re-open a task (last verdict wins server-side, so this is safe) and
    // try to submit an overlapping correction
    const before = rejectedPosts;
    await session.openNext(accepted[0]);
    if (session.drafts.length > 1) {
      const second = session.drafts[1]!;
      session.selectSegment(0);
      session.setBounds(session.drafts[0]!.start, second.end);
    } else {
      session.selectSegment(0);
      session.setBounds(0, 10_000);
    }
    await expect(session.submitCorrection()).rejects.toThrow(/not submitted/);
    expect(rejectedPosts).toBe(before);
    // restore: accept again so the export stays consistent
    await session.accept();
  });
});
