/** Browser bootstrap: wires the review session to the DOM. */

import { ReviewApi } from "./api.js";
import { labelColor, toPieces } from "./render.js";
import { ReviewSession } from "./session.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing #${id}`);
  return node as T;
}

function renderProgress(session: ReviewSession): void {
  const container = el<HTMLDivElement>("progress");
  container.innerHTML = "";
  const progress = session.progress;
  const scenario = session.scenario;
  if (progress === null || scenario === null) return;
  const statusLine = document.createElement("div");
  statusLine.className = "status-line";
  statusLine.textContent = Object.entries(progress.by_status)
    .map(([status, count]) => `${status}: ${count}`)
    .join("  ·  ");
  container.appendChild(statusLine);
  for (const label of scenario.labels) {
    const count = progress.validated_per_label[label] ?? 0;
    const row = document.createElement("div");
    row.className = "label-row" + (count === 0 ? " under-covered" : "");
    const swatch = document.createElement("span");
    swatch.className = "swatch";
    swatch.style.background = labelColor(label, scenario.labels);
    row.append(swatch, `${label}: ${count} validated`);
    container.appendChild(row);
  }
}

function renderTask(session: ReviewSession): void {
  const view = el<HTMLDivElement>("task-view");
  const queueInfo = el<HTMLDivElement>("queue-info");
  const errorBox = el<HTMLDivElement>("error");
  errorBox.textContent = session.lastError ?? "";
  const task = session.current;
  const scenario = session.scenario;
  if (task === null || scenario === null) {
    view.innerHTML = session.done
      ? '<div class="banner">Queue complete — use the export link above.</div>'
      : "";
    queueInfo.textContent = "";
    return;
  }
  queueInfo.textContent =
    `task ${task.task_id} — ${session.queue.length} pending` +
    (session.dirty ? " (edited)" : "");
  view.innerHTML = "";
  const textDiv = document.createElement("div");
  textDiv.className = "doc-text";
  toPieces(task.text ?? "", session.drafts).forEach((piece) => {
    const span = document.createElement("span");
    span.textContent = piece.text;
    if (piece.label !== null && piece.segmentIndex !== null) {
      span.className =
        "segment" + (piece.segmentIndex === session.selected ? " selected" : "");
      span.style.background = labelColor(piece.label, scenario.labels);
      span.title = piece.label;
      const index = piece.segmentIndex;
      span.addEventListener("click", () => session.selectSegment(index));
    }
    textDiv.appendChild(span);
  });
  view.appendChild(textDiv);

  const picker = document.createElement("div");
  picker.className = "label-picker";
  scenario.labels.forEach((label, i) => {
    const button = document.createElement("button");
    button.textContent = `${i + 1} ${label}`;
    button.style.background = labelColor(label, scenario.labels);
    button.addEventListener("click", () => session.relabel(label));
    picker.appendChild(button);
  });
  view.appendChild(picker);

  const actions = document.createElement("div");
  actions.className = "actions";
  const accept = document.createElement("button");
  accept.textContent = "Accept (Enter)";
  accept.addEventListener("click", () => void session.accept());
  const submit = document.createElement("button");
  submit.textContent = "Submit correction";
  submit.disabled = !session.dirty || !session.canSubmit;
  submit.addEventListener("click", () => void session.submitCorrection());
  actions.append(accept, submit);
  if (!session.canSubmit) {
    const why = document.createElement("div");
    why.className = "problems";
    why.textContent = session.problems.join("; ");
    actions.appendChild(why);
  }
  view.appendChild(actions);
}

async function start(): Promise<void> {
  const api = new ReviewApi("");
  const session = new ReviewSession(api);
  session.onChange(() => {
    renderProgress(session);
    renderTask(session);
  });
  document.addEventListener("keydown", (event) => {
    if (event.key === "Tab") event.preventDefault();
    void session.handleKey(event.key);
  });
  await session.loadQueue();
  await session.openNext();
  const exportLink = el<HTMLAnchorElement>("export-link");
  if (session.scenario !== null) {
    exportLink.href = `/api/scenarios/${session.scenario.id}/export?kind=all`;
  }
}

void start().catch((error) => {
  el<HTMLDivElement>("error").textContent = String(error);
});
