/**
 * DOM wiring for the annotator UI.
 *
 * Layout: a task header, the abstract rendered as monospaced text, a span
 * panel (pending selection + submit) for span tasks, and a mark panel with
 * 1/2/3 buttons (keyboard shortcuts 1/2/3) for evaluation tasks.
 */

import { ApiClient, ApiError } from "./api.js";
import { MarkPanel } from "./marks.js";
import { selectionToOffsets } from "./offsets.js";
import { renderContext } from "./render.js";
import { AnnotationSession, SessionError } from "./session.js";
import type { Mark, TaskKind } from "./types.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export class App {
  private session: AnnotationSession;
  private markPanel = new MarkPanel();
  private kind: TaskKind = "span_annotation";

  private root: HTMLElement;
  private status = el("div", "status");
  private banner = el("div", "banner hidden");
  private taskHeader = el("div", "task-header");
  private contextBox = el("pre", "context");
  private selectionPreview = el("div", "selection-preview");
  private subgroupToggle = el("input") as HTMLInputElement;
  private submitSpanButton = el("button", "", "Submit span");
  private doneButton = el("button", "", "Done with abstract");
  private skipButton = el("button", "", "Skip");
  private markButtons = new Map<Mark, HTMLButtonElement>();
  private significanceToggle = el("input") as HTMLInputElement;
  private spanPanel = el("div", "span-panel");
  private markPanelBox = el("div", "mark-panel");

  constructor(root: HTMLElement, api: ApiClient) {
    this.root = root;
    this.session = new AnnotationSession(api);
    this.build();
  }

  private build(): void {
    const kindSelect = el("select") as HTMLSelectElement;
    for (const kind of ["span_annotation", "eval_mark", "screen_label"] as TaskKind[]) {
      const option = el("option", "", kind) as HTMLOptionElement;
      option.value = kind;
      kindSelect.appendChild(option);
    }
    kindSelect.addEventListener("change", () => {
      this.kind = kindSelect.value as TaskKind;
      void this.loadNext();
    });

    const nextButton = el("button", "", "Next task");
    nextButton.addEventListener("click", () => void this.loadNext());

    this.contextBox.addEventListener("mouseup", () => this.captureSelection());

    this.subgroupToggle.type = "checkbox";
    this.subgroupToggle.addEventListener("change", () => {
      this.session.subgroupOnly = this.subgroupToggle.checked;
    });
    this.submitSpanButton.addEventListener("click", () => void this.submitSpan());
    this.doneButton.addEventListener("click", () => void this.finishTask("done"));
    this.skipButton.addEventListener("click", () => void this.finishTask("skip"));

    const subgroupLabel = el("label", "subgroup", " subgroup-specific finding");
    subgroupLabel.prepend(this.subgroupToggle);
    this.spanPanel.append(this.selectionPreview, subgroupLabel, this.submitSpanButton,
      this.doneButton, this.skipButton);

    for (const mark of [1, 2, 3] as Mark[]) {
      const labels: Record<Mark, string> = {
        1: "1 valid for this disease",
        2: "2 valid for another disease",
        3: "3 not a risk factor",
      };
      const button = el("button", "mark-button", labels[mark]) as HTMLButtonElement;
      button.addEventListener("click", () => this.pickMark(mark));
      this.markButtons.set(mark, button);
      this.markPanelBox.appendChild(button);
    }
    this.significanceToggle.type = "checkbox";
    const significanceLabel = el("label", "significance", " highly significant (OR/CI evidence)");
    significanceLabel.prepend(this.significanceToggle);
    this.significanceToggle.addEventListener("change", () => {
      if (!this.markPanel.toggleSignificance()) {
        this.significanceToggle.checked = false;
      }
    });
    const submitMarkButton = el("button", "", "Submit mark");
    submitMarkButton.addEventListener("click", () => void this.submitMark());
    this.markPanelBox.append(significanceLabel, submitMarkButton);

    document.addEventListener("keydown", (event) => {
      if (this.kind === "eval_mark" && this.markPanel.handleKey(event.key)) {
        this.refreshMarkPanel();
      }
    });

    this.root.append(kindSelect, nextButton, this.banner, this.status, this.taskHeader,
      this.contextBox, this.spanPanel, this.markPanelBox);
    this.refreshPanels();
  }

  async loadNext(): Promise<void> {
    try {
      const task = await this.session.loadNextTask(this.kind);
      this.markPanel.reset();
      if (!task) {
        this.taskHeader.textContent = "no open tasks";
        this.contextBox.textContent = "";
      } else {
        this.taskHeader.textContent =
          `${task.kind} | ${task.payload.disease_name} (${task.disease_id}) | pmid ${task.pmid}`;
        const highlights = task.kind === "eval_mark" &&
          task.payload.start_char !== undefined && task.payload.end_char !== undefined
          ? [{ start: task.payload.start_char, end: task.payload.end_char }]
          : [];
        renderContext(this.contextBox, task.payload.context, highlights);
      }
      this.refreshPanels();
      this.setStatus("");
    } catch (error) {
      this.showError(error);
    }
  }

  captureSelection(): void {
    this.session.setSelection(selectionToOffsets(this.contextBox));
    const selection = this.session.pendingSelection;
    this.selectionPreview.textContent = selection
      ? `[${selection.start}, ${selection.end}) "${selection.text}"`
      : "";
    this.submitSpanButton.disabled = !this.session.canSubmitSpan;
  }

  async submitSpan(): Promise<void> {
    try {
      const item = await this.session.submitSpan();
      this.setStatus(item ? `saved span ${item.id}` : "duplicate span ignored");
      const task = this.session.activeTask;
      if (task) {
        renderContext(this.contextBox, task.payload.context,
          this.session.submittedSpans.map((s) => ({
            start: s.spanStart,
            end: s.spanStart + s.answerText.length,
          })));
      }
      this.refreshBanner();
      this.captureSelection();
    } catch (error) {
      this.showError(error);
    }
  }

  pickMark(mark: Mark): void {
    this.markPanel.setMark(mark);
    this.refreshMarkPanel();
  }

  async submitMark(): Promise<void> {
    if (!this.markPanel.canSubmit) {
      this.setStatus("pick a mark first");
      return;
    }
    try {
      await this.session.submitMark(this.markPanel.submission());
      this.markPanel.reset();
      this.refreshBanner();
      await this.loadNext(); // evaluation throughput: auto-advance
    } catch (error) {
      this.showError(error);
    }
  }

  async finishTask(how: "done" | "skip"): Promise<void> {
    try {
      if (how === "done") await this.session.completeActiveTask();
      else await this.session.skipActiveTask();
      await this.loadNext();
    } catch (error) {
      this.showError(error);
    }
  }

  private refreshPanels(): void {
    const kind = this.session.activeTask?.kind ?? this.kind;
    this.spanPanel.classList.toggle("hidden", kind !== "span_annotation");
    this.markPanelBox.classList.toggle("hidden", kind !== "eval_mark");
    this.submitSpanButton.disabled = !this.session.canSubmitSpan;
    this.refreshMarkPanel();
    this.refreshBanner();
  }

  private refreshMarkPanel(): void {
    for (const [mark, button] of this.markButtons) {
      button.classList.toggle("selected", this.markPanel.selectedMark === mark);
    }
    this.significanceToggle.disabled = !this.markPanel.significanceEnabled;
    this.significanceToggle.checked = this.markPanel.significant;
  }

  private refreshBanner(): void {
    const message = this.session.retryBanner;
    this.banner.classList.toggle("hidden", !message);
    this.banner.textContent = message ?? "";
  }

  private setStatus(message: string): void {
    this.status.textContent = message;
  }

  private showError(error: unknown): void {
    // service rejections (SpanMismatch etc.) surface verbatim
    if (error instanceof ApiError) this.setStatus(error.detail);
    else if (error instanceof SessionError) this.setStatus(error.message);
    else this.setStatus(String(error));
    this.refreshBanner();
  }
}

export function mount(rootId = "app", baseUrl = "", token: string | null = null): App {
  const root = document.getElementById(rootId);
  if (!root) throw new Error(`no #${rootId} element`);
  const params = new URLSearchParams(window.location.search);
  const api = new ApiClient(
    baseUrl || params.get("api") || "http://127.0.0.1:8000",
    token ?? params.get("token"),
  );
  return new App(root, api);
}
