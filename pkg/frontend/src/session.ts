/**
 * Annotator session state: the active task, the pending text selection,
 * submission history, and client-side dedup of identical span submissions.
 *
 * Submissions are optimistic with the server as source of truth: a failed
 * request flips the retry banner on and keeps all local state, so nothing
 * the annotator selected is lost while the service is down.
 */

import { ApiClient, ApiError } from "./api.js";
import type { SelectionOffsets } from "./offsets.js";
import { sliceCheck } from "./offsets.js";
import type { AnnotationTask, EvalMark, MarkSubmission, QAItem, TaskKind } from "./types.js";

export interface SubmittedSpan {
  spanStart: number;
  answerText: string;
  item: QAItem;
}

export class SessionError extends Error {}

export class AnnotationSession {
  activeTask: AnnotationTask | null = null;
  pendingSelection: SelectionOffsets | null = null;
  subgroupOnly = false;
  retryBanner: string | null = null;
  history: (QAItem | EvalMark)[] = [];
  private submittedKeys = new Set<string>();
  submittedSpans: SubmittedSpan[] = [];

  constructor(private api: ApiClient) {}

  async loadNextTask(kind: TaskKind, disease?: string): Promise<AnnotationTask | null> {
    const task = await this.api.nextTask(kind, disease);
    this.activeTask = task;
    this.pendingSelection = null;
    this.subgroupOnly = false;
    this.submittedKeys.clear();
    this.submittedSpans = [];
    return task;
  }

  setSelection(selection: SelectionOffsets | null): void {
    this.pendingSelection = selection;
  }

  /** True when the pending selection may be submitted. */
  get canSubmitSpan(): boolean {
    return (
      this.activeTask !== null &&
      this.pendingSelection !== null &&
      this.pendingSelection.text.length > 0
    );
  }

  private spanKey(spanStart: number, text: string): string {
    return `${this.activeTask?.task_id}:${spanStart}:${text}`;
  }

  /**
   * Submit the pending selection as a risk-factor span.
   * Returns null when the identical span was already submitted for this task
   * (client-side dedup of double submits).
   */
  async submitSpan(): Promise<QAItem | null> {
    const task = this.activeTask;
    const selection = this.pendingSelection;
    if (!task || !selection || selection.text.length === 0) {
      throw new SessionError("nothing selected");
    }
    if (!sliceCheck(task.payload.context, selection.start, selection.text)) {
      throw new SessionError("selection does not match the abstract text");
    }
    const key = this.spanKey(selection.start, selection.text);
    if (this.submittedKeys.has(key)) {
      return null;
    }
    try {
      const item = await this.api.submitSpan(task.task_id, {
        span_start: selection.start,
        answer_text: selection.text,
        subgroup_only: this.subgroupOnly,
      });
      this.retryBanner = null;
      this.submittedKeys.add(key);
      this.submittedSpans.push({ spanStart: selection.start, answerText: selection.text, item });
      this.history.push(item);
      this.pendingSelection = null;
      this.subgroupOnly = false;
      return item;
    } catch (error) {
      this.rememberFailure(error);
      throw error;
    }
  }

  async submitMark(submission: MarkSubmission): Promise<EvalMark> {
    const task = this.activeTask;
    if (!task) {
      throw new SessionError("no active task");
    }
    try {
      const mark = await this.api.submitMark(task.task_id, submission);
      this.retryBanner = null;
      this.history.push(mark);
      this.activeTask = null; // mark submission completes the task
      return mark;
    } catch (error) {
      this.rememberFailure(error);
      throw error;
    }
  }

  async completeActiveTask(): Promise<void> {
    const task = this.activeTask;
    if (!task) return;
    await this.api.completeTask(task.task_id);
    this.activeTask = null;
  }

  async skipActiveTask(): Promise<void> {
    const task = this.activeTask;
    if (!task) return;
    await this.api.skipTask(task.task_id);
    this.activeTask = null;
  }

  /** Network failures raise the retry banner; API rejections surface verbatim. */
  private rememberFailure(error: unknown): void {
    if (error instanceof ApiError) {
      this.retryBanner = null; // a definite server answer, not an outage
    } else {
      this.retryBanner = "service unreachable; your work is kept locally, retry when it is back";
    }
  }
}
