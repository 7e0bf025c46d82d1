/**
 * Mark-panel state: one of three marks plus the highly-significant flag,
 * which is only meaningful (and only selectable) together with mark 1.
 */

import type { Mark, MarkSubmission } from "./types.js";

export class MarkPanel {
  private mark: Mark | null = null;
  private highlySignificant = false;

  get selectedMark(): Mark | null {
    return this.mark;
  }

  get significant(): boolean {
    return this.highlySignificant;
  }

  /** The significance toggle is disabled unless mark 1 is selected. */
  get significanceEnabled(): boolean {
    return this.mark === 1;
  }

  get canSubmit(): boolean {
    return this.mark !== null;
  }

  setMark(mark: Mark): void {
    this.mark = mark;
    if (mark !== 1) {
      this.highlySignificant = false; // invariant: flag only with mark 1
    }
  }

  toggleSignificance(): boolean {
    if (!this.significanceEnabled) {
      return false;
    }
    this.highlySignificant = !this.highlySignificant;
    return true;
  }

  /** Map keyboard shortcuts 1/2/3 to marks; returns false for other keys. */
  handleKey(key: string): boolean {
    if (key === "1" || key === "2" || key === "3") {
      this.setMark(Number(key) as Mark);
      return true;
    }
    return false;
  }

  submission(): MarkSubmission {
    if (this.mark === null) {
      throw new Error("no mark selected");
    }
    return { mark: this.mark, highly_significant: this.highlySignificant };
  }

  reset(): void {
    this.mark = null;
    this.highlySignificant = false;
  }
}
