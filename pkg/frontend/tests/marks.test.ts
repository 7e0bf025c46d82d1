import { describe, expect, it } from "vitest";

import { MarkPanel } from "../src/marks.js";

describe("mark panel", () => {
  it("allows significance only with mark 1", () => {
    const panel = new MarkPanel();
    panel.setMark(1);
    expect(panel.significanceEnabled).toBe(true);
    expect(panel.toggleSignificance()).toBe(true);
    expect(panel.submission()).toEqual({ mark: 1, highly_significant: true });
  });

  it("mark 3 with significance is unselectable", () => {
    const panel = new MarkPanel();
    panel.setMark(3);
    expect(panel.significanceEnabled).toBe(false);
    expect(panel.toggleSignificance()).toBe(false);
    expect(panel.submission()).toEqual({ mark: 3, highly_significant: false });
  });

  it("switching away from mark 1 clears the flag", () => {
    const panel = new MarkPanel();
    panel.setMark(1);
    panel.toggleSignificance();
    panel.setMark(2);
    expect(panel.significant).toBe(false);
    expect(panel.submission()).toEqual({ mark: 2, highly_significant: false });
  });

  it("maps keyboard shortcuts 1/2/3", () => {
    const panel = new MarkPanel();
    expect(panel.handleKey("2")).toBe(true);
    expect(panel.selectedMark).toBe(2);
    expect(panel.handleKey("x")).toBe(false);
    expect(panel.selectedMark).toBe(2);
    expect(panel.handleKey("3")).toBe(true);
    expect(panel.selectedMark).toBe(3);
  });

  it("cannot submit before a mark is picked", () => {
    const panel = new MarkPanel();
    expect(panel.canSubmit).toBe(false);
    expect(() => panel.submission()).toThrow();
    panel.setMark(2);
    panel.reset();
    expect(panel.canSubmit).toBe(false);
  });
});
