import { describe, expect, it, vi } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";

function jsonResponse(payload: unknown, status = 200): Response {
  return new Response(JSON.stringify(payload), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

describe("api client", () => {
  it("sends the bearer token and parses tasks", async () => {
    const fetchImpl = vi.fn(async (input: RequestInfo | URL, init?: RequestInit) => {
      expect(String(input)).toBe("http://svc/tasks/next?kind=span_annotation&disease=H1");
      expect((init?.headers as Record<string, string>).Authorization).toBe("Bearer tok");
      return jsonResponse({ task_id: "t1", kind: "span_annotation", disease_id: "H1",
                            pmid: "5", payload: {}, status: "open" });
    }) as unknown as typeof fetch;
    const client = new ApiClient("http://svc", "tok", fetchImpl);
    const task = await client.nextTask("span_annotation", "H1");
    expect(task?.task_id).toBe("t1");
  });

  it("maps 204 to null", async () => {
    const fetchImpl = vi.fn(async () => new Response(null, { status: 204 })) as
      unknown as typeof fetch;
    const client = new ApiClient("http://svc", null, fetchImpl);
    expect(await client.nextTask("eval_mark")).toBeNull();
  });

  it("raises ApiError with the service detail", async () => {
    const fetchImpl = vi.fn(async () =>
      jsonResponse({ detail: "task t9 is done" }, 409)) as unknown as typeof fetch;
    const client = new ApiClient("http://svc", null, fetchImpl);
    try {
      await client.completeTask("t9");
      expect.unreachable();
    } catch (error) {
      expect(error).toBeInstanceOf(ApiError);
      expect((error as ApiError).status).toBe(409);
      expect((error as ApiError).detail).toBe("task t9 is done");
    }
  });

  it("posts span submissions as JSON", async () => {
    const fetchImpl = vi.fn(async (input: RequestInfo | URL, init?: RequestInit) => {
      expect(String(input)).toBe("http://svc/tasks/t1/spans");
      expect(init?.method).toBe("POST");
      expect(JSON.parse(String(init?.body))).toEqual(
        { span_start: 3, answer_text: "abc", subgroup_only: true });
      return jsonResponse({ id: "q1", disease_id: "H1", pmid: "5", context: "xxabcxx",
                            question: "What are the risk factors for x?",
                            answers: [{ span_start: 3, text: "abc" }], subgroup_only: true });
    }) as unknown as typeof fetch;
    const client = new ApiClient("http://svc", null, fetchImpl);
    const item = await client.submitSpan("t1", { span_start: 3, answer_text: "abc",
                                                 subgroup_only: true });
    expect(item.id).toBe("q1");
  });
});
