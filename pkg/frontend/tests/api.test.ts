import { afterEach, describe, expect, it, vi } from "vitest";

import { ApiError, apiBaseFromLocation, LabelApi } from "../src/api.js";

function mockFetch(status: number, body: unknown) {
  const fn = vi.fn(async () => ({
    ok: status >= 200 && status < 300,
    status,
    statusText: `status ${status}`,
    json: async () => body,
  }));
  vi.stubGlobal("fetch", fn);
  return fn;
}

afterEach(() => vi.unstubAllGlobals());

describe("base url resolution", () => {
  it("defaults to the local server", () => {
    expect(apiBaseFromLocation("")).toBe("http://127.0.0.1:8765");
  });

  it("honors ?api=", () => {
    expect(apiBaseFromLocation("?api=http://box:9000")).toBe("http://box:9000");
  });
});

describe("LabelApi", () => {
  it("builds window query strings", async () => {
    const fn = mockFetch(200, { sample_id: 3 });
    const api = new LabelApi("http://x/");
    await api.window(3, { start: 10, end: 90, maxPoints: 200, overlays: ["zero", "trend"] });
    const url = fn.mock.calls[0][0] as string;
    expect(url).toBe("http://x/samples/3/window?start=10&end=90&max_points=200&overlays=zero%2Ctrend");
  });

  it("omits empty query parts", async () => {
    const fn = mockFetch(200, {});
    await new LabelApi("http://x").window(7);
    expect(fn.mock.calls[0][0]).toBe("http://x/samples/7/window");
  });

  it("posts label drafts as JSON", async () => {
    const fn = mockFetch(201, { revision: 1 });
    const api = new LabelApi("http://x");
    const draft = {
      sample_id: 5,
      fault_class: "Short-circuit",
      fault_type: "1-P-SC",
      phase: "C",
      comment: "",
    };
    const entry = await api.postLabel(draft);
    expect(entry.revision).toBe(1);
    const init = fn.mock.calls[0][1] as RequestInit;
    expect(init.method).toBe("POST");
    expect(JSON.parse(init.body as string)).toEqual(draft);
  });

  it("surfaces server error details", async () => {
    mockFetch(400, { detail: "fault type nope is not valid" });
    const api = new LabelApi("http://x");
    await expect(api.postLabel({
      sample_id: 1, fault_class: "Normal", fault_type: "nope", phase: "N/A", comment: "",
    })).rejects.toThrowError(ApiError);
    try {
      await api.postLabel({
        sample_id: 1, fault_class: "Normal", fault_type: "nope", phase: "N/A", comment: "",
      });
    } catch (err) {
      expect((err as ApiError).status).toBe(400);
      expect((err as ApiError).message).toMatch(/not valid/);
    }
  });

  it("recompute posts and parses the report", async () => {
    mockFetch(200, { schema_version: 1, global: { purity: 1.0 } });
    const report = await new LabelApi("http://x").recompute();
    expect(report.global.purity).toBe(1.0);
  });
});
