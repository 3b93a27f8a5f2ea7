import { afterEach, describe, expect, it, vi } from "vitest";

import { ApiClient, ApiError } from "../src/api";
import { DEFAULT_CAMERA, orbit, project, zoomBy } from "../src/camera";
import { buildPanels } from "../src/render";
import {
  CompletionRequester,
  completionColor,
  initialState,
  renderedPointCounts,
  toggleCompletion,
  withError,
  withResponse,
  withShape,
} from "../src/state";
import type { CompletionResponse, Point3 } from "../src/types";
import { parseXyz } from "../src/xyz";

describe("parseXyz", () => {
  it("parses one point per line", () => {
    expect(parseXyz("0 0 0\n1 2.5 -3\n")).toEqual([
      [0, 0, 0],
      [1, 2.5, -3],
    ]);
  });

  it("skips blank lines", () => {
    expect(parseXyz("\n1 2 3\n\n")).toHaveLength(1);
  });

  it("rejects short lines with the line number", () => {
    expect(() => parseXyz("1 2 3\n4 5")).toThrow(/line 2/);
  });

  it("rejects non-numeric values", () => {
    expect(() => parseXyz("1 2 cat")).toThrow(/line 1/);
  });

  it("rejects empty files", () => {
    expect(() => parseXyz("")).toThrow(/no points/);
  });
});

describe("camera", () => {
  it("clamps pitch", () => {
    let cam = DEFAULT_CAMERA;
    for (let i = 0; i < 100; i++) cam = orbit(cam, 0, 0.5);
    expect(cam.pitch).toBeLessThan(Math.PI / 2);
  });

  it("bounds zoom", () => {
    let cam = DEFAULT_CAMERA;
    for (let i = 0; i < 50; i++) cam = zoomBy(cam, 2);
    expect(cam.zoom).toBeLessThanOrEqual(8);
    for (let i = 0; i < 100; i++) cam = zoomBy(cam, 0.5);
    expect(cam.zoom).toBeGreaterThanOrEqual(0.2);
  });

  it("projection preserves distances between screen-plane points", () => {
    // two points differing only along the camera's right axis keep
    // their separation under any yaw/pitch (orthographic, rigid)
    const cam = orbit(DEFAULT_CAMERA, 0.3, -0.2);
    const pts: Point3[] = [
      [0, 0, 0],
      [Math.cos(cam.yaw), Math.sin(cam.yaw), 0],
    ];
    const [a, b] = project(pts, cam, 400, 400);
    const dist = Math.hypot(a.x - b.x, a.y - b.y);
    const scale = (400 / 2.6) * cam.zoom;
    expect(dist).toBeCloseTo(scale, 6);
    expect(a.y).toBeCloseTo(b.y, 6);
  });

  it("projection centers the origin", () => {
    const [p] = project([[0, 0, 0]], DEFAULT_CAMERA, 300, 200);
    expect(p.x).toBeCloseTo(150);
    expect(p.y).toBeCloseTo(100);
  });
});

const RESPONSE: CompletionResponse = {
  completions: [
    {
      prompt: "curved back",
      missing: [
        [0, 0, 0],
        [0.1, 0, 0],
      ],
      coarse: [[0, 0, 0]],
      full_size: 6,
      oov: false,
    },
    {
      prompt: "flat back",
      missing: [[0.2, 0, 0]],
      coarse: [[0.2, 0, 0]],
      full_size: 5,
      oov: true,
    },
  ],
  model_id: "m",
  timing_ms: 12,
};

describe("state transitions", () => {
  const base = withShape(
    initialState(),
    { kind: "file", name: "part.xyz" },
    [
      [0, 0, 0],
      [1, 1, 1],
      [0, 1, 0],
      [1, 0, 0],
    ],
  );

  it("withResponse keeps previous for A/B", () => {
    const s1 = withResponse(base, RESPONSE);
    const s2 = withResponse(s1, RESPONSE);
    expect(s2.previous).toBe(s1.current);
    expect(s2.error).toBeNull();
  });

  it("assigns distinct colors per completion", () => {
    const s = withResponse(base, RESPONSE);
    const colors = (s.current ?? []).map((v) => v.color);
    expect(new Set(colors).size).toBe(colors.length);
    expect(colors[0]).toBe(completionColor(0));
  });

  it("rendered counts reflect visibility toggles", () => {
    let s = withResponse(base, RESPONSE);
    expect(renderedPointCounts(s)).toEqual({ input: 4, missing: 3 });
    s = toggleCompletion(s, 0);
    expect(renderedPointCounts(s).missing).toBe(1);
  });

  it("withError keeps prior render state", () => {
    const s = withResponse(base, RESPONSE);
    const e = withError(s, "boom");
    expect(e.current).toBe(s.current);
    expect(e.error).toBe("boom");
  });
});

describe("render model", () => {
  const base = withShape(initialState(), { kind: "file", name: "p.xyz" }, [[0, 0, 0]]);

  it("single prompt renders one overlay panel", () => {
    const one = {
      ...RESPONSE,
      completions: [RESPONSE.completions[0]],
    };
    const panels = buildPanels(withResponse(base, one), DEFAULT_CAMERA, 100, 100);
    expect(panels).toHaveLength(1);
    expect(panels[0].layers.map((l) => l.label)).toEqual(["input", "missing", "coarse"]);
  });

  it("k>1 renders small multiples with shared camera", () => {
    const panels = buildPanels(withResponse(base, RESPONSE), DEFAULT_CAMERA, 100, 100);
    expect(panels).toHaveLength(2);
    expect(panels[0].title).toBe("curved back");
    expect(panels[1].title).toContain("[oov]");
    // same camera: the shared input layer projects identically
    expect(panels[0].layers[0].points).toEqual(panels[1].layers[0].points);
  });

  it("does not mutate input point data", () => {
    const s = withResponse(base, RESPONSE);
    const before = JSON.stringify(s.inputPoints) + JSON.stringify(RESPONSE.completions);
    buildPanels(s, DEFAULT_CAMERA, 64, 64);
    expect(JSON.stringify(s.inputPoints) + JSON.stringify(RESPONSE.completions)).toBe(before);
  });

  it("hidden completions are excluded from panels", () => {
    const s = toggleCompletion(withResponse(base, RESPONSE), 1);
    const panels = buildPanels(s, DEFAULT_CAMERA, 100, 100);
    expect(panels).toHaveLength(1);
  });
});

describe("CompletionRequester", () => {
  afterEach(() => vi.unstubAllGlobals());

  const shaped = withShape(
    initialState(),
    { kind: "server", shapeId: "s", removedPartType: "back", gtPrompt: "flat back" },
    [[0, 0, 0]],
  );

  it("submits a prompt request and applies the response", async () => {
    vi.stubGlobal(
      "fetch",
      vi.fn(async () => new Response(JSON.stringify(RESPONSE), { status: 200 })),
    );
    const req = new CompletionRequester(new ApiClient("http://x"));
    const next = await req.submit({ ...shaped, prompt: "curved back" });
    expect(next.current).toHaveLength(2);
    expect(next.modelId).toBe("m");
  });

  it("diverse mode sends k and part_type when prompt empty", async () => {
    const fetchMock = vi.fn(async (url: RequestInfo | URL, init?: RequestInit) => {
      const body = JSON.parse(String(init?.body));
      expect(body.k).toBe(4);
      expect(body.part_type).toBe("back");
      return new Response(JSON.stringify(RESPONSE), { status: 200 });
    });
    vi.stubGlobal("fetch", fetchMock);
    const req = new CompletionRequester(new ApiClient("http://x"));
    await req.submit({ ...shaped, prompt: "", k: 4 });
    expect(fetchMock).toHaveBeenCalledOnce();
  });

  it("maps 4xx to an error banner with the server reason", async () => {
    vi.stubGlobal(
      "fetch",
      vi.fn(async () => new Response(JSON.stringify({ detail: "too few points" }), { status: 400 })),
    );
    const req = new CompletionRequester(new ApiClient("http://x"));
    const next = await req.submit({ ...shaped, prompt: "curved back" });
    expect(next.error).toBe("too few points");
    expect(next.busy).toBe(false);
  });

  it("server down yields an unreachable banner", async () => {
    vi.stubGlobal(
      "fetch",
      vi.fn(async () => {
        throw new TypeError("fetch failed");
      }),
    );
    const req = new CompletionRequester(new ApiClient("http://nowhere"));
    const next = await req.submit({ ...shaped, prompt: "curved back" });
    expect(next.error).toMatch(/unreachable/);
  });

  it("a new submission cancels the pending one", async () => {
    let firstAborted = false;
    const fetchMock = vi.fn((url: RequestInfo | URL, init?: RequestInit) => {
      const call = fetchMock.mock.calls.length;
      return new Promise<Response>((resolve, reject) => {
        init?.signal?.addEventListener("abort", () => {
          if (call === 1) firstAborted = true;
          reject(new DOMException("aborted", "AbortError"));
        });
        if (call === 2) {
          resolve(new Response(JSON.stringify(RESPONSE), { status: 200 }));
        }
      });
    });
    vi.stubGlobal("fetch", fetchMock);
    const req = new CompletionRequester(new ApiClient("http://x"));
    const p1 = req.submit({ ...shaped, prompt: "curved back" });
    const p2 = req.submit({ ...shaped, prompt: "flat back" });
    const [r1, r2] = await Promise.all([p1, p2]);
    expect(firstAborted).toBe(true);
    expect(r2.current).toHaveLength(2);
    expect(r1.error).toBeNull(); // superseded request is not an error
  });

  it("requires a prompt or diverse k", async () => {
    const req = new CompletionRequester(new ApiClient("http://x"));
    const next = await req.submit({ ...shaped, prompt: "", k: 1 });
    expect(next.error).toMatch(/prompt/);
  });
});

describe("ApiError", () => {
  it("carries the HTTP status", () => {
    const e = new ApiError("nope", 404);
    expect(e.status).toBe(404);
    expect(e.message).toBe("nope");
  });
});
