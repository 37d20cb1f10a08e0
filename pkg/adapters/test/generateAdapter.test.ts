import { describe, expect, test } from "vitest";

import { createGenerateApp } from "../src/genAdapter";
import {
  fakeUpstream,
  fixtureJson,
  postJson,
  unreachableUpstream,
  withServer,
} from "./helpers";

function appWith(upstream = fakeUpstream(200, fixtureJson("upstream_gen_response.json"))) {
  return createGenerateApp({ upstreamUrl: "http://upstream", fetchImpl: upstream });
}

describe("request validation", () => {
  test("missing prompt is a 400", async () => {
    const request = { ...fixtureJson("gen_request.json") };
    delete request.prompt;
    await withServer(appWith(), async (base) => {
      const { status, body } = await postJson(base, "/v1/generate", request);
      expect(status).toBe(400);
      expect(body.error).toContain("prompt");
    });
  });

  test("zero batch is a 400", async () => {
    const request = { ...fixtureJson("gen_request.json"), batch: 0 };
    await withServer(appWith(), async (base) => {
      const { status, body } = await postJson(base, "/v1/generate", request);
      expect(status).toBe(400);
      expect(body.error).toContain("batch");
    });
  });

  test("malformed base64 is a 400", async () => {
    const request = { ...fixtureJson("gen_request.json"), edge_map_pgm_b64: "!!!" };
    await withServer(appWith(), async (base) => {
      const { status, body } = await postJson(base, "/v1/generate", request);
      expect(status).toBe(400);
      expect(body.error).toBe("edge_map_pgm_b64 is not valid base64");
    });
  });

  test("valid base64 of a non-PGM payload is a 400", async () => {
    const request = {
      ...fixtureJson("gen_request.json"),
      edge_map_pgm_b64: Buffer.from("P6\n2 2\n255\n", "ascii").toString("base64"),
    };
    await withServer(appWith(), async (base) => {
      const { status, body } = await postJson(base, "/v1/generate", request);
      expect(status).toBe(400);
      expect(body.error).toBe("not a P5 file");
    });
  });

  test("validation failures never reach upstream", async () => {
    const upstream = fakeUpstream(200, fixtureJson("upstream_gen_response.json"));
    const request = { ...fixtureJson("gen_request.json"), steps: -1 };
    await withServer(appWith(upstream), async (base) => {
      const { status } = await postJson(base, "/v1/generate", request);
      expect(status).toBe(400);
    });
    expect(upstream.calls).toHaveLength(0);
  });
});

describe("upstream handling", () => {
  test("saturation passes through as 409 with its message", async () => {
    const upstream = fakeUpstream(409, {
      error: "scene saturated: no valid placement in 10000 samples",
    });
    await withServer(appWith(upstream), async (base) => {
      const { status, body } = await postJson(
        base, "/v1/generate", fixtureJson("gen_request.json"));
      expect(status).toBe(409);
      expect(body.error).toBe("scene saturated: no valid placement in 10000 samples");
    });
  });

  test("upstream 500 becomes a 502", async () => {
    const upstream = fakeUpstream(500, { error: "cuda melted" });
    await withServer(appWith(upstream), async (base) => {
      const { status, body } = await postJson(
        base, "/v1/generate", fixtureJson("gen_request.json"));
      expect(status).toBe(502);
      expect(body.error).toBe("upstream returned 500: cuda melted");
    });
  });

  test("unreachable upstream becomes a 502", async () => {
    await withServer(appWith(unreachableUpstream()), async (base) => {
      const { status, body } = await postJson(
        base, "/v1/generate", fixtureJson("gen_request.json"));
      expect(status).toBe(502);
      expect(body.error).toContain("upstream unreachable");
    });
  });

  test("schema-breaking upstream body becomes a 502", async () => {
    const upstream = fakeUpstream(200, { job_id: "x", images: [{ width: 4 }] });
    await withServer(appWith(upstream), async (base) => {
      const { status, body } = await postJson(
        base, "/v1/generate", fixtureJson("gen_request.json"));
      expect(status).toBe(502);
      expect(body.error).toBe("upstream response malformed");
    });
  });

  test("frame with the wrong byte count becomes a 502", async () => {
    const upstream = fakeUpstream(200, {
      job_id: "x",
      images: [{ width: 4, height: 4, rgb8_b64: Buffer.alloc(10).toString("base64") }],
    });
    await withServer(appWith(upstream), async (base) => {
      const { status, body } = await postJson(
        base, "/v1/generate", fixtureJson("gen_request.json"));
      expect(status).toBe(502);
      expect(body.error).toContain("expected 48");
    });
  });
});
