import { describe, expect, test } from "vitest";

import { createDetectApp } from "../src/detectAdapter";
import { encodePpm } from "../src/ppm";
import {
  fakeUpstream,
  fixtureJson,
  postJson,
  unreachableUpstream,
  withServer,
} from "./helpers";

function appWith(upstream = fakeUpstream(200, fixtureJson("upstream_detect_response.json"))) {
  return createDetectApp({ upstreamUrl: "http://upstream", fetchImpl: upstream });
}

function tinyImageB64(): string {
  return encodePpm({ width: 2, height: 2, pixels: Buffer.alloc(12, 7) }).toString("base64");
}

describe("label filtering", () => {
  test("keeps requested class names verbatim, drops the rest", async () => {
    const upstream = fakeUpstream(200, {
      objects: [
        { class_name: "Bowl", box: [4, 5, 9, 9], score: 0.9 },
        { class_name: "Mixing bowl", box: [1, 2, 3, 4], score: 0.8 },
        { class_name: "Vase", box: [0, 0, 2, 2], score: 0.99 },
      ],
    });
    await withServer(appWith(upstream), async (base) => {
      const { status, body } = await postJson(base, "/v1/detect", {
        image_ppm_b64: tinyImageB64(),
        labels: ["bowl", "Bowl", "Mixing bowl"],
      });
      expect(status).toBe(200);
      expect(body.detections).toEqual([
        { label: "Bowl", bbox: [4, 5, 9, 9], confidence: 0.9 },
        { label: "Mixing bowl", bbox: [1, 2, 3, 4], confidence: 0.8 },
      ]);
    });
  });

  test("no surviving classes gives an empty list", async () => {
    const upstream = fakeUpstream(200, {
      objects: [{ class_name: "Vase", box: [0, 0, 2, 2], score: 0.9 }],
    });
    await withServer(appWith(upstream), async (base) => {
      const { body } = await postJson(base, "/v1/detect", {
        image_ppm_b64: tinyImageB64(),
        labels: ["bowl"],
      });
      expect(body).toEqual({ detections: [] });
    });
  });
});

describe("request validation", () => {
  test("empty labels list is a 400", async () => {
    await withServer(appWith(), async (base) => {
      const { status, body } = await postJson(base, "/v1/detect", {
        image_ppm_b64: tinyImageB64(),
        labels: [],
      });
      expect(status).toBe(400);
      expect(body.error).toContain("labels");
    });
  });

  test("malformed base64 is a 400", async () => {
    await withServer(appWith(), async (base) => {
      const { status, body } = await postJson(base, "/v1/detect", {
        image_ppm_b64: "%%%",
        labels: ["bowl"],
      });
      expect(status).toBe(400);
      expect(body.error).toBe("image_ppm_b64 is not valid base64");
    });
  });

  test("truncated PPM is a 400", async () => {
    const whole = encodePpm({ width: 2, height: 2, pixels: Buffer.alloc(12, 7) });
    await withServer(appWith(), async (base) => {
      const { status, body } = await postJson(base, "/v1/detect", {
        image_ppm_b64: whole.subarray(0, whole.length - 3).toString("base64"),
        labels: ["bowl"],
      });
      expect(status).toBe(400);
      expect(body.error).toBe("P6 truncated: expected 12 bytes, got 9");
    });
  });
});

describe("upstream handling", () => {
  test("upstream failure becomes a 502", async () => {
    const upstream = fakeUpstream(500, { error: "model not loaded" });
    await withServer(appWith(upstream), async (base) => {
      const { status, body } = await postJson(base, "/v1/detect", {
        image_ppm_b64: tinyImageB64(),
        labels: ["bowl"],
      });
      expect(status).toBe(502);
      expect(body.error).toBe("upstream returned 500: model not loaded");
    });
  });

  test("unreachable upstream becomes a 502", async () => {
    await withServer(appWith(unreachableUpstream()), async (base) => {
      const { status, body } = await postJson(base, "/v1/detect", {
        image_ppm_b64: tinyImageB64(),
        labels: ["bowl"],
      });
      expect(status).toBe(502);
      expect(body.error).toContain("upstream unreachable");
    });
  });

  test("malformed upstream body becomes a 502", async () => {
    const upstream = fakeUpstream(200, { objects: [{ class_name: 3 }] });
    await withServer(appWith(upstream), async (base) => {
      const { status, body } = await postJson(base, "/v1/detect", {
        image_ppm_b64: tinyImageB64(),
        labels: ["bowl"],
      });
      expect(status).toBe(502);
      expect(body.error).toBe("upstream response malformed");
    });
  });
});
