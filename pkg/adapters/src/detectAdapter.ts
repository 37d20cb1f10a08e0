/**
 * `/v1/detect` bridge.
 *
 * Accepts the pipeline's detection wire protocol (image as base64
 * binary PPM plus the list of class names the caller accepts) and
 * drives an upstream `POST /api/classify_boxes` that takes raw RGB8
 * bytes. Upstream class names are returned verbatim; anything not in
 * the request's `labels` list is dropped. The caller sends every alias
 * it accepts and maps the survivors back to its canonical labels, so
 * the bridge itself needs no label table.
 */

import express, { Express } from "express";

import { decodePpm } from "./ppm";
import {
  FetchLike,
  UpstreamUnreachable,
  postJson,
  replyErrorText,
} from "./upstream";
import {
  UpstreamDetectRequest,
  decodeBase64Strict,
  detectRequestSchema,
  upstreamDetectResponseSchema,
} from "./wire";

export interface DetectAdapterOptions {
  upstreamUrl: string;
  fetchImpl?: FetchLike;
}

export function createDetectApp(options: DetectAdapterOptions): Express {
  const fetchImpl = options.fetchImpl ?? (fetch as unknown as FetchLike);
  const upstream = options.upstreamUrl.replace(/\/+$/, "");
  const app = express();
  app.use(express.json({ limit: "64mb" }));

  app.post("/v1/detect", async (req, res) => {
    const parsed = detectRequestSchema.safeParse(req.body);
    if (!parsed.success) {
      res.status(400).json({ error: parsed.error.issues
        .map((issue) => `${issue.path.join(".")}: ${issue.message}`).join("; ") });
      return;
    }
    const body = parsed.data;

    let image;
    try {
      image = decodePpm(decodeBase64Strict("image_ppm_b64", body.image_ppm_b64));
    } catch (err) {
      res.status(400).json({ error: (err as Error).message });
      return;
    }

    const upstreamRequest: UpstreamDetectRequest = {
      rgb8_b64: image.pixels.toString("base64"),
      width: image.width,
      height: image.height,
    };

    let reply;
    try {
      reply = await postJson(fetchImpl, `${upstream}/api/classify_boxes`, upstreamRequest);
    } catch (err) {
      if (err instanceof UpstreamUnreachable) {
        res.status(502).json({ error: err.message });
        return;
      }
      throw err;
    }
    if (reply.status !== 200) {
      res.status(502).json({
        error: `upstream returned ${reply.status}: ${replyErrorText(reply.body)}`,
      });
      return;
    }

    const result = upstreamDetectResponseSchema.safeParse(reply.body);
    if (!result.success) {
      res.status(502).json({ error: "upstream response malformed" });
      return;
    }

    const wanted = new Set(body.labels);
    const detections = result.data.objects
      .filter((obj) => wanted.has(obj.class_name))
      .map((obj) => ({
        label: obj.class_name,
        bbox: obj.box.map(Number),
        confidence: obj.score,
      }));

    res.json({ detections });
  });

  return app;
}
