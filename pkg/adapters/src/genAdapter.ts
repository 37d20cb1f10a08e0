/**
 * `/v1/generate` bridge.
 *
 * Accepts the pipeline's generation wire protocol (edge map as base64
 * binary PGM, sampler settings inline) and drives an upstream
 * `POST /api/txt2img` that takes the control bitmap as raw bytes and
 * returns raw RGB8 frames. Upstream frames are re-encoded as binary PPM
 * so the response bytes match what the pipeline's own mock server
 * produces for the same frames.
 *
 * A 409 from upstream (scene saturated) passes through with its
 * message, since the caller turns that status into its retry/give-up
 * decision; any other upstream failure is reported as 502.
 */

import express, { Express } from "express";

import { decodePgm, encodePpm } from "./ppm";
import {
  FetchLike,
  UpstreamUnreachable,
  postJson,
  replyErrorText,
} from "./upstream";
import {
  UpstreamGenerateRequest,
  decodeBase64Strict,
  generateRequestSchema,
  upstreamGenerateResponseSchema,
} from "./wire";

export interface GenAdapterOptions {
  upstreamUrl: string;
  fetchImpl?: FetchLike;
}

export function createGenerateApp(options: GenAdapterOptions): Express {
  const fetchImpl = options.fetchImpl ?? (fetch as unknown as FetchLike);
  const upstream = options.upstreamUrl.replace(/\/+$/, "");
  const app = express();
  app.use(express.json({ limit: "64mb" }));

  app.post("/v1/generate", async (req, res) => {
    const parsed = generateRequestSchema.safeParse(req.body);
    if (!parsed.success) {
      res.status(400).json({ error: parsed.error.issues
        .map((issue) => `${issue.path.join(".")}: ${issue.message}`).join("; ") });
      return;
    }
    const body = parsed.data;

    let edges;
    try {
      edges = decodePgm(decodeBase64Strict("edge_map_pgm_b64", body.edge_map_pgm_b64));
    } catch (err) {
      res.status(400).json({ error: (err as Error).message });
      return;
    }

    const jobRequest: UpstreamGenerateRequest = {
      job_id: body.request_id,
      prompt: body.prompt,
      control_edges_b64: edges.pixels.toString("base64"),
      width: edges.width,
      height: edges.height,
      guidance: body.guidance,
      steps: body.steps,
      sampler: body.sampler,
      scheduler: body.scheduler,
      cfg: body.cfg,
      batch: body.batch,
      seed: body.seed,
    };

    let reply;
    try {
      reply = await postJson(fetchImpl, `${upstream}/api/txt2img`, jobRequest);
    } catch (err) {
      if (err instanceof UpstreamUnreachable) {
        res.status(502).json({ error: err.message });
        return;
      }
      throw err;
    }
    if (reply.status === 409) {
      res.status(409).json({ error: replyErrorText(reply.body) });
      return;
    }
    if (reply.status !== 200) {
      res.status(502).json({
        error: `upstream returned ${reply.status}: ${replyErrorText(reply.body)}`,
      });
      return;
    }

    const job = upstreamGenerateResponseSchema.safeParse(reply.body);
    if (!job.success) {
      res.status(502).json({ error: "upstream response malformed" });
      return;
    }

    const images: string[] = [];
    for (const frame of job.data.images) {
      const pixels = Buffer.from(frame.rgb8_b64, "base64");
      if (pixels.length !== frame.width * frame.height * 3) {
        res.status(502).json({
          error: `upstream frame is ${pixels.length} bytes, expected ` +
            `${frame.width * frame.height * 3} for ${frame.width}x${frame.height}`,
        });
        return;
      }
      images.push(
        encodePpm({ width: frame.width, height: frame.height, pixels }).toString("base64"),
      );
    }

    res.json({ request_id: body.request_id, images_ppm_b64: images });
  });

  return app;
}
