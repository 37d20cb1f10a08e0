/**
 * Wire schemas for both sides of the bridge.
 *
 * Downstream (what the pipeline's HTTP backend and detector speak):
 * `POST /v1/generate` and `POST /v1/detect`, images as base64 netpbm.
 * Upstream (the model server being adapted): `POST /api/txt2img` and
 * `POST /api/classify_boxes`, images as base64 raw RGB8 rows.
 */

import { z } from "zod";

export const generateRequestSchema = z.object({
  request_id: z.string().min(1),
  prompt: z.string().min(1),
  edge_map_pgm_b64: z.string(),
  guidance: z.number().positive(),
  steps: z.number().int().positive(),
  sampler: z.string().min(1),
  scheduler: z.string().min(1),
  cfg: z.number().gte(1),
  batch: z.number().int().positive(),
  seed: z.number().int().nonnegative(),
});

export type GenerateRequest = z.infer<typeof generateRequestSchema>;

export const detectRequestSchema = z.object({
  image_ppm_b64: z.string(),
  labels: z.array(z.string().min(1)).nonempty(),
});

export type DetectRequest = z.infer<typeof detectRequestSchema>;

export interface UpstreamGenerateRequest {
  job_id: string;
  prompt: string;
  control_edges_b64: string;
  width: number;
  height: number;
  guidance: number;
  steps: number;
  sampler: string;
  scheduler: string;
  cfg: number;
  batch: number;
  seed: number;
}

export const upstreamGenerateResponseSchema = z.object({
  job_id: z.string(),
  images: z.array(
    z.object({
      width: z.number().int().positive(),
      height: z.number().int().positive(),
      rgb8_b64: z.string(),
    }),
  ),
});

export interface UpstreamDetectRequest {
  rgb8_b64: string;
  width: number;
  height: number;
}

export const upstreamDetectResponseSchema = z.object({
  objects: z.array(
    z.object({
      class_name: z.string(),
      box: z.tuple([z.number(), z.number(), z.number(), z.number()]),
      score: z.number().min(0).max(1),
    }),
  ),
});

const BASE64_PATTERN = /^[A-Za-z0-9+/]*={0,2}$/;

/** Strict base64 to bytes; rejects whitespace and bad padding. */
export function decodeBase64Strict(field: string, value: string): Buffer {
  if (value.length % 4 !== 0 || !BASE64_PATTERN.test(value)) {
    throw new Error(`${field} is not valid base64`);
  }
  return Buffer.from(value, "base64");
}
