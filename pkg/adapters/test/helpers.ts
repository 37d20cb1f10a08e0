import { readFileSync } from "fs";
import { Server } from "http";
import { AddressInfo } from "net";
import * as path from "path";

import { Express } from "express";

import { FetchLike } from "../src/upstream";

/** Repo-level fixtures directory shared with the pipeline's own suite. */
export const FIXTURES_DIR =
  process.env.FIXTURES_DIR ?? path.resolve(process.cwd(), "..", "fixtures");

export function fixtureJson<T = any>(name: string): T {
  return JSON.parse(readFileSync(path.join(FIXTURES_DIR, name), "utf-8"));
}

/** Run `fn` against an app listening on an ephemeral port. */
export async function withServer(
  app: Express,
  fn: (baseUrl: string) => Promise<void>,
): Promise<void> {
  const server: Server = await new Promise((resolve) => {
    const s = app.listen(0, () => resolve(s));
  });
  try {
    const { port } = server.address() as AddressInfo;
    await fn(`http://127.0.0.1:${port}`);
  } finally {
    await new Promise((resolve) => server.close(() => resolve(null)));
  }
}

export async function postJson(
  baseUrl: string,
  route: string,
  payload: unknown,
): Promise<{ status: number; body: any }> {
  const response = await fetch(baseUrl + route, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(payload),
  });
  return { status: response.status, body: await response.json() };
}

export interface RecordedCall {
  url: string;
  payload: any;
}

export interface FakeFetch extends FetchLike {
  calls: RecordedCall[];
}

/** Scripted upstream: every call gets `status`/`body`, and is recorded. */
export function fakeUpstream(status: number, body: unknown): FakeFetch {
  const calls: RecordedCall[] = [];
  const impl = async (url: string, init: { body: string }) => {
    calls.push({ url, payload: JSON.parse(init.body) });
    return {
      status,
      text: async () => (typeof body === "string" ? body : JSON.stringify(body)),
    };
  };
  return Object.assign(impl, { calls });
}

export function unreachableUpstream(): FakeFetch {
  const calls: RecordedCall[] = [];
  const impl = async () => {
    throw new Error("connect ECONNREFUSED");
  };
  return Object.assign(impl, { calls });
}
