/** Shared upstream HTTP plumbing for both adapters. */

export type FetchLike = (
  url: string,
  init: { method: string; headers: Record<string, string>; body: string },
) => Promise<{ status: number; text(): Promise<string> }>;

export interface UpstreamReply {
  status: number;
  body: unknown;
}

export class UpstreamUnreachable extends Error {}

/** POST a JSON payload; non-JSON reply bodies come back as raw text. */
export async function postJson(
  fetchImpl: FetchLike,
  url: string,
  payload: unknown,
): Promise<UpstreamReply> {
  let reply;
  try {
    reply = await fetchImpl(url, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
  } catch (err) {
    throw new UpstreamUnreachable(`upstream unreachable: ${(err as Error).message}`);
  }
  const text = await reply.text();
  let body: unknown = text;
  try {
    body = JSON.parse(text);
  } catch {
    // keep the raw text; only error reporting needs it
  }
  return { status: reply.status, body };
}

/** Best-effort error message out of an upstream reply body. */
export function replyErrorText(body: unknown): string {
  if (typeof body === "object" && body !== null && "error" in body) {
    return String((body as { error: unknown }).error);
  }
  return typeof body === "string" ? body : JSON.stringify(body);
}
