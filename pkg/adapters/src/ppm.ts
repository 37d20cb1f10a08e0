/**
 * Binary netpbm codecs (P6 color, P5 grayscale).
 *
 * The encoder emits exactly `P6\n<w> <h>\n255\n` + raw bytes so that
 * responses compare byte-identical with images produced by the pipeline
 * itself. The parser accepts the full netpbm header grammar: arbitrary
 * whitespace between tokens, `#` comment lines, and exactly one
 * whitespace byte between the maxval token and the binary body.
 */

export interface RgbImage {
  width: number;
  height: number;
  /** Row-major RGB, 3 bytes per pixel. */
  pixels: Buffer;
}

export interface GrayImage {
  width: number;
  height: number;
  /** Row-major single channel, 1 byte per pixel. */
  pixels: Buffer;
}

export function encodePpm(image: RgbImage): Buffer {
  if (image.pixels.length !== image.width * image.height * 3) {
    throw new Error(
      `PPM payload is ${image.pixels.length} bytes, expected ${image.width * image.height * 3}`,
    );
  }
  const header = Buffer.from(`P6\n${image.width} ${image.height}\n255\n`, "ascii");
  return Buffer.concat([header, image.pixels]);
}

export function encodePgm(image: GrayImage): Buffer {
  if (image.pixels.length !== image.width * image.height) {
    throw new Error(
      `PGM payload is ${image.pixels.length} bytes, expected ${image.width * image.height}`,
    );
  }
  const header = Buffer.from(`P5\n${image.width} ${image.height}\n255\n`, "ascii");
  return Buffer.concat([header, image.pixels]);
}

export function decodePpm(data: Buffer): RgbImage {
  const { width, height, body } = parseHeader(data, "P6", 3);
  return { width, height, pixels: body };
}

export function decodePgm(data: Buffer): GrayImage {
  const { width, height, body } = parseHeader(data, "P5", 1);
  return { width, height, pixels: body };
}

const WHITESPACE = new Set([0x20, 0x09, 0x0a, 0x0b, 0x0c, 0x0d]);

function parseHeader(
  data: Buffer,
  magic: string,
  channels: number,
): { width: number; height: number; body: Buffer } {
  if (data.length < magic.length || data.toString("ascii", 0, magic.length) !== magic) {
    throw new Error(`not a ${magic} file`);
  }
  let pos = magic.length;
  const tokens: number[] = [];
  while (tokens.length < 3) {
    while (pos < data.length && WHITESPACE.has(data[pos])) {
      pos += 1;
    }
    if (pos < data.length && data[pos] === 0x23 /* '#' */) {
      while (pos < data.length && data[pos] !== 0x0a) {
        pos += 1;
      }
      continue;
    }
    const start = pos;
    while (pos < data.length && !WHITESPACE.has(data[pos])) {
      pos += 1;
    }
    if (start === pos) {
      throw new Error("truncated netpbm header");
    }
    const token = data.toString("ascii", start, pos);
    if (!/^\d+$/.test(token)) {
      throw new Error(`bad netpbm header token ${JSON.stringify(token)}`);
    }
    tokens.push(Number(token));
  }
  pos += 1; // single whitespace byte before the body
  const [width, height, maxval] = tokens;
  if (maxval !== 255) {
    throw new Error(`unsupported ${magic} maxval ${maxval}`);
  }
  const expected = width * height * channels;
  const body = data.subarray(pos, pos + expected);
  if (body.length !== expected) {
    throw new Error(`${magic} truncated: expected ${expected} bytes, got ${body.length}`);
  }
  return { width, height, body: Buffer.from(body) };
}
