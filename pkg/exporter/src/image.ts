/** Minimal raster support: binary PPM (P6) and PGM (P5), 8-bit samples. */

export interface RawImage {
  width: number;
  height: number;
  /** RGB, row-major, 3 bytes per pixel. */
  pixels: Uint8Array;
}

export class ImageFormatError extends Error {}

function parseHeader(buf: Buffer): { magic: string; width: number; height: number; maxval: number; offset: number } {
  const magic = buf.toString("ascii", 0, 2);
  if (magic !== "P6" && magic !== "P5") {
    throw new ImageFormatError(`unsupported raster magic ${magic}`);
  }
  // header tokens separated by whitespace; '#' starts a comment to end of line
  let pos = 2;
  const tokens: number[] = [];
  while (tokens.length < 3) {
    while (pos < buf.length && /\s/.test(String.fromCharCode(buf[pos]))) pos++;
    if (pos < buf.length && buf[pos] === 0x23) {
      while (pos < buf.length && buf[pos] !== 0x0a) pos++;
      continue;
    }
    let start = pos;
    while (pos < buf.length && !/\s/.test(String.fromCharCode(buf[pos]))) pos++;
    if (start === pos) throw new ImageFormatError("malformed raster header");
    tokens.push(parseInt(buf.toString("ascii", start, pos), 10));
  }
  pos++; // single whitespace after maxval
  const [width, height, maxval] = tokens;
  if (!(width > 0 && height > 0) || maxval !== 255) {
    throw new ImageFormatError(`unsupported raster geometry ${width}x${height} maxval=${maxval}`);
  }
  return { magic, width, height, maxval, offset: pos };
}

export function decodeImage(buf: Buffer): RawImage {
  const { magic, width, height, offset } = parseHeader(buf);
  const channels = magic === "P6" ? 3 : 1;
  const need = width * height * channels;
  if (buf.length < offset + need) {
    throw new ImageFormatError(`raster data truncated: need ${need} bytes`);
  }
  const raw = buf.subarray(offset, offset + need);
  const pixels = new Uint8Array(width * height * 3);
  if (channels === 3) {
    pixels.set(raw);
  } else {
    for (let i = 0; i < width * height; i++) {
      pixels[3 * i] = pixels[3 * i + 1] = pixels[3 * i + 2] = raw[i];
    }
  }
  return { width, height, pixels };
}

export function encodePpm(image: RawImage): Buffer {
  const header = Buffer.from(`P6\n${image.width} ${image.height}\n255\n`, "ascii");
  return Buffer.concat([header, Buffer.from(image.pixels)]);
}

export function solidImage(r: number, g: number, b: number, width = 8, height = 8): RawImage {
  const pixels = new Uint8Array(width * height * 3);
  for (let i = 0; i < width * height; i++) {
    pixels[3 * i] = r;
    pixels[3 * i + 1] = g;
    pixels[3 * i + 2] = b;
  }
  return { width, height, pixels };
}
