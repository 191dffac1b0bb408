import { PNG } from 'pngjs';

/** Thrown when a payload cannot be decoded as a PNG; maps to HTTP 400. */
export class PngDecodeError extends Error {}

export function decodePng(base64: string): PNG {
  let raw: Buffer;
  try {
    raw = Buffer.from(base64, 'base64');
  } catch (err) {
    throw new PngDecodeError(`invalid base64 payload: ${String(err)}`);
  }
  try {
    return PNG.sync.read(raw);
  } catch (err) {
    throw new PngDecodeError(`not a decodable PNG: ${String(err)}`);
  }
}

export function encodePng(png: PNG): string {
  return PNG.sync.write(png).toString('base64');
}

export function clonePng(png: PNG): PNG {
  const copy = new PNG({ width: png.width, height: png.height });
  png.data.copy(copy.data);
  return copy;
}

/** A mask pixel allows generation when its red channel is above 127. */
export function maskAllows(mask: PNG, x: number, y: number): boolean {
  return mask.data[(mask.width * y + x) * 4] > 127;
}
