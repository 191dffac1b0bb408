import { PNG } from 'pngjs';

import { centerToCorner } from './geometry.js';
import { clonePng, maskAllows } from './png.js';
import type { Detection, InpaintRequest } from './schemas.js';

/** Thrown for backend-side failures; maps to HTTP 500. */
export class BackendError extends Error {}

export interface DecodedInpaintRequest {
  request: InpaintRequest;
  image: PNG;
  mask: PNG;
}

export interface InpaintBackend {
  readonly name: string;
  /** Returns batch_size output images, same dimensions as the input. */
  inpaint(input: DecodedInpaintRequest): PNG[];
}

export interface DetectBackend {
  readonly name: string;
  detect(image: PNG, prompt: string, scoreFloor: number): Detection[];
}

function charSum(text: string): number {
  let total = 0;
  for (const ch of text) {
    total += ch.codePointAt(0) ?? 0;
  }
  return total;
}

/** Deterministic 32-bit PRNG; same seed, same stream, on every platform. */
function mulberry32(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

/**
 * Stand-in generator for environments without a diffusion backend. It paints
 * the masked region with a prompt- and seed-derived color field and touches
 * nothing else, so callers can verify mask locality exactly.
 */
export class SyntheticInpaintBackend implements InpaintBackend {
  readonly name = 'synthetic';

  inpaint({ request, image, mask }: DecodedInpaintRequest): PNG[] {
    const outputs: PNG[] = [];
    for (let item = 0; item < request.batch_size; item += 1) {
      const rand = mulberry32(request.seed + 7919 * item + charSum(request.prompt));
      const base = [rand() * 256, rand() * 256, rand() * 256];
      const out = clonePng(image);
      for (let y = 0; y < image.height; y += 1) {
        for (let x = 0; x < image.width; x += 1) {
          if (!maskAllows(mask, x, y)) {
            continue;
          }
          const idx = (image.width * y + x) * 4;
          for (let c = 0; c < 3; c += 1) {
            const jitter = (rand() - 0.5) * 60;
            out.data[idx + c] = Math.max(0, Math.min(255, Math.round(base[c] + jitter)));
          }
          out.data[idx + 3] = 255;
        }
      }
      outputs.push(out);
    }
    return outputs;
  }
}

interface Blob {
  minX: number;
  minY: number;
  maxX: number;
  maxY: number;
  area: number;
}

function isMarker(png: PNG, x: number, y: number): boolean {
  const idx = (png.width * y + x) * 4;
  return png.data[idx] > 200 && png.data[idx + 1] < 60 && png.data[idx + 2] > 200;
}

/** Connected components (4-connectivity) of marker-colored pixels. */
function findBlobs(png: PNG): Blob[] {
  const visited = new Uint8Array(png.width * png.height);
  const blobs: Blob[] = [];
  for (let y = 0; y < png.height; y += 1) {
    for (let x = 0; x < png.width; x += 1) {
      const flat = png.width * y + x;
      if (visited[flat] || !isMarker(png, x, y)) {
        continue;
      }
      const blob: Blob = { minX: x, minY: y, maxX: x, maxY: y, area: 0 };
      const queue: number[] = [flat];
      visited[flat] = 1;
      while (queue.length > 0) {
        const current = queue.pop()!;
        const cx = current % png.width;
        const cy = (current - cx) / png.width;
        blob.area += 1;
        blob.minX = Math.min(blob.minX, cx);
        blob.maxX = Math.max(blob.maxX, cx);
        blob.minY = Math.min(blob.minY, cy);
        blob.maxY = Math.max(blob.maxY, cy);
        const neighbors = [
          [cx - 1, cy],
          [cx + 1, cy],
          [cx, cy - 1],
          [cx, cy + 1],
        ];
        for (const [nx, ny] of neighbors) {
          if (nx < 0 || ny < 0 || nx >= png.width || ny >= png.height) {
            continue;
          }
          const nFlat = png.width * ny + nx;
          if (!visited[nFlat] && isMarker(png, nx, ny)) {
            visited[nFlat] = 1;
            queue.push(nFlat);
          }
        }
      }
      blobs.push(blob);
    }
  }
  return blobs;
}

/**
 * Stand-in detector: boxes connected regions of saturated magenta pixels.
 * Native output is center/size, converted to the corner wire format; scores
 * are a deterministic function of the prompt and the blob size.
 */
export class SyntheticDetectBackend implements DetectBackend {
  readonly name = 'synthetic-blob';

  detect(image: PNG, prompt: string, scoreFloor: number): Detection[] {
    const detections: Detection[] = [];
    for (const blob of findBlobs(image)) {
      const w = blob.maxX - blob.minX + 1;
      const h = blob.maxY - blob.minY + 1;
      const native = {
        cx: blob.minX + w / 2,
        cy: blob.minY + h / 2,
        w,
        h,
      };
      const score = Math.min(
        1,
        0.5 + ((charSum(prompt) % 40) / 100) + Math.min(blob.area / 20000, 0.09),
      );
      if (score < scoreFloor) {
        continue;
      }
      detections.push({ bbox: centerToCorner(native), score });
    }
    detections.sort((a, b) => b.score - a.score || a.bbox[0] - b.bbox[0]);
    return detections;
  }
}

export const inpaintBackends: Record<string, () => InpaintBackend> = {
  synthetic: () => new SyntheticInpaintBackend(),
};

export const detectBackends: Record<string, () => DetectBackend> = {
  'synthetic-blob': () => new SyntheticDetectBackend(),
};
