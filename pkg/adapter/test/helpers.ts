import { createServer } from 'node:http';
import type { AddressInfo } from 'node:net';

import type { Express } from 'express';
import { PNG } from 'pngjs';

import type { AdapterConfig } from '../src/config.js';

export function testConfig(overrides: Partial<AdapterConfig> = {}): AdapterConfig {
  return {
    port: 0,
    inpaintModel: 'synthetic',
    detectors: ['synthetic-blob'],
    device: 'cpu',
    scoreFloorDefault: 0,
    ...overrides,
  };
}

export interface RunningServer {
  url: string;
  close: () => Promise<void>;
}

export async function startServer(app: Express): Promise<RunningServer> {
  const server = createServer(app);
  await new Promise<void>((resolve) => server.listen(0, '127.0.0.1', resolve));
  const { port } = server.address() as AddressInfo;
  return {
    url: `http://127.0.0.1:${port}`,
    close: () =>
      new Promise<void>((resolve, reject) =>
        server.close((err) => (err ? reject(err) : resolve())),
      ),
  };
}

export async function postJson(
  url: string,
  path: string,
  body: unknown,
): Promise<{ status: number; body: any }> {
  const response = await fetch(`${url}${path}`, {
    method: 'POST',
    headers: { 'content-type': 'application/json' },
    body: typeof body === 'string' ? body : JSON.stringify(body),
  });
  return { status: response.status, body: await response.json() };
}

export function makePng(
  width: number,
  height: number,
  paint?: (x: number, y: number) => [number, number, number],
): PNG {
  const png = new PNG({ width, height });
  for (let y = 0; y < height; y += 1) {
    for (let x = 0; x < width; x += 1) {
      const idx = (width * y + x) * 4;
      const [r, g, b] = paint ? paint(x, y) : [((x * 7) % 256), ((y * 11) % 256), 40];
      png.data[idx] = r;
      png.data[idx + 1] = g;
      png.data[idx + 2] = b;
      png.data[idx + 3] = 255;
    }
  }
  return png;
}

export function toBase64(png: PNG): string {
  return PNG.sync.write(png).toString('base64');
}

/** Grayscale-encoded mask, as inpainting clients send it: white = generate. */
export function maskBase64(
  width: number,
  height: number,
  allows: (x: number, y: number) => boolean,
): string {
  const png = new PNG({ width, height });
  for (let y = 0; y < height; y += 1) {
    for (let x = 0; x < width; x += 1) {
      const idx = (width * y + x) * 4;
      const value = allows(x, y) ? 255 : 0;
      png.data[idx] = value;
      png.data[idx + 1] = value;
      png.data[idx + 2] = value;
      png.data[idx + 3] = 255;
    }
  }
  return PNG.sync.write(png, { colorType: 0 }).toString('base64');
}

export function fromBase64(base64: string): PNG {
  return PNG.sync.read(Buffer.from(base64, 'base64'));
}

/** The exact request shape the orchestration client sends over the wire. */
export function inpaintRequestFixture(overrides: Record<string, unknown> = {}) {
  const image = makePng(64, 64);
  return {
    image: toBase64(image),
    mask: maskBase64(64, 64, (x, y) => (x - 32) ** 2 + (y - 32) ** 2 <= 144),
    prompt: 'robot, high resolution, standing on the road',
    sampler_name: 'Euler a',
    steps: 80,
    denoising_strength: 1.0,
    inpainting_fill: false,
    padding_mask_crop: 32,
    batch_size: 1,
    seed: 1234,
    ...overrides,
  };
}
