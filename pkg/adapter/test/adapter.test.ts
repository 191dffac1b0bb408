import { afterAll, beforeAll, describe, expect, it } from 'vitest';

import { buildApp } from '../src/app.js';
import { BackendError, SyntheticDetectBackend, SyntheticInpaintBackend } from '../src/backends.js';
import { detectResponseSchema, inpaintResponseSchema } from '../src/schemas.js';
import {
  fromBase64,
  inpaintRequestFixture,
  makePng,
  maskBase64,
  postJson,
  startServer,
  testConfig,
  toBase64,
  type RunningServer,
} from './helpers.js';

describe('model adapter HTTP service', () => {
  let server: RunningServer;

  beforeAll(async () => {
    server = await startServer(buildApp(testConfig()));
  });

  afterAll(async () => {
    await server.close();
  });

  it('answers /healthz with 200 and backend names', async () => {
    const response = await fetch(`${server.url}/healthz`);
    expect(response.status).toBe(200);
    const body = await response.json();
    expect(body.status).toBe('ok');
    expect(body.inpaint_backend).toBe('synthetic');
    expect(body.detect_backend).toBe('synthetic-blob');
  });

  it('inpaints only inside the mask and returns batch_size schema-valid images', async () => {
    const request = inpaintRequestFixture({ batch_size: 2 });
    const { status, body } = await postJson(server.url, '/inpaint', request);
    expect(status).toBe(200);
    const parsed = inpaintResponseSchema.parse(body);
    expect(parsed.images).toHaveLength(2);

    const original = fromBase64(request.image as string);
    const mask = fromBase64(request.mask as string);
    for (const encoded of parsed.images) {
      const output = fromBase64(encoded);
      expect(output.width).toBe(original.width);
      expect(output.height).toBe(original.height);
      let changedInside = 0;
      for (let y = 0; y < output.height; y += 1) {
        for (let x = 0; x < output.width; x += 1) {
          const idx = (output.width * y + x) * 4;
          const allowed = mask.data[idx] > 127;
          const same =
            output.data[idx] === original.data[idx] &&
            output.data[idx + 1] === original.data[idx + 1] &&
            output.data[idx + 2] === original.data[idx + 2];
          if (!allowed) {
            expect(same, `pixel (${x}, ${y}) outside the mask changed`).toBe(true);
          } else if (!same) {
            changedInside += 1;
          }
        }
      }
      expect(changedInside).toBeGreaterThan(0);
    }
  });

  it('is deterministic for identical requests', async () => {
    const request = inpaintRequestFixture({ seed: 99 });
    const first = await postJson(server.url, '/inpaint', request);
    const second = await postJson(server.url, '/inpaint', request);
    expect(first.body.images).toEqual(second.body.images);
  });

  it('varies output across batch items and seeds', async () => {
    const request = inpaintRequestFixture({ batch_size: 2, seed: 5 });
    const { body } = await postJson(server.url, '/inpaint', request);
    expect(body.images[0]).not.toEqual(body.images[1]);
    const other = await postJson(server.url, '/inpaint', { ...request, seed: 6 });
    expect(other.body.images[0]).not.toEqual(body.images[0]);
  });

  it('rejects a mask whose size differs from the image with 400', async () => {
    const request = inpaintRequestFixture({ mask: maskBase64(32, 64, () => true) });
    const { status, body } = await postJson(server.url, '/inpaint', request);
    expect(status).toBe(400);
    expect(body.error).toMatch(/does not match/);
  });

  it.each([
    ['missing mask', { mask: undefined }],
    ['zero steps', { steps: 0 }],
    ['denoising above 1', { denoising_strength: 1.5 }],
    ['zero batch', { batch_size: 0 }],
    ['non-integer seed', { seed: 0.5 }],
  ])('rejects schema-invalid inpaint request (%s) with 400', async (_name, patch) => {
    const request = { ...inpaintRequestFixture(), ...patch };
    for (const [key, value] of Object.entries(patch)) {
      if (value === undefined) {
        delete (request as Record<string, unknown>)[key];
      }
    }
    const { status } = await postJson(server.url, '/inpaint', request);
    expect(status).toBe(400);
  });

  it('rejects undecodable image payloads with 400', async () => {
    const request = inpaintRequestFixture({ image: Buffer.from('not a png').toString('base64') });
    const { status, body } = await postJson(server.url, '/inpaint', request);
    expect(status).toBe(400);
    expect(body.error).toMatch(/PNG/i);
  });

  it('rejects malformed JSON bodies with 400', async () => {
    const { status } = await postJson(server.url, '/inpaint', '{"image": ');
    expect(status).toBe(400);
  });

  it('detects blobs with exact corner-format boxes and scores in [0, 1]', async () => {
    const image = makePng(80, 60, (x, y) => {
      if (x >= 5 && x < 15 && y >= 6 && y < 14) return [255, 0, 255];
      if (x >= 40 && x < 44 && y >= 40 && y < 44) return [250, 10, 250];
      return [30, 90, 30];
    });
    const { status, body } = await postJson(server.url, '/detect', {
      image: toBase64(image),
      prompt: 'an obstacle on the road',
      score_floor: 0.1,
    });
    expect(status).toBe(200);
    const parsed = detectResponseSchema.parse(body);
    expect(parsed.detections).toHaveLength(2);
    const boxes = parsed.detections.map((d) => d.bbox).sort((a, b) => a[0] - b[0]);
    expect(boxes[0]).toEqual([5, 6, 15, 14]);
    expect(boxes[1]).toEqual([40, 40, 44, 44]);
    for (const det of parsed.detections) {
      expect(det.score).toBeGreaterThanOrEqual(0.1);
      expect(det.score).toBeLessThanOrEqual(1);
      expect(det.bbox[0]).toBeLessThan(det.bbox[2]);
      expect(det.bbox[1]).toBeLessThan(det.bbox[3]);
    }
  });

  it('returns an empty, schema-valid detection list for a blank image', async () => {
    const image = makePng(48, 48, () => [20, 20, 20]);
    const { status, body } = await postJson(server.url, '/detect', {
      image: toBase64(image),
      prompt: 'object',
      score_floor: 0,
    });
    expect(status).toBe(200);
    expect(detectResponseSchema.parse(body).detections).toEqual([]);
  });

  it('applies the score floor from the request', async () => {
    const image = makePng(48, 48, (x, y) =>
      x >= 10 && x < 20 && y >= 10 && y < 20 ? [255, 0, 255] : [0, 0, 0],
    );
    const low = await postJson(server.url, '/detect', {
      image: toBase64(image),
      prompt: 'a',
      score_floor: 0,
    });
    expect(low.body.detections).toHaveLength(1);
    const high = await postJson(server.url, '/detect', {
      image: toBase64(image),
      prompt: 'a',
      score_floor: 0.99,
    });
    expect(high.status).toBe(200);
    expect(high.body.detections).toEqual([]);
  });

  it('rejects schema-invalid detect requests with 400', async () => {
    const { status } = await postJson(server.url, '/detect', { prompt: 'no image' });
    expect(status).toBe(400);
  });

  it('returns 404 for unknown paths', async () => {
    const response = await fetch(`${server.url}/nope`);
    expect(response.status).toBe(404);
  });
});

describe('configured default score floor', () => {
  it('applies when the request omits score_floor', async () => {
    const server = await startServer(buildApp(testConfig({ scoreFloorDefault: 0.99 })));
    try {
      const image = makePng(32, 32, (x, y) =>
        x >= 4 && x < 12 && y >= 4 && y < 12 ? [255, 0, 255] : [0, 0, 0],
      );
      const withoutFloor = await postJson(server.url, '/detect', {
        image: toBase64(image),
        prompt: 'a',
      });
      expect(withoutFloor.status).toBe(200);
      expect(withoutFloor.body.detections).toEqual([]);
      const explicit = await postJson(server.url, '/detect', {
        image: toBase64(image),
        prompt: 'a',
        score_floor: 0,
      });
      expect(explicit.body.detections).toHaveLength(1);
    } finally {
      await server.close();
    }
  });
});

describe('backend failure handling', () => {
  it('maps inpaint backend errors to 500 with a message', async () => {
    const failing = {
      name: 'failing',
      inpaint: () => {
        throw new BackendError('backend exploded');
      },
    };
    const server = await startServer(
      buildApp(testConfig(), { inpaint: failing, detect: new SyntheticDetectBackend() }),
    );
    try {
      const { status, body } = await postJson(server.url, '/inpaint', inpaintRequestFixture());
      expect(status).toBe(500);
      expect(body.error).toBe('backend exploded');
    } finally {
      await server.close();
    }
  });

  it('never forwards a schema-invalid backend response', async () => {
    const rogue = {
      name: 'rogue',
      detect: () => [{ bbox: [0, 0, 10, 10] as [number, number, number, number], score: 1.5 }],
    };
    const server = await startServer(
      buildApp(testConfig(), { inpaint: new SyntheticInpaintBackend(), detect: rogue }),
    );
    try {
      const image = makePng(16, 16);
      const { status } = await postJson(server.url, '/detect', {
        image: toBase64(image),
        prompt: 'x',
        score_floor: 0,
      });
      expect(status).toBe(500);
    } finally {
      await server.close();
    }
  });
});
