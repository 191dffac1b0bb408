import express, { type Express, type Request, type Response, type NextFunction } from 'express';

import {
  BackendError,
  detectBackends,
  inpaintBackends,
  type DetectBackend,
  type InpaintBackend,
} from './backends.js';
import type { AdapterConfig } from './config.js';
import { decodePng, encodePng, PngDecodeError } from './png.js';
import {
  detectRequestSchema,
  detectResponseSchema,
  inpaintRequestSchema,
  inpaintResponseSchema,
} from './schemas.js';

/** Thrown by handlers to produce a specific HTTP status. */
class HttpError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

export interface AppBackends {
  inpaint: InpaintBackend;
  detect: DetectBackend;
}

function defaultBackends(config: AdapterConfig): AppBackends {
  return {
    inpaint: inpaintBackends[config.inpaintModel](),
    detect: detectBackends[config.detectors[0]](),
  };
}

export function buildApp(config: AdapterConfig, backends?: AppBackends): Express {
  const { inpaint, detect } = backends ?? defaultBackends(config);
  const app = express();
  // base64 PNGs of generator-sized crops are large; accept generous bodies
  app.use(express.json({ limit: '64mb' }));

  app.get('/healthz', (_req, res) => {
    res.status(200).json({
      status: 'ok',
      inpaint_backend: inpaint.name,
      detect_backend: detect.name,
      device: config.device,
    });
  });

  app.post('/inpaint', (req, res) => {
    const parsed = inpaintRequestSchema.safeParse(req.body);
    if (!parsed.success) {
      throw new HttpError(400, `invalid inpaint request: ${parsed.error.issues[0]?.message}`);
    }
    const request = parsed.data;
    let image, mask;
    try {
      image = decodePng(request.image);
      mask = decodePng(request.mask);
    } catch (err) {
      if (err instanceof PngDecodeError) {
        throw new HttpError(400, err.message);
      }
      throw err;
    }
    if (image.width !== mask.width || image.height !== mask.height) {
      throw new HttpError(
        400,
        `mask ${mask.width}x${mask.height} does not match image ${image.width}x${image.height}`,
      );
    }
    const outputs = inpaint.inpaint({ request, image, mask });
    const body = inpaintResponseSchema.parse({
      images: outputs.map(encodePng),
      info: JSON.stringify({
        backend: inpaint.name,
        seed: request.seed,
        sampler_name: request.sampler_name,
        batch_size: request.batch_size,
      }),
    });
    res.status(200).json(body);
  });

  app.post('/detect', (req, res) => {
    const parsed = detectRequestSchema.safeParse(req.body);
    if (!parsed.success) {
      throw new HttpError(400, `invalid detect request: ${parsed.error.issues[0]?.message}`);
    }
    const request = parsed.data;
    let image;
    try {
      image = decodePng(request.image);
    } catch (err) {
      if (err instanceof PngDecodeError) {
        throw new HttpError(400, err.message);
      }
      throw err;
    }
    const floor = request.score_floor ?? config.scoreFloorDefault;
    const detections = detect.detect(image, request.prompt, floor);
    // validate before sending: the response must be schema-valid no matter
    // what the backend produced
    const body = detectResponseSchema.parse({ detections });
    res.status(200).json(body);
  });

  app.use((_req, res) => {
    res.status(404).json({ error: 'not found' });
  });

  app.use((err: unknown, _req: Request, res: Response, _next: NextFunction) => {
    if (err instanceof HttpError) {
      res.status(err.status).json({ error: err.message });
      return;
    }
    if (err instanceof SyntaxError && 'body' in (err as object)) {
      res.status(400).json({ error: `malformed JSON body: ${err.message}` });
      return;
    }
    if (err instanceof BackendError) {
      res.status(500).json({ error: err.message });
      return;
    }
    const message = err instanceof Error ? err.message : String(err);
    res.status(500).json({ error: message });
  });

  return app;
}
