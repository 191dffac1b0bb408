import { detectBackends, inpaintBackends } from './backends.js';

export interface AdapterConfig {
  port: number;
  /** Identifier of the inpainting backend to serve. */
  inpaintModel: string;
  /** Detector identifiers; one per deployment is served (the first). */
  detectors: string[];
  /** Device selector handed to backends, e.g. "cpu" or "cuda:0". */
  device: string;
  /** Applied when a /detect request carries no explicit floor. */
  scoreFloorDefault: number;
}

export const ENV_PORT = 'ADAPTER_PORT';
export const ENV_INPAINT_MODEL = 'ADAPTER_INPAINT_MODEL';
export const ENV_DETECT_MODELS = 'ADAPTER_DETECT_MODELS';
export const ENV_DEVICE = 'ADAPTER_DEVICE';
export const ENV_SCORE_FLOOR = 'ADAPTER_SCORE_FLOOR';

export function loadConfig(env: NodeJS.ProcessEnv = process.env): AdapterConfig {
  const config: AdapterConfig = {
    port: Number(env[ENV_PORT] ?? 8700),
    inpaintModel: env[ENV_INPAINT_MODEL] ?? 'synthetic',
    detectors: (env[ENV_DETECT_MODELS] ?? 'synthetic-blob')
      .split(',')
      .map((name) => name.trim())
      .filter((name) => name.length > 0),
    device: env[ENV_DEVICE] ?? 'cpu',
    scoreFloorDefault: Number(env[ENV_SCORE_FLOOR] ?? 0),
  };
  if (!Number.isInteger(config.port) || config.port < 0 || config.port > 65535) {
    throw new Error(`invalid ${ENV_PORT}: ${env[ENV_PORT]}`);
  }
  if (!config.inpaintModel) {
    throw new Error('at least one inpaint backend must be configured');
  }
  if (config.detectors.length === 0) {
    throw new Error('at least one detector backend must be configured');
  }
  if (!(config.inpaintModel in inpaintBackends)) {
    throw new Error(
      `unknown inpaint backend "${config.inpaintModel}"; known: ${Object.keys(inpaintBackends).join(', ')}`,
    );
  }
  for (const detector of config.detectors) {
    if (!(detector in detectBackends)) {
      throw new Error(
        `unknown detector backend "${detector}"; known: ${Object.keys(detectBackends).join(', ')}`,
      );
    }
  }
  if (
    !Number.isFinite(config.scoreFloorDefault) ||
    config.scoreFloorDefault < 0 ||
    config.scoreFloorDefault > 1
  ) {
    throw new Error(`invalid ${ENV_SCORE_FLOOR}: ${env[ENV_SCORE_FLOOR]}`);
  }
  return config;
}
