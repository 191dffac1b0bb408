import { z } from 'zod';

/**
 * Wire contracts. Images travel as base64-encoded PNG strings; the mask is a
 * grayscale PNG, white where generation is allowed. Boxes are corner-format
 * pixel coordinates [x0, y0, x1, y1] with x0 < x1 and y0 < y1.
 */

export const inpaintRequestSchema = z.object({
  image: z.string().min(1),
  mask: z.string().min(1),
  prompt: z.string(),
  sampler_name: z.string().min(1),
  steps: z.number().int().positive(),
  denoising_strength: z.number().gt(0).lte(1),
  inpainting_fill: z.boolean(),
  padding_mask_crop: z.number().int().nonnegative(),
  batch_size: z.number().int().positive().max(16),
  seed: z.number().int(),
});

export const inpaintResponseSchema = z.object({
  images: z.array(z.string().min(1)).min(1),
  info: z.string(),
});

export const detectRequestSchema = z.object({
  image: z.string().min(1),
  prompt: z.string(),
  // when absent, the adapter's configured default floor applies
  score_floor: z.number().min(0).max(1).optional(),
});

export const cornerBoxSchema = z
  .tuple([z.number(), z.number(), z.number(), z.number()])
  .refine(([x0, y0, x1, y1]) => x0 < x1 && y0 < y1, {
    message: 'box must satisfy x0 < x1 and y0 < y1',
  });

export const detectionSchema = z.object({
  bbox: cornerBoxSchema,
  score: z.number().min(0).max(1),
});

export const detectResponseSchema = z.object({
  detections: z.array(detectionSchema),
});

export type InpaintRequest = z.infer<typeof inpaintRequestSchema>;
export type InpaintResponse = z.infer<typeof inpaintResponseSchema>;
export type DetectRequest = z.infer<typeof detectRequestSchema>;
export type DetectResponse = z.infer<typeof detectResponseSchema>;
export type Detection = z.infer<typeof detectionSchema>;
