/** Native detector output: box center plus width and height, in pixels. */
export interface CenterBox {
  cx: number;
  cy: number;
  w: number;
  h: number;
}

/** Wire format: [x0, y0, x1, y1] corners. */
export type CornerBox = [number, number, number, number];

/**
 * Center/size to corner conversion. Exact for integer-valued inputs: halving
 * is exact in binary floating point, so integer widths produce corners that
 * round-trip without loss.
 */
export function centerToCorner(box: CenterBox): CornerBox {
  const halfW = box.w / 2;
  const halfH = box.h / 2;
  return [box.cx - halfW, box.cy - halfH, box.cx + halfW, box.cy + halfH];
}

export function cornerToCenter([x0, y0, x1, y1]: CornerBox): CenterBox {
  return {
    cx: (x0 + x1) / 2,
    cy: (y0 + y1) / 2,
    w: x1 - x0,
    h: y1 - y0,
  };
}
