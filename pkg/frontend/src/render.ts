/**
 * Pixel-level rendering helpers, kept DOM-free so they are unit-testable:
 * a dark-to-hot colormap LUT, the heatmap byte grid to RGBA conversion, and
 * an SVG path builder for the micro-Doppler sparkline. The DOM layer only
 * copies the RGBA buffer into a canvas ImageData.
 */

/** 256-entry RGB lookup table, black -> deep blue -> magenta -> orange -> white. */
export function buildColormap(): Uint8Array {
  const stops: [number, number, number, number][] = [
    [0.0, 0, 0, 8],
    [0.25, 40, 10, 90],
    [0.5, 160, 30, 110],
    [0.75, 240, 120, 40],
    [1.0, 255, 250, 220],
  ];
  const lut = new Uint8Array(256 * 3);
  for (let i = 0; i < 256; i++) {
    const x = i / 255;
    let k = 0;
    while (k < stops.length - 2 && x > stops[k + 1][0]) k++;
    const [x0, r0, g0, b0] = stops[k];
    const [x1, r1, g1, b1] = stops[k + 1];
    const f = x1 === x0 ? 0 : (x - x0) / (x1 - x0);
    lut[3 * i] = Math.round(r0 + f * (r1 - r0));
    lut[3 * i + 1] = Math.round(g0 + f * (g1 - g0));
    lut[3 * i + 2] = Math.round(b0 + f * (b1 - b0));
  }
  return lut;
}

const LUT = buildColormap();

/**
 * Convert a rows x cols byte grid into an RGBA buffer for ImageData.
 * Pass a preallocated `out` (length rows*cols*4) to avoid per-frame garbage.
 */
export function gridToRgba(
  grid: Uint8Array,
  rows: number,
  cols: number,
  out?: Uint8ClampedArray,
): Uint8ClampedArray {
  const n = rows * cols;
  if (grid.length !== n) {
    throw new Error(`grid has ${grid.length} bytes, expected ${rows}x${cols}=${n}`);
  }
  const rgba = out ?? new Uint8ClampedArray(n * 4);
  if (rgba.length !== n * 4) {
    throw new Error(`output buffer has ${rgba.length} bytes, expected ${n * 4}`);
  }
  for (let i = 0; i < n; i++) {
    const c = grid[i] * 3;
    const o = i * 4;
    rgba[o] = LUT[c];
    rgba[o + 1] = LUT[c + 1];
    rgba[o + 2] = LUT[c + 2];
    rgba[o + 3] = 255;
  }
  return rgba;
}

/** Perceived brightness of a colormap entry, for monotonicity checks. */
export function luminance(value: number): number {
  const c = value * 3;
  return 0.2126 * LUT[c] + 0.7152 * LUT[c + 1] + 0.0722 * LUT[c + 2];
}

/**
 * SVG path for the micro-Doppler history. x spans [0, width] over the time
 * window ending at the newest sample; y maps [0, vMax] m/s to [height, 0].
 */
export function sparklinePath(
  history: { t: number; v: number }[],
  width: number,
  height: number,
  windowS: number,
  vMax: number,
): string {
  if (history.length === 0) return "";
  const tEnd = history[history.length - 1].t;
  const parts: string[] = [];
  for (let i = 0; i < history.length; i++) {
    const { t, v } = history[i];
    const x = width * (1 - Math.min(1, (tEnd - t) / windowS));
    const y = height * (1 - Math.max(0, Math.min(1, v / vMax)));
    parts.push(`${i === 0 ? "M" : "L"}${x.toFixed(1)},${y.toFixed(1)}`);
  }
  return parts.join(" ");
}
