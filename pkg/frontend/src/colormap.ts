/**
 * Per-vertex colors: a fixed perceptual ramp for continuous channels and
 * the binary above/below override used while thresholding.
 */

export type Rgb = [number, number, number];

// viridis anchors, dark-blue to yellow; perceptually uniform enough for a
// fixed ramp without shipping a color library
const RAMP: Rgb[] = [
  [0.267, 0.005, 0.329],
  [0.283, 0.141, 0.458],
  [0.254, 0.265, 0.53],
  [0.207, 0.372, 0.553],
  [0.164, 0.471, 0.558],
  [0.128, 0.567, 0.551],
  [0.135, 0.659, 0.518],
  [0.267, 0.749, 0.441],
  [0.478, 0.821, 0.318],
  [0.741, 0.873, 0.15],
  [0.993, 0.906, 0.144],
];

/** Light orange for vertices at or below the threshold. */
export const BELOW_COLOR: Rgb = [1.0, 0.72, 0.42];
/** Red for vertices above the threshold. */
export const ABOVE_COLOR: Rgb = [0.84, 0.08, 0.12];

/** Sample the continuous ramp at t in [0, 1] (clamped). */
export function rampColor(t: number): Rgb {
  const u = Math.min(1, Math.max(0, t)) * (RAMP.length - 1);
  const i = Math.min(RAMP.length - 2, Math.floor(u));
  const f = u - i;
  const a = RAMP[i];
  const b = RAMP[i + 1];
  return [
    a[0] + f * (b[0] - a[0]),
    a[1] + f * (b[1] - a[1]),
    a[2] + f * (b[2] - a[2]),
  ];
}

/**
 * Map a channel through the ramp.  The range defaults to the channel's own
 * min/max; a constant channel maps to the low end.
 */
export function channelColors(
  values: ArrayLike<number>,
  lo?: number,
  hi?: number,
): Float32Array {
  let min = lo;
  let max = hi;
  if (min === undefined || max === undefined) {
    let vmin = Infinity;
    let vmax = -Infinity;
    for (let i = 0; i < values.length; i++) {
      const v = values[i];
      if (v < vmin) vmin = v;
      if (v > vmax) vmax = v;
    }
    min = lo ?? vmin;
    max = hi ?? vmax;
  }
  const span = max - min;
  const out = new Float32Array(3 * values.length);
  for (let i = 0; i < values.length; i++) {
    const t = span > 0 ? (values[i] - min) / span : 0;
    const [r, g, b] = rampColor(t);
    out[3 * i] = r;
    out[3 * i + 1] = g;
    out[3 * i + 2] = b;
  }
  return out;
}

/** Binary threshold colormap: above in red, at-or-below in light orange. */
export function binaryColors(values: ArrayLike<number>, threshold: number): Float32Array {
  const out = new Float32Array(3 * values.length);
  for (let i = 0; i < values.length; i++) {
    const c = values[i] > threshold ? ABOVE_COLOR : BELOW_COLOR;
    out[3 * i] = c[0];
    out[3 * i + 1] = c[1];
    out[3 * i + 2] = c[2];
  }
  return out;
}
