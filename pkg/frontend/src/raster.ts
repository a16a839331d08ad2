/**
 * Software RGBA canvas with 2x supersampling: draw on the doubled grid,
 * box-filter down on export.  Enough for line charts; no external deps.
 */

import { GLYPH_HEIGHT, GLYPH_WIDTH, glyph } from './font5x7.js';
import { encodePng } from './png.js';

export type Color = readonly [number, number, number];

export const WHITE: Color = [255, 255, 255];
export const BLACK: Color = [0, 0, 0];
export const GREY: Color = [150, 150, 150];
export const LIGHT_GREY: Color = [225, 225, 225];

export const SERIES_COLORS: Record<string, Color> = {
  red: [214, 39, 40],
  green: [44, 160, 44],
  blue: [31, 119, 180],
  yellow: [230, 180, 0],
  orange: [255, 127, 14],
  purple: [148, 103, 189],
  black: [0, 0, 0],
};

const FALLBACK_PALETTE: Color[] = [
  [31, 119, 180], [255, 127, 14], [44, 160, 44], [214, 39, 40],
  [148, 103, 189], [140, 86, 75],
];

export function seriesColor(name: string, index: number): Color {
  return SERIES_COLORS[name] ?? FALLBACK_PALETTE[index % FALLBACK_PALETTE.length];
}

const SS = 2; // supersampling factor

export class Raster {
  readonly width: number;
  readonly height: number;
  private readonly w: number;
  private readonly h: number;
  private readonly pix: Uint8ClampedArray;

  constructor(width: number, height: number, background: Color = WHITE) {
    this.width = width;
    this.height = height;
    this.w = width * SS;
    this.h = height * SS;
    this.pix = new Uint8ClampedArray(this.w * this.h * 3);
    for (let i = 0; i < this.w * this.h; i++) {
      this.pix[3 * i] = background[0];
      this.pix[3 * i + 1] = background[1];
      this.pix[3 * i + 2] = background[2];
    }
  }

  private set(x: number, y: number, c: Color) {
    if (x < 0 || y < 0 || x >= this.w || y >= this.h) return;
    const i = 3 * (y * this.w + x);
    this.pix[i] = c[0];
    this.pix[i + 1] = c[1];
    this.pix[i + 2] = c[2];
  }

  /** Filled axis-aligned rectangle in final-pixel coordinates. */
  fillRect(x0: number, y0: number, x1: number, y1: number, c: Color) {
    const ax = Math.round(Math.min(x0, x1) * SS);
    const bx = Math.round(Math.max(x0, x1) * SS);
    const ay = Math.round(Math.min(y0, y1) * SS);
    const by = Math.round(Math.max(y0, y1) * SS);
    for (let y = ay; y < by; y++) {
      for (let x = ax; x < bx; x++) this.set(x, y, c);
    }
  }

  /** Stroked segment in final-pixel coordinates. */
  line(x0: number, y0: number, x1: number, y1: number, c: Color, thickness = 1) {
    const ax = x0 * SS;
    const ay = y0 * SS;
    const bx = x1 * SS;
    const by = y1 * SS;
    const len = Math.hypot(bx - ax, by - ay);
    const steps = Math.max(1, Math.ceil(len * 2));
    const r = Math.max(1, (thickness * SS) / 2);
    const ri = Math.ceil(r);
    for (let s = 0; s <= steps; s++) {
      const t = s / steps;
      const cx = ax + (bx - ax) * t;
      const cy = ay + (by - ay) * t;
      for (let dy = -ri; dy <= ri; dy++) {
        for (let dx = -ri; dx <= ri; dx++) {
          if (dx * dx + dy * dy <= r * r) {
            this.set(Math.round(cx + dx), Math.round(cy + dy), c);
          }
        }
      }
    }
  }

  /** Polyline; segments with non-finite endpoints are skipped. */
  polyline(xs: number[], ys: number[], c: Color, thickness = 1) {
    for (let i = 1; i < xs.length; i++) {
      if ([xs[i - 1], ys[i - 1], xs[i], ys[i]].every(Number.isFinite)) {
        this.line(xs[i - 1], ys[i - 1], xs[i], ys[i], c, thickness);
      }
    }
  }

  dashedLine(x0: number, y0: number, x1: number, y1: number, c: Color,
             dash = 6, thickness = 1) {
    const len = Math.hypot(x1 - x0, y1 - y0);
    const n = Math.max(1, Math.floor(len / dash));
    for (let s = 0; s < n; s += 2) {
      const t0 = s / n;
      const t1 = Math.min(1, (s + 1) / n);
      this.line(x0 + (x1 - x0) * t0, y0 + (y1 - y0) * t0,
                x0 + (x1 - x0) * t1, y0 + (y1 - y0) * t1, c, thickness);
    }
  }

  /** Bitmap text; size is the final-pixel height of a glyph row. */
  text(x: number, y: number, s: string, c: Color, size = 10,
       align: 'left' | 'center' | 'right' = 'left') {
    const cell = Math.max(1, Math.round((size * SS) / GLYPH_HEIGHT));
    const advance = (GLYPH_WIDTH + 1) * cell;
    let px = x * SS;
    if (align !== 'left') {
      const total = s.length * advance;
      px -= align === 'center' ? total / 2 : total;
    }
    const py = y * SS;
    for (const ch of s) {
      const rows = glyph(ch);
      for (let gy = 0; gy < GLYPH_HEIGHT; gy++) {
        for (let gx = 0; gx < GLYPH_WIDTH; gx++) {
          if (rows[gy] & (1 << (GLYPH_WIDTH - 1 - gx))) {
            for (let dy = 0; dy < cell; dy++) {
              for (let dx = 0; dx < cell; dx++) {
                this.set(Math.round(px + gx * cell + dx),
                         Math.round(py + gy * cell + dy), c);
              }
            }
          }
        }
      }
      px += advance;
    }
  }

  textWidth(s: string, size = 10): number {
    const cell = Math.max(1, Math.round((size * SS) / GLYPH_HEIGHT));
    return (s.length * (GLYPH_WIDTH + 1) * cell) / SS;
  }

  /** Box-downsample the supersampled buffer and encode. */
  toPng(): Buffer {
    const out = new Uint8Array(this.width * this.height * 4);
    for (let y = 0; y < this.height; y++) {
      for (let x = 0; x < this.width; x++) {
        let r = 0;
        let g = 0;
        let b = 0;
        for (let dy = 0; dy < SS; dy++) {
          for (let dx = 0; dx < SS; dx++) {
            const i = 3 * ((y * SS + dy) * this.w + (x * SS + dx));
            r += this.pix[i];
            g += this.pix[i + 1];
            b += this.pix[i + 2];
          }
        }
        const o = 4 * (y * this.width + x);
        out[o] = r / (SS * SS);
        out[o + 1] = g / (SS * SS);
        out[o + 2] = b / (SS * SS);
        out[o + 3] = 255;
      }
    }
    return encodePng(this.width, this.height, out);
  }
}
