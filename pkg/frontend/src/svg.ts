/**
 * Minimal deterministic SVG scene building: fixed fonts, fixed palette,
 * explicit number formatting. Rendering the same data twice must produce
 * byte-identical documents.
 */

export const FONT_FAMILY = "DejaVu Sans";
export const PALETTE = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

export function fmt(x: number, digits = 2): string {
  if (!Number.isFinite(x)) return String(x);
  if (x === 0) return "0";
  const magnitude = Math.abs(x);
  if (magnitude >= 10000 || magnitude < 0.001) return x.toExponential(digits);
  const out = x.toFixed(Math.max(0, digits - Math.floor(Math.log10(magnitude))));
  return out.includes(".") ? out.replace(/0+$/, "").replace(/\.$/, "") : out;
}

export function escapeXml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** Round tick positions covering [lo, hi] with around `count` steps. */
export function ticks(lo: number, hi: number, count = 5): number[] {
  if (!(hi > lo)) return [lo];
  const span = hi - lo;
  const raw = span / count;
  const power = Math.pow(10, Math.floor(Math.log10(raw)));
  const candidates = [1, 2, 2.5, 5, 10].map((c) => c * power);
  const step = candidates.find((c) => span / c <= count) ?? candidates[candidates.length - 1];
  const first = Math.ceil(lo / step) * step;
  const out: number[] = [];
  for (let v = first; v <= hi + step * 1e-9; v += step) {
    out.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return out;
}

export interface Scale {
  toPixel(value: number): number;
}

export function linearScale(domainLo: number, domainHi: number, rangeLo: number, rangeHi: number): Scale {
  const span = domainHi - domainLo || 1;
  return {
    toPixel(value: number): number {
      return rangeLo + ((value - domainLo) / span) * (rangeHi - rangeLo);
    },
  };
}

export class SvgDocument {
  private parts: string[] = [];

  constructor(readonly width: number, readonly height: number) {
    this.parts.push(
      `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
        `viewBox="0 0 ${width} ${height}">`
    );
    this.rect(0, 0, width, height, "#ffffff");
  }

  rect(x: number, y: number, w: number, h: number, fill: string, stroke?: string): void {
    const strokeAttr = stroke ? ` stroke="${stroke}"` : "";
    this.parts.push(
      `<rect x="${fmt(x, 4)}" y="${fmt(y, 4)}" width="${fmt(w, 4)}" height="${fmt(h, 4)}" ` +
        `fill="${fill}"${strokeAttr}/>`
    );
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke: string, width = 1): void {
    this.parts.push(
      `<line x1="${fmt(x1, 4)}" y1="${fmt(y1, 4)}" x2="${fmt(x2, 4)}" y2="${fmt(y2, 4)}" ` +
        `stroke="${stroke}" stroke-width="${width}"/>`
    );
  }

  polyline(points: Array<[number, number]>, stroke: string, width = 1.5): void {
    const path = points.map(([x, y]) => `${fmt(x, 4)},${fmt(y, 4)}`).join(" ");
    this.parts.push(
      `<polyline points="${path}" fill="none" stroke="${stroke}" stroke-width="${width}"/>`
    );
  }

  /** Closed band between an upper and a lower polyline (same length). */
  band(upper: Array<[number, number]>, lower: Array<[number, number]>, fill: string): void {
    const forward = upper.map(([x, y]) => `${fmt(x, 4)},${fmt(y, 4)}`);
    const back = [...lower].reverse().map(([x, y]) => `${fmt(x, 4)},${fmt(y, 4)}`);
    this.parts.push(
      `<polygon points="${forward.concat(back).join(" ")}" fill="${fill}" ` +
        `fill-opacity="0.18" stroke="none"/>`
    );
  }

  text(
    x: number,
    y: number,
    content: string,
    options: { size?: number; anchor?: "start" | "middle" | "end"; fill?: string } = {}
  ): void {
    const size = options.size ?? 12;
    const anchor = options.anchor ?? "start";
    const fill = options.fill ?? "#222222";
    this.parts.push(
      `<text x="${fmt(x, 4)}" y="${fmt(y, 4)}" font-family="${FONT_FAMILY}" ` +
        `font-size="${size}" text-anchor="${anchor}" fill="${fill}">${escapeXml(content)}</text>`
    );
  }

  toString(): string {
    return this.parts.join("\n") + "\n</svg>\n";
  }
}
