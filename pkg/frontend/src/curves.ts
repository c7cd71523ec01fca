/**
 * Deviation-curve panels: one image per sketch size k, the mean absolute
 * deviation of the running adversarial direction against the query step,
 * a +-1 std band per series, one series per estimator (keyed by sigma).
 */

import { AggregatedSeries } from "./aggregate";
import { linearScale, PALETTE, SvgDocument, ticks, fmt } from "./svg";

const WIDTH = 640;
const HEIGHT = 420;
const MARGIN = { left: 64, right: 16, top: 40, bottom: 48 };
const MAX_POINTS = 2000;

export interface Panel {
  k: number;
  svg: string;
  series: string[];
}

/** Indices to plot: every curve is decimated to at most MAX_POINTS,
 * always keeping the final step. */
function strideIndices(steps: number): number[] {
  const stride = Math.max(1, Math.ceil(steps / MAX_POINTS));
  const idx: number[] = [];
  for (let s = 0; s < steps; s += stride) idx.push(s);
  if (idx[idx.length - 1] !== steps - 1) idx.push(steps - 1);
  return idx;
}

export function renderCurvePanels(series: AggregatedSeries[]): Panel[] {
  const byK = new Map<number, AggregatedSeries[]>();
  for (const s of series) {
    const bucket = byK.get(s.k);
    if (bucket) bucket.push(s);
    else byK.set(s.k, [s]);
  }
  const panels: Panel[] = [];
  for (const k of [...byK.keys()].sort((a, b) => a - b)) {
    const group = [...byK.get(k)!].sort((a, b) => a.sigma - b.sigma);
    panels.push(renderPanel(k, group));
  }
  return panels;
}

function renderPanel(k: number, group: AggregatedSeries[]): Panel {
  const steps = Math.max(...group.map((s) => s.steps));
  let yMax = 0;
  for (const s of group) {
    for (let i = 0; i < s.steps; i++) {
      yMax = Math.max(yMax, s.mean[i] + s.std[i]);
    }
  }
  yMax = yMax > 0 ? yMax * 1.05 : 1;

  const doc = new SvgDocument(WIDTH, HEIGHT);
  const x = linearScale(0, steps, MARGIN.left, WIDTH - MARGIN.right);
  const y = linearScale(0, yMax, HEIGHT - MARGIN.bottom, MARGIN.top);

  doc.text(MARGIN.left, 22, `deviation of the accumulated direction, k = ${k}`, { size: 14 });
  // axes
  doc.line(MARGIN.left, MARGIN.top, MARGIN.left, HEIGHT - MARGIN.bottom, "#222222");
  doc.line(
    MARGIN.left,
    HEIGHT - MARGIN.bottom,
    WIDTH - MARGIN.right,
    HEIGHT - MARGIN.bottom,
    "#222222"
  );
  for (const tx of ticks(0, steps)) {
    const px = x.toPixel(tx);
    doc.line(px, HEIGHT - MARGIN.bottom, px, HEIGHT - MARGIN.bottom + 4, "#222222");
    doc.text(px, HEIGHT - MARGIN.bottom + 18, fmt(tx, 3), { anchor: "middle", size: 11 });
  }
  for (const ty of ticks(0, yMax)) {
    const py = y.toPixel(ty);
    doc.line(MARGIN.left - 4, py, MARGIN.left, py, "#222222");
    doc.text(MARGIN.left - 8, py + 4, fmt(ty, 3), { anchor: "end", size: 11 });
    doc.line(MARGIN.left, py, WIDTH - MARGIN.right, py, "#eeeeee");
  }
  doc.text((MARGIN.left + WIDTH - MARGIN.right) / 2, HEIGHT - 12, "query step", {
    anchor: "middle",
    size: 12,
  });

  const names: string[] = [];
  group.forEach((s, index) => {
    const color = PALETTE[index % PALETTE.length];
    const idx = strideIndices(s.steps);
    const meanPts: Array<[number, number]> = idx.map((i) => [x.toPixel(i + 1), y.toPixel(s.mean[i])]);
    if (s.trials > 1) {
      const upper: Array<[number, number]> = idx.map((i) => [
        x.toPixel(i + 1),
        y.toPixel(s.mean[i] + s.std[i]),
      ]);
      const lower: Array<[number, number]> = idx.map((i) => [
        x.toPixel(i + 1),
        y.toPixel(Math.max(s.mean[i] - s.std[i], 0)),
      ]);
      doc.band(upper, lower, color);
    }
    doc.polyline(meanPts, color);
    const label = `${s.estimator} (sigma=${fmt(s.sigma, 3)})`;
    names.push(s.estimator);
    doc.line(WIDTH - 190, MARGIN.top + 14 + 18 * index, WIDTH - 170, MARGIN.top + 14 + 18 * index, color, 2);
    doc.text(WIDTH - 164, MARGIN.top + 18 + 18 * index, label, { size: 11 });
  });

  return { k, svg: doc.toString(), series: names };
}
