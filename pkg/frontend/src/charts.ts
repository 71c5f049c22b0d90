// SVG chart construction. Pure coordinate mapping of served values: the
// only data transform is squaring the served error for the e^2 panel.

export interface ChartGeometry {
  width: number;
  height: number;
  padding: number;
}

const DEFAULT_GEOMETRY: ChartGeometry = { width: 640, height: 180, padding: 8 };

export const SERIES_COLORS = [
  "#2f6fde",
  "#d95f02",
  "#1b9e77",
  "#7570b3",
  "#e7298a",
  "#66a61e",
  "#a6761d",
  "#666666",
];

function scale(
  values: number[],
  lo: number,
  hi: number,
  outLo: number,
  outHi: number,
): number[] {
  const span = hi - lo || 1;
  return values.map((v) => outLo + ((v - lo) / span) * (outHi - outLo));
}

export function polylinePoints(
  series: number[],
  lo: number,
  hi: number,
  geometry: ChartGeometry = DEFAULT_GEOMETRY,
): string {
  if (series.length === 0) return "";
  const { width, height, padding } = geometry;
  const xs =
    series.length === 1
      ? [padding]
      : series.map((_, i) => padding + (i / (series.length - 1)) * (width - 2 * padding));
  const ys = scale(series, lo, hi, height - padding, padding);
  return series.map((_, i) => `${xs[i]!.toFixed(2)},${ys[i]!.toFixed(2)}`).join(" ");
}

function bounds(all: number[]): [number, number] {
  if (all.length === 0) return [0, 1];
  let lo = Math.min(...all);
  let hi = Math.max(...all);
  if (lo === hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  return [lo, hi];
}

export function weightChartSvg(
  series: number[][],
  geometry: ChartGeometry = DEFAULT_GEOMETRY,
): string {
  const [lo, hi] = bounds(series.flat());
  const lines = series
    .map((s, i) => {
      const color = SERIES_COLORS[i % SERIES_COLORS.length];
      return `<polyline fill="none" stroke="${color}" stroke-width="1.5" points="${polylinePoints(s, lo, hi, geometry)}" />`;
    })
    .join("");
  return svgShell(lines, geometry, `weights ${lo.toFixed(2)}..${hi.toFixed(2)}`);
}

export function errorChartSvg(
  errors: number[],
  geometry: ChartGeometry = DEFAULT_GEOMETRY,
): string {
  const squared = errors.map((e) => e * e);
  const [lo, hi] = [0, Math.max(1e-12, ...squared)];
  const line = `<polyline fill="none" stroke="#b2182b" stroke-width="1.5" points="${polylinePoints(squared, lo, hi, geometry)}" />`;
  return svgShell(line, geometry, `squared error 0..${hi.toFixed(3)}`);
}

/** Signed horizontal bars, one per expert, for a pending card. */
export function decisionBarsSvg(decisions: number[], width = 220, rowHeight = 14): string {
  const mid = width / 2;
  const rows = decisions
    .map((value, i) => {
      const clamped = Math.max(-1, Math.min(1, value));
      const barWidth = Math.abs(clamped) * (width / 2 - 2);
      const x = clamped >= 0 ? mid : mid - barWidth;
      const color = clamped >= 0 ? "#b2182b" : "#2166ac";
      const y = i * rowHeight + 2;
      return (
        `<rect x="${x.toFixed(1)}" y="${y}" width="${barWidth.toFixed(1)}" height="${rowHeight - 4}" fill="${color}" />` +
        `<text x="${width - 4}" y="${y + rowHeight - 6}" font-size="9" text-anchor="end">${value.toFixed(2)}</text>`
      );
    })
    .join("");
  const height = decisions.length * rowHeight + 2;
  return (
    `<svg viewBox="0 0 ${width} ${height}" width="${width}" height="${height}" xmlns="http://www.w3.org/2000/svg">` +
    `<line x1="${mid}" y1="0" x2="${mid}" y2="${height}" stroke="#999" stroke-dasharray="2,2" />` +
    rows +
    `</svg>`
  );
}

function svgShell(inner: string, geometry: ChartGeometry, label: string): string {
  const { width, height } = geometry;
  return (
    `<svg viewBox="0 0 ${width} ${height}" width="${width}" height="${height}" xmlns="http://www.w3.org/2000/svg" role="img" aria-label="${label}">` +
    `<rect x="0" y="0" width="${width}" height="${height}" fill="#fafafa" stroke="#ddd" />` +
    inner +
    `</svg>`
  );
}
