// Small self-contained SVG chart builders. Each returns its root element (and
// where useful a handle with programmatic hooks so tests can drive
// interactions without synthesizing pointer events).

import * as d3 from "d3";

const SVG_NS = "http://www.w3.org/2000/svg";

export function svgElement(width: number, height: number, cls: string): SVGSVGElement {
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("width", String(width));
  svg.setAttribute("height", String(height));
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
  svg.setAttribute("class", cls);
  return svg;
}

export function viridis(t: number): string {
  return d3.interpolateViridis(Math.max(0, Math.min(1, t)));
}

export function importanceColor(t: number): string {
  // dark red (0) to dark green (1), matching the service legend anchors
  return d3.interpolateRgb("#67000d", "#00441b")(Math.max(0, Math.min(1, t)));
}

// ---------------------------------------------------------------------------
// scatterplot with rectangular lasso

export interface ScatterPoint {
  index: number;
  x: number;
  y: number;
  scalar: number; // [0,1]
  cls: number | null;
}

export interface ScatterOptions {
  width?: number;
  height?: number;
  sizeFromScalar?: boolean; // radius encodes the scalar (difficulty)
  colorFromScalar?: boolean; // viridis fill from the scalar
  classColors?: string[];
  selected?: Set<number>;
  onLasso?: (indices: number[]) => void;
}

export interface ScatterHandle {
  svg: SVGSVGElement;
  /** Select every point inside the data-space rectangle and emit indices. */
  lassoRect(x0: number, y0: number, x1: number, y1: number): number[];
}

export function renderScatter(points: ScatterPoint[], opts: ScatterOptions = {}): ScatterHandle {
  const width = opts.width ?? 340;
  const height = opts.height ?? 260;
  const pad = 18;
  const svg = svgElement(width, height, "chart scatter");
  const xs = points.map((p) => p.x);
  const ys = points.map((p) => p.y);
  const x = d3.scaleLinear().domain([Math.min(...xs, 0), Math.max(...xs, 1)]).range([pad, width - pad]);
  const y = d3.scaleLinear().domain([Math.min(...ys, 0), Math.max(...ys, 1)]).range([height - pad, pad]);
  const palette = opts.classColors ?? ["#4477AA", "#EE6677", "#228833", "#CCBB44"];

  for (const p of points) {
    const circle = document.createElementNS(SVG_NS, "circle");
    circle.setAttribute("cx", x(p.x).toFixed(2));
    circle.setAttribute("cy", y(p.y).toFixed(2));
    const radius = opts.sizeFromScalar ? 2.5 + 6 * p.scalar : 4;
    circle.setAttribute("r", radius.toFixed(2));
    const fill = opts.colorFromScalar
      ? viridis(p.scalar)
      : palette[(p.cls ?? 0) % palette.length];
    circle.setAttribute("fill", fill);
    circle.setAttribute("fill-opacity", "0.85");
    circle.setAttribute("data-index", String(p.index));
    if (opts.selected?.has(p.index)) circle.setAttribute("stroke", "#000");
    svg.appendChild(circle);
  }

  const emit = (x0: number, y0: number, x1: number, y1: number): number[] => {
    const [lo0, hi0] = [Math.min(x0, x1), Math.max(x0, x1)];
    const [lo1, hi1] = [Math.min(y0, y1), Math.max(y0, y1)];
    const hit = points
      .filter((p) => p.x >= lo0 && p.x <= hi0 && p.y >= lo1 && p.y <= hi1)
      .map((p) => p.index);
    opts.onLasso?.(hit);
    return hit;
  };

  // pointer-drag lasso in screen space
  let start: [number, number] | null = null;
  svg.addEventListener("pointerdown", (ev) => {
    const rect = svg.getBoundingClientRect();
    start = [ev.clientX - rect.left, ev.clientY - rect.top];
  });
  svg.addEventListener("pointerup", (ev) => {
    if (!start) return;
    const rect = svg.getBoundingClientRect();
    const end: [number, number] = [ev.clientX - rect.left, ev.clientY - rect.top];
    emit(x.invert(start[0]), y.invert(start[1]), x.invert(end[0]), y.invert(end[1]));
    start = null;
  });

  return { svg, lassoRect: emit };
}

// ---------------------------------------------------------------------------
// boxplot rows

export interface BoxDatum {
  label: string;
  color: string;
  stats: { min: number; q1: number; median: number; q3: number; max: number };
}

export function renderBoxplots(data: BoxDatum[], opts: { width?: number; height?: number; onClick?: (label: string) => void } = {}): SVGSVGElement {
  const width = opts.width ?? 420;
  const height = opts.height ?? Math.max(60, data.length * 26 + 30);
  const svg = svgElement(width, height, "chart boxplots");
  const x = d3.scaleLinear().domain([0, 1]).range([90, width - 14]);
  data.forEach((d, i) => {
    const cy = 22 + i * 26;
    const g = document.createElementNS(SVG_NS, "g");
    g.setAttribute("class", "box-row");
    g.setAttribute("data-label", d.label);
    const label = document.createElementNS(SVG_NS, "text");
    label.setAttribute("x", "4");
    label.setAttribute("y", String(cy + 4));
    label.setAttribute("class", "box-label");
    label.textContent = d.label;
    g.appendChild(label);
    const whisker = document.createElementNS(SVG_NS, "line");
    whisker.setAttribute("x1", x(d.stats.min).toFixed(1));
    whisker.setAttribute("x2", x(d.stats.max).toFixed(1));
    whisker.setAttribute("y1", String(cy));
    whisker.setAttribute("y2", String(cy));
    whisker.setAttribute("stroke", "#555");
    g.appendChild(whisker);
    const box = document.createElementNS(SVG_NS, "rect");
    box.setAttribute("x", x(d.stats.q1).toFixed(1));
    box.setAttribute("y", String(cy - 8));
    box.setAttribute("width", Math.max(1, x(d.stats.q3) - x(d.stats.q1)).toFixed(1));
    box.setAttribute("height", "16");
    box.setAttribute("fill", d.color);
    box.setAttribute("fill-opacity", "0.7");
    g.appendChild(box);
    const median = document.createElementNS(SVG_NS, "line");
    median.setAttribute("x1", x(d.stats.median).toFixed(1));
    median.setAttribute("x2", x(d.stats.median).toFixed(1));
    median.setAttribute("y1", String(cy - 8));
    median.setAttribute("y2", String(cy + 8));
    median.setAttribute("stroke", "#111");
    g.appendChild(median);
    if (opts.onClick) {
      g.addEventListener("click", () => opts.onClick!(d.label));
      g.setAttribute("cursor", "pointer");
    }
    svg.appendChild(g);
  });
  return svg;
}

// ---------------------------------------------------------------------------
// per-class overlapping bars: wide baseline, narrow saturated selection

export interface PerClassBar {
  algo: string;
  color: string;
  cls: string;
  baseline: number;
  selected: number | null;
}

export function renderPerClassBars(data: PerClassBar[], opts: { width?: number; height?: number } = {}): SVGSVGElement {
  const width = opts.width ?? 420;
  const height = opts.height ?? 170;
  const svg = svgElement(width, height, "chart perclass");
  const groups = data.map((d) => `${d.algo}:${d.cls}`);
  const x = d3.scaleBand().domain(groups).range([10, width - 10]).padding(0.25);
  const y = d3.scaleLinear().domain([0, 1]).range([height - 22, 10]);
  for (const d of data) {
    const key = `${d.algo}:${d.cls}`;
    const cx = x(key)!;
    const base = document.createElementNS(SVG_NS, "rect");
    base.setAttribute("x", cx.toFixed(1));
    base.setAttribute("y", y(d.baseline).toFixed(1));
    base.setAttribute("width", x.bandwidth().toFixed(1));
    base.setAttribute("height", (y(0) - y(d.baseline)).toFixed(1));
    base.setAttribute("fill", d.color);
    base.setAttribute("fill-opacity", "0.35");
    base.setAttribute("class", "bar-baseline");
    base.setAttribute("data-group", key);
    svg.appendChild(base);
    if (d.selected !== null) {
      const sel = document.createElementNS(SVG_NS, "rect");
      const w = x.bandwidth() * 0.45;
      sel.setAttribute("x", (cx + (x.bandwidth() - w) / 2).toFixed(1));
      sel.setAttribute("y", y(d.selected).toFixed(1));
      sel.setAttribute("width", w.toFixed(1));
      sel.setAttribute("height", (y(0) - y(d.selected)).toFixed(1));
      sel.setAttribute("fill", d.color);
      sel.setAttribute("class", "bar-selected");
      sel.setAttribute("data-group", key);
      svg.appendChild(sel);
    }
  }
  return svg;
}

// ---------------------------------------------------------------------------
// radar: full pool contour (yellow) vs selection star (black), axes 0-100%

export interface RadarAxis {
  algo: string;
  label: string; // includes the bracketed total, e.g. "knn [100]"
  fraction: number;
}

export function renderRadar(axes: RadarAxis[], opts: { size?: number } = {}): SVGSVGElement {
  const size = opts.size ?? 260;
  const svg = svgElement(size, size, "chart radar");
  const cx = size / 2;
  const cy = size / 2;
  const radius = size / 2 - 36;
  const angle = (i: number) => (Math.PI * 2 * i) / axes.length - Math.PI / 2;
  const point = (i: number, frac: number): string =>
    `${(cx + Math.cos(angle(i)) * radius * frac).toFixed(1)},${(cy + Math.sin(angle(i)) * radius * frac).toFixed(1)}`;

  const contour = document.createElementNS(SVG_NS, "polygon");
  contour.setAttribute("points", axes.map((_, i) => point(i, 1)).join(" "));
  contour.setAttribute("fill", "#eedd88");
  contour.setAttribute("fill-opacity", "0.5");
  contour.setAttribute("stroke", "#bbaa33");
  contour.setAttribute("class", "radar-full");
  svg.appendChild(contour);

  const star = document.createElementNS(SVG_NS, "polygon");
  star.setAttribute("points", axes.map((a, i) => point(i, a.fraction)).join(" "));
  star.setAttribute("fill", "#222");
  star.setAttribute("fill-opacity", "0.55");
  star.setAttribute("stroke", "#000");
  star.setAttribute("class", "radar-selection");
  svg.appendChild(star);

  axes.forEach((a, i) => {
    const text = document.createElementNS(SVG_NS, "text");
    text.setAttribute("x", (cx + Math.cos(angle(i)) * (radius + 16)).toFixed(1));
    text.setAttribute("y", (cy + Math.sin(angle(i)) * (radius + 16)).toFixed(1));
    text.setAttribute("text-anchor", "middle");
    text.setAttribute("class", "radar-label");
    text.textContent = a.label;
    svg.appendChild(text);
  });
  return svg;
}

// ---------------------------------------------------------------------------
// mirrored 5%-bin histogram pair: all points (black, up) vs selection (gray, down)

export function renderMirroredHistograms(
  all: number[],
  selected: number[],
  opts: { width?: number; height?: number } = {},
): SVGSVGElement {
  const width = opts.width ?? 340;
  const height = opts.height ?? 150;
  const svg = svgElement(width, height, "chart histograms");
  const mid = height / 2;
  const x = d3.scaleBand().domain(all.map((_, i) => String(i))).range([24, width - 8]).padding(0.12);
  const maxCount = Math.max(1, ...all, ...selected);
  const scale = (mid - 8) / maxCount;
  all.forEach((count, i) => {
    const bar = document.createElementNS(SVG_NS, "rect");
    bar.setAttribute("x", x(String(i))!.toFixed(1));
    bar.setAttribute("y", (mid - count * scale).toFixed(1));
    bar.setAttribute("width", x.bandwidth().toFixed(1));
    bar.setAttribute("height", (count * scale).toFixed(1));
    bar.setAttribute("fill", "#111");
    bar.setAttribute("class", "hist-all");
    svg.appendChild(bar);
  });
  selected.forEach((count, i) => {
    const bar = document.createElementNS(SVG_NS, "rect");
    bar.setAttribute("x", x(String(i))!.toFixed(1));
    bar.setAttribute("y", mid.toFixed(1));
    bar.setAttribute("width", x.bandwidth().toFixed(1));
    bar.setAttribute("height", (count * scale).toFixed(1));
    bar.setAttribute("fill", "#999");
    bar.setAttribute("class", "hist-selected");
    svg.appendChild(bar);
  });
  const axis = document.createElementNS(SVG_NS, "line");
  axis.setAttribute("x1", "24");
  axis.setAttribute("x2", String(width - 8));
  axis.setAttribute("y1", mid.toFixed(1));
  axis.setAttribute("y2", mid.toFixed(1));
  axis.setAttribute("stroke", "#444");
  svg.appendChild(axis);
  return svg;
}

// ---------------------------------------------------------------------------
// circular barcharts for stored stacks (4 arcs, labels in %)

export function renderCircularStack(
  metrics: Record<string, number>,
  opts: { size?: number } = {},
): SVGSVGElement {
  const size = opts.size ?? 120;
  const svg = svgElement(size, size, "chart circular");
  const order = ["accuracy", "precision", "recall", "f1"];
  const colors = ["#4477AA", "#66CCEE", "#228833", "#CCBB44"];
  const cx = size / 2;
  const cy = size / 2;
  order.forEach((metric, i) => {
    const value = metrics[metric] ?? 0;
    const r = 18 + i * 9;
    const arc = d3.arc()({
      innerRadius: r,
      outerRadius: r + 7,
      startAngle: 0,
      endAngle: Math.PI * 2 * value,
    });
    const path = document.createElementNS(SVG_NS, "path");
    path.setAttribute("d", arc ?? "");
    path.setAttribute("transform", `translate(${cx},${cy})`);
    path.setAttribute("fill", colors[i]);
    path.setAttribute("class", `arc-${metric}`);
    path.setAttribute("data-value", (value * 100).toFixed(1));
    svg.appendChild(path);
  });
  const label = document.createElementNS(SVG_NS, "text");
  label.setAttribute("x", String(cx));
  label.setAttribute("y", String(cy + 4));
  label.setAttribute("text-anchor", "middle");
  label.setAttribute("class", "circular-label");
  label.textContent = `${((metrics["accuracy"] ?? 0) * 100).toFixed(0)}%`;
  svg.appendChild(label);
  return svg;
}

// ---------------------------------------------------------------------------
// step line chart: active (blue) vs stored (red), one line per metric

export interface StepPoint {
  step: number;
  active: Record<string, number>;
  stored: Record<string, number> | null;
}

export function renderComparisonLines(steps: StepPoint[], metrics: string[], opts: { width?: number; height?: number } = {}): SVGSVGElement {
  const width = opts.width ?? 420;
  const height = opts.height ?? 180;
  const svg = svgElement(width, height, "chart comparison");
  if (steps.length === 0) return svg;
  const x = d3.scalePoint().domain(steps.map((s) => String(s.step))).range([30, width - 12]);
  const y = d3.scaleLinear().domain([0, 1]).range([height - 18, 10]);
  for (const metric of metrics) {
    const line = d3.line<StepPoint>()
      .x((s) => x(String(s.step))!)
      .y((s) => y(s.active[metric] ?? 0));
    const path = document.createElementNS(SVG_NS, "path");
    path.setAttribute("d", line(steps) ?? "");
    path.setAttribute("fill", "none");
    path.setAttribute("stroke", "#2255cc");
    path.setAttribute("stroke-opacity", "0.8");
    path.setAttribute("class", `line-active line-${metric}`);
    svg.appendChild(path);
  }
  for (const s of steps) {
    if (!s.stored) continue;
    for (const metric of metrics) {
      const dot = document.createElementNS(SVG_NS, "circle");
      dot.setAttribute("cx", x(String(s.step))!.toFixed(1));
      dot.setAttribute("cy", y(s.stored[metric] ?? 0).toFixed(1));
      dot.setAttribute("r", "3.4");
      dot.setAttribute("fill", "#cc3311");
      dot.setAttribute("class", `dot-stored dot-${metric}`);
      svg.appendChild(dot);
    }
  }
  return svg;
}
