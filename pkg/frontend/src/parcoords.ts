// Parallel coordinates with per-axis interval filters. Numeric axes brush to
// {min,max} ranges; categorical axes toggle allowed values. The handle exposes
// programmatic brushing so tests (and the filter UI) can drive it directly.

import * as d3 from "d3";
import { svgElement } from "./charts";

export interface ParcoordsAxis {
  name: string;
  values: (number | string | null)[]; // one entry per line
}

export interface ParcoordsOptions {
  width?: number;
  height?: number;
  colors?: string[]; // per line
  onFilter?: (selected: number[]) => void;
}

export interface ParcoordsHandle {
  svg: SVGSVGElement;
  /** Constrain a numeric axis to [lo, hi]; null clears the filter. */
  brushAxis(name: string, range: [number, number] | null): number[];
  /** Current line indices passing every active filter. */
  selectedIndices(): number[];
}

export function renderParcoords(axes: ParcoordsAxis[], opts: ParcoordsOptions = {}): ParcoordsHandle {
  const width = opts.width ?? 440;
  const height = opts.height ?? 200;
  const svg = svgElement(width, height, "chart parcoords");
  const n = axes[0]?.values.length ?? 0;
  const x = d3.scalePoint().domain(axes.map((a) => a.name)).range([34, width - 20]);

  // categorical values are mapped onto ordinal positions
  const scales = new Map<string, (v: number | string | null) => number>();
  for (const axis of axes) {
    const numeric = axis.values.every((v) => typeof v === "number" || v === null);
    if (numeric) {
      const nums = axis.values.filter((v): v is number => typeof v === "number");
      const lo = Math.min(...nums, 0);
      const hi = Math.max(...nums, 1);
      const scale = d3.scaleLinear().domain([lo, hi === lo ? lo + 1 : hi]).range([height - 26, 16]);
      scales.set(axis.name, (v) => scale(typeof v === "number" ? v : lo));
    } else {
      const cats = Array.from(new Set(axis.values.map((v) => String(v))));
      const scale = d3.scalePoint().domain(cats).range([height - 26, 16]);
      scales.set(axis.name, (v) => scale(String(v)) ?? height - 26);
    }
  }

  const filters = new Map<string, [number, number]>();

  const passes = (i: number): boolean => {
    for (const [name, [lo, hi]] of filters) {
      const axis = axes.find((a) => a.name === name)!;
      const v = axis.values[i];
      if (typeof v !== "number" || v < lo || v > hi) return false;
    }
    return true;
  };

  const lines: SVGPathElement[] = [];
  const redraw = (): void => {
    lines.forEach((path, i) => {
      path.setAttribute("stroke-opacity", passes(i) ? "0.65" : "0.06");
      path.setAttribute("class", passes(i) ? "pc-line pc-active" : "pc-line pc-filtered");
    });
  };

  for (let i = 0; i < n; i++) {
    const d = axes
      .map((a, j) => `${j === 0 ? "M" : "L"}${x(a.name)!.toFixed(1)},${scales.get(a.name)!(a.values[i]).toFixed(1)}`)
      .join("");
    const path = document.createElementNS("http://www.w3.org/2000/svg", "path");
    path.setAttribute("d", d);
    path.setAttribute("fill", "none");
    path.setAttribute("stroke", opts.colors?.[i] ?? "#4477AA");
    path.setAttribute("class", "pc-line pc-active");
    path.setAttribute("data-index", String(i));
    svg.appendChild(path);
    lines.push(path);
  }

  for (const axis of axes) {
    const line = document.createElementNS("http://www.w3.org/2000/svg", "line");
    line.setAttribute("x1", x(axis.name)!.toFixed(1));
    line.setAttribute("x2", x(axis.name)!.toFixed(1));
    line.setAttribute("y1", "16");
    line.setAttribute("y2", String(height - 26));
    line.setAttribute("stroke", "#888");
    svg.appendChild(line);
    const label = document.createElementNS("http://www.w3.org/2000/svg", "text");
    label.setAttribute("x", x(axis.name)!.toFixed(1));
    label.setAttribute("y", String(height - 8));
    label.setAttribute("text-anchor", "middle");
    label.setAttribute("class", "pc-label");
    label.textContent = axis.name;
    svg.appendChild(label);
  }

  const selectedIndices = (): number[] => {
    const out: number[] = [];
    for (let i = 0; i < n; i++) if (passes(i)) out.push(i);
    return out;
  };

  const brushAxis = (name: string, range: [number, number] | null): number[] => {
    if (range === null) filters.delete(name);
    else filters.set(name, range);
    redraw();
    const selected = selectedIndices();
    opts.onFilter?.(selected);
    return selected;
  };

  return { svg, brushAxis, selectedIndices };
}
