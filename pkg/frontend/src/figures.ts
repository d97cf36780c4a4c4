/**
 * Chart option builders, one per figure kind.
 *
 * Each builder turns parsed CSV rows into a static echarts option:
 * no animation, fixed palette, fixed group order (scheme, then
 * budget), so the rendered SVG depends only on the input rows.
 */

import type {
  CustomSeriesOption,
  HeatmapSeriesOption,
  LineSeriesOption,
} from "echarts/charts";
import type {
  GridComponentOption,
  LegendComponentOption,
  TitleComponentOption,
  VisualMapComponentOption,
} from "echarts/components";
import type { ComposeOption } from "echarts/core";

import { BudgetCell, RocPoint, SnrPoint } from "./csv.js";

export type FigureOption = ComposeOption<
  | LineSeriesOption
  | HeatmapSeriesOption
  | CustomSeriesOption
  | GridComponentOption
  | LegendComponentOption
  | TitleComponentOption
  | VisualMapComponentOption
>;

const PALETTE = [
  "#4476b8",
  "#d9623b",
  "#4f9d4e",
  "#8b63a8",
  "#c2a029",
  "#5ba4c9",
  "#ad5b78",
  "#6b6b6b",
];

export function formatBudget(budget: number): string {
  return Number.isFinite(budget) ? String(budget) : "inf";
}

export function groupLabel(scheme: string, budget: number): string {
  return `${scheme} B=${formatBudget(budget)}`;
}

// ---------------------------------------------------------------------------
// Grouping

interface Group<T> {
  scheme: string;
  budget: number;
  label: string;
  points: T[];
}

function groupBySchemeBudget<T extends { scheme: string; budget: number }>(
  points: T[]
): Group<T>[] {
  const byKey = new Map<string, Group<T>>();
  for (const p of points) {
    const label = groupLabel(p.scheme, p.budget);
    let g = byKey.get(label);
    if (!g) {
      g = { scheme: p.scheme, budget: p.budget, label, points: [] };
      byKey.set(label, g);
    }
    g.points.push(p);
  }
  return [...byKey.values()].sort(
    (a, b) => a.scheme.localeCompare(b.scheme) || a.budget - b.budget
  );
}

function uniqueSorted(values: number[]): number[] {
  return [...new Set(values)].sort((a, b) => a - b);
}

// ---------------------------------------------------------------------------
// Error rate versus SNR

function whiskerRenderer(color: string, floor: number) {
  return (params: any, api: any) => {
    const snr = api.value(0) as number;
    const pe = api.value(1) as number;
    const ci = api.value(2) as number;
    if (!(pe > 0) || !(ci > 0)) return;
    const lo = Math.max(pe - ci, floor);
    const hi = Math.min(pe + ci, 1);
    const [x, yLo] = api.coord([snr, lo]);
    const yHi = api.coord([snr, hi])[1];
    const style = { stroke: color, lineWidth: 1, opacity: 0.8 };
    const cap = 3;
    return {
      type: "group",
      children: [
        { type: "line", shape: { x1: x, y1: yLo, x2: x, y2: yHi }, style },
        { type: "line", shape: { x1: x - cap, y1: yHi, x2: x + cap, y2: yHi }, style },
        { type: "line", shape: { x1: x - cap, y1: yLo, x2: x + cap, y2: yLo }, style },
      ],
    };
  };
}

/**
 * One line per (scheme, budget) group with 95% interval whiskers.
 *
 * The error axis is logarithmic; zero rates cannot be placed on it and
 * become gaps rather than fabricated floor values.
 */
export function snrCurvesOption(points: SnrPoint[]): FigureOption {
  const groups = groupBySchemeBudget(points);
  for (const g of groups) g.points.sort((a, b) => a.snrDb - b.snrDb);

  const positive = points.filter((p) => p.pe > 0).map((p) => p.pe);
  const floor = positive.length
    ? 10 ** Math.floor(Math.log10(Math.min(...positive)))
    : 1e-4;
  const tops = points.map((p) => Math.min(p.pe + p.ci, 1));
  const maxTop = Math.max(...tops, floor);
  const ceil = 10 ** Math.ceil(Math.log10(maxTop));

  const series: any[] = groups.map((g, i) => ({
    name: g.label,
    type: "line",
    data: g.points.map((p) => [p.snrDb, p.pe > 0 ? p.pe : null]),
    symbol: "circle",
    symbolSize: 5,
    lineStyle: { width: 1.5 },
    itemStyle: { color: PALETTE[i % PALETTE.length] },
    emphasis: { disabled: true },
  }));
  for (const [i, g] of groups.entries()) {
    series.push({
      name: `${g.label} interval`,
      type: "custom",
      renderItem: whiskerRenderer(PALETTE[i % PALETTE.length], floor),
      data: g.points.map((p) => [p.snrDb, p.pe, p.ci]),
      silent: true,
      z: 1,
    });
  }

  return {
    animation: false,
    title: { text: "Slot error rate versus SNR", left: 8, top: 6 },
    legend: { data: groups.map((g) => g.label), top: 30 },
    grid: { left: 76, right: 28, top: 78, bottom: 52 },
    xAxis: {
      type: "value",
      name: "SNR (dB)",
      nameLocation: "middle",
      nameGap: 28,
    },
    yAxis: {
      type: "log",
      name: "slot error rate",
      nameLocation: "middle",
      nameGap: 54,
      min: floor,
      max: ceil,
    },
    series,
  };
}

// ---------------------------------------------------------------------------
// Required SNR over (budget, codeword length)

function maskRenderer() {
  return (params: any, api: any) => {
    const [x, y] = api.coord([api.value(0), api.value(1)]);
    const [w, h] = api.size([1, 1]);
    return {
      type: "group",
      children: [
        {
          type: "rect",
          shape: { x: x - w / 2, y: y - h / 2, width: w, height: h },
          style: { fill: "#f0f0f0", stroke: "#cccccc", lineWidth: 1 },
        },
        {
          type: "text",
          style: {
            text: "n/a",
            x,
            y,
            textAlign: "center",
            textVerticalAlign: "middle",
            fill: "#999999",
            fontSize: 11,
          },
        },
      ],
    };
  };
}

/**
 * One heatmap per scheme on shared budget/length axes.
 *
 * Unreachable cells carry no heatmap datum at all; they are drawn as
 * flat "n/a" tiles outside the color mapping, so the surface cannot
 * interpolate across them.
 */
export function budgetSurfaceOption(cells: BudgetCell[]): FigureOption {
  const schemes = [...new Set(cells.map((c) => c.scheme))].sort();
  const budgets = uniqueSorted(cells.map((c) => c.budget));
  const lengths = uniqueSorted(cells.map((c) => c.length));
  const bLabels = budgets.map(formatBudget);
  const nLabels = lengths.map((n) => String(n));

  const finite = cells
    .filter((c) => c.requiredSnrDb !== null)
    .map((c) => c.requiredSnrDb as number);
  const vMin = finite.length ? Math.min(...finite) : 0;
  const vMax = finite.length ? Math.max(...finite) : 1;

  const left0 = 7;
  const usable = 86;
  const gap = 6;
  const width =
    (usable - gap * (schemes.length - 1)) / Math.max(schemes.length, 1);

  const grids: any[] = [];
  const xAxes: any[] = [];
  const yAxes: any[] = [];
  const titles: any[] = [
    {
      text: "Required SNR by fronthaul budget and codeword length",
      left: 8,
      top: 6,
    },
  ];
  const series: any[] = [];

  for (const [i, scheme] of schemes.entries()) {
    const leftPct = left0 + i * (width + gap);
    grids.push({
      left: `${leftPct}%`,
      width: `${width}%`,
      top: 72,
      bottom: 96,
    });
    xAxes.push({
      type: "category",
      gridIndex: i,
      data: bLabels,
      name: "fronthaul bits (B)",
      nameLocation: "middle",
      nameGap: 26,
    });
    yAxes.push({
      type: "category",
      gridIndex: i,
      data: nLabels,
      name: i === 0 ? "codeword length (N)" : undefined,
      nameLocation: "middle",
      nameGap: 30,
      axisLabel: { show: i === 0 },
    });
    titles.push({
      text: scheme,
      left: `${leftPct + width / 2}%`,
      top: 44,
      textAlign: "center",
      textStyle: { fontSize: 12, fontWeight: "normal" },
    });

    const mine = cells.filter((c) => c.scheme === scheme);
    series.push({
      type: "heatmap",
      xAxisIndex: i,
      yAxisIndex: i,
      data: mine
        .filter((c) => c.requiredSnrDb !== null)
        .map((c) => [
          budgets.indexOf(c.budget),
          lengths.indexOf(c.length),
          c.requiredSnrDb,
        ]),
      label: {
        show: true,
        formatter: (p: any) => Number(p.value[2]).toFixed(2),
        fontSize: 10,
      },
      emphasis: { disabled: true },
    });
    series.push({
      type: "custom",
      xAxisIndex: i,
      yAxisIndex: i,
      renderItem: maskRenderer(),
      data: mine
        .filter((c) => c.requiredSnrDb === null)
        .map((c) => [budgets.indexOf(c.budget), lengths.indexOf(c.length)]),
      silent: true,
    });
  }

  return {
    animation: false,
    title: titles,
    grid: grids,
    xAxis: xAxes,
    yAxis: yAxes,
    visualMap: {
      type: "continuous",
      min: vMin,
      max: vMax > vMin ? vMax : vMin + 1,
      seriesIndex: schemes.map((_, i) => 2 * i),
      orient: "horizontal",
      left: "center",
      bottom: 10,
      precision: 2,
      text: ["required SNR (dB)", ""],
      inRange: {
        color: ["#2c7bb6", "#abd9e9", "#ffffbf", "#fdae61", "#d7191c"],
      },
    },
    series,
  };
}

// ---------------------------------------------------------------------------
// Detection trade-off

/** False-positive / false-negative pairs along the threshold grid. */
export function rocOption(points: RocPoint[]): FigureOption {
  const groups = groupBySchemeBudget(points);
  for (const g of groups) g.points.sort((a, b) => a.threshold - b.threshold);

  const series: any[] = groups.map((g, i) => ({
    name: g.label,
    type: "line",
    data: g.points.map((p) => [p.pFp, p.pFn]),
    symbol: "circle",
    symbolSize: 4,
    lineStyle: { width: 1.5 },
    itemStyle: { color: PALETTE[i % PALETTE.length] },
    emphasis: { disabled: true },
  }));

  return {
    animation: false,
    title: { text: "Detection error trade-off", left: 8, top: 6 },
    legend: { data: groups.map((g) => g.label), top: 30 },
    grid: { left: 76, right: 28, top: 78, bottom: 52 },
    xAxis: {
      type: "value",
      name: "false positive rate",
      nameLocation: "middle",
      nameGap: 28,
      min: 0,
      max: 1,
    },
    yAxis: {
      type: "value",
      name: "false negative rate",
      nameLocation: "middle",
      nameGap: 44,
      min: 0,
      max: 1,
    },
    series,
  };
}
