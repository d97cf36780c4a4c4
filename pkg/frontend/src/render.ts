/**
 * Server-side SVG rendering: reads sweep CSVs, builds the chart option
 * for the requested kind and writes one self-contained SVG.
 */

import { readFileSync, writeFileSync } from "node:fs";

import { CustomChart, HeatmapChart, LineChart } from "echarts/charts";
import {
  GridComponent,
  LegendComponent,
  TitleComponent,
  VisualMapComponent,
} from "echarts/components";
import { init, use } from "echarts/core";
import { SVGRenderer } from "echarts/renderers";

import {
  FigureKind,
  loadBudgetCells,
  loadRocPoints,
  loadSnrPoints,
} from "./csv.js";
import {
  FigureOption,
  budgetSurfaceOption,
  rocOption,
  snrCurvesOption,
} from "./figures.js";

use([
  LineChart,
  HeatmapChart,
  CustomChart,
  GridComponent,
  LegendComponent,
  TitleComponent,
  VisualMapComponent,
  SVGRenderer,
]);

export interface FigureSpec {
  kind: FigureKind;
  /** One or more CSV paths; rows are concatenated after validation. */
  inputs: string[];
  output: string;
  width?: number;
  height?: number;
}

const DEFAULT_SIZE: Record<FigureKind, { width: number; height: number }> = {
  snr_curves: { width: 880, height: 520 },
  budget_surface: { width: 960, height: 480 },
  roc: { width: 720, height: 560 },
};

export function buildOption(
  kind: FigureKind,
  texts: string[]
): FigureOption {
  switch (kind) {
    case "snr_curves":
      return snrCurvesOption(loadSnrPoints(texts));
    case "budget_surface":
      return budgetSurfaceOption(loadBudgetCells(texts));
    case "roc":
      return rocOption(loadRocPoints(texts));
  }
}

export function renderSvg(
  kind: FigureKind,
  texts: string[],
  width?: number,
  height?: number
): string {
  const size = DEFAULT_SIZE[kind];
  const chart = init(null, null, {
    renderer: "svg",
    ssr: true,
    width: width ?? size.width,
    height: height ?? size.height,
  });
  try {
    chart.setOption(buildOption(kind, texts));
    return chart.renderToSVGString();
  } finally {
    chart.dispose();
  }
}

/** Renders the figure to spec.output and returns the SVG text. */
export function renderFigure(spec: FigureSpec): string {
  const texts = spec.inputs.map((path) => readFileSync(path, "utf-8"));
  const svg = renderSvg(spec.kind, texts, spec.width, spec.height);
  writeFileSync(spec.output, svg);
  return svg;
}
