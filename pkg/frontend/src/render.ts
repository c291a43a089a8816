/**
 * Eigencurve figure renderer.
 *
 * Reads the sweep outputs (curves.csv, events.json) and emits a static
 * SVG figure.  Three modes: real parts vs gamma, imaginary parts vs
 * gamma, and trajectories in the complex plane.  Every plotted point
 * corresponds to one CSV row and carries the row's verbatim fields as
 * data-* attributes; event markers carry the located gamma the same way.
 * Conjugate pairs share a color; classified real eigenvalues get
 * distinct markers for the two sign characteristics.
 */

import { writeFileSync } from "node:fs";
import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import {
  conjugateColorKeys,
  CurveFile,
  CurveRow,
  EventRecord,
  parseCurves,
  parseEvents,
} from "./curves.js";
import { fmt, PALETTE, Scale, Svg } from "./svg.js";

export type Mode = "re_vs_gamma" | "im_vs_gamma" | "complex_plane";

const WIDTH = 960;
const HEIGHT = 600;
const MARGIN = { left: 70, right: 24, top: 28, bottom: 48 };

interface Extent {
  x0: number;
  x1: number;
  y0: number;
  y1: number;
}

function coords(mode: Mode, row: CurveRow): [number, number] {
  switch (mode) {
    case "re_vs_gamma":
      return [row.gamma, row.re];
    case "im_vs_gamma":
      return [row.gamma, row.im];
    case "complex_plane":
      return [row.re, row.im];
  }
}

function extent(mode: Mode, rows: CurveRow[], events: EventRecord[]): Extent {
  let x0 = Infinity, x1 = -Infinity, y0 = Infinity, y1 = -Infinity;
  for (const row of rows) {
    const [x, y] = coords(mode, row);
    x0 = Math.min(x0, x); x1 = Math.max(x1, x);
    y0 = Math.min(y0, y); y1 = Math.max(y1, y);
  }
  for (const ev of events) {
    if (mode === "complex_plane") {
      x0 = Math.min(x0, ev.location.re); x1 = Math.max(x1, ev.location.re);
      y0 = Math.min(y0, ev.location.im); y1 = Math.max(y1, ev.location.im);
    } else {
      x0 = Math.min(x0, ev.gamma_located); x1 = Math.max(x1, ev.gamma_located);
    }
  }
  const padX = 0.02 * (x1 - x0 || 1);
  const padY = 0.05 * (y1 - y0 || 1);
  return { x0: x0 - padX, x1: x1 + padX, y0: y0 - padY, y1: y1 + padY };
}

function axis(svg: Svg, sx: Scale, sy: Scale, xlabel: string, ylabel: string): void {
  svg.open("g", { stroke: "#404040", "stroke-width": 1, fill: "none" });
  svg.element("line", { x1: fmt(sx.p0), y1: fmt(sy.p0), x2: fmt(sx.p1), y2: fmt(sy.p0) });
  svg.element("line", { x1: fmt(sx.p0), y1: fmt(sy.p0), x2: fmt(sx.p0), y2: fmt(sy.p1) });
  svg.close("g");
  svg.open("g", { "font-family": "sans-serif", "font-size": 12, fill: "#202020" });
  for (const t of sx.ticks()) {
    svg.element("line", {
      x1: fmt(sx.at(t)), y1: fmt(sy.p0), x2: fmt(sx.at(t)), y2: fmt(sy.p0 + 5),
      stroke: "#404040",
    });
    svg.element(
      "text",
      { x: fmt(sx.at(t)), y: fmt(sy.p0 + 18), "text-anchor": "middle" },
      String(t),
    );
  }
  for (const t of sy.ticks()) {
    svg.element("line", {
      x1: fmt(sx.p0 - 5), y1: fmt(sy.at(t)), x2: fmt(sx.p0), y2: fmt(sy.at(t)),
      stroke: "#404040",
    });
    svg.element(
      "text",
      { x: fmt(sx.p0 - 8), y: fmt(sy.at(t) + 4), "text-anchor": "end" },
      String(t),
    );
  }
  svg.element(
    "text",
    { x: fmt((sx.p0 + sx.p1) / 2), y: fmt(sy.p0 + 38), "text-anchor": "middle" },
    xlabel,
  );
  svg.element(
    "text",
    {
      x: 16, y: fmt((sy.p0 + sy.p1) / 2), "text-anchor": "middle",
      transform: `rotate(-90 16 ${fmt((sy.p0 + sy.p1) / 2)})`,
    },
    ylabel,
  );
  svg.close("g");
}

function pointMarker(
  svg: Svg, x: number, y: number, row: CurveRow, color: string,
): void {
  const data = {
    "data-gamma": row.raw[0],
    "data-curve-id": row.raw[1],
    "data-re": row.raw[2],
    "data-im": row.raw[3],
    "data-type": row.raw[4],
  };
  if (row.type > 0) {
    // positive type: open circle
    svg.element("circle", {
      cx: fmt(x), cy: fmt(y), r: 2.8, fill: "none", stroke: color,
      "stroke-width": 1.1, class: "pt type-pos", ...data,
    });
  } else if (row.type < 0) {
    // negative type: x cross
    const d = 2.6;
    svg.element("path", {
      d:
        `M${fmt(x - d)} ${fmt(y - d)}L${fmt(x + d)} ${fmt(y + d)}` +
        `M${fmt(x - d)} ${fmt(y + d)}L${fmt(x + d)} ${fmt(y - d)}`,
      stroke: color, "stroke-width": 1.1, fill: "none",
      class: "pt type-neg", ...data,
    });
  } else {
    svg.element("circle", {
      cx: fmt(x), cy: fmt(y), r: 1.6, fill: color, stroke: "none",
      class: "pt type-unknown", ...data,
    });
  }
}

export function renderFigure(
  curves: CurveFile, events: EventRecord[], mode: Mode,
): string {
  const svg = new Svg(WIDTH, HEIGHT);
  const ex = extent(mode, curves.rows, events);
  const sx = new Scale(ex.x0, ex.x1, MARGIN.left, WIDTH - MARGIN.right);
  const sy = new Scale(ex.y0, ex.y1, HEIGHT - MARGIN.bottom, MARGIN.top);
  const labels: Record<Mode, [string, string]> = {
    re_vs_gamma: ["gamma", "Re(omega)"],
    im_vs_gamma: ["gamma", "Im(omega)"],
    complex_plane: ["Re(omega)", "Im(omega)"],
  };
  axis(svg, sx, sy, labels[mode][0], labels[mode][1]);

  const colorKeys = conjugateColorKeys(curves);
  const ids = [...curves.byCurve.keys()].sort((a, b) => a - b);
  for (const id of ids) {
    const rows = curves.byCurve.get(id)!;
    const color = PALETTE[colorKeys.get(id)! % PALETTE.length];
    const path = rows
      .map((row, s) => {
        const [x, y] = coords(mode, row);
        return `${s === 0 ? "M" : "L"}${fmt(sx.at(x))} ${fmt(sy.at(y))}`;
      })
      .join("");
    svg.element("path", {
      d: path, fill: "none", stroke: color, "stroke-width": 0.8,
      "stroke-opacity": 0.55, class: "curve", "data-curve-id": id,
    });
    for (const row of rows) {
      const [x, y] = coords(mode, row);
      pointMarker(svg, sx.at(x), sy.at(y), row, color);
    }
  }

  for (const ev of events) {
    const gx = ev.gamma_located;
    const marker =
      mode === "complex_plane"
        ? [ev.location.re, ev.location.im]
        : [gx, mode === "re_vs_gamma" ? ev.location.re : ev.location.im];
    if (mode !== "complex_plane") {
      svg.element("line", {
        x1: fmt(sx.at(gx)), y1: fmt(sy.p0), x2: fmt(sx.at(gx)), y2: fmt(sy.p1),
        stroke: "#303030", "stroke-width": 0.8, "stroke-dasharray": "4 3",
        class: "event-line", "data-kind": ev.kind,
        "data-gamma-located": String(ev.gamma_located),
      });
    }
    svg.element("rect", {
      x: fmt(sx.at(marker[0]) - 4), y: fmt(sy.at(marker[1]) - 4),
      width: 8, height: 8, fill: "none", stroke: "#000000",
      "stroke-width": 1.4, class: `event-marker event-${ev.kind}`,
      "data-kind": ev.kind,
      "data-gamma-located": String(ev.gamma_located),
      "data-location-re": String(ev.location.re),
      "data-location-im": String(ev.location.im),
    });
  }
  return svg.render();
}

export function main(argv: string[]): void {
  const args = yargs(argv)
    .option("curves", { type: "string", demandOption: true })
    .option("events", { type: "string", demandOption: true })
    .option("mode", {
      type: "string",
      choices: ["re_vs_gamma", "im_vs_gamma", "complex_plane"] as const,
      demandOption: true,
    })
    .option("out", { type: "string", demandOption: true })
    .strict()
    .parseSync();

  const curves = parseCurves(args.curves);
  const events = parseEvents(args.events);
  const svg = renderFigure(curves, events, args.mode as Mode);
  writeFileSync(args.out, svg);
  console.log(
    `${args.out}: ${curves.rows.length} points, ${events.length} events, mode ${args.mode}`,
  );
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url.endsWith(process.argv[1].split("/").pop() ?? "");
if (invokedDirectly) {
  main(hideBin(process.argv));
}
