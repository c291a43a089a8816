/**
 * Minimal deterministic SVG writer.
 *
 * No timestamps, no randomness, fixed attribute order and number
 * formatting, so identical inputs produce byte-identical figures.
 */

export interface Attrs {
  [key: string]: string | number;
}

export function fmt(x: number): string {
  if (!Number.isFinite(x)) throw new Error(`non-finite coordinate ${x}`);
  return x.toFixed(3);
}

export class Svg {
  private parts: string[] = [];

  constructor(readonly width: number, readonly height: number) {
    this.parts.push(
      `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" ` +
        `height="${height}" viewBox="0 0 ${width} ${height}">`,
    );
  }

  private attrs(a: Attrs): string {
    return Object.keys(a)
      .map((k) => ` ${k}="${a[k]}"`)
      .join("");
  }

  element(tag: string, a: Attrs, text?: string): void {
    if (text === undefined) {
      this.parts.push(`<${tag}${this.attrs(a)}/>`);
    } else {
      this.parts.push(`<${tag}${this.attrs(a)}>${escapeText(text)}</${tag}>`);
    }
  }

  open(tag: string, a: Attrs = {}): void {
    this.parts.push(`<${tag}${this.attrs(a)}>`);
  }

  close(tag: string): void {
    this.parts.push(`</${tag}>`);
  }

  render(): string {
    return this.parts.join("\n") + "\n</svg>\n";
  }
}

function escapeText(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

/** Affine map from a data interval onto pixel coordinates. */
export class Scale {
  constructor(
    readonly d0: number,
    readonly d1: number,
    readonly p0: number,
    readonly p1: number,
  ) {}

  at(x: number): number {
    const span = this.d1 - this.d0 || 1;
    return this.p0 + ((x - this.d0) / span) * (this.p1 - this.p0);
  }

  ticks(count = 6): number[] {
    const span = this.d1 - this.d0;
    if (span <= 0) return [this.d0];
    const step = niceStep(span / count);
    const start = Math.ceil(this.d0 / step) * step;
    const out: number[] = [];
    for (let v = start; v <= this.d1 + 1e-12 * span; v += step) {
      out.push(Number(v.toPrecision(12)));
    }
    return out;
  }
}

function niceStep(raw: number): number {
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  const frac = raw / mag;
  if (frac <= 1) return mag;
  if (frac <= 2) return 2 * mag;
  if (frac <= 5) return 5 * mag;
  return 10 * mag;
}

export const PALETTE = [
  "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
  "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f",
];
