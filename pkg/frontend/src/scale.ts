/** Linear and log10 axis scales with tick generation. */

export interface Scale {
  (v: number): number;
  ticks(): number[];
  domain: [number, number];
}

export function linearScale(
  domain: [number, number],
  range: [number, number],
): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  const f = ((v: number) => r0 + ((v - d0) / span) * (r1 - r0)) as Scale;
  f.domain = domain;
  f.ticks = () => {
    const step = niceStep(span / 5);
    const first = Math.ceil(d0 / step) * step;
    const out: number[] = [];
    for (let v = first; v <= d1 + 1e-12 * Math.abs(span); v += step) {
      out.push(Math.abs(v) < step * 1e-9 ? 0 : v);
    }
    return out;
  };
  return f;
}

export function logScale(
  domain: [number, number],
  range: [number, number],
): Scale {
  const lo = Math.max(domain[0], 1e-300);
  const hi = Math.max(domain[1], lo * 10);
  const [r0, r1] = range;
  const l0 = Math.log10(lo);
  const l1 = Math.log10(hi);
  const f = ((v: number) =>
    r0 + ((Math.log10(Math.max(v, 1e-300)) - l0) / (l1 - l0)) * (r1 - r0)) as Scale;
  f.domain = [lo, hi];
  f.ticks = () => {
    const out: number[] = [];
    const first = Math.ceil(l0);
    const stride = Math.max(1, Math.round((l1 - l0) / 6));
    for (let e = first; e <= Math.floor(l1); e += stride) {
      out.push(Math.pow(10, e));
    }
    return out;
  };
  return f;
}

function niceStep(raw: number): number {
  const mag = Math.pow(10, Math.floor(Math.log10(Math.abs(raw) || 1)));
  const norm = raw / mag;
  const step = norm < 1.5 ? 1 : norm < 3.5 ? 2 : norm < 7.5 ? 5 : 10;
  return step * mag;
}

export function formatTick(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) {
    const e = Math.floor(Math.log10(a));
    const m = v / Math.pow(10, e);
    const ms = Math.abs(m - 1) < 1e-9 ? "" : `${round3(m)}x`;
    return `${ms}1e${e}`;
  }
  return String(round3(v));
}

function round3(v: number): number {
  return Math.round(v * 1000) / 1000;
}
