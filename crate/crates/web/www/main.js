import init, { band_structure, rabi_trace, readout_histogram } from "./pkg/moire_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);
const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

function axes(canvas, xmin, xmax, ymin, ymax) {
  const ctx = canvas.getContext("2d");
  const pad = { l: 60, r: 10, t: 10, b: 30 };
  const w = canvas.width - pad.l - pad.r;
  const h = canvas.height - pad.t - pad.b;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.strokeStyle = "#888";
  ctx.strokeRect(pad.l, pad.t, w, h);
  ctx.fillStyle = "#444";
  ctx.font = "11px sans-serif";
  for (let i = 0; i <= 4; i++) {
    const y = ymin + ((ymax - ymin) * i) / 4;
    ctx.fillText(y.toPrecision(3), 4, pad.t + h - (h * i) / 4 + 4);
  }
  const sx = (x) => pad.l + ((x - xmin) / (xmax - xmin || 1)) * w;
  const sy = (y) => pad.t + h - ((y - ymin) / (ymax - ymin || 1)) * h;
  return { ctx, sx, sy, pad, w, h };
}

function line(p, xs, ys, color) {
  p.ctx.strokeStyle = color;
  p.ctx.beginPath();
  xs.forEach((x, i) => (i ? p.ctx.lineTo(p.sx(x), p.sy(ys[i])) : p.ctx.moveTo(p.sx(x), p.sy(ys[i]))));
  p.ctx.stroke();
}

function guard(out, f) {
  out.classList.remove("err");
  try {
    f();
  } catch (e) {
    out.classList.add("err");
    out.textContent = String(e.message ?? e);
  }
}

function runBands() {
  const out = $("b-out");
  out.textContent = "solving…";
  setTimeout(() => guard(out, () => {
    const r = JSON.parse(band_structure(num("b-angle"), num("b-nx"), num("b-n")));
    const all = r.energies_meV.flat();
    const nk = r.labels.length;
    const xs = [...Array(nk).keys()];
    const p = axes($("b-plot"), 0, nk - 1, Math.min(...all), Math.max(...all));
    r.labels.forEach((l, i) => {
      if (!l) return;
      p.ctx.fillStyle = "#444";
      p.ctx.fillText(l === "G" ? "Γ" : l, p.sx(i) - 3, p.pad.t + p.h + 18);
    });
    r.energies_meV.forEach((band, i) => line(p, xs, band, COLORS[i % COLORS.length]));
    const widths = r.bandwidths_meV.map((w) => w.toExponential(2)).join(", ");
    const barrier = r.barrier_meV == null ? "n/a" : r.barrier_meV.toFixed(1) + " meV";
    out.textContent = `R = ${r.period_nm.toFixed(2)} nm   flat bands = ${r.flat_bands}   barrier = ${barrier}\nwidths (meV): ${widths}`;
  }), 0);
}

function runRabi() {
  const out = $("r-out");
  guard(out, () => {
    const r = JSON.parse(rabi_trace(num("r-omega"), num("r-delta"), num("r-decay"), num("r-deph"), num("r-dur")));
    const p = axes($("r-plot"), 0, r.t_ps.at(-1), 0, 1);
    line(p, r.t_ps, r.p_down, COLORS[0]);
    line(p, r.t_ps, r.purity, COLORS[1]);
    const pi = r.pi_time_ps == null ? "n/a" : r.pi_time_ps.toFixed(3) + " ps";
    out.textContent = `blue: P(↓)   red: purity   π time = ${pi}   final P(↓) = ${r.p_down.at(-1).toFixed(4)}`;
  });
}

function runReadout() {
  const out = $("o-out");
  guard(out, () => {
    const r = JSON.parse(readout_histogram(num("o-coll"), num("o-win"), num("o-trials"), BigInt(num("o-seed"))));
    const n = r.histogram_up.length;
    const peak = Math.max(...r.histogram_up, ...r.histogram_down);
    const p = axes($("o-plot"), 0, n, 0, peak);
    const bw = p.w / n;
    [["histogram_up", COLORS[0]], ["histogram_down", COLORS[1]]].forEach(([key, color]) => {
      p.ctx.fillStyle = color + "99";
      r[key].forEach((c, k) => p.ctx.fillRect(p.sx(k), p.sy(c), Math.max(bw - 1, 1), p.sy(0) - p.sy(c)));
    });
    p.ctx.strokeStyle = "#000";
    p.ctx.beginPath();
    p.ctx.moveTo(p.sx(r.threshold), p.pad.t);
    p.ctx.lineTo(p.sx(r.threshold), p.pad.t + p.h);
    p.ctx.stroke();
    out.textContent = `blue: |↑⟩ counts   red: |↓⟩ counts   threshold = ${r.threshold}   fidelity = ${r.fidelity.toFixed(5)}`;
  });
}

await init();
$("b-run").onclick = runBands;
$("r-run").onclick = runRabi;
$("o-run").onclick = runReadout;
runRabi();
runReadout();
