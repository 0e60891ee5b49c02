import init, { canonicalConfig, checkDomain, simulate, phasePortrait } from "./pkg/fishviab_browser.js";

const REGION_COLORS = ["#e8e8e8", "#a6d96a", "#fee08b", "#fdae61", "#d73027"];
const REGION_NAMES = ["R0 not binding", "R1 growing, h >= h_lo", "R2 growing, h < h_lo", "R3 declining, h >= h_lo", "R4 declining, h < h_lo"];

const $ = (id) => document.getElementById(id);
let baseToml = "";

function num(id) {
  return Number($(id).value);
}

function overrides(extra = {}) {
  return JSON.stringify({ price: num("price"), x_lo: num("x_lo"), h_lo: num("h_lo"), ...extra });
}

function guard(fn) {
  return () => {
    try {
      $("status").textContent = "";
      $("status").className = "";
      fn();
    } catch (e) {
      $("status").textContent = String(e.message ?? e);
      $("status").className = "error";
    }
  };
}

function fmt(v) {
  return v === null || v === undefined ? "-" : Number(v).toFixed(6);
}

function runCheck() {
  const out = JSON.parse(checkDomain(baseToml, overrides()));
  const r = out.report;
  const lv = out.levels.levels;
  $("report").textContent = [
    `verdict: ${r.viable ? "VIABLE" : "NOT VIABLE"}`,
    `margin profitable   ${fmt(r.margin_profitable)}`,
    `margin recruitment  ${fmt(r.margin_recruitment)}`,
    `margin reducible    ${fmt(r.margin_reducible)}`,
    `at x_lo: r_hat ${fmt(r.r_hat)}  r_lo ${fmt(r.r_lo)}  r_bar ${fmt(r.r_bar)}`,
    lv ? `critical levels: a ${fmt(lv.a)}  b ${fmt(lv.b)}  c ${fmt(lv.c)}  (${lv.case_order})` : "critical levels: n/a",
  ].join("\n");
}

function scale(lo, hi, a, b) {
  return (v) => a + ((v - lo) / (hi - lo || 1)) * (b - a);
}

function polyline(ctx, pts, color, dash = []) {
  ctx.strokeStyle = color;
  ctx.setLineDash(dash);
  ctx.beginPath();
  pts.forEach(([x, y], i) => (i ? ctx.lineTo(x, y) : ctx.moveTo(x, y)));
  ctx.stroke();
  ctx.setLineDash([]);
}

function runSimulate() {
  const extra = {
    strategy: $("strategy").value,
    maturity: $("maturity").value,
    x0: num("x0"),
    r0: num("r0"),
    horizon: num("horizon"),
  };
  const out = JSON.parse(simulate(baseToml, overrides(extra)));
  const s = out.samples;
  const cv = $("traj");
  const ctx = cv.getContext("2d");
  ctx.clearRect(0, 0, cv.width, cv.height);
  const pad = 36;
  const tMax = s[s.length - 1].t;
  const yMax = Math.max(...s.map((p) => Math.max(p.x, p.h, p.r)), out.x_lo) * 1.05;
  const X = scale(0, tMax, pad, cv.width - 10);
  const Y = scale(0, yMax, cv.height - pad, 10);
  ctx.fillStyle = "#444";
  ctx.fillText("0", pad - 12, cv.height - pad + 4);
  ctx.fillText(yMax.toFixed(2), 2, 14);
  ctx.fillText(`t = ${tMax}`, cv.width - 60, cv.height - 10);
  polyline(ctx, [[X(0), Y(out.x_lo)], [X(tMax), Y(out.x_lo)]], "#999", [6, 4]);
  polyline(ctx, [[X(0), Y(out.h_lo)], [X(tMax), Y(out.h_lo)]], "#999", [2, 3]);
  polyline(ctx, s.map((p) => [X(p.t), Y(p.r)]), "#2ca02c");
  polyline(ctx, s.map((p) => [X(p.t), Y(p.h)]), "#d62728");
  polyline(ctx, s.map((p) => [X(p.t), Y(p.x)]), "#1f77b4");
  const fv = out.first_violation;
  $("summary").textContent = [
    `terminal x ${fmt(out.terminal_x)}   min x ${fmt(out.min_x)}`,
    `mean h ${fmt(out.mean_h)}   final-half mean h ${fmt(out.mean_h_final_half)}`,
    `violations ${out.violations}${fv ? ` (first: ${fv[1]} at t = ${fv[0].toFixed(2)})` : ""}`,
    `moratorium ${out.moratorium_started === null ? "never" : `from t = ${out.moratorium_started.toFixed(2)}`}`,
    `events ${out.events_total}`,
  ].join("\n");
}

function runPhase() {
  const n = Math.max(2, Math.min(400, Math.round(num("pn"))));
  const xMax = num("px");
  const rMax = num("pr");
  const out = JSON.parse(phasePortrait(baseToml, overrides(), xMax, rMax, n, n));
  const cv = $("phasemap");
  const ctx = cv.getContext("2d");
  ctx.clearRect(0, 0, cv.width, cv.height);
  const { nx, nr, x_min: xMin } = out.grid;
  const cw = cv.width / nx;
  const ch = cv.height / nr;
  for (let i = 0; i < nx; i++) {
    for (let j = 0; j < nr; j++) {
      ctx.fillStyle = REGION_COLORS[out.region[i * nr + j]];
      ctx.fillRect(i * cw, cv.height - (j + 1) * ch, Math.ceil(cw), Math.ceil(ch));
    }
  }
  const X = scale(xMin, xMax, cw / 2, cv.width - cw / 2);
  const Y = scale(0, rMax, cv.height, 0);
  const curve = (k) => out.curves.filter((c) => c[k] !== null).map((c) => [X(c[0]), Y(c[k])]);
  ctx.lineWidth = 2;
  polyline(ctx, curve(1), "#000");
  polyline(ctx, curve(2), "#1f77b4", [6, 4]);
  polyline(ctx, curve(3), "#6a3d9a", [2, 3]);
  polyline(ctx, [[X(out.levels.x_lo), 0], [X(out.levels.x_lo), cv.height]], "#555", [4, 4]);
  ctx.lineWidth = 1;
  $("phase-legend").innerHTML =
    REGION_NAMES.map((name, k) => `<span style="background:${REGION_COLORS[k]}"></span>${name}`).join("") +
    '<br>curves: black r_hat, blue dashed r_bar, purple dotted r_lo, grey x_lo';
}

async function main() {
  await init();
  baseToml = canonicalConfig();
  $("check").onclick = guard(runCheck);
  $("simulate").onclick = guard(runSimulate);
  $("phase").onclick = guard(runPhase);
  $("status").textContent = "Ready.";
  guard(runCheck)();
  guard(runSimulate)();
  guard(runPhase)();
}

main();
