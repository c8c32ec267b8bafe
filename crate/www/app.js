// Demo page wiring: read the controls, call the wasm module, draw with
// plain canvas 2D. No framework, no dependencies.

const statusEl = document.getElementById("status");

let wasm;
try {
  wasm = await import("./pkg/sbmgrowth_wasm.js");
  await wasm.default();
  statusEl.textContent = "";
  statusEl.style.display = "none";
} catch (err) {
  statusEl.textContent =
    "Could not load ./pkg/sbmgrowth_wasm.js — build the wasm module first " +
    "(see README: wasm-pack build crates/wasm --target web --out-dir ../../www/pkg). " +
    err;
  throw err;
}

const $ = (id) => document.getElementById(id);
const inputs = ["a", "b", "alpha", "beta", "lambda", "n0", "n0red", "tmax", "trials", "seed"];

const PRESETS = {
  parity: { a: 0.75, b: 0.25, alpha: 1, beta: 100, lambda: 0.1, n0: 70, n0red: 5, tmax: 60 },
  vanish: { a: 0.95, b: 0.05, alpha: 1, beta: 1.2, lambda: 0.1, n0: 70, n0red: 32, tmax: 60 },
  frozen: { a: 0.5, b: 0.5, alpha: 2, beta: 2, lambda: 0.1, n0: 70, n0red: 10, tmax: 60 },
};

function params() {
  return {
    a: +$("a").value, b: +$("b").value,
    alpha: +$("alpha").value, beta: +$("beta").value,
    lambda: +$("lambda").value,
    n0: Math.max(1, Math.round(+$("n0").value)),
    n0red: Math.max(0, Math.round(+$("n0red").value)),
    tmax: Math.max(1, Math.round(+$("tmax").value)),
    trials: Math.min(64, Math.max(1, Math.round(+$("trials").value))),
    seed: Math.round(+$("seed").value) >>> 0,
  };
}

// --- tiny canvas plot helpers ---------------------------------------------

function frame(canvas) {
  const ctx = canvas.getContext("2d");
  const m = { l: 42, r: 12, t: 10, b: 24 };
  const w = canvas.width - m.l - m.r;
  const h = canvas.height - m.t - m.b;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  return { ctx, m, w, h };
}

function makeScale(f, x0, x1, y0, y1) {
  return {
    x: (v) => f.m.l + ((v - x0) / (x1 - x0)) * f.w,
    y: (v) => f.m.t + f.h - ((v - y0) / (y1 - y0)) * f.h,
    x0, x1, y0, y1,
  };
}

function axes(f, s, xLabel, yTicks) {
  const { ctx } = f;
  ctx.strokeStyle = "#2c3442";
  ctx.fillStyle = "#8a94a3";
  ctx.font = "11px system-ui";
  ctx.lineWidth = 1;
  ctx.strokeRect(f.m.l, f.m.t, f.w, f.h);
  for (const v of yTicks) {
    if (v < s.y0 || v > s.y1) continue;
    const y = s.y(v);
    ctx.beginPath(); ctx.moveTo(f.m.l, y); ctx.lineTo(f.m.l + f.w, y); ctx.stroke();
    ctx.fillText(v.toFixed(2), 4, y + 3);
  }
  ctx.fillText(xLabel, f.m.l + f.w - ctx.measureText(xLabel).width, f.m.t + f.h + 16);
}

function polyline(f, s, xs, ys, color, width = 1, dash = []) {
  const { ctx } = f;
  ctx.strokeStyle = color;
  ctx.lineWidth = width;
  ctx.setLineDash(dash);
  ctx.beginPath();
  for (let i = 0; i < xs.length; i++) {
    const x = s.x(xs[i]), y = s.y(Math.min(s.y1, Math.max(s.y0, ys[i])));
    if (i === 0) ctx.moveTo(x, y); else ctx.lineTo(x, y);
  }
  ctx.stroke();
  ctx.setLineDash([]);
}

// --- panels -----------------------------------------------------------------

function drawTrajectories(p, sim, det) {
  const f = frame($("traj"));
  const s = makeScale(f, 0, p.tmax, 0, 1);
  axes(f, s, "round t", [0, 0.25, 0.5, 0.75, 1]);
  polyline(f, s, [0, p.tmax], [0.5, 0.5], "#394452", 1, [5, 4]);
  for (const series of sim.phi) {
    polyline(f, s, sim.t, series, "rgba(224,108,95,0.55)", 1.2);
  }
  const detXs = det.trajectory.slice(0, p.tmax + 1);
  polyline(f, s, detXs.map((_, i) => i), detXs, "#d9a33c", 2, [7, 4]);
}

function drawMap(det) {
  const f = frame($("map"));
  const s = makeScale(f, 0, 1, 0, 1);
  axes(f, s, "x", [0, 0.5, 1]);
  polyline(f, s, [0, 1], [0, 1], "#394452", 1, [5, 4]);
  polyline(f, s, det.curve.x, det.curve.f, "#5f9de0", 2);
  if (det.fixed_points.kind === "points") {
    for (const pt of det.fixed_points.points) {
      f.ctx.fillStyle = pt.stability === "stable" ? "#58b368"
        : pt.stability === "unstable" ? "#e06c5f" : "#d9a33c";
      f.ctx.beginPath();
      f.ctx.arc(s.x(pt.x), s.y(pt.x), 5, 0, 2 * Math.PI);
      f.ctx.fill();
    }
  }
}

function drawDerivative(det) {
  const f = frame($("deriv"));
  const lo = Math.min(0, ...det.curve.fprime);
  const hi = Math.max(1.5, Math.min(8, Math.max(...det.curve.fprime) * 1.05));
  const s = makeScale(f, 0, 1, lo, hi);
  axes(f, s, "x", [0, 1]);
  polyline(f, s, [0, 1], [1, 1], "#394452", 1, [5, 4]);
  if (lo < -1) polyline(f, s, [0, 1], [-1, -1], "#394452", 1, [5, 4]);
  polyline(f, s, det.curve.x, det.curve.fprime, "#5f9de0", 2);
}

function phaseBadge(det) {
  $("rho").textContent = det.rho.toPrecision(4);
  const el = $("phase");
  el.className = "phase";
  if (det.phase === "minority_vanishes") {
    el.textContent = "minority vanishes (0 and 1 stable, ½ unstable)";
    el.classList.add("vanish");
  } else if (det.phase === "parity_reached") {
    el.textContent = "parity reached (½ stable, 0 and 1 unstable)";
    el.classList.add("parity");
  } else {
    el.textContent = "frozen (f is the identity)";
    el.classList.add("frozen");
  }
}

function redraw() {
  const p = params();
  try {
    const rho = wasm.rho_of(p.a, p.b, p.alpha, p.beta);
    const x0 = Math.min(0.999, Math.max(0.001, p.n0red / p.n0));
    const det = JSON.parse(wasm.det_analysis(rho, p.lambda, x0, 501, Math.max(p.tmax, 2000)));
    const sim = JSON.parse(wasm.simulate_trajectories(
      p.a, p.b, p.alpha, p.beta, p.lambda, p.n0, p.n0red, p.tmax, p.trials, p.seed));
    phaseBadge(det);
    drawTrajectories(p, sim, det);
    drawMap(det);
    drawDerivative(det);
    statusEl.style.display = "none";
  } catch (err) {
    statusEl.style.display = "block";
    statusEl.textContent = "" + err;
  }
}

for (const id of inputs) $(id).addEventListener("input", redraw);
$("preset").addEventListener("change", () => {
  const pre = PRESETS[$("preset").value];
  for (const [k, v] of Object.entries(pre)) $(k).value = v;
  redraw();
});
$("resample").addEventListener("click", () => {
  $("seed").value = (+$("seed").value + 1) >>> 0;
  redraw();
});

redraw();
