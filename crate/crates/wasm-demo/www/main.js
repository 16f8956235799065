import init, { Demo, kernelFit } from "./pkg/wmgf_wasm.js";

const $ = (id) => document.getElementById(id);

await init();
const demo = new Demo();
const W = demo.width;
const H = demo.height;
const mask = demo.maskSlice();
let seed = { x: 4, y: Math.floor(H / 2) };

function colour(t) {
  // dark blue -> yellow
  const r = Math.round(255 * Math.min(1, 1.6 * t));
  const g = Math.round(255 * Math.max(0, Math.min(1, 1.6 * t - 0.4)));
  const b = Math.round(120 * (1 - t));
  return `rgb(${r},${g},${b})`;
}

function draw(canvas, values) {
  const ctx = canvas.getContext("2d");
  const sx = canvas.width / W;
  const sy = canvas.height / H;
  const peak = values.reduce((m, v) => Math.max(m, v), 0);
  ctx.fillStyle = "#000";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  for (let y = 0; y < H; y++) {
    for (let x = 0; x < W; x++) {
      const v = values[y * W + x];
      if (peak > 0 && v > peak * 1e-4) {
        ctx.fillStyle = colour(1 + Math.log10(v / peak) / 4);
        ctx.fillRect(x * sx, y * sy, sx, sy);
      }
    }
  }
  ctx.strokeStyle = "rgba(200,200,200,0.5)";
  for (let y = 0; y < H; y++) {
    for (let x = 0; x < W; x++) {
      if (mask[y * W + x] !== 1) continue;
      if (x === 0 || mask[y * W + x - 1] !== 1) line(ctx, x * sx, y * sy, x * sx, (y + 1) * sy);
      if (x === W - 1 || mask[y * W + x + 1] !== 1) line(ctx, (x + 1) * sx, y * sy, (x + 1) * sx, (y + 1) * sy);
      if (y === 0 || mask[(y - 1) * W + x] !== 1) line(ctx, x * sx, y * sy, (x + 1) * sx, y * sy);
      if (y === H - 1 || mask[(y + 1) * W + x] !== 1) line(ctx, x * sx, (y + 1) * sy, (x + 1) * sx, (y + 1) * sy);
    }
  }
  ctx.strokeStyle = "#0f0";
  ctx.strokeRect(seed.x * sx, seed.y * sy, sx, sy);
}

function line(ctx, x0, y0, x1, y1) {
  ctx.beginPath();
  ctx.moveTo(x0, y0);
  ctx.lineTo(x1, y1);
  ctx.stroke();
}

function updateImpulses() {
  const tau = Number($("tau").value);
  const fwhm = Number($("fwhm").value);
  const order = Number($("order").value);
  $("tau-v").textContent = tau.toFixed(1);
  $("fwhm-v").textContent = fwhm.toFixed(1);
  try {
    draw($("c-graph"), demo.graphImpulse(seed.x, seed.y, tau, order));
    draw($("c-uniform"), demo.uniformImpulse(seed.x, seed.y, tau, order));
    draw($("c-gauss"), demo.gaussianImpulse(seed.x, seed.y, fwhm));
    $("status").textContent = "";
  } catch (e) {
    $("status").textContent = e.message ?? String(e);
  }
}

function updateKernel() {
  const tau = Number($("k-tau").value);
  const order = Number($("k-order").value);
  $("k-tau-v").textContent = tau.toFixed(1);
  $("k-order-v").textContent = order;
  const fit = kernelFit(tau, order, 401);
  $("k-err").textContent = fit.supError.toExponential(2);
  const canvas = $("c-kernel");
  const ctx = canvas.getContext("2d");
  const pad = 24;
  const lo = -0.1;
  const hi = 1.1;
  const px = (l) => pad + (l / 2) * (canvas.width - 2 * pad);
  const py = (v) => canvas.height - pad - ((v - lo) / (hi - lo)) * (canvas.height - 2 * pad);
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.strokeStyle = "#bbb";
  line(ctx, px(0), py(0), px(2), py(0));
  line(ctx, px(0), py(lo), px(0), py(hi));
  ctx.fillStyle = "#666";
  ctx.fillText("0", px(0) - 3, py(lo) + 14);
  ctx.fillText("2", px(2) - 3, py(lo) + 14);
  ctx.fillText("λ", px(1), py(lo) + 14);
  for (const [series, stroke] of [[fit.exact, "#000"], [fit.approx, "#d22"]]) {
    ctx.strokeStyle = stroke;
    ctx.beginPath();
    fit.lambdas.forEach((l, i) => {
      const v = Math.max(lo, Math.min(hi, series[i]));
      i === 0 ? ctx.moveTo(px(l), py(v)) : ctx.lineTo(px(l), py(v));
    });
    ctx.stroke();
  }
  fit.free();
}

for (const id of ["c-graph", "c-uniform", "c-gauss"]) {
  $(id).addEventListener("click", (ev) => {
    const r = ev.target.getBoundingClientRect();
    seed = {
      x: Math.floor(((ev.clientX - r.left) / r.width) * W),
      y: Math.floor(((ev.clientY - r.top) / r.height) * H),
    };
    updateImpulses();
  });
}
for (const id of ["tau", "fwhm", "order"]) $(id).addEventListener("input", updateImpulses);
for (const id of ["k-tau", "k-order"]) $(id).addEventListener("input", updateKernel);

updateImpulses();
updateKernel();
