import init, { noisySymbol, theoryCurve, serPoint, esn0ToSnr } from "./pkg/mfsk_wasm.js";

const $ = (id) => document.getElementById(id);

function axes(ctx, w, h) {
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(40.5, 10.5, w - 50, h - 30);
}

// xs/ys in data units; returns a mapper to canvas pixels.
function frame(canvas, x0, x1, y0, y1) {
  const w = canvas.width, h = canvas.height, ctx = canvas.getContext("2d");
  axes(ctx, w, h);
  const px = (x) => 40 + ((x - x0) / (x1 - x0)) * (w - 50);
  const py = (y) => 10 + (1 - (y - y0) / (y1 - y0)) * (h - 30);
  ctx.fillStyle = "#555";
  ctx.font = "11px sans-serif";
  return { ctx, px, py, w, h };
}

function line(f, xs, ys, color, dash = []) {
  const { ctx, px, py } = f;
  ctx.strokeStyle = color;
  ctx.setLineDash(dash);
  ctx.beginPath();
  let pen = false;
  xs.forEach((x, i) => {
    if (!Number.isFinite(ys[i])) { pen = false; return; }
    pen ? ctx.lineTo(px(x), py(ys[i])) : ctx.moveTo(px(x), py(ys[i]));
    pen = true;
  });
  ctx.stroke();
  ctx.setLineDash([]);
}

function drawSymbol() {
  const profile = $("sym-profile").value;
  const maxTone = profile === "jt65a-full" ? 63 : 7;
  $("sym-tone").max = maxTone;
  const snr = Number($("sym-snr").value);
  $("sym-snr-val").textContent = snr.toFixed(1);
  let v;
  try {
    v = noisySymbol(profile, Number($("sym-tone").value), snr, Number($("sym-seed").value), 400);
  } catch (e) {
    $("sym-out").innerHTML = `<span class="err">${e.message}</span>`;
    return;
  }
  const wave = v.waveform();
  const amp = Math.max(...wave.map(Math.abs)) || 1;
  const fw = frame($("sym-wave"), 0, wave.length - 1, -amp, amp);
  line(fw, wave.map((_, i) => i), wave, "#246");
  fw.ctx.fillText("first 400 samples", 46, 22);

  const spec = v.spectrumDb();
  const bins = spec.map((_, i) => v.firstBin + i);
  const lo = Math.min(v.floorDb - 15, ...spec.filter(Number.isFinite));
  const hi = Math.max(...spec) + 3;
  const fs = frame($("sym-spec"), bins[0], bins[bins.length - 1], lo, hi);
  line(fs, bins, spec, "#333");
  line(fs, [bins[0], bins[bins.length - 1]], [v.floorDb, v.floorDb], "#888", [4, 4]);
  fs.ctx.strokeStyle = "#c33";
  fs.ctx.beginPath();
  fs.ctx.moveTo(fs.px(v.toneBin), fs.py(hi));
  fs.ctx.lineTo(fs.px(v.toneBin), fs.py(lo));
  fs.ctx.stroke();
  fs.ctx.fillText(`energy (dB) vs bin, ${v.binWidthHz.toFixed(3)} Hz/bin; red = sent bin, dashed = floor`, 46, 22);

  $("sym-out").textContent =
    `sent bin ${v.toneBin}   peak bin ${v.peakBin}   sent/floor ${v.floorRatio.toFixed(2)}   ` +
    `classical decision: tone ${v.decided}`;
}

const COLORS = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#333"];

function drawTheory() {
  const orders = $("th-all").checked ? [2, 4, 8, 16, 32, 64] : [Number($("th-m").value)];
  const f = frame($("th-plot"), -2, 14, -7, 0);
  for (let d = -7; d <= 0; d++) {
    f.ctx.fillText(`1e${d}`, 4, f.py(d) + 4);
  }
  for (let x = -2; x <= 14; x += 2) {
    f.ctx.fillText(String(x), f.px(x) - 6, f.h - 6);
  }
  orders.forEach((m, k) => {
    const c = theoryCurve(m, -2, 14, 0.1);
    const xs = c.ebn0Db();
    const log = (a) => Array.from(a, (y) => (y > 0 ? Math.log10(y) : NaN));
    const color = COLORS[[2, 4, 8, 16, 32, 64].indexOf(m)];
    line(f, xs, log(c.ser()), color);
    if ($("th-ber").checked) line(f, xs, log(c.ber()), color, [5, 3]);
    f.ctx.fillStyle = color;
    f.ctx.fillText(`M=${m}`, f.w - 60, 26 + 14 * k);
  });
  f.ctx.fillStyle = "#555";
  f.ctx.fillText("error rate vs Eb/N0 (dB); solid SER, dashed BER", 46, 22);
}

function runSer() {
  const profile = $("ser-profile").value;
  const out = $("ser-out");
  try {
    const snr = esn0ToSnr(profile, Number($("ser-esn0").value));
    const t0 = performance.now();
    const p = serPoint(profile, snr, Number($("ser-n").value), Number($("ser-seed").value));
    const ms = performance.now() - t0;
    out.textContent =
      `SNR ${p.snr_db.toFixed(2)} dB   Es/N0 ${p.esn0_db.toFixed(2)} dB   Eb/N0 ${p.ebn0_db.toFixed(2)} dB\n` +
      `measured SER ${p.ser.toFixed(5)} ± ${p.stderr.toFixed(5)}   theory ${p.theory_ser.toExponential(4)}   ` +
      `(${p.n} symbols, ${ms.toFixed(0)} ms)`;
  } catch (e) {
    out.innerHTML = `<span class="err">${e.message}</span>`;
  }
}

await init();
$("status").textContent = "";
for (const id of ["sym-profile", "sym-tone", "sym-snr", "sym-seed"]) $(id).addEventListener("input", drawSymbol);
for (const id of ["th-m", "th-all", "th-ber"]) $(id).addEventListener("input", drawTheory);
$("ser-run").addEventListener("click", runSer);
drawSymbol();
drawTheory();
