// Expects the wasm-pack output in ./pkg (wasm-pack build --target web --out-dir www/pkg).
import init, { checkModel, switchIntervals, simulatePath } from "./pkg/rsdp_wasm.js";

const $ = (id) => document.getElementById(id);
const out = $("out");
const model = () => $("model").value;
const num = (id) => Number($(id).value);

function run(f) {
  try {
    f();
  } catch (e) {
    out.textContent = String(e);
  }
}

const colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

function plot(path) {
  const c = $("plot");
  const g = c.getContext("2d");
  g.clearRect(0, 0, c.width, c.height);
  const xs = path.x.map((v) => v[0]);
  const lo = Math.min(...xs), hi = Math.max(...xs);
  const span = hi - lo || 1;
  const tmax = path.t[path.t.length - 1];
  const px = (t) => (t / tmax) * (c.width - 20) + 10;
  const py = (x) => c.height - 10 - ((x - lo) / span) * (c.height - 20);
  g.lineWidth = 1.5;
  for (let k = 1; k < xs.length; k++) {
    g.strokeStyle = colors[(path.regime[k - 1] - 1) % colors.length];
    g.beginPath();
    g.moveTo(px(path.t[k - 1]), py(xs[k - 1]));
    g.lineTo(px(path.t[k]), py(xs[k]));
    g.stroke();
  }
}

await init();

$("check").onclick = () =>
  run(() => {
    out.textContent = JSON.stringify(JSON.parse(checkModel(model())), null, 2);
  });

$("intervals").onclick = () =>
  run(() => {
    const r = JSON.parse(switchIntervals(model(), new Float64Array([num("ix")])));
    const rows = r.intervals.map((i) => `Gamma_${i.from}${i.to} = [${i.lo.toFixed(4)}, ${i.hi.toFixed(4)})`);
    out.textContent = `M = ${r.m}, covered length ${r.total}\n` + rows.join("\n");
  });

$("simulate").onclick = () =>
  run(() => {
    const path = JSON.parse(
      simulatePath(model(), new Float64Array([num("x0")]), num("i0"), num("delta"), num("horizon"), BigInt(num("seed"))),
    );
    plot(path);
    const switches = path.regime.filter((r, k) => k > 0 && r !== path.regime[k - 1]).length;
    out.textContent = `${path.t.length} points, ${switches} regime switches, final x = ${path.x[path.x.length - 1][0]}\n` +
      "first coordinate only; colour marks the regime";
  });
