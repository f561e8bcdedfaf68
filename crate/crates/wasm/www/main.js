import init, { tiling_svg, capacity_profile, subdyadic_tree } from "./pkg/treecap_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

// wasm errors arrive as thrown strings
function attempt(target, f) {
  target.classList.remove("error");
  try {
    return f();
  } catch (e) {
    target.classList.add("error");
    target.textContent = String(e);
    return null;
  }
}

function drawTiling() {
  const info = $("tiling-info");
  const r = attempt(info, () => JSON.parse(tiling_svg($("spec").value, num("depth"), $("labels").checked)));
  if (!r) {
    $("tiling").innerHTML = "";
    return;
  }
  info.textContent = `capacity ${r.width}   squares ${r.squares}`;
  $("tiling").innerHTML = r.svg;
}

function plotCurve() {
  const info = $("curve-info");
  const r = attempt(info, () => JSON.parse(capacity_profile(num("n"), num("p"), num("curve-depth"), 256)));
  const canvas = $("curve");
  const g = canvas.getContext("2d");
  g.clearRect(0, 0, canvas.width, canvas.height);
  if (!r) return;
  info.textContent = `whole boundary: ${r.full}`;
  const pad = 30;
  const w = canvas.width - 2 * pad;
  const h = canvas.height - 2 * pad;
  const X = (x) => pad + x * w;
  const Y = (c) => canvas.height - pad - (c / r.full) * h;
  g.strokeStyle = "#999";
  g.strokeRect(pad, pad, w, h);
  g.fillStyle = "#333";
  g.fillText("0", pad - 10, canvas.height - pad + 12);
  g.fillText("x = 1", canvas.width - pad - 20, canvas.height - pad + 12);
  g.fillText(r.full.toPrecision(4), 2, pad + 4);
  g.strokeStyle = "#1565c0";
  g.beginPath();
  r.points.forEach(([x, lo], i) => (i ? g.lineTo(X(x), Y(lo)) : g.moveTo(X(x), Y(lo))));
  g.stroke();
}

function buildTree() {
  const out = $("subdyadic");
  const r = attempt(out, () => JSON.parse(subdyadic_tree(num("target"), num("sub-p"), 40)));
  if (!r) return;
  const runs = r.spec.runs.join(", ");
  out.textContent =
    `capacity in [${r.capacity.lower}, ${r.capacity.upper}]\n` +
    `unary edges inserted before each binary split: ${runs}`;
}

await init();
$("tile").onclick = drawTiling;
$("plot").onclick = plotCurve;
$("build").onclick = buildTree;
drawTiling();
plotCurve();
buildTree();
