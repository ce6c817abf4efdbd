import init, { interpolate, compare, cluster } from "./pkg/gaussalign_web.js";

const $ = (id) => document.getElementById(id);
const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

// [mx, my, sxx, sxy, syy] from a rotation angle (degrees) and major variance
function planar(angle, major, shift) {
  const t = (angle * Math.PI) / 180;
  const c = Math.cos(t), s = Math.sin(t);
  const minor = 0.4;
  return [shift, 0, major * c * c + minor * s * s, (major - minor) * c * s, major * s * s + minor * c * c];
}

function ellipse(ctx, g, color, width) {
  const [mx, my, a, b, d] = g;
  const tr = a + d, det = a * d - b * b;
  const disc = Math.sqrt(Math.max(tr * tr / 4 - det, 0));
  const l1 = tr / 2 + disc, l2 = Math.max(tr / 2 - disc, 0);
  const theta = Math.abs(b) < 1e-12 ? (a >= d ? 0 : Math.PI / 2) : Math.atan2(l1 - a, b);
  const scale = ctx.canvas.width / 8;
  ctx.beginPath();
  ctx.ellipse(
    ctx.canvas.width / 2 + mx * scale,
    ctx.canvas.height / 2 - my * scale,
    Math.sqrt(l1) * scale,
    Math.sqrt(l2) * scale,
    -theta,
    0,
    2 * Math.PI,
  );
  ctx.strokeStyle = color;
  ctx.lineWidth = width;
  ctx.stroke();
}

function pair() {
  const a = planar(+$("a-angle").value, +$("a-aspect").value / 10, -1.2);
  const b = planar(+$("b-angle").value, +$("b-aspect").value / 10, +$("b-shift").value / 10);
  return [a, b];
}

function drawPath() {
  const [a, b] = pair();
  const t = +$("t").value / 100;
  const steps = [0, 0.25, 0.5, 0.75, 1];
  const res = JSON.parse(interpolate(a, b, [...steps, t]));
  const ctx = $("path-canvas").getContext("2d");
  ctx.clearRect(0, 0, ctx.canvas.width, ctx.canvas.height);
  res.path.slice(1, 4).forEach((g) => ellipse(ctx, g, "#bbb", 1));
  ellipse(ctx, res.path[0], COLORS[0], 2);
  ellipse(ctx, res.path[4], COLORS[1], 2);
  ellipse(ctx, res.path[5], "#000", 2.5);
  $("path-out").textContent = `W2(A, B) = ${res.distance.toFixed(4)}`;

  const cmp = JSON.parse(compare(a, b, 0));
  const closed = cmp.closed_form === null ? "none" : cmp.closed_form.toFixed(4);
  $("compare-out").textContent =
    `W2 = ${cmp.w2.toFixed(4)}   IGW = ${cmp.igw.toFixed(4)} ` +
    `in [${cmp.lower.toFixed(4)}, ${cmp.upper.toFixed(4)}]   closed form: ${closed}   ` +
    `(${cmp.iterations} ascent steps)`;
}

function marker(ctx, x, y, kind) {
  ctx.beginPath();
  if (kind % 3 === 0) ctx.arc(x, y, 5, 0, 2 * Math.PI);
  else if (kind % 3 === 1) ctx.rect(x - 4.5, y - 4.5, 9, 9);
  else { ctx.moveTo(x, y - 6); ctx.lineTo(x + 5.5, y + 4); ctx.lineTo(x - 5.5, y + 4); ctx.closePath(); }
  ctx.fill();
}

function drawCluster() {
  let res;
  try {
    res = JSON.parse(
      cluster(+$("seed").value >>> 0, +$("groups").value, +$("per-group").value, +$("dim").value,
        +$("jitter").value / 100, $("mixed").checked),
    );
  } catch (e) {
    $("cluster-out").textContent = String(e);
    return;
  }
  const ctx = $("cluster-canvas").getContext("2d");
  const w = ctx.canvas.width, h = ctx.canvas.height;
  ctx.clearRect(0, 0, w, h);
  const xs = res.coords.map((c) => c[0]), ys = res.coords.map((c) => c[1]);
  const span = Math.max(Math.max(...xs) - Math.min(...xs), Math.max(...ys) - Math.min(...ys), 1e-9);
  const cx = (Math.max(...xs) + Math.min(...xs)) / 2, cy = (Math.max(...ys) + Math.min(...ys)) / 2;
  const scale = (0.85 * w) / span;
  res.coords.forEach(([x, y], i) => {
    ctx.fillStyle = COLORS[res.labels[i] % COLORS.length];
    marker(ctx, w / 2 + (x - cx) * scale, h / 2 - (y - cy) * scale, res.truth[i]);
  });
  $("cluster-out").textContent = `adjusted Rand index ${res.ari.toFixed(3)}`;
}

await init();
for (const id of ["a-angle", "a-aspect", "b-angle", "b-aspect", "b-shift", "t"]) {
  $(id).addEventListener("input", drawPath);
}
$("run-cluster").addEventListener("click", drawCluster);
drawPath();
drawCluster();
