import { ReviewApi } from "./api.js";
import { MergeDraft } from "./merge.js";
import { formatPercent, precisionRows } from "./metrics.js";
import {
  fitToCanvas,
  groupColor,
  mergedGroup,
  parseScatterCsv,
  type ScatterPoint,
} from "./scatter.js";
import { ReviewStore } from "./state.js";

const PAGE_LIMIT = 60;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const api = new ReviewApi("");
const store = new ReviewStore(api, {
  onChange: () => render(),
  onError: (message) => showError(message),
});

let draft: MergeDraft | null = null;
let nextGroupId = 0;
let scatterPoints: ScatterPoint[] = [];

function showError(message: string): void {
  const banner = el<HTMLDivElement>("error-banner");
  el<HTMLSpanElement>("error-text").textContent =
    `${message} (nothing was changed; try the action again)`;
  banner.hidden = false;
}

el<HTMLButtonElement>("error-dismiss").addEventListener("click", () => {
  el<HTMLDivElement>("error-banner").hidden = true;
});

// ---- cluster list -------------------------------------------------------

function renderClusterList(): void {
  const list = el<HTMLUListElement>("cluster-list");
  list.textContent = "";
  for (const cluster of store.clusters) {
    const item = document.createElement("li");
    const button = document.createElement("button");
    button.className = "cluster-button";
    if (store.page?.cluster_id === cluster.cluster_id) {
      button.classList.add("active");
    }
    const name = cluster.label
      ? `${cluster.cluster_id} · ${cluster.label}`
      : `cluster ${cluster.cluster_id}`;
    button.textContent = `${name} (${cluster.size})`;
    button.addEventListener("click", () => {
      void store.openCluster(cluster.cluster_id, 0, PAGE_LIMIT);
    });
    item.append(button);
    list.append(item);
  }
}

// ---- gallery ------------------------------------------------------------

function renderGallery(): void {
  const header = el<HTMLDivElement>("gallery-header");
  const grid = el<HTMLDivElement>("gallery-grid");
  const pager = el<HTMLDivElement>("gallery-pager");
  grid.textContent = "";
  pager.textContent = "";
  const page = store.page;
  if (!page) {
    header.textContent = "Pick a cluster on the left.";
    return;
  }
  const title = page.label
    ? `Cluster ${page.cluster_id}: ${page.label}`
    : `Cluster ${page.cluster_id}`;
  header.textContent = `${title} — ${page.total} images`;

  for (const image of page.images) {
    const cell = document.createElement("figure");
    cell.className = image.marked ? "thumb marked" : "thumb";
    cell.title = image.marked
      ? `${image.image_id} (marked miss-clustered, click to unmark)`
      : image.image_id;
    const img = document.createElement("img");
    img.loading = "lazy";
    img.src = api.imageUrl(image.image_id);
    img.alt = image.image_id;
    const badge = document.createElement("figcaption");
    badge.textContent = image.marked ? "✕ miss-clustered" : image.image_id;
    cell.append(img, badge);
    cell.addEventListener("click", () => {
      void store.toggleMark(image.image_id);
    });
    grid.append(cell);
  }

  if (page.total > page.limit) {
    const prev = document.createElement("button");
    prev.textContent = "previous";
    prev.disabled = page.offset === 0;
    prev.addEventListener("click", () => {
      void store.openCluster(
        page.cluster_id,
        Math.max(0, page.offset - page.limit),
        page.limit,
      );
    });
    const next = document.createElement("button");
    next.textContent = "next";
    next.disabled = page.offset + page.limit >= page.total;
    next.addEventListener("click", () => {
      void store.openCluster(page.cluster_id, page.offset + page.limit, page.limit);
    });
    const where = document.createElement("span");
    const last = Math.min(page.offset + page.limit, page.total);
    where.textContent = `${page.offset + 1}–${last} of ${page.total}`;
    pager.append(prev, where, next);
  }
}

el<HTMLFormElement>("label-form").addEventListener("submit", (event) => {
  event.preventDefault();
  const page = store.page;
  if (!page) return;
  const input = el<HTMLInputElement>("label-input");
  void store.setLabel(page.cluster_id, input.value).then((ok) => {
    if (ok) input.value = "";
  });
});

// ---- precision panel ----------------------------------------------------

function renderMetrics(): void {
  const macro = el<HTMLSpanElement>("macro-value");
  const micro = el<HTMLSpanElement>("micro-value");
  const bars = el<HTMLDivElement>("precision-bars");
  const stale = el<HTMLSpanElement>("metrics-stale");
  bars.textContent = "";
  const payload = store.metrics;
  if (!payload) {
    macro.textContent = "–";
    micro.textContent = "–";
    return;
  }
  macro.textContent = formatPercent(payload.macro_precision);
  micro.textContent = formatPercent(payload.micro_precision);
  stale.hidden = store.metricsStaleSince === null;
  if (store.metricsStaleSince !== null) {
    stale.textContent = `stale since ${store.metricsStaleSince}`;
  }
  for (const row of precisionRows(payload)) {
    const line = document.createElement("div");
    line.className = "bar-row";
    const name = document.createElement("span");
    name.className = "bar-name";
    name.textContent = `c${row.clusterId}`;
    const track = document.createElement("div");
    track.className = "bar-track";
    const fill = document.createElement("div");
    fill.className = "bar-fill";
    fill.style.width = `${(row.precision * 100).toFixed(1)}%`;
    track.append(fill);
    const value = document.createElement("span");
    value.className = "bar-value";
    value.textContent = `${formatPercent(row.precision)} (${row.missed}/${row.total})`;
    line.append(name, track, value);
    bars.append(line);
  }
}

// ---- merge panel --------------------------------------------------------

function ensureDraft(): MergeDraft {
  if (!draft) {
    const ids = store.clusters.map((c) => c.cluster_id);
    draft = Object.keys(store.mergeMap).length
      ? new MergeDraft(ids, store.mergeMap)
      : MergeDraft.identity(ids);
    nextGroupId = Math.max(-1, ...ids) + 1;
  }
  return draft;
}

function chip(clusterId: number): HTMLSpanElement {
  const node = document.createElement("span");
  node.className = "chip";
  node.textContent = String(clusterId);
  node.draggable = true;
  node.addEventListener("dragstart", (event) => {
    event.dataTransfer?.setData("text/plain", String(clusterId));
  });
  return node;
}

function groupBox(group: number, members: number[]): HTMLDivElement {
  const box = document.createElement("div");
  box.className = "group-box";
  const title = document.createElement("h4");
  title.textContent = `group ${group}`;
  box.append(title);
  for (const member of members) box.append(chip(member));
  box.addEventListener("dragover", (event) => event.preventDefault());
  box.addEventListener("drop", (event) => {
    event.preventDefault();
    const raw = event.dataTransfer?.getData("text/plain");
    if (raw === undefined || raw === "") return;
    ensureDraft().assign(Number(raw), group);
    renderMerge();
  });
  return box;
}

function renderMerge(): void {
  const panel = el<HTMLDivElement>("merge-groups");
  panel.textContent = "";
  const current = ensureDraft();
  for (const [group, members] of [...current.groups().entries()].sort(
    (a, b) => a[0] - b[0],
  )) {
    panel.append(groupBox(group, members));
  }
  const submit = el<HTMLButtonElement>("merge-submit");
  submit.disabled = !current.complete;
  el<HTMLSpanElement>("merge-status").textContent = current.complete
    ? `${current.groups().size} groups`
    : `unassigned: ${current.unassigned.join(", ")}`;
}

el<HTMLButtonElement>("merge-add-group").addEventListener("click", () => {
  ensureDraft();
  // an empty box to drop the first member into
  const panel = el<HTMLDivElement>("merge-groups");
  panel.append(groupBox(nextGroupId++, []));
});

el<HTMLButtonElement>("merge-reset").addEventListener("click", () => {
  draft = null;
  renderMerge();
});

el<HTMLButtonElement>("merge-submit").addEventListener("click", () => {
  const current = ensureDraft();
  void store.submitMerge(current).then((ok) => {
    if (ok) {
      draft = null;
      drawScatter();
    }
  });
});

// ---- scatter ------------------------------------------------------------

function drawScatter(): void {
  const canvas = el<HTMLCanvasElement>("scatter-canvas");
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (scatterPoints.length === 0) return;
  const pixels = fitToCanvas(scatterPoints, canvas.width, canvas.height);
  scatterPoints.forEach((point, i) => {
    const pixel = pixels[i];
    if (!pixel) return;
    ctx.fillStyle = groupColor(mergedGroup(point, store.mergeMap));
    ctx.beginPath();
    ctx.arc(pixel.px, pixel.py, 2.5, 0, Math.PI * 2);
    ctx.fill();
  });
}

async function loadScatter(): Promise<void> {
  try {
    scatterPoints = parseScatterCsv(await api.scatter());
  } catch {
    scatterPoints = []; // no scatter served; hide quietly
    el<HTMLElement>("scatter-section").hidden = true;
    return;
  }
  drawScatter();
}

// ---- boot ---------------------------------------------------------------

function render(): void {
  renderClusterList();
  renderGallery();
  renderMetrics();
  renderMerge();
}

el<HTMLAnchorElement>("download-marks").href = api.exportUrl();

void store
  .load()
  .then(() => {
    const first = store.clusters[0];
    if (first && !store.page) {
      void store.openCluster(first.cluster_id, 0, PAGE_LIMIT);
    }
    void loadScatter();
  })
  .catch((error: unknown) => {
    el<HTMLDivElement>("gallery-header").textContent = "Could not reach the review service.";
    showError(String(error));
  });
