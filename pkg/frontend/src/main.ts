/**
 * Browser entry point: two-column layout with the control rail on the left
 * (threshold CDF, selection box, methods) and the surface + summary panels
 * on the right, rendered with a WebGL canvas.
 */

import * as THREE from "three";

import { ExplorerClient } from "./api.js";
import type { CdfResponse, ExtractReport } from "./api.js";
import { ExplorerController, SessionStore, THRESHOLD_CHANNEL } from "./app.js";
import { cdfPanel, comparisonView, errorCard, localBars, summaryPanel } from "./panels.js";
import type { ErrorCardModel } from "./panels.js";
import type { ParsedMesh } from "./ply.js";
import { boundingSphere, buildOverlayScene, recolorSurface } from "./scene.js";
import type { OverlayScene } from "./scene.js";

interface ViewRefs {
  cdf: HTMLElement;
  box: HTMLElement;
  methods: HTMLElement;
  canvasHost: HTMLElement;
  bars: HTMLElement;
  summary: HTMLElement;
  errors: HTMLElement;
}

function el(tag: string, className: string, parent: HTMLElement): HTMLElement {
  const node = document.createElement(tag);
  node.className = className;
  parent.appendChild(node);
  return node;
}

function buildLayout(root: HTMLElement): ViewRefs {
  root.innerHTML = "";
  const rail = el("aside", "rail", root);
  const main = el("main", "views", root);
  return {
    cdf: el("section", "panel cdf", rail),
    box: el("section", "panel box", rail),
    methods: el("section", "panel methods", rail),
    canvasHost: el("section", "panel canvas-host", main),
    bars: el("section", "panel bars", main),
    summary: el("section", "panel summary", main),
    errors: el("section", "panel errors", main),
  };
}

function renderError(host: HTMLElement, card: ErrorCardModel): void {
  host.innerHTML = "";
  const div = el("div", "error-card", host);
  div.textContent = card.message;
}

export function mount(root: HTMLElement, baseUrl: string): ExplorerController {
  const refs = buildLayout(root);
  const client = new ExplorerClient(baseUrl);
  const store = SessionStore.fromQuery(window.location.search);

  const renderer = new THREE.WebGLRenderer({ antialias: true });
  renderer.setSize(720, 540);
  refs.canvasHost.appendChild(renderer.domElement);
  const camera = new THREE.PerspectiveCamera(40, 720 / 540, 0.01, 100);
  let overlayScene: OverlayScene | null = null;

  const redraw = () => {
    if (overlayScene !== null) renderer.render(overlayScene.scene, camera);
  };

  const controller = new ExplorerController(client, store, {
    onUrl: (query) => window.history.replaceState(null, "", `?${query}`),
    onError: (card) => renderError(refs.errors, card),
    onReport: (report: ExtractReport, meshes: { base: ParsedMesh; recovered: ParsedMesh | null }) => {
      refs.errors.innerHTML = "";
      const state = store.get();
      const view = comparisonView(state, report);
      const overlay = view.kind === "comparison" && view.mode === "hidden-feature" ? meshes.recovered : null;
      overlayScene = buildOverlayScene(meshes.base, overlay, {
        baseColors: controller.overviewColors() ?? undefined,
      });
      const frame = boundingSphere(meshes.base);
      camera.position.set(
        frame.center[0] + 2.5 * frame.radius,
        frame.center[1] + 1.8 * frame.radius,
        frame.center[2] + 2.5 * frame.radius,
      );
      camera.lookAt(frame.center[0], frame.center[1], frame.center[2]);
      redraw();

      renderCdfPanel(report, null);
      renderBars(meshes.base);
      renderSummary(report);
    },
    onCdf: (response: CdfResponse, colors: Float32Array) => {
      if (overlayScene !== null) {
        recolorSurface(overlayScene.base, colors);
        redraw();
      }
      if (controller.lastReport !== null) renderCdfPanel(controller.lastReport, response);
    },
  });

  function renderCdfPanel(report: ExtractReport, live: CdfResponse | null): void {
    const state = store.get();
    const model = cdfPanel(
      THRESHOLD_CHANNEL,
      report.channels[THRESHOLD_CHANNEL] ?? null,
      state.threshold,
      live,
    );
    refs.cdf.innerHTML = "";
    if (model.kind === "placeholder") {
      refs.cdf.textContent = model.message;
      return;
    }
    const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
    svg.setAttribute("viewBox", "0 0 1 1");
    const path = document.createElementNS("http://www.w3.org/2000/svg", "path");
    path.setAttribute("d", model.path);
    path.setAttribute("fill", "none");
    path.setAttribute("stroke", "#444");
    path.setAttribute("stroke-width", "0.01");
    svg.appendChild(path);
    refs.cdf.appendChild(svg);

    const slider = document.createElement("input");
    slider.type = "range";
    slider.min = String(model.points[0].value);
    slider.max = String(model.points[model.points.length - 1].value);
    slider.step = "any";
    slider.value = String(state.threshold);
    slider.addEventListener("input", () => store.set({ threshold: Number(slider.value) }));
    refs.cdf.appendChild(slider);
    if (model.fractionAbove !== null) {
      const label = document.createElement("div");
      label.textContent = `above threshold: ${(100 * model.fractionAbove).toFixed(1)}%`;
      refs.cdf.appendChild(label);
    }
  }

  function renderBars(mesh: ParsedMesh): void {
    const state = store.get();
    const model = localBars(
      state,
      THRESHOLD_CHANNEL,
      mesh.positions,
      mesh.channels[THRESHOLD_CHANNEL] ?? null,
    );
    refs.bars.innerHTML = "";
    if (model.kind === "placeholder") {
      refs.bars.textContent = model.message;
      return;
    }
    const peak = model.bars.length > 0 ? model.bars[0].value : 1;
    for (const bar of model.bars) {
      const row = el("div", "bar-row", refs.bars);
      const fill = el("span", "bar-fill", row);
      fill.style.width = `${Math.max(1, (100 * bar.value) / Math.max(peak, 1e-300))}%`;
      el("span", "bar-label", row).textContent = `#${bar.vertex} ${bar.value.toExponential(2)}`;
    }
  }

  function renderSummary(report: ExtractReport): void {
    const model = summaryPanel(report);
    refs.summary.innerHTML = "";
    for (const row of model.rows) {
      const div = el("div", "summary-row", refs.summary);
      div.textContent = `${row.label}: ${row.value}`;
    }
  }

  store.subscribe(() => {
    /* box + method panels are simple enough to re-render each change */
    refs.box.textContent = JSON.stringify(store.get().box);
    refs.methods.textContent = `${store.get().methodSelected} / ${store.get().methodUnselected}`;
  });

  window.addEventListener("error", (event) => renderError(refs.errors, errorCard(event.error)));
  return controller;
}
