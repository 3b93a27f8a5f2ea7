/** DOM wiring for the interactive completion explorer. */

import { ApiClient } from "./api";
import { Camera, DEFAULT_CAMERA, orbit, zoomBy } from "./camera";
import { buildPanels, drawPanel } from "./render";
import {
  CompletionRequester,
  initialState,
  renderedPointCounts,
  toggleCompletion,
  ViewerState,
  withError,
  withShape,
} from "./state";
import { parseXyz } from "./xyz";

const PANEL_W = 460;
const PANEL_H = 400;

class ViewerApp {
  state: ViewerState = initialState();
  camera: Camera = DEFAULT_CAMERA;
  api = new ApiClient("");
  requester = new CompletionRequester(this.api);
  prompts: string[] = [];

  private panelsEl = el("panels");
  private bannerEl = el("banner");
  private statusEl = el("status");
  private shapeSel = el("shape-select") as HTMLSelectElement;
  private promptInput = el("prompt-input") as HTMLInputElement;
  private promptList = el("prompt-list") as HTMLDataListElement;
  private kInput = el("k-input") as HTMLInputElement;
  private fileInput = el("file-input") as HTMLInputElement;
  private legendEl = el("legend");

  async init() {
    try {
      const [health, shapes] = await Promise.all([this.api.health(), this.api.shapes()]);
      this.state = { ...this.state, modelId: health.model_id };
      this.shapeSel.innerHTML =
        `<option value="">choose a demo shape</option>` +
        shapes.shapes.map((s) => `<option value="${s}">${s}</option>`).join("");
      await this.loadPrompts();
    } catch (err) {
      this.setState(withError(this.state, `server unreachable: ${String(err)}`));
    }
    this.bindEvents();
    this.redraw();
  }

  private async loadPrompts(partType?: string) {
    try {
      const res = await this.api.prompts(undefined, partType);
      this.prompts = res.prompts;
      this.promptList.innerHTML = this.prompts
        .map((p) => `<option value="${p}"></option>`)
        .join("");
    } catch {
      this.prompts = [];
    }
  }

  private bindEvents() {
    this.shapeSel.addEventListener("change", () => void this.loadServerShape());
    this.fileInput.addEventListener("change", () => void this.loadLocalFile());
    el("complete-btn").addEventListener("click", () => void this.submit());
    this.promptInput.addEventListener("keydown", (e) => {
      if ((e as KeyboardEvent).key === "Enter") void this.submit();
    });
    const canvasArea = this.panelsEl;
    let dragging = false;
    let last: [number, number] = [0, 0];
    canvasArea.addEventListener("mousedown", (e) => {
      dragging = true;
      last = [(e as MouseEvent).clientX, (e as MouseEvent).clientY];
    });
    window.addEventListener("mouseup", () => (dragging = false));
    window.addEventListener("mousemove", (e) => {
      if (!dragging) return;
      const me = e as MouseEvent;
      this.camera = orbit(
        this.camera,
        (me.clientX - last[0]) * 0.01,
        (me.clientY - last[1]) * 0.01,
      );
      last = [me.clientX, me.clientY];
      this.redraw();
    });
    canvasArea.addEventListener("wheel", (e) => {
      e.preventDefault();
      this.camera = zoomBy(this.camera, (e as WheelEvent).deltaY < 0 ? 1.1 : 0.9);
      this.redraw();
    });
  }

  private async loadServerShape() {
    const id = this.shapeSel.value;
    if (!id) return;
    try {
      const shape = await this.api.shape(id);
      this.setState(
        withShape(
          this.state,
          {
            kind: "server",
            shapeId: shape.shape_id,
            removedPartType: shape.removed_part_type,
            gtPrompt: shape.gt_prompt,
          },
          shape.points,
        ),
      );
      await this.loadPrompts(shape.removed_part_type);
    } catch (err) {
      this.setState(withError(this.state, String(err)));
    }
  }

  private async loadLocalFile() {
    const file = this.fileInput.files?.[0];
    if (!file) return;
    try {
      const points = parseXyz(await file.text());
      this.setState(withShape(this.state, { kind: "file", name: file.name }, points));
    } catch (err) {
      // parse failure: banner, state unchanged
      this.setState(withError(this.state, `could not parse ${file.name}: ${String(err)}`));
    }
  }

  private async submit() {
    this.state = {
      ...this.state,
      prompt: this.promptInput.value,
      k: Math.max(1, Number(this.kInput.value) || 1),
      busy: true,
    };
    this.redraw();
    this.setState(await this.requester.submit(this.state));
  }

  private setState(next: ViewerState) {
    this.state = next;
    this.redraw();
  }

  private redraw() {
    const { state } = this;
    this.bannerEl.textContent = state.error ?? "";
    this.bannerEl.style.display = state.error ? "block" : "none";
    const counts = renderedPointCounts(state);
    const oov = (state.current ?? []).some((v) => v.entry.oov);
    this.statusEl.innerHTML = [
      state.modelId ? `model ${state.modelId}` : "",
      `${counts.input} input pts`,
      state.current ? `${counts.missing} generated pts` : "",
      state.timingMs != null ? `${state.timingMs.toFixed(0)} ms` : "",
      state.busy ? "working..." : "",
      oov ? `<span class="badge">out-of-vocabulary</span>` : "",
    ]
      .filter(Boolean)
      .join(" &middot; ");

    const panels = buildPanels(state, this.camera, PANEL_W, PANEL_H);
    this.panelsEl.innerHTML = "";
    this.legendEl.innerHTML = (state.current ?? [])
      .map(
        (v, i) =>
          `<label style="color:${v.color}"><input type="checkbox" data-idx="${i}" ` +
          `${v.visible ? "checked" : ""}/> ${v.entry.prompt}` +
          `${v.entry.oov ? ' <span class="badge">oov</span>' : ""}</label>`,
      )
      .join("");
    this.legendEl.querySelectorAll("input").forEach((box) =>
      box.addEventListener("change", () => {
        this.setState(toggleCompletion(this.state, Number((box as HTMLInputElement).dataset.idx)));
      }),
    );
    for (const panel of panels) {
      const wrap = document.createElement("div");
      wrap.className = "panel";
      const title = document.createElement("div");
      title.className = "panel-title";
      title.textContent = panel.title;
      const canvas = document.createElement("canvas");
      canvas.width = PANEL_W;
      canvas.height = PANEL_H;
      wrap.append(title, canvas);
      this.panelsEl.append(wrap);
      const ctx = canvas.getContext("2d");
      if (ctx) drawPanel(ctx, panel, PANEL_W, PANEL_H);
    }
  }
}

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node;
}

window.addEventListener("DOMContentLoaded", () => {
  void new ViewerApp().init();
});
