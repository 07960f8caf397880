/**
 * Canvas UI wiring: renders the current pending item's camera frame with
 * zoom/pan, a click crosshair, overlay markers, and a status bar.
 *
 * Keyboard: Enter = confirm, S = skip, G = toggle pixel-grid snapping,
 * R = reset view, V = run solve.
 */

import { ApiClient } from "./api.js";
import { AnnotationApp } from "./app.js";
import { ViewTransform, withinImage } from "./view.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

export function startUi(baseUrl = ""): void {
  const api = new ApiClient(baseUrl);
  const app = new AnnotationApp(api);
  const view = new ViewTransform();
  const canvas = el<HTMLCanvasElement>("canvas");
  const ctx = canvas.getContext("2d")!;
  const status = el<HTMLDivElement>("status");
  const confirmBtn = el<HTMLButtonElement>("confirm");
  const skipBtn = el<HTMLButtonElement>("skip");
  const solveBtn = el<HTMLButtonElement>("solve");

  let image: HTMLImageElement | null = null;
  let loadedItemId: string | null = null;
  let dragging = false;
  let lastDrag = { x: 0, y: 0 };

  function draw(): void {
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    if (!image) return;
    ctx.save();
    ctx.imageSmoothingEnabled = view.scale < 4;
    ctx.setTransform(view.scale, 0, 0, view.scale, view.offsetX, view.offsetY);
    ctx.drawImage(image, 0, 0);
    ctx.restore();
    const r = 8;
    if (app.pendingClick) {
      const p = view.toScreen(app.pendingClick);
      ctx.strokeStyle = "#ff3860";
      ctx.lineWidth = 1.5;
      ctx.beginPath();
      ctx.moveTo(p.x - r, p.y);
      ctx.lineTo(p.x + r, p.y);
      ctx.moveTo(p.x, p.y - r);
      ctx.lineTo(p.x, p.y + r);
      ctx.stroke();
    }
    const frameId = app.current?.frame_id;
    for (const m of app.overlay) {
      if (m.frame_id !== frameId || !image) continue;
      const ann = { x: m.annotation.i, y: m.annotation.j };
      if (withinImage(ann, image.width, image.height)) {
        const p = view.toScreen(ann);
        ctx.strokeStyle = "#23d160";
        ctx.strokeRect(p.x - 4, p.y - 4, 8, 8);
      }
      if (
        m.reprojection &&
        withinImage(
          { x: m.reprojection.i, y: m.reprojection.j },
          image.width,
          image.height,
        )
      ) {
        const p = view.toScreen({ x: m.reprojection.i, y: m.reprojection.j });
        ctx.strokeStyle = "#209cee";
        ctx.beginPath();
        ctx.arc(p.x, p.y, 5, 0, 2 * Math.PI);
        ctx.stroke();
      }
    }
  }

  function render(): void {
    const { pending, annotated, skipped } = app.counts;
    const parts = [
      `pending ${pending}`,
      `annotated ${annotated}`,
      `skipped ${skipped}`,
      `snap ${app.snapping ? "on" : "off"}`,
      `solve ${app.solveState}`,
    ];
    if (app.lastError) parts.push(`error: ${app.lastError}`);
    status.textContent = parts.join(" | ");
    confirmBtn.disabled = !app.canConfirm;
    skipBtn.disabled = app.current === null;
    solveBtn.disabled = !app.canSolve;
    const item = app.current;
    if (item && item.id !== loadedItemId) {
      loadedItemId = item.id;
      const img = new Image();
      img.onload = () => {
        image = img;
        view.fit(img.width, img.height, canvas.width, canvas.height);
        draw();
      };
      img.src = api.imageUrl(item);
    }
    draw();
  }

  app.onChange(render);

  canvas.addEventListener("click", (ev) => {
    if (dragging || !image) return;
    const rect = canvas.getBoundingClientRect();
    const p = view.toImage({
      x: ev.clientX - rect.left,
      y: ev.clientY - rect.top,
    });
    if (withinImage(p, image.width, image.height)) app.placeClick(p);
  });

  canvas.addEventListener("wheel", (ev) => {
    ev.preventDefault();
    const rect = canvas.getBoundingClientRect();
    view.zoomAt(
      { x: ev.clientX - rect.left, y: ev.clientY - rect.top },
      ev.deltaY < 0 ? 1.2 : 1 / 1.2,
    );
    draw();
  });

  canvas.addEventListener("mousedown", (ev) => {
    if (ev.button !== 1 && !ev.shiftKey) return;
    dragging = true;
    lastDrag = { x: ev.clientX, y: ev.clientY };
  });
  window.addEventListener("mousemove", (ev) => {
    if (!dragging) return;
    view.panBy(ev.clientX - lastDrag.x, ev.clientY - lastDrag.y);
    lastDrag = { x: ev.clientX, y: ev.clientY };
    draw();
  });
  window.addEventListener("mouseup", () => {
    dragging = false;
  });

  confirmBtn.addEventListener("click", () => void app.confirm());
  skipBtn.addEventListener("click", () => void app.skip());
  solveBtn.addEventListener("click", () => {
    void app.solve("pinhole", 0).then(() => {
      const item = app.current;
      if (item && app.solveState === "done") {
        void app.loadOverlay(item.frame_id);
      }
    });
  });

  window.addEventListener("keydown", (ev) => {
    if (ev.key === "Enter" && app.canConfirm) void app.confirm();
    else if (ev.key.toLowerCase() === "s") void app.skip();
    else if (ev.key.toLowerCase() === "g") {
      app.snapping = !app.snapping;
      render();
    } else if (ev.key.toLowerCase() === "r" && image) {
      view.fit(image.width, image.height, canvas.width, canvas.height);
      draw();
    } else if (ev.key.toLowerCase() === "v" && app.canSolve) {
      solveBtn.click();
    }
  });

  void app.refresh();
}

declare global {
  interface Window {
    lidarcamStartUi?: typeof startUi;
  }
}

if (typeof document !== "undefined" && typeof window !== "undefined") {
  window.lidarcamStartUi = startUi;
  if (document.getElementById("canvas")) startUi("");
}
