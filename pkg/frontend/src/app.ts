/**
 * Headless application state for the annotation workflow.
 *
 * All authoritative state lives on the server; this class only tracks
 * the working queue, the operator's provisional click, and solve/overlay
 * status.  It is DOM-free so the whole workflow is unit-testable; the
 * canvas layer in main.ts renders from it.
 */

import { ApiClient, ApiError, OverlayMarker, PendingItem } from "./api.js";
import { Point } from "./view.js";

export interface Counts {
  pending: number;
  annotated: number;
  skipped: number;
}

export type Listener = () => void;

export class AnnotationApp {
  queue: PendingItem[] = [];
  counts: Counts = { pending: 0, annotated: 0, skipped: 0 };
  /** Provisional crosshair in image coordinates; null until a click. */
  pendingClick: Point | null = null;
  snapping = false;
  solveState: "idle" | "running" | "done" | "error" = "idle";
  lastError: string | null = null;
  overlay: OverlayMarker[] = [];
  annotatedCount = 0;

  private listeners: Listener[] = [];

  constructor(private readonly api: ApiClient) {}

  onChange(fn: Listener): void {
    this.listeners.push(fn);
  }

  private emit(): void {
    for (const fn of this.listeners) fn();
  }

  get current(): PendingItem | null {
    return this.queue.length ? this.queue[0] : null;
  }

  /** Confirm is enabled only once the operator has placed a crosshair. */
  get canConfirm(): boolean {
    return this.current !== null && this.pendingClick !== null;
  }

  /** Solve is disabled until at least one correspondence exists. */
  get canSolve(): boolean {
    return this.annotatedCount > 0 && this.solveState !== "running";
  }

  async refresh(): Promise<void> {
    const res = await this.api.pending();
    this.queue = res.items;
    this.counts = res.counts;
    this.annotatedCount = res.counts.annotated;
    this.emit();
  }

  /** Record a click in image coordinates (already un-transformed). */
  placeClick(p: Point): void {
    this.pendingClick = this.snapping
      ? { x: Math.round(p.x), y: Math.round(p.y) }
      : p;
    this.lastError = null;
    this.emit();
  }

  clearClick(): void {
    this.pendingClick = null;
    this.emit();
  }

  /**
   * Post the provisional click as the annotation for the current item.
   * On failure the click is kept so the operator can retry or adjust.
   */
  async confirm(): Promise<boolean> {
    const item = this.current;
    const click = this.pendingClick;
    if (!item || !click) return false;
    try {
      await this.api.annotate(item.id, click.x, click.y);
    } catch (err) {
      this.lastError =
        err instanceof ApiError
          ? `annotation rejected (${err.status}): ${err.message}`
          : `network failure: ${String(err)}`;
      this.emit();
      return false;
    }
    this.queue.shift();
    this.counts.pending -= 1;
    this.counts.annotated += 1;
    this.annotatedCount += 1;
    this.pendingClick = null;
    this.lastError = null;
    this.emit();
    return true;
  }

  async skip(): Promise<boolean> {
    const item = this.current;
    if (!item) return false;
    try {
      await this.api.skip(item.id);
    } catch (err) {
      this.lastError = `skip failed: ${String(err)}`;
      this.emit();
      return false;
    }
    this.queue.shift();
    this.counts.pending -= 1;
    this.counts.skipped += 1;
    this.pendingClick = null;
    this.lastError = null;
    this.emit();
    return true;
  }

  async solve(model: string, seed: number): Promise<void> {
    if (!this.canSolve) return;
    this.solveState = "running";
    this.lastError = null;
    this.emit();
    try {
      await this.api.solve(model, seed);
      const status = await this.api.waitForSolve();
      this.solveState = status.state === "done" ? "done" : "error";
      if (status.state === "error") {
        this.lastError = status.error ?? "solve failed";
      }
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.solveState = "running";
        this.lastError = "a solve is already running";
      } else {
        this.solveState = "error";
        this.lastError = String(err);
      }
    }
    this.emit();
  }

  async loadOverlay(frameId: string): Promise<void> {
    this.overlay = await this.api.overlay(frameId);
    this.emit();
  }
}
