/**
 * Typed client for the calibration annotation service.
 *
 * Every method talks to one documented endpoint and validates the
 * response shape; the client holds no state of its own, so a page
 * reload reproduces identical state from the server.
 */

import { z } from "zod";

const PendingItemSchema = z.object({
  id: z.string(),
  vertex: z.tuple([z.number(), z.number(), z.number()]),
  t_lidar: z.number(),
  frame_id: z.string(),
  t_camera: z.number(),
  image_url: z.string(),
});

const PendingSchema = z.object({
  items: z.array(PendingItemSchema),
  counts: z.object({
    pending: z.number(),
    annotated: z.number(),
    skipped: z.number(),
  }),
});

const CorrespondenceSchema = z.object({
  key: z.string(),
  lidar: z.tuple([z.number(), z.number(), z.number()]),
  pixel: z.tuple([z.number(), z.number()]),
  t_lidar: z.number(),
  t_camera: z.number(),
  frame_id: z.string(),
});

const CorrespondencesSchema = z.object({
  count: z.number(),
  records: z.array(CorrespondenceSchema),
});

const SolveStatusSchema = z.object({
  state: z.enum(["idle", "running", "done", "error"]),
  error: z.string().optional(),
  train_error_px: z.number().optional(),
});

const CalibrationSchema = z.object({
  model: z.string(),
  params: z.record(z.number()),
  train_error_px: z.number(),
  n_correspondences: z.number(),
  seed: z.number(),
});

const MarkerSchema = z.object({
  key: z.string(),
  frame_id: z.string(),
  annotation: z.object({ i: z.number(), j: z.number() }),
  reprojection: z.object({ i: z.number(), j: z.number() }).nullable(),
});

const OverlaySchema = z.object({ markers: z.array(MarkerSchema) });

export type PendingItem = z.infer<typeof PendingItemSchema>;
export type PendingResponse = z.infer<typeof PendingSchema>;
export type CorrespondenceRecord = z.infer<typeof CorrespondenceSchema>;
export type SolveStatus = z.infer<typeof SolveStatusSchema>;
export type CalibrationInfo = z.infer<typeof CalibrationSchema>;
export type OverlayMarker = z.infer<typeof MarkerSchema>;

/** Error carrying the HTTP status so the UI can branch on 409 vs 400. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export type FetchLike = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<{ status: number; json(): Promise<unknown> }>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = fetch as unknown as FetchLike,
  ) {}

  private async request(
    path: string,
    init?: { method?: string; body?: unknown },
  ): Promise<unknown> {
    const res = await this.fetchFn(this.baseUrl + path, {
      method: init?.method ?? "GET",
      headers:
        init?.body !== undefined
          ? { "Content-Type": "application/json" }
          : undefined,
      body: init?.body !== undefined ? JSON.stringify(init.body) : undefined,
    });
    const body = (await res.json()) as { detail?: string };
    if (res.status >= 400) {
      throw new ApiError(res.status, body?.detail ?? `HTTP ${res.status}`);
    }
    return body;
  }

  async pending(): Promise<PendingResponse> {
    return PendingSchema.parse(await this.request("/api/pending"));
  }

  imageUrl(item: PendingItem): string {
    return this.baseUrl + item.image_url;
  }

  async annotate(
    itemId: string,
    i: number,
    j: number,
  ): Promise<{ key: string; count: number }> {
    return (await this.request(`/api/pending/${itemId}/annotate`, {
      method: "POST",
      body: { i, j },
    })) as { key: string; count: number };
  }

  async skip(itemId: string): Promise<void> {
    await this.request(`/api/pending/${itemId}/skip`, { method: "POST" });
  }

  async correspondences(): Promise<CorrespondenceRecord[]> {
    return CorrespondencesSchema.parse(
      await this.request("/api/correspondences"),
    ).records;
  }

  async deleteCorrespondence(key: string): Promise<void> {
    await this.request(`/api/correspondences/${encodeURIComponent(key)}`, {
      method: "DELETE",
    });
  }

  async solve(model: string, seed: number): Promise<void> {
    await this.request("/api/solve", { method: "POST", body: { model, seed } });
  }

  async solveStatus(): Promise<SolveStatus> {
    return SolveStatusSchema.parse(await this.request("/api/solve/status"));
  }

  /** Polls until the background solve leaves the running state. */
  async waitForSolve(
    pollMs = 250,
    timeoutMs = 300_000,
  ): Promise<SolveStatus> {
    const deadline = Date.now() + timeoutMs;
    for (;;) {
      const status = await this.solveStatus();
      if (status.state === "done" || status.state === "error") return status;
      if (Date.now() > deadline) throw new Error("solve timed out");
      await new Promise((r) => setTimeout(r, pollMs));
    }
  }

  async calibration(): Promise<CalibrationInfo> {
    return CalibrationSchema.parse(await this.request("/api/calibration"));
  }

  async overlay(frameId: string): Promise<OverlayMarker[]> {
    return OverlaySchema.parse(
      await this.request(`/api/overlay/${encodeURIComponent(frameId)}`),
    ).markers;
  }
}
