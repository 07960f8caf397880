/**
 * Full-stack acceptance loop against the real Python service: a scripted
 * session annotates 50 pending items with ground-truth ledger pixels,
 * triggers a solve, and checks that overlay reprojections land within
 * 1 px of the annotations.  The calibration file the service persists
 * must be byte-identical to an offline CLI solve with the same seed.
 */

import { execFile, spawn, ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { promisify } from "node:util";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { AnnotationApp } from "../src/app.js";

const execFileP = promisify(execFile);

const PORT = 8731;
const BASE = `http://127.0.0.1:${PORT}`;
const SEED = 5;

let proc: ChildProcess;
let workDir: string;

interface LedgerEntry {
  t: number;
  pixel: [number, number];
}

function parseLedger(path: string): LedgerEntry[] {
  const lines = readFileSync(path, "utf-8").trim().split("\n");
  expect(lines[0]).toBe("ledger/1");
  return lines.slice(1).map((line) => {
    const t = Number(/(?:^|\s)t=(\S+)/.exec(line)![1]);
    const pix = /pixel=\[([^\]]+)\]/.exec(line)![1].split(",").map(Number);
    return { t, pixel: [pix[0], pix[1]] };
  });
}

async function waitForServer(api: ApiClient, timeoutMs = 60_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    try {
      await api.pending();
      return;
    } catch {
      if (Date.now() > deadline) throw new Error("service did not come up");
      await new Promise((r) => setTimeout(r, 250));
    }
  }
}

beforeAll(async () => {
  workDir = mkdtempSync(join(tmpdir(), "lidarcam-ui-"));
  proc = spawn(
    "python3",
    [join(__dirname, "serve_fixture.py"), workDir, String(PORT)],
    { stdio: ["ignore", "pipe", "inherit"] },
  );
  await waitForServer(new ApiClient(BASE));
}, 120_000);

afterAll(() => {
  proc?.kill();
});

describe("criterion 9: scripted annotation session", () => {
  it(
    "annotates 50 items, solves, and matches the offline CLI",
    async () => {
      const api = new ApiClient(BASE);
      const app = new AnnotationApp(api);
      await app.refresh();
      expect(app.counts.pending).toBeGreaterThanOrEqual(50);

      const ledger = new Map(
        parseLedger(join(workDir, "ledger.txt")).map((e) => [e.t, e.pixel]),
      );

      // Annotate exactly 50 items through the app workflow, using the
      // ground-truth pixel for each item's LiDAR timestamp.
      for (let n = 0; n < 50; n++) {
        const item = app.current!;
        const pixel = ledger.get(item.t_lidar);
        expect(pixel).toBeDefined();
        app.placeClick({ x: pixel![0], y: pixel![1] });
        expect(app.canConfirm).toBe(true);
        expect(await app.confirm()).toBe(true);
      }
      expect(app.counts.annotated).toBe(50);
      expect((await api.correspondences()).length).toBe(50);

      // Solve on the background worker and wait for completion.
      expect(app.canSolve).toBe(true);
      await app.solve("pinhole", SEED);
      expect(app.solveState).toBe("done");
      const calib = await api.calibration();
      expect(calib.n_correspondences).toBe(50);
      expect(calib.seed).toBe(SEED);

      // Every overlay reprojection lands within 1 px of its annotation.
      const records = await api.correspondences();
      const markers = await api.overlay(records[0].frame_id);
      expect(markers.length).toBe(50);
      let worst = 0;
      for (const m of markers) {
        expect(m.reprojection).not.toBeNull();
        const d = Math.hypot(
          m.reprojection!.i - m.annotation.i,
          m.reprojection!.j - m.annotation.j,
        );
        worst = Math.max(worst, d);
      }
      expect(worst).toBeLessThanOrEqual(1.0);

      // Offline solve with the same seed reproduces the identical file.
      const offline = join(workDir, "offline_calib.txt");
      await execFileP("lidarcam", [
        "solve",
        "--corr", join(workDir, "session_corr.txt"),
        "--model", "pinhole",
        "--seed", String(SEED),
        "--out", offline,
      ]);
      const onlineBytes = readFileSync(join(workDir, "session_corr.txt.calib"));
      const offlineBytes = readFileSync(offline);
      expect(onlineBytes.equals(offlineBytes)).toBe(true);
    },
    600_000,
  );
});
