"""HTTP service driving the interactive annotation workflow.

All session mutations pass through a single lock, so concurrent
annotation posts serialize and readers always see a consistent snapshot.
The correspondence set is checkpointed to disk after every accepted
annotation; a solve runs on a background thread (one at a time) and
persists its calibration file with the same writer the offline CLI uses,
so online and offline solves with equal seeds produce identical files.
"""

from __future__ import annotations

import os
import threading
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from fastapi import FastAPI, HTTPException
from fastapi.responses import FileResponse, JSONResponse
from pydantic import BaseModel

from . import formats
from .correspond import (CameraFrameRef, CorrespondenceSet,
                         DEFAULT_MAX_SKEW_S, add_annotation,
                         match_camera_frame)
from .errors import DuplicateAnnotation, LidarcamError, SkewExceeded
from .geometry import project_points
from .solver import CalibrationResult, GaConfig, default_bounds, solve
from .vertex import LidarFrame, RoiBox, VertexDetection, detect_sequence


@dataclass
class PendingItem:
    id: str
    detection: VertexDetection
    frame: CameraFrameRef
    status: str = "pending"  # pending | annotated | skipped
    key: Optional[tuple] = None


@dataclass
class SessionState:
    roi: RoiBox
    items: Dict[str, PendingItem]
    frames_by_id: Dict[str, CameraFrameRef]
    images_root: str
    corr_path: str
    max_skew: float = DEFAULT_MAX_SKEW_S
    cset: CorrespondenceSet = field(default_factory=CorrespondenceSet)
    result: Optional[CalibrationResult] = None
    solve_state: str = "idle"  # idle | running | done | error
    solve_error: Optional[str] = None
    lock: threading.Lock = field(default_factory=threading.Lock)

    @classmethod
    def build(cls, frames: List[LidarFrame], roi: RoiBox,
              camera_frames: List[CameraFrameRef], images_root: str,
              corr_path: str, max_skew: float = DEFAULT_MAX_SKEW_S
              ) -> "SessionState":
        detections = detect_sequence(frames, roi)
        items: Dict[str, PendingItem] = {}
        n = 0
        for det in detections:
            ref = match_camera_frame(det.frame_timestamp, camera_frames, max_skew)
            if ref is None:
                continue
            items[f"d{n:06d}"] = PendingItem(id=f"d{n:06d}", detection=det,
                                             frame=ref)
            n += 1
        state = cls(roi=roi, items=items,
                    frames_by_id={f.id: f for f in camera_frames},
                    images_root=images_root, corr_path=corr_path,
                    max_skew=max_skew)
        if os.path.exists(corr_path):
            state.restore(formats.load_correspondences(corr_path))
        return state

    def restore(self, cset: CorrespondenceSet) -> None:
        """Resume a session from a previously checkpointed set."""
        self.cset = cset
        keys = {r.key for r in cset.records}
        for item in self.items.values():
            key = (item.detection.frame_timestamp, item.frame.id)
            if key in keys:
                item.status = "annotated"
                item.key = key

    def checkpoint(self) -> None:
        formats.save_correspondences(self.cset, self.corr_path)

    @property
    def calib_path(self) -> str:
        return self.corr_path + ".calib"


class AnnotatePayload(BaseModel):
    i: float
    j: float


class SolvePayload(BaseModel):
    model: str = "pinhole"
    seed: int = 0


def _key_text(key: tuple) -> str:
    return f"{key[1]}@{key[0]!r}"


def _parse_key(text: str) -> tuple:
    if "@" not in text:
        raise HTTPException(400, "key must look like frameid@timestamp")
    frame_id, _, t = text.partition("@")
    try:
        return (float(t), frame_id)
    except ValueError:
        raise HTTPException(400, f"bad timestamp in key {text!r}")


def _record_json(r) -> dict:
    return {"key": _key_text(r.key),
            "lidar": list(r.lidar), "pixel": list(r.pixel),
            "t_lidar": r.lidar_timestamp, "t_camera": r.camera_timestamp,
            "frame_id": r.camera_frame_id}


def create_app(session: SessionState, ui_dir: Optional[str] = None) -> FastAPI:
    app = FastAPI(title="lidarcam annotation service")

    @app.get("/api/pending")
    def pending():
        with session.lock:
            items = [{
                "id": item.id,
                "vertex": list(item.detection.vertex),
                "t_lidar": item.detection.frame_timestamp,
                "frame_id": item.frame.id,
                "t_camera": item.frame.timestamp,
                "image_url": f"/api/frames/{item.frame.id}/image",
            } for item in session.items.values() if item.status == "pending"]
            counts = {"pending": len(items),
                      "annotated": sum(1 for i in session.items.values()
                                       if i.status == "annotated"),
                      "skipped": sum(1 for i in session.items.values()
                                     if i.status == "skipped")}
        return {"items": items, "counts": counts}

    @app.get("/api/frames/{frame_id}/image")
    def frame_image(frame_id: str):
        ref = session.frames_by_id.get(frame_id)
        if ref is None:
            raise HTTPException(404, f"unknown frame {frame_id!r}")
        path = ref.image_path
        if not os.path.isabs(path):
            path = os.path.join(session.images_root, os.path.basename(path))
        if not os.path.exists(path):
            raise HTTPException(404, f"image for {frame_id!r} not on disk")
        return FileResponse(path)

    @app.post("/api/pending/{item_id}/annotate")
    def annotate(item_id: str, payload: AnnotatePayload):
        with session.lock:
            item = session.items.get(item_id)
            if item is None:
                raise HTTPException(404, f"unknown pending item {item_id!r}")
            if item.status == "annotated":
                raise HTTPException(409, f"{item_id} is already annotated")
            try:
                session.cset = add_annotation(session.cset, item.detection,
                                              item.frame, (payload.i, payload.j),
                                              max_skew=session.max_skew)
            except DuplicateAnnotation as exc:
                raise HTTPException(409, str(exc))
            except (SkewExceeded, ValueError) as exc:
                raise HTTPException(400, str(exc))
            item.status = "annotated"
            item.key = (item.detection.frame_timestamp, item.frame.id)
            session.checkpoint()
            return {"key": _key_text(item.key), "count": len(session.cset)}

    @app.post("/api/pending/{item_id}/skip")
    def skip(item_id: str):
        with session.lock:
            item = session.items.get(item_id)
            if item is None:
                raise HTTPException(404, f"unknown pending item {item_id!r}")
            if item.status == "pending":
                item.status = "skipped"
            return {"id": item_id, "status": item.status}

    @app.get("/api/correspondences")
    def correspondences():
        with session.lock:
            return {"count": len(session.cset),
                    "records": [_record_json(r) for r in session.cset.records]}

    @app.delete("/api/correspondences/{key}")
    def delete_correspondence(key: str):
        parsed = _parse_key(key)
        with session.lock:
            try:
                session.cset = session.cset.without_key(parsed)
            except KeyError:
                raise HTTPException(404, f"no correspondence {key!r}")
            for item in session.items.values():
                if item.key == parsed:
                    item.status = "pending"
                    item.key = None
            session.checkpoint()
            return {"count": len(session.cset)}

    @app.post("/api/solve")
    def solve_endpoint(payload: SolvePayload):
        if payload.model not in ("pinhole", "fisheye"):
            raise HTTPException(400, f"unknown model {payload.model!r}")
        with session.lock:
            if session.solve_state == "running":
                raise HTTPException(409, "a solve is already running")
            cset = session.cset
            cfg = GaConfig(seed=payload.seed)
            session.solve_state = "running"
            session.solve_error = None

        def worker():
            try:
                report = solve(cset, payload.model,
                               initial_bounds=default_bounds(payload.model),
                               cfg=cfg)
                result = CalibrationResult.from_report(report, cfg, len(cset))
                formats.save_calibration(result, session.calib_path)
                with session.lock:
                    session.result = result
                    session.solve_state = "done"
            except LidarcamError as exc:
                with session.lock:
                    session.solve_state = "error"
                    session.solve_error = str(exc)

        threading.Thread(target=worker, daemon=True).start()
        return JSONResponse({"state": "running"}, status_code=202)

    @app.get("/api/solve/status")
    def solve_status():
        with session.lock:
            out = {"state": session.solve_state}
            if session.solve_error:
                out["error"] = session.solve_error
            if session.result is not None:
                out["train_error_px"] = session.result.train_error_px
            return out

    @app.get("/api/calibration")
    def calibration():
        with session.lock:
            if session.result is None:
                raise HTTPException(404, "no calibration solved yet")
            r = session.result
            from .solver import param_names
            return {"model": r.model,
                    "params": dict(zip(param_names(r.model), r.params)),
                    "train_error_px": r.train_error_px,
                    "n_correspondences": r.n_correspondences,
                    "seed": r.seed}

    @app.get("/api/overlay/{frame_id}")
    def overlay(frame_id: str):
        if frame_id not in session.frames_by_id:
            raise HTTPException(404, f"unknown frame {frame_id!r}")
        with session.lock:
            if session.result is None:
                raise HTTPException(404, "no calibration solved yet")
            cal = session.result.calibration
            markers = []
            for r in session.cset.records:
                pix, visible = project_points([r.lidar], cal)
                markers.append({
                    "key": _key_text(r.key),
                    "frame_id": r.camera_frame_id,
                    "annotation": {"i": r.pixel[0], "j": r.pixel[1]},
                    "reprojection": ({"i": float(pix[0, 0]), "j": float(pix[0, 1])}
                                     if visible[0] else None),
                })
            return {"markers": markers}

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
