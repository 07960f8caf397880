"""Line-oriented text formats used by the toolbox.

Every format starts with a one-token version header and serializes
floats with ``repr``, so save -> load -> save is byte-identical.  All
writers/readers are strict: an unreadable record raises MalformedRecord
with its 1-based line number.
"""

from __future__ import annotations

import os
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .correspond import CameraFrameRef, Correspondence, CorrespondenceSet
from .errors import FormatError, MalformedRecord, MissingColumn
from .solver import CalibrationResult, ParamBounds, param_names
from .synth import LedgerEntry
from .vertex import LidarFrame, VertexDetection

CORR_HEADER = "corr/1"
CALIB_HEADER = "calib/1"
DET_HEADER = "det/1"
LEDGER_HEADER = "ledger/1"
BOUNDS_HEADER = "bounds/1"
REPORT_HEADER = "report/1"


def _fmt(x) -> str:
    return repr(float(x))


def _fmt_list(values) -> str:
    return "[" + ",".join(_fmt(v) for v in values) + "]"


def _parse_list(text: str, path, line) -> Tuple[float, ...]:
    if not (text.startswith("[") and text.endswith("]")):
        raise MalformedRecord(f"expected a [..] list, got {text!r}", path, line)
    body = text[1:-1]
    if not body:
        return ()
    try:
        return tuple(float(v) for v in body.split(","))
    except ValueError:
        raise MalformedRecord(f"bad numeric list {text!r}", path, line)


def _parse_kv(parts: Sequence[str], path, line) -> Dict[str, str]:
    out = {}
    for part in parts:
        if "=" not in part:
            raise MalformedRecord(f"expected key=value, got {part!r}", path, line)
        key, value = part.split("=", 1)
        out[key] = value
    return out


def _need(kv: Dict[str, str], key: str, path, line) -> str:
    if key not in kv:
        raise MalformedRecord(f"record missing field {key!r}", path, line)
    return kv[key]


def _check_header(lines: List[str], expected: str, path) -> None:
    if not lines or lines[0] != expected:
        raise FormatError(f"expected header {expected!r}", path, 1)


def _token(value: str, what: str) -> str:
    if any(c.isspace() for c in value):
        raise ValueError(f"{what} must not contain whitespace: {value!r}")
    return value


def _read_lines(path) -> List[str]:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read().splitlines()


def _write_text(path, lines: List[str]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


# -- correspondences ---------------------------------------------------------

def save_correspondences(cset: CorrespondenceSet, path) -> None:
    lines = [CORR_HEADER,
             f"meta recording={_token(cset.recording, 'recording')} "
             f"devices={_token(cset.devices, 'devices')}"]
    for r in cset.records:
        lines.append(
            f"lidar={_fmt_list(r.lidar)} pixel={_fmt_list(r.pixel)} "
            f"t_lidar={_fmt(r.lidar_timestamp)} t_camera={_fmt(r.camera_timestamp)} "
            f"frame_id={_token(r.camera_frame_id, 'frame_id')}")
    _write_text(path, lines)


def load_correspondences(path) -> CorrespondenceSet:
    lines = _read_lines(path)
    _check_header(lines, CORR_HEADER, path)
    recording = devices = ""
    records = []
    for n, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        if parts[0] == "meta":
            kv = _parse_kv(parts[1:], path, n)
            recording = kv.get("recording", "")
            devices = kv.get("devices", "")
            continue
        kv = _parse_kv(parts, path, n)
        lidar = _parse_list(_need(kv, "lidar", path, n), path, n)
        pixel = _parse_list(_need(kv, "pixel", path, n), path, n)
        if len(lidar) != 3 or len(pixel) != 2:
            raise MalformedRecord("lidar must have 3 values and pixel 2", path, n)
        try:
            t_lidar = float(_need(kv, "t_lidar", path, n))
            t_camera = float(_need(kv, "t_camera", path, n))
        except ValueError:
            raise MalformedRecord("bad timestamp", path, n)
        records.append(Correspondence(lidar=lidar, pixel=pixel,
                                      lidar_timestamp=t_lidar,
                                      camera_timestamp=t_camera,
                                      camera_frame_id=_need(kv, "frame_id", path, n)))
    return CorrespondenceSet(records=tuple(records), recording=recording,
                             devices=devices)


# -- detections --------------------------------------------------------------

def save_detections(detections: Sequence[VertexDetection], path) -> None:
    lines = [DET_HEADER]
    for d in detections:
        lines.append(f"t={_fmt(d.frame_timestamp)} vertex={_fmt_list(d.vertex)} "
                     f"ring_span={d.ring_span} roi_points={d.roi_point_count}")
    _write_text(path, lines)


def load_detections(path) -> List[VertexDetection]:
    lines = _read_lines(path)
    _check_header(lines, DET_HEADER, path)
    out = []
    for n, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        kv = _parse_kv(line.split(), path, n)
        vertex = _parse_list(_need(kv, "vertex", path, n), path, n)
        if len(vertex) != 3:
            raise MalformedRecord("vertex must have 3 values", path, n)
        try:
            out.append(VertexDetection(
                frame_timestamp=float(_need(kv, "t", path, n)),
                vertex=vertex,
                ring_span=int(_need(kv, "ring_span", path, n)),
                roi_point_count=int(_need(kv, "roi_points", path, n))))
        except ValueError:
            raise MalformedRecord("bad numeric field", path, n)
    return out


# -- point-cloud frames ------------------------------------------------------

CLOUD_COLUMNS = ("x", "y", "z", "intensity", "ring", "t")


def save_cloud(frame: LidarFrame, path) -> None:
    has_ring = frame.ring is not None
    cols = CLOUD_COLUMNS if has_ring else ("x", "y", "z", "intensity", "t")
    lines = [",".join(cols)]
    for idx in range(len(frame)):
        x, y, z = frame.positions[idx]
        row = [_fmt(x), _fmt(y), _fmt(z), _fmt(frame.intensity[idx])]
        if has_ring:
            row.append(str(int(frame.ring[idx])))
        row.append(_fmt(frame.timestamp))
        lines.append(",".join(row))
    _write_text(path, lines)


def parse_cloud_file(path) -> LidarFrame:
    """Parse one per-frame cloud file; ring column may be absent (None)."""
    lines = _read_lines(path)
    if not lines:
        raise FormatError("empty cloud file", path, 1)
    header = [c.strip() for c in lines[0].split(",")]
    for col in ("x", "y", "z", "t"):
        if col not in header:
            raise MissingColumn(f"cloud file missing column {col!r}", path, 1)
    idx = {c: i for i, c in enumerate(header)}
    has_ring = "ring" in idx
    has_intensity = "intensity" in idx
    positions, intensity, ring = [], [], []
    timestamp = 0.0
    for n, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != len(header):
            raise MalformedRecord(
                f"expected {len(header)} cells, got {len(cells)}", path, n)
        try:
            positions.append((float(cells[idx["x"]]), float(cells[idx["y"]]),
                              float(cells[idx["z"]])))
            intensity.append(float(cells[idx["intensity"]]) if has_intensity else 0.0)
            if has_ring:
                ring.append(int(cells[idx["ring"]]))
            t = float(cells[idx["t"]])
        except ValueError:
            raise MalformedRecord("bad numeric cell", path, n)
        if len(positions) == 1:
            timestamp = t
    return LidarFrame(timestamp,
                      np.array(positions, dtype=float).reshape(-1, 3),
                      np.array(intensity, dtype=float),
                      np.array(ring, dtype=int) if has_ring else None)


# -- calibration results -----------------------------------------------------

def save_calibration(result: CalibrationResult, path) -> None:
    names = param_names(result.model)
    lines = [CALIB_HEADER,
             f"model={result.model}",
             f"n_correspondences={result.n_correspondences}",
             f"train_error_px={_fmt(result.train_error_px)}",
             f"seed={result.seed}",
             f"slots={result.slots}",
             f"population={result.population}",
             f"generations={result.generations}",
             f"bound_scale={_fmt(result.bound_scale)}",
             f"max_iterations={result.max_iterations}",
             f"convergence_epsilon={_fmt(result.convergence_epsilon)}"]
    for name, value in zip(names, result.params):
        lines.append(f"param {name}={_fmt(value)}")
    lines.append(f"trace={_fmt_list(result.trace)}")
    _write_text(path, lines)


def load_calibration(path) -> CalibrationResult:
    lines = _read_lines(path)
    _check_header(lines, CALIB_HEADER, path)
    kv: Dict[str, str] = {}
    params: Dict[str, float] = {}
    for n, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        if line.startswith("param "):
            pkv = _parse_kv(line.split()[1:], path, n)
            for name, value in pkv.items():
                try:
                    params[name] = float(value)
                except ValueError:
                    raise MalformedRecord(f"bad parameter value {value!r}", path, n)
            continue
        kv.update(_parse_kv(line.split(), path, n))
    try:
        model = _need(kv, "model", path, None)
        names = param_names(model)
        missing = [nm for nm in names if nm not in params]
        if missing:
            raise FormatError(f"missing parameters {missing}", path)
        return CalibrationResult(
            model=model,
            params=tuple(params[nm] for nm in names),
            train_error_px=float(_need(kv, "train_error_px", path, None)),
            n_correspondences=int(_need(kv, "n_correspondences", path, None)),
            seed=int(_need(kv, "seed", path, None)),
            slots=int(_need(kv, "slots", path, None)),
            population=int(_need(kv, "population", path, None)),
            generations=int(_need(kv, "generations", path, None)),
            bound_scale=float(_need(kv, "bound_scale", path, None)),
            max_iterations=int(_need(kv, "max_iterations", path, None)),
            convergence_epsilon=float(_need(kv, "convergence_epsilon", path, None)),
            trace=_parse_list(_need(kv, "trace", path, None), path, None))
    except ValueError as exc:
        raise FormatError(f"bad calibration field: {exc}", path)


# -- parameter bounds --------------------------------------------------------

def save_bounds(bounds: ParamBounds, model: str, path) -> None:
    names = param_names(model)
    lines = [BOUNDS_HEADER, f"model={model}"]
    for name, lo, hi in zip(names, bounds.lower, bounds.upper):
        lines.append(f"{name}={_fmt(lo)},{_fmt(hi)}")
    _write_text(path, lines)


def load_bounds(path) -> Tuple[str, ParamBounds]:
    lines = _read_lines(path)
    _check_header(lines, BOUNDS_HEADER, path)
    kv: Dict[str, str] = {}
    for n, line in enumerate(lines[1:], start=2):
        if line.strip():
            kv.update(_parse_kv(line.split(), path, n))
    model = _need(kv, "model", path, None)
    lower, upper = [], []
    for name in param_names(model):
        raw = _need(kv, name, path, None)
        try:
            lo, hi = (float(v) for v in raw.split(","))
        except ValueError:
            raise MalformedRecord(f"bad bound pair {raw!r} for {name}", path, None)
        lower.append(lo)
        upper.append(hi)
    return model, ParamBounds(np.array(lower), np.array(upper))


# -- camera frame manifest ---------------------------------------------------

def save_manifest(frames: Sequence[CameraFrameRef], path) -> None:
    lines = ["id,timestamp,path"]
    for f in frames:
        lines.append(f"{f.id},{_fmt(f.timestamp)},{f.image_path}")
    _write_text(path, lines)


def load_manifest(path) -> List[CameraFrameRef]:
    lines = _read_lines(path)
    if not lines or lines[0] != "id,timestamp,path":
        raise FormatError("expected header 'id,timestamp,path'", path, 1)
    out = []
    prev_t = None
    for n, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",", 2)
        if len(cells) != 3:
            raise MalformedRecord("expected id,timestamp,path", path, n)
        try:
            t = float(cells[1])
        except ValueError:
            raise MalformedRecord(f"bad timestamp {cells[1]!r}", path, n)
        if prev_t is not None and t <= prev_t:
            raise FormatError("manifest timestamps must be strictly increasing",
                              path, n)
        prev_t = t
        out.append(CameraFrameRef(id=cells[0], timestamp=t, image_path=cells[2]))
    return out


# -- synthetic ground-truth ledger -------------------------------------------

def save_ledger(entries: Sequence[LedgerEntry], path) -> None:
    lines = [LEDGER_HEADER]
    for e in entries:
        lines.append(f"t={_fmt(e.timestamp)} vertex={_fmt_list(e.vertex)} "
                     f"pixel={_fmt_list(e.pixel)}")
    _write_text(path, lines)


def load_ledger(path) -> List[LedgerEntry]:
    lines = _read_lines(path)
    _check_header(lines, LEDGER_HEADER, path)
    out = []
    for n, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        kv = _parse_kv(line.split(), path, n)
        vertex = _parse_list(_need(kv, "vertex", path, n), path, n)
        pixel = _parse_list(_need(kv, "pixel", path, n), path, n)
        if len(vertex) != 3 or len(pixel) != 2:
            raise MalformedRecord("vertex needs 3 values, pixel 2", path, n)
        try:
            t = float(_need(kv, "t", path, n))
        except ValueError:
            raise MalformedRecord("bad timestamp", path, n)
        out.append(LedgerEntry(timestamp=t, vertex=vertex, pixel=pixel))
    return out


# -- projection dump ---------------------------------------------------------

def save_projection(rows, path) -> None:
    """Rows of (x, y, z, i, j, visible).

    Points behind the camera carry i = j = None and empty cells; points
    projecting outside the sensor keep their pixel coordinates with
    visible=false.
    """
    lines = ["x,y,z,i,j,visible"]
    for x, y, z, i, j, visible in rows:
        ij = f"{_fmt(i)},{_fmt(j)}" if i is not None and j is not None else ","
        lines.append(f"{_fmt(x)},{_fmt(y)},{_fmt(z)},{ij},"
                     f"{'true' if visible else 'false'}")
    _write_text(path, lines)


# -- validation report -------------------------------------------------------

def save_report(mean_error: float, count: int, bins, path) -> None:
    lines = [REPORT_HEADER,
             f"mean_error_px={_fmt(mean_error)}",
             f"count={count}",
             f"bins={len(bins)}"]
    for b in bins:
        mean = "none" if b.mean_error is None else _fmt(b.mean_error)
        lines.append(f"bin lower={_fmt(b.lower)} upper={_fmt(b.upper)} "
                     f"count={b.count} mean={mean}")
    _write_text(path, lines)
