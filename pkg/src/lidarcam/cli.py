"""Command-line surface of the calibration toolbox."""

from __future__ import annotations

import os
import sys
from typing import Tuple

import click
import yaml

from . import formats, synth
from .correspond import DEFAULT_MAX_SKEW_S
from .errors import LidarcamError
from .geometry import error_by_angle, project_points, reprojection_error
from .solver import (CalibrationResult, GaConfig, calibration_to_params,
                     default_bounds, solve)
from .vertex import RoiBox, derive_rings, detect_sequence, drop_reason

DEFAULT_RING_COUNT = 16
DEFAULT_ELEVATION_RANGE = (-15.0, 15.0)


def _parse_roi(text: str) -> RoiBox:
    parts = text.split(",")
    if len(parts) != 6:
        raise click.BadParameter("ROI must be x0,x1,y0,y1,z0,z1")
    return RoiBox.from_flat(float(p) for p in parts)


def _parse_angle_deg(text: str) -> float:
    """Angles on the CLI carry an explicit 'deg' suffix."""
    text = text.strip()
    if not text.endswith("deg"):
        raise click.BadParameter(f"angle {text!r} must end in 'deg'")
    return float(text[:-3])


def _parse_elevation_range(text: str) -> Tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise click.BadParameter("elevation range must be 'lodeg,hideg'")
    return (_parse_angle_deg(parts[0]), _parse_angle_deg(parts[1]))


def _load_frames(clouds_dir: str, ring_count: int, elevation_range):
    names = sorted(os.listdir(clouds_dir))
    frames = []
    for name in names:
        path = os.path.join(clouds_dir, name)
        if not os.path.isfile(path):
            continue
        frame = formats.parse_cloud_file(path)
        if frame.ring is None:
            frame = derive_rings(frame, ring_count, elevation_range)
        frames.append((name, frame))
    return frames


@click.group()
def main():
    """Interactive LiDAR-to-camera calibration toolbox."""


@main.command()
@click.option("--clouds", "clouds_dir", required=True,
              type=click.Path(exists=True, file_okay=False))
@click.option("--roi", "roi_text", required=True,
              help="x0,x1,y0,y1,z0,z1 in meters, LiDAR frame")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--ring-count", default=DEFAULT_RING_COUNT, show_default=True)
@click.option("--elevation-range", "elev_text", default="-15deg,15deg",
              show_default=True, help="for clouds without a ring column")
@click.option("--verbose", is_flag=True)
def detect(clouds_dir, roi_text, out_path, ring_count, elev_text, verbose):
    """Detect the board vertex in every cloud file of a directory."""
    roi = _parse_roi(roi_text)
    elevation_range = _parse_elevation_range(elev_text)
    try:
        named_frames = _load_frames(clouds_dir, ring_count, elevation_range)
    except LidarcamError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    detections = []
    for name, frame in named_frames:
        dets = detect_sequence([frame], roi)
        if dets:
            detections.extend(dets)
        elif verbose:
            click.echo(f"drop {name}: {drop_reason(frame, roi)}")
    formats.save_detections(detections, out_path)
    click.echo(f"{len(detections)} detections from {len(named_frames)} frames "
               f"-> {out_path}")


def _config_from_options(seed, slots, population, generations, bound_scale,
                         max_iterations, epsilon) -> GaConfig:
    return GaConfig(seed=seed, slots=slots, population=population,
                    generations=generations, bound_scale=bound_scale,
                    max_iterations=max_iterations,
                    convergence_epsilon=epsilon)


@main.command("solve")
@click.option("--corr", "corr_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--model", required=True,
              type=click.Choice(["pinhole", "fisheye"]))
@click.option("--bounds", "bounds_path", default=None,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--slots", default=5, show_default=True)
@click.option("--population", default=800, show_default=True)
@click.option("--generations", default=30, show_default=True)
@click.option("--bound-scale", default=0.5, show_default=True)
@click.option("--max-iterations", default=20, show_default=True)
@click.option("--epsilon", default=1e-3, show_default=True)
@click.option("--parallel", is_flag=True, help="run GA slots on a thread pool")
def cmd_solve(corr_path, model, bounds_path, seed, out_path, slots, population,
              generations, bound_scale, max_iterations, epsilon, parallel):
    """Estimate calibration parameters from a correspondence file."""
    cfg = _config_from_options(seed, slots, population, generations,
                               bound_scale, max_iterations, epsilon)
    try:
        cset = formats.load_correspondences(corr_path)
        if bounds_path is not None:
            bounds_model, bounds = formats.load_bounds(bounds_path)
            if bounds_model != model:
                raise LidarcamError(
                    f"bounds file is for {bounds_model}, solve requested {model}")
        else:
            bounds = default_bounds(model)
        report = solve(cset, model, initial_bounds=bounds, cfg=cfg,
                       parallel=parallel)
    except LidarcamError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    result = CalibrationResult.from_report(report, cfg, len(cset))
    formats.save_calibration(result, out_path)
    click.echo(f"train error {report.best_error_px:.3f} px over {len(cset)} "
               f"pairs ({len(report.iterations)} iterations) -> {out_path}")


@main.command()
@click.option("--corr", "corr_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--calib", "calib_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--bins", default=8, show_default=True, type=int)
@click.option("--out", "out_path", required=True, type=click.Path())
def validate(corr_path, calib_path, bins, out_path):
    """Report mean and per-angle-bin reprojection error on a held-out set."""
    try:
        cset = formats.load_correspondences(corr_path)
        result = formats.load_calibration(calib_path)
        cal = result.calibration
        points, pixels = cset.points(), cset.pixels()
        mean = reprojection_error(points, pixels, cal)
        angle_bins = error_by_angle(points, pixels, cal, bins)
    except LidarcamError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    formats.save_report(mean, len(cset), angle_bins, out_path)
    click.echo(f"mean error {mean:.3f} px over {len(cset)} pairs -> {out_path}")


@main.command()
@click.option("--cloud", "cloud_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--calib", "calib_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--sensor", default="1280x960", show_default=True,
              help="sensor size WxH for visibility clipping")
def project(cloud_path, calib_path, out_path, sensor):
    """Project every point of one cloud file into the image plane."""
    try:
        width, height = (int(v) for v in sensor.lower().split("x"))
    except ValueError:
        raise click.BadParameter("sensor must look like 1280x960")
    try:
        frame = formats.parse_cloud_file(cloud_path)
        cal = formats.load_calibration(calib_path).calibration
    except LidarcamError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    rows = []
    if len(frame):
        pixels, in_front = project_points(frame.positions, cal)
        for p, px, front in zip(frame.positions, pixels, in_front):
            if not front:
                rows.append((p[0], p[1], p[2], None, None, False))
            else:
                visible = bool(0 <= px[0] < width and 0 <= px[1] < height)
                rows.append((p[0], p[1], p[2], px[0], px[1], visible))
    formats.save_projection(rows, out_path)
    click.echo(f"{len(rows)} points -> {out_path}")


@main.command("synth")
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--seed", default=0, show_default=True, type=int)
def synth_cmd(config_path, out_dir, seed):
    """Generate a synthetic recording (clouds, images, manifest, ledger)."""
    with open(config_path, "r", encoding="utf-8") as fh:
        cfg = yaml.safe_load(fh) or {}
    scene = synth.make_scene(
        model=cfg.get("model", "pinhole"),
        n_frames=int(cfg.get("n_frames", 200)),
        seed=int(cfg.get("scene_seed", seed)),
        pixel_sigma=float(cfg.get("pixel_sigma", 0.0)),
        point_sigma=float(cfg.get("point_sigma", 0.0)),
        clutter=bool(cfg.get("clutter", False)),
        far_fraction=float(cfg.get("far_fraction", 0.15)),
        offgrid_fraction=float(cfg.get("offgrid_fraction", 0.15)))
    rec = synth.generate(scene, seed=seed)
    write_recording(rec, scene, out_dir, seed=seed)
    click.echo(f"{len(rec.frames)} frames, {len(rec.ledger)} ledger entries "
               f"-> {out_dir}")


def write_recording(rec, scene, out_dir, seed=0):
    """Write a synthetic recording in the layouts the toolbox reads back."""
    from PIL import Image

    clouds_dir = os.path.join(out_dir, "clouds")
    images_dir = os.path.join(out_dir, "images")
    os.makedirs(clouds_dir, exist_ok=True)
    os.makedirs(images_dir, exist_ok=True)
    for n, frame in enumerate(rec.frames):
        formats.save_cloud(frame, os.path.join(clouds_dir, f"frame{n:06d}.csv"))
    width, height = scene.image_size
    placeholder = Image.new("L", (width, height), color=96)
    for ref in rec.camera_frames:
        placeholder.save(os.path.join(out_dir, ref.image_path))
    formats.save_manifest(rec.camera_frames, os.path.join(out_dir, "manifest.csv"))
    formats.save_ledger(rec.ledger, os.path.join(out_dir, "ledger.txt"))
    if rec.ledger:
        cset = synth.make_correspondences(rec, sigma=scene.noise.pixel_sigma,
                                          seed=seed)
        formats.save_correspondences(cset, os.path.join(out_dir, "corr.txt"))
    truth = CalibrationResult(
        model=scene.ground_truth.model,
        params=tuple(float(v) for v in
                     calibration_to_params(scene.ground_truth)),
        train_error_px=0.0, n_correspondences=0, seed=seed, slots=1,
        population=1, generations=1, bound_scale=0.5, max_iterations=1,
        convergence_epsilon=1e-3, trace=())
    formats.save_calibration(truth, os.path.join(out_dir, "truth_calib.txt"))
    with open(os.path.join(out_dir, "roi.txt"), "w", encoding="utf-8") as fh:
        fh.write(",".join(repr(v) for v in scene.roi.to_flat()) + "\n")


@main.command()
@click.option("--clouds", "clouds_dir", required=True,
              type=click.Path(exists=True, file_okay=False))
@click.option("--images", "images_dir", required=True,
              type=click.Path(exists=True, file_okay=False))
@click.option("--manifest", "manifest_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--roi", "roi_text", required=True)
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--out", "out_path", required=True, type=click.Path(),
              help="correspondence checkpoint file")
@click.option("--ring-count", default=DEFAULT_RING_COUNT, show_default=True)
@click.option("--elevation-range", "elev_text", default="-15deg,15deg",
              show_default=True)
@click.option("--max-skew", default=DEFAULT_MAX_SKEW_S, show_default=True)
@click.option("--ui", "ui_dir", default=None,
              type=click.Path(exists=True, file_okay=False),
              help="static directory with the annotation frontend")
def serve(clouds_dir, images_dir, manifest_path, roi_text, port, out_path,
          ring_count, elev_text, max_skew, ui_dir):
    """Run the annotation HTTP service."""
    import uvicorn

    from .service import SessionState, create_app

    roi = _parse_roi(roi_text)
    elevation_range = _parse_elevation_range(elev_text)
    named_frames = _load_frames(clouds_dir, ring_count, elevation_range)
    session = SessionState.build(
        frames=[f for _, f in named_frames],
        roi=roi,
        camera_frames=formats.load_manifest(manifest_path),
        images_root=images_dir,
        corr_path=out_path,
        max_skew=max_skew)
    app = create_app(session, ui_dir=ui_dir)
    uvicorn.run(app, host="127.0.0.1", port=port)


if __name__ == "__main__":
    main()
