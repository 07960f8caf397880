"""Start the annotation service over a freshly generated synthetic recording.

Usage: python3 serve_fixture.py OUT_DIR PORT
Used by the frontend integration test; prints READY once listening.
"""

import os
import sys
import threading

import uvicorn

from lidarcam.cli import write_recording
from lidarcam.service import SessionState, create_app
from lidarcam.synth import generate, make_scene


def main() -> None:
    out_dir, port = sys.argv[1], int(sys.argv[2])
    scene = make_scene(n_frames=55, seed=9, far_fraction=0.0,
                       offgrid_fraction=0.0)
    rec = generate(scene, seed=9)
    write_recording(rec, scene, out_dir, seed=9)
    session = SessionState.build(
        frames=rec.frames, roi=scene.roi, camera_frames=rec.camera_frames,
        images_root=os.path.join(out_dir, "images"),
        corr_path=os.path.join(out_dir, "session_corr.txt"))
    app = create_app(session)
    config = uvicorn.Config(app, host="127.0.0.1", port=port, log_level="warning")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    while not server.started:
        pass
    print("READY", flush=True)
    thread.join()


if __name__ == "__main__":
    main()
