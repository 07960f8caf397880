import math

import numpy as np
import pytest

from lidarcam.correspond import (CameraFrameRef, Correspondence,
                                 CorrespondenceSet, add_annotation,
                                 match_camera_frame, split)
from lidarcam.errors import (DuplicateAnnotation, SkewExceeded,
                             TooFewCorrespondences)
from lidarcam.vertex import VertexDetection

FRAMES = [CameraFrameRef(id=f"cam{n:03d}", timestamp=n / 30.0,
                         image_path=f"images/cam{n:03d}.png")
          for n in range(91)]


def detection(t, vertex=(0.0, 4.0, 1.0)):
    return VertexDetection(frame_timestamp=t, vertex=vertex, ring_span=4,
                           roi_point_count=20)


def record(t, frame_id="cam001", pixel=(10.0, 20.0)):
    return Correspondence(lidar=(0.0, 4.0, 1.0), pixel=pixel,
                          lidar_timestamp=t, camera_timestamp=t,
                          camera_frame_id=frame_id)


class TestMatchCameraFrame:
    def test_exact_hit(self):
        assert match_camera_frame(1.0, FRAMES).id == "cam030"

    def test_nearest_within_skew(self):
        # 0.049 s after cam000 but 0.0177 s before cam002's neighbor cam001.
        assert match_camera_frame(0.049, FRAMES).id == "cam001"

    def test_no_match_beyond_skew(self):
        assert match_camera_frame(99.0, FRAMES) is None
        assert match_camera_frame(3.06, FRAMES) is None  # 0.06 past the last

    def test_tie_breaks_toward_earlier_frame(self):
        # 1.25 is exactly representable, so both gaps are exactly 0.25.
        frames = [CameraFrameRef("a", 1.0, "a.png"),
                  CameraFrameRef("b", 1.5, "b.png")]
        assert match_camera_frame(1.25, frames, max_skew=0.3).id == "a"

    def test_empty_frame_list(self):
        assert match_camera_frame(1.0, []) is None

    def test_every_grid_time_matches_within_half_period(self):
        rng = np.random.default_rng(20)
        for t in rng.uniform(0.0, 3.0, 200):
            ref = match_camera_frame(float(t), FRAMES)
            assert ref is not None
            assert abs(ref.timestamp - t) <= 1 / 60.0 + 1e-12


class TestAddAnnotation:
    def test_grows_by_one(self):
        cset = CorrespondenceSet()
        out = add_annotation(cset, detection(1.0), FRAMES[30], (100.5, 200.25))
        assert len(cset) == 0 and len(out) == 1
        assert out.records[0].pixel == (100.5, 200.25)
        assert out.records[0].key == (1.0, "cam030")

    def test_duplicate_rejected(self):
        cset = add_annotation(CorrespondenceSet(), detection(1.0), FRAMES[30],
                              (1.0, 2.0))
        with pytest.raises(DuplicateAnnotation):
            add_annotation(cset, detection(1.0), FRAMES[30], (3.0, 4.0))

    def test_skew_rejected(self):
        with pytest.raises(SkewExceeded):
            add_annotation(CorrespondenceSet(), detection(1.0), FRAMES[60],
                           (1.0, 2.0))

    def test_nonfinite_pixel_rejected(self):
        with pytest.raises(ValueError):
            add_annotation(CorrespondenceSet(), detection(1.0), FRAMES[30],
                           (math.nan, 2.0))


class TestCorrespondenceSet:
    def test_points_and_pixels_arrays(self):
        cset = CorrespondenceSet(records=(record(1.0), record(2.0, "cam060")))
        assert cset.points().shape == (2, 3)
        assert cset.pixels().shape == (2, 2)

    def test_without_key_removes(self):
        cset = CorrespondenceSet(records=(record(1.0), record(2.0, "cam060")))
        out = cset.without_key((1.0, "cam001"))
        assert len(out) == 1 and out.records[0].key == (2.0, "cam060")
        with pytest.raises(KeyError):
            out.without_key((1.0, "cam001"))

    def test_construction_rejects_duplicates(self):
        with pytest.raises(DuplicateAnnotation):
            CorrespondenceSet(records=(record(1.0), record(1.0)))


class TestSplit:
    def _set(self, n):
        return CorrespondenceSet(records=tuple(
            record(float(i), f"cam{i:03d}") for i in range(n)))

    def test_sizes(self):
        train, test = split(self._set(10), 0.7, seed=0)
        assert (len(train), len(test)) == (7, 3)
        train, test = split(self._set(9), 0.7, seed=0)
        assert (len(train), len(test)) == (7, 2)  # ceil(6.3)

    def test_disjoint_union(self):
        cset = self._set(25)
        train, test = split(cset, 0.6, seed=3)
        keys = {r.key for r in train.records} | {r.key for r in test.records}
        assert keys == {r.key for r in cset.records}
        assert not ({r.key for r in train.records} & {r.key for r in test.records})

    def test_deterministic_and_seed_sensitive(self):
        cset = self._set(30)
        a1 = split(cset, 0.5, seed=7)
        a2 = split(cset, 0.5, seed=7)
        b = split(cset, 0.5, seed=8)
        assert [r.key for r in a1[0].records] == [r.key for r in a2[0].records]
        assert [r.key for r in a1[0].records] != [r.key for r in b[0].records]

    def test_too_few(self):
        with pytest.raises(TooFewCorrespondences):
            split(self._set(1), 0.5, seed=0)

    def test_bad_fraction(self):
        with pytest.raises(ValueError):
            split(self._set(5), 1.0, seed=0)
