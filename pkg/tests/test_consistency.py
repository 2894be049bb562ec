import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from crossview.calibration import ThresholdMap
from crossview.consistency import (
    ContactPoint,
    ContactSet,
    consistency_check,
    detect_contacts,
    format_contacts,
    parse_contacts,
    resolve_threshold,
)
from crossview.errors import DegeneratePointError, ParseError
from crossview.geometry import Homography, Point2
from crossview.grid import PatchGrid
from crossview.simulator import SceneConfig, random_taps, simulate
from crossview.streams import Detection, DetectionStream, parse_stream

I = Homography.identity()
coord = st.floats(-500, 500, allow_nan=False)
points = st.builds(Point2, coord, coord)


class TestCheck:
    def test_zero_distance(self):
        assert consistency_check(Point2(10, 10), Point2(10, 10), I, 5) == Point2(10, 10)

    def test_far(self):
        assert consistency_check(Point2(0, 0), Point2(3, 4), I, 5) is None

    def test_boundary_is_rejected(self):
        assert consistency_check(Point2(0, 0), Point2(3, 2), I, 5) is None

    def test_uses_homography(self):
        assert consistency_check(Point2(3, 4), Point2(1, 1), Homography.translation(2, 3), 0.5) == Point2(3, 4)

    def test_euclidean_metric(self):
        assert consistency_check(Point2(0, 0), Point2(3, 2), I, 5, metric="euclidean") == Point2(0, 0)

    def test_degenerate_propagates(self):
        h = Homography([[1, 0, 0], [0, 1, 0], [0.01, 0, 1]])
        with pytest.raises(DegeneratePointError):
            consistency_check(Point2(0, 0), Point2(-100, 0), h, 5)

    def test_rejects_bad_d(self):
        with pytest.raises(ValueError):
            consistency_check(Point2(0, 0), Point2(0, 0), I, 0)

    @given(points, points, st.floats(0.01, 2000))
    def test_symmetric_under_identity(self, a, b, d):
        assert (consistency_check(a, b, I, d) is None) == (consistency_check(b, a, I, d) is None)

    @given(points, points, st.floats(0.01, 1000), st.floats(0, 1000))
    def test_monotone_in_d(self, a, b, d, extra):
        if consistency_check(a, b, I, d) is not None:
            assert consistency_check(a, b, I, d + extra) is not None


class TestResolve:
    grid = PatchGrid(Point2(0, 0), 10, 2, 2)
    tmap = ThresholdMap(grid, [[1, 2], [3, 4]], np.ones((2, 2), bool))

    def test_global(self):
        assert resolve_threshold(4.0, Point2(-1e6, 3)) == 4

    def test_map_patch(self):
        assert resolve_threshold(self.tmap, Point2(2, 3)) == 1
        assert resolve_threshold(self.tmap, Point2(15, 3)) == 2
        assert resolve_threshold(self.tmap, Point2(15, 13)) == 4

    def test_clamped(self):
        # explicit clamp: col = min(max(floor(x / 10), 0), 1), row likewise
        for x, y in [(30, 5), (30, 15), (-7, 15), (5, -40), (29.9, 99)]:
            col = min(max(math.floor(x / 10), 0), 1)
            row = min(max(math.floor(y / 10), 0), 1)
            assert resolve_threshold(self.tmap, Point2(x, y)) == self.tmap.values[row, col]


def stream(*records):
    return parse_stream("".join(f"{r}\n" for r in records))


class TestDetect:
    def test_single_frame(self):
        s = stream("4,1,w,10,10", "4,2,w,10,10")
        q = detect_contacts(s, s, I, 5)
        assert list(q) == [4]
        assert q[4] == (ContactPoint(4, Point2(10, 10), ("w", "w")),)

    def test_missing_camera(self):
        s = stream("4,1,w,10,10", "5,1,w,10,10", "5,2,w,10,11")
        assert list(detect_contacts(s, s, I, 5)) == [5]

    def test_separate_streams(self):
        s1 = stream("1,1,a,0,0")
        s2 = stream("1,2,b,1,1")
        assert list(detect_contacts(s1, s2, I, 5)) == [1]
        # camera-2 detections are only read from the second stream
        assert len(detect_contacts(s1, s1, I, 5)) == 0

    def test_first_partner_labels(self):
        s = stream("1,1,w,0,0", "1,2,x,1,0", "1,2,y,0,0")
        (cp,) = detect_contacts(s, s, I, 5)[1]
        assert cp.source_labels == ("w", "x")

    def test_same_label_mode(self):
        s = stream("1,1,w,0,0", "1,2,x,0,0")
        assert len(detect_contacts(s, s, I, 5)) == 1
        assert len(detect_contacts(s, s, I, 5, same_label=True)) == 0

    def test_threshold_map(self):
        grid = PatchGrid(Point2(0, 0), 10, 2, 1)
        tmap = ThresholdMap(grid, [[1, 8]], [[True, True]])
        s = stream("1,1,a,5,5", "1,2,a,7,5", "2,1,a,15,5", "2,2,a,17,5")
        assert list(detect_contacts(s, s, I, tmap)) == [2]

    def test_degenerate_pairs_skipped(self):
        h = Homography([[1, 0, 0], [0, 1, 0], [0.01, 0, 1]])
        s = stream("1,1,a,0,0", "1,2,a,-100,0", "1,2,b,0,0")
        q = detect_contacts(s, s, h, 5)
        assert list(q) == [1] and q.skipped == 1

    def test_infinite_d_keeps_every_camera1_point(self, rng):
        dets = []
        for f in range(20):
            for i in range(rng.integers(0, 4)):
                dets.append(Detection(f, 1, f"a{i}", Point2(*rng.uniform(0, 100, 2))))
            for i in range(rng.integers(0, 4)):
                dets.append(Detection(f, 2, f"b{i}", Point2(*rng.uniform(0, 100, 2))))
        s = DetectionStream.from_detections(dets)
        q = detect_contacts(s, s, I, math.inf)
        for pair in s:
            expected = len({d.point for d in pair.cam1}) if pair.cam1 and pair.cam2 else 0
            assert len(q.get(pair.frame, ())) == expected

    def test_tiny_d_on_noise_is_empty(self, rig):
        cam1, cam2, h = rig
        traj = random_taps(np.random.default_rng(3), 10, 10, 5, 0.1)
        s1, s2, _ = simulate(SceneConfig(cam1, cam2, (traj,), noise_sigma=1.0, seed=4))
        assert len(detect_contacts(s1, s2, h, 1e-9)) == 0

    def test_recovers_noise_free_contact_frames(self, rig):
        cam1, cam2, h = rig
        traj = random_taps(np.random.default_rng(5), 20, 12, 10, 0.1)
        s1, s2, truth = simulate(SceneConfig(cam1, cam2, (traj,)))
        q = detect_contacts(s1, s2, h, 1.0)
        assert list(q) == truth.contact_frames()

    def test_worker_count_does_not_change_output(self, rig):
        cam1, cam2, h = rig
        traj = random_taps(np.random.default_rng(6), 30, 10, 8, 0.1)
        s1, s2, _ = simulate(SceneConfig(cam1, cam2, (traj,), noise_sigma=1.5, seed=9))
        ref = detect_contacts(s1, s2, h, 4.0)
        for workers in (2, 3, 8):
            assert detect_contacts(s1, s2, h, 4.0, workers=workers) == ref

    def test_rejects_bad_threshold(self):
        with pytest.raises(ValueError):
            detect_contacts(DetectionStream(), DetectionStream(), I, -1)


class TestContactSet:
    def test_no_empty_entries_and_order(self):
        q = ContactSet({5: [], 2: [ContactPoint(2, Point2(3, 1), ("a", "b")), ContactPoint(2, Point2(1, 9), ("a", "b"))]})
        assert list(q) == [2]
        assert [cp.point for cp in q[2]] == [Point2(1, 9), Point2(3, 1)]

    def test_union(self):
        a = ContactSet.from_points([ContactPoint(1, Point2(0, 0), ("a", "b"))])
        b = ContactSet.from_points([ContactPoint(2, Point2(0, 0), ("a", "b"))])
        assert list(a.union(b)) == [1, 2]

    def test_file_round_trip(self, rng):
        pts = [
            ContactPoint(int(f), Point2(*rng.uniform(-100, 2000, 2)), (f"l{f % 3}", "m"))
            for f in rng.integers(0, 500, 200)
        ]
        q = ContactSet.from_points(pts)
        text = format_contacts(q)
        assert parse_contacts(text) == q
        assert format_contacts(parse_contacts(text)) == text

    def test_file_order(self):
        q = ContactSet.from_points(
            [ContactPoint(2, Point2(1, 1), ("a", "b")), ContactPoint(1, Point2(5, 0), ("a", "b")), ContactPoint(1, Point2(4, 9), ("a", "b"))]
        )
        assert format_contacts(q) == "1,4.0,9.0,a,b\n1,5.0,0.0,a,b\n2,1.0,1.0,a,b\n"

    def test_parse_error(self):
        with pytest.raises(ParseError):
            parse_contacts("1,2,3,a\n")
