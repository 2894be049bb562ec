import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from crossview.errors import (
    BehindCameraError,
    DegenerateConfigurationError,
    DegeneratePointError,
    InsufficientPairsError,
    ParseError,
    SingularMatrixError,
)
from crossview.geometry import (
    CameraModel,
    Homography,
    Point2,
    Point3,
    apply_homography,
    apply_homography_array,
    distance,
    estimate_homography,
    format_homography,
    invert_homography,
    manhattan_distance,
    parse_homography,
    project_point,
    transfer_residual,
)

coord = st.floats(-1e4, 1e4, allow_nan=False)
points = st.builds(Point2, coord, coord)


def random_homography(rng):
    """Well-conditioned projective map of the unit-ish square."""
    while True:
        m = np.eye(3) + rng.normal(0, 0.2, (3, 3))
        m[2, :2] = rng.normal(0, 0.1, 2)
        if np.linalg.cond(m) < 50:
            return m


def test_point_rejects_non_finite():
    with pytest.raises(ValueError):
        Point2(math.nan, 0)
    with pytest.raises(ValueError):
        Point3(0, math.inf, 0)


class TestApply:
    def test_identity(self):
        assert apply_homography(Homography.identity(), Point2(3.5, -2)) == Point2(3.5, -2)

    def test_translation(self):
        out = apply_homography(Homography.translation(2, 3), Point2(1, 1))
        assert (out.x, out.y) == pytest.approx((3, 4), abs=1e-12)

    def test_projective_row(self):
        h = Homography([[1, 0, 0], [0, 1, 0], [0.001, 0, 1]])
        out = apply_homography(h, Point2(100, 0))
        # w = 0.001 * 100 + 1 = 11/10, so x = 100 / (11/10)
        expected_x = Fraction(100) / (Fraction(1, 1000) * 100 + 1)
        assert out.x == pytest.approx(float(expected_x), abs=1e-12)
        assert out.y == 0

    def test_line_at_infinity(self):
        h = Homography([[1, 0, 0], [0, 1, 0], [0.01, 0, 1]])
        with pytest.raises(DegeneratePointError):
            apply_homography(h, Point2(-100, 5))

    @given(points)
    def test_identity_property(self, p):
        assert apply_homography(Homography.identity(), p) == p

    def test_array_matches_scalar(self, rng):
        h = Homography(random_homography(rng))
        pts = rng.uniform(-1, 1, (50, 2))
        arr = apply_homography_array(h, pts)
        for (x, y), (u, v) in zip(pts, arr):
            q = apply_homography(h, Point2(x, y))
            assert (q.x, q.y) == pytest.approx((u, v), abs=1e-12)


class TestCanonical:
    def test_scale_invariance(self, rng):
        m = random_homography(rng)
        h = Homography(m)
        assert h.allclose(Homography(-3.7 * m), 1e-15) and h.allclose(Homography(1e-5 * m), 1e-15)

    def test_norm_and_sign(self, rng):
        h = Homography(-random_homography(rng))
        assert np.linalg.norm(h.matrix) == pytest.approx(1.0, abs=1e-15)
        assert h.matrix.ravel()[np.flatnonzero(np.abs(h.matrix.ravel()) > 1e-9)[0]] > 0

    def test_idempotent(self, rng):
        for _ in range(100):
            h = Homography(random_homography(rng))
            assert Homography(h.matrix) == h

    def test_singular(self):
        with pytest.raises(SingularMatrixError):
            Homography([[1, 2, 3], [2, 4, 6], [0, 0, 1]])


class TestInvert:
    def test_identity(self):
        assert invert_homography(Homography.identity()).allclose(Homography.identity(), 1e-15)

    def test_translation(self):
        assert invert_homography(Homography.translation(2, 3)).allclose(Homography.translation(-2, -3), 1e-15)

    def test_round_trip(self, rng):
        h = Homography(random_homography(rng))
        hi = invert_homography(h)
        errs = []
        for x, y in rng.uniform(-1, 1, (100, 2)):
            back = apply_homography(hi, apply_homography(h, Point2(x, y)))
            errs.append(max(abs(back.x - x), abs(back.y - y)))
        assert max(errs) < 1e-9


class TestEstimate:
    square = [Point2(0, 0), Point2(1, 0), Point2(1, 1), Point2(0, 1)]

    def test_identity(self):
        h = estimate_homography([(p, p) for p in self.square])
        assert h.allclose(Homography.identity(), 1e-12)

    def test_translation(self):
        h = estimate_homography([(p, Point2(p.x + 2, p.y + 3)) for p in self.square])
        assert h.allclose(Homography.translation(2, 3), 1e-12)

    def test_generate_then_recover(self, rng):
        truth = Homography(random_homography(rng))
        src = [Point2(*p) for p in rng.uniform(-1, 1, (8, 2))]
        h = estimate_homography([(p, apply_homography(truth, p)) for p in src])
        assert h.allclose(truth, 1e-6)

    def test_projective_equivalence(self, rng):
        m = random_homography(rng)
        src = [Point2(*p) for p in rng.uniform(-1, 1, (8, 2))]
        fits = [
            estimate_homography([(p, apply_homography(Homography(k * m), p)) for p in src])
            for k in (1.0, -2.5, 1e3)
        ]
        assert fits[0].allclose(fits[1], 1e-12) and fits[0].allclose(fits[2], 1e-12)

    def test_pixel_scale(self, rng):
        truth = Homography([[1.2, 0.1, 30], [-0.05, 0.9, 12], [2e-4, -1e-4, 1]])
        src = [Point2(*p) for p in rng.uniform(0, 1280, (12, 2))]
        h = estimate_homography([(p, apply_homography(truth, p)) for p in src])
        assert h.allclose(truth, 1e-6)

    def test_too_few(self):
        with pytest.raises(InsufficientPairsError):
            estimate_homography([(p, p) for p in self.square[:3]])

    def test_collinear(self):
        pts = [Point2(0, 0), Point2(1, 1), Point2(2, 2), Point2(0, 1)]
        with pytest.raises(DegenerateConfigurationError):
            estimate_homography([(p, p) for p in pts])

    def test_coincident(self):
        pts = [Point2(0, 0), Point2(0, 0), Point2(1, 0), Point2(0, 1)]
        with pytest.raises(DegenerateConfigurationError):
            estimate_homography([(p, p) for p in pts])

    def test_all_collinear_overdetermined(self):
        pts = [Point2(i, 2 * i) for i in range(6)]
        with pytest.raises(DegenerateConfigurationError):
            estimate_homography([(p, p) for p in pts])

    def test_grid_with_collinear_triples_is_fine(self):
        pts = [Point2(x, y) for x in range(3) for y in range(3)]
        truth = Homography.translation(5, -1)
        h = estimate_homography([(p, apply_homography(truth, p)) for p in pts])
        assert h.allclose(truth, 1e-9)

    def test_residual_grows_with_noise(self, rng):
        truth = Homography([[1.1, 0.05, 40], [0.02, 0.95, -20], [1e-4, 5e-5, 1]])
        means = []
        for sigma in (0.0, 1.0, 2.0):
            res = []
            for _ in range(100):
                src = [Point2(*p) for p in rng.uniform(0, 1000, (10, 2))]
                pairs = []
                for p in src:
                    q = apply_homography(truth, p)
                    pairs.append((p, Point2(q.x + rng.normal(0, sigma) if sigma else q.x,
                                            q.y + rng.normal(0, sigma) if sigma else q.y)))
                res.append(transfer_residual(estimate_homography(pairs), pairs))
            means.append(np.mean(res))
        assert means[0] < 1e-6 < means[1] < means[2]


class TestDistance:
    @pytest.mark.parametrize(
        "p,q,expected",
        [((0, 0), (0, 0), 0), ((0, 0), (3, 4), 7), ((-1, 2), (2, -2), 7)],
    )
    def test_manhattan(self, p, q, expected):
        assert manhattan_distance(Point2(*p), Point2(*q)) == expected

    def test_euclidean(self):
        assert distance(Point2(0, 0), Point2(3, 4), "euclidean") == 5

    @given(points, points, points)
    def test_triangle_inequality(self, a, b, c):
        assert manhattan_distance(a, c) <= manhattan_distance(a, b) + manhattan_distance(b, c) + 1e-9

    @given(points, points)
    def test_symmetric(self, a, b):
        assert manhattan_distance(a, b) == manhattan_distance(b, a)
        assert (manhattan_distance(a, b) == 0) == (a == b)


class TestProject:
    def test_origin_camera(self):
        cam = CameraModel(1, 1, 0, 0, np.eye(3), np.zeros(3))
        assert project_point(cam, Point3(0, 0, 1)) == Point2(0, 0)
        assert project_point(cam, Point3(2, 3, 1)) == Point2(2, 3)

    def test_downward_camera(self):
        # camera 2 units above the origin looking straight down:
        # R = diag(1, -1, -1), t = (0, 0, 2); X = (0.5, 0.25, 0) gives
        # Xc = (0.5, -0.25, 2), so u = 100 * 0.25 + 320, v = 100 * -0.125 + 240
        cam = CameraModel(100, 100, 320, 240, np.diag([1.0, -1.0, -1.0]), [0, 0, 2])
        assert project_point(cam, Point3(0.5, 0.25, 0)) == Point2(345.0, 227.5)

    def test_look_at_agrees_with_pose(self):
        cam = CameraModel.look_at((0, 0, 2), (0, 0, 0), 100, 100, 320, 240, up=(0, 1, 0))
        np.testing.assert_allclose(cam.center, [0, 0, 2], atol=1e-12)
        p = project_point(cam, Point3(0, 0, 0))
        assert (p.x, p.y) == pytest.approx((320, 240))

    def test_behind(self):
        cam = CameraModel(1, 1, 0, 0, np.eye(3), np.zeros(3))
        with pytest.raises(BehindCameraError):
            project_point(cam, Point3(0, 0, -1))

    def test_invalid_rotation(self):
        with pytest.raises(ValueError):
            CameraModel(1, 1, 0, 0, [[1, 0, 0], [0, 1, 0], [0, 0, 1.1]], np.zeros(3))
        with pytest.raises(ValueError):
            CameraModel(0, 1, 0, 0, np.eye(3), np.zeros(3))


class TestHomographyFile:
    def test_round_trip(self, rng):
        for _ in range(50):
            h = Homography(random_homography(rng))
            assert parse_homography(format_homography(h)) == h

    def test_arbitrary_scale(self):
        text = "2 0 4\n0 2 6\n0 0 2\n"
        assert parse_homography(text).allclose(Homography.translation(2, 3), 1e-15)

    def test_bad_rows(self):
        with pytest.raises(ParseError):
            parse_homography("1 0 0\n0 1 0\n")
        with pytest.raises(ParseError) as err:
            parse_homography("1 0 0\n0 x 0\n0 0 1\n")
        assert err.value.line == 2
