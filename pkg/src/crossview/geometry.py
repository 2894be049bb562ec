"""Projective primitives: points, homographies, pinhole cameras, distances.

Conventions
-----------
Image coordinates are pixels with x to the right and y down. A homography
``H`` maps a source point ``p`` to ``H @ [x, y, 1]`` followed by division by
the third coordinate. Homographies are stored in a canonical form (Frobenius
norm 1, first significant coefficient positive) so that two matrices that
differ only by a nonzero scale compare equal.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    BehindCameraError,
    DegenerateConfigurationError,
    DegeneratePointError,
    InsufficientPairsError,
    ParseError,
    SingularMatrixError,
)

W_EPS = 1e-12
DET_EPS = 1e-12
COLLINEAR_EPS = 1e-9
# coefficients below this magnitude are treated as zero when fixing the sign
SIGN_EPS = 1e-9
ORTHONORMAL_TOL = 1e-9
DEPTH_EPS = 1e-9


@dataclass(frozen=True, slots=True, order=True)
class Point2:
    """Image point in pixels."""

    x: float
    y: float

    def __post_init__(self):
        x, y = float(self.x), float(self.y)
        if not (math.isfinite(x) and math.isfinite(y)):
            raise ValueError(f"non-finite point ({x}, {y})")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    def __iter__(self):
        yield self.x
        yield self.y


@dataclass(frozen=True, slots=True)
class Point3:
    """World point."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        for name in ("x", "y", "z"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError(f"non-finite point ({self.x}, {self.y}, {self.z})")
            object.__setattr__(self, name, v)

    def __iter__(self):
        yield self.x
        yield self.y
        yield self.z


class Metric(str, enum.Enum):
    MANHATTAN = "manhattan"
    EUCLIDEAN = "euclidean"


def manhattan_distance(p: Point2, q: Point2) -> float:
    return abs(p.x - q.x) + abs(p.y - q.y)


def euclidean_distance(p: Point2, q: Point2) -> float:
    return math.hypot(p.x - q.x, p.y - q.y)


def distance(p: Point2, q: Point2, metric: Metric | str = Metric.MANHATTAN) -> float:
    """Distance between two image points under the selected metric."""
    if Metric(metric) is Metric.MANHATTAN:
        return abs(p.x - q.x) + abs(p.y - q.y)
    return math.hypot(p.x - q.x, p.y - q.y)


def _canonicalize(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=float).reshape(3, 3)
    if not np.all(np.isfinite(m)):
        raise SingularMatrixError("homography has non-finite coefficients")
    norm = float(np.linalg.norm(m))
    if norm == 0.0:
        raise SingularMatrixError("zero matrix is not a homography")
    # leaving near-unit norms untouched makes canonicalization idempotent
    if abs(norm - 1.0) > 4 * np.finfo(float).eps:
        m = m / norm
    flat = m.ravel()
    lead = flat[np.flatnonzero(np.abs(flat) > SIGN_EPS)[0]]
    if lead < 0:
        m = -m
    if abs(np.linalg.det(m)) <= DET_EPS:
        raise SingularMatrixError(
            f"homography is singular (|det| = {abs(np.linalg.det(m)):.3e} after normalization)"
        )
    return m + 0.0  # drop negative zeros


class Homography:
    """Invertible 3x3 projective map in canonical form.

    Any nonzero multiple of the same matrix produces an identical instance,
    so ``==`` tests projective equivalence.
    """

    __slots__ = ("_m", "_work", "_pivot")

    def __init__(self, matrix: Sequence[float] | np.ndarray):
        m = _canonicalize(np.array(matrix, dtype=float))
        m.setflags(write=False)
        self._m = m
        # evaluation copy with h33 = 1 where possible: affine maps then apply
        # exactly (identity is the identity bit for bit)
        pivot = m[2, 2] if abs(m[2, 2]) > SIGN_EPS else np.max(np.abs(m))
        work = m / pivot
        work.setflags(write=False)
        self._work = work
        self._pivot = abs(float(pivot))

    @classmethod
    def identity(cls) -> Homography:
        return cls(np.eye(3))

    @classmethod
    def translation(cls, tx: float, ty: float) -> Homography:
        return cls([[1, 0, tx], [0, 1, ty], [0, 0, 1]])

    @property
    def matrix(self) -> np.ndarray:
        """Canonical coefficients as a read-only 3x3 array."""
        return self._m

    @property
    def coefficients(self) -> tuple[float, ...]:
        return tuple(float(v) for v in self._m.ravel())

    def __call__(self, p: Point2) -> Point2:
        return apply_homography(self, p)

    def __matmul__(self, other: Homography) -> Homography:
        return Homography(self._m @ other._m)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Homography):
            return NotImplemented
        return bool(np.array_equal(self._m, other._m))

    def __hash__(self) -> int:
        return hash(self._m.tobytes())

    def __repr__(self) -> str:
        rows = ", ".join("[" + ", ".join(f"{v:.6g}" for v in row) + "]" for row in self._m)
        return f"Homography([{rows}])"

    def allclose(self, other: Homography, atol: float = 1e-6) -> bool:
        return bool(np.max(np.abs(self._m - other._m)) <= atol)


def apply_homography(h: Homography, p: Point2) -> Point2:
    """Map ``p`` through ``h``.

    Raises:
        DegeneratePointError: if ``p`` lands on the line at infinity.
    """
    m = h._work
    w = m[2, 0] * p.x + m[2, 1] * p.y + m[2, 2]
    # tolerance applies to the canonical (unit-norm) coefficients
    if abs(w) * h._pivot <= W_EPS:
        raise DegeneratePointError(f"point ({p.x}, {p.y}) maps to infinity (w = {w:.3e})")
    return Point2(
        float((m[0, 0] * p.x + m[0, 1] * p.y + m[0, 2]) / w),
        float((m[1, 0] * p.x + m[1, 1] * p.y + m[1, 2]) / w),
    )


def apply_homography_array(h: Homography, pts: np.ndarray) -> np.ndarray:
    """Vectorized :func:`apply_homography` for an ``(N, 2)`` array.

    Rows that land on the line at infinity come back as NaN.
    """
    pts = np.asarray(pts, dtype=float).reshape(-1, 2)
    hom = np.column_stack([pts, np.ones(len(pts))]) @ h._work.T
    w = hom[:, 2]
    out = np.full((len(pts), 2), np.nan)
    ok = np.abs(w) * h._pivot > W_EPS
    out[ok] = hom[ok, :2] / w[ok, None]
    return out


def invert_homography(h: Homography) -> Homography:
    try:
        inv = np.linalg.inv(h.matrix)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError("homography is singular") from exc
    return Homography(inv)


def _hartley(pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Similarity taking ``pts`` to zero centroid and mean radius sqrt(2)."""
    centroid = pts.mean(axis=0)
    mean_dist = np.mean(np.linalg.norm(pts - centroid, axis=1))
    if mean_dist <= 0:
        raise DegenerateConfigurationError("all points coincide")
    s = math.sqrt(2) / mean_dist
    t = np.array([[s, 0, -s * centroid[0]], [0, s, -s * centroid[1]], [0, 0, 1]])
    normed = (pts - centroid) * s
    return normed, t


def _min_triangle_area(pts: np.ndarray) -> float:
    best = math.inf
    for a, b, c in combinations(range(len(pts)), 3):
        u = pts[b] - pts[a]
        v = pts[c] - pts[a]
        best = min(best, 0.5 * abs(u[0] * v[1] - u[1] * v[0]))
    return best


def estimate_homography(pairs: Iterable[tuple[Point2, Point2]]) -> Homography:
    """Fit the homography taking each ``src`` to its ``dst`` with normalized DLT.

    Both point sets are Hartley-normalized, the ``2n x 9`` algebraic system is
    solved in the least-squares sense by SVD, and the result is denormalized
    and canonicalized.

    Args:
        pairs: ``(src, dst)`` correspondences, at least four.

    Raises:
        InsufficientPairsError: fewer than four pairs.
        DegenerateConfigurationError: with exactly four pairs, three points on
            either side are collinear or coincident; with more, the
            correspondences do not pin down a unique homography.
    """
    pairs = list(pairs)
    n = len(pairs)
    if n < 4:
        raise InsufficientPairsError(f"need at least 4 correspondences, got {n}")
    src = np.array([[p.x, p.y] for p, _ in pairs], dtype=float)
    dst = np.array([[q.x, q.y] for _, q in pairs], dtype=float)
    src_n, t_src = _hartley(src)
    dst_n, t_dst = _hartley(dst)

    if n == 4:
        for side, pts in (("source", src_n), ("destination", dst_n)):
            if _min_triangle_area(pts) <= COLLINEAR_EPS:
                raise DegenerateConfigurationError(f"three {side} points are collinear or coincident")

    a = np.zeros((2 * n, 9))
    x, y = src_n[:, 0], src_n[:, 1]
    u, v = dst_n[:, 0], dst_n[:, 1]
    a[0::2, 0] = x
    a[0::2, 1] = y
    a[0::2, 2] = 1
    a[0::2, 6] = -u * x
    a[0::2, 7] = -u * y
    a[0::2, 8] = -u
    a[1::2, 3] = x
    a[1::2, 4] = y
    a[1::2, 5] = 1
    a[1::2, 6] = -v * x
    a[1::2, 7] = -v * y
    a[1::2, 8] = -v
    _, sv, vt = np.linalg.svd(a)
    # rank < 8 means a family of solutions: collinear sets, repeated points
    if n > 4 and sv[7] <= COLLINEAR_EPS * sv[0]:
        raise DegenerateConfigurationError("correspondences do not determine a unique homography")
    hn = vt[-1].reshape(3, 3)
    m = np.linalg.inv(t_dst) @ hn @ t_src
    try:
        return Homography(m)
    except SingularMatrixError as exc:
        raise DegenerateConfigurationError(str(exc)) from exc


def transfer_residual(h: Homography, pairs: Iterable[tuple[Point2, Point2]]) -> float:
    """RMS Euclidean transfer error of ``h`` over ``(src, dst)`` pairs."""
    errs = [euclidean_distance(apply_homography(h, p), q) ** 2 for p, q in pairs]
    return math.sqrt(sum(errs) / len(errs))


def read_homography(source: str | Path) -> Homography:
    """Parse a homography file: three lines of three coefficients, row-major."""
    text = Path(source).read_text(encoding="utf-8")
    return parse_homography(text)


def parse_homography(text: str) -> Homography:
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split()
        if len(fields) != 3:
            raise ParseError(f"expected 3 coefficients, got {len(fields)}", lineno)
        try:
            rows.append([float(f) for f in fields])
        except ValueError as exc:
            raise ParseError(f"non-numeric coefficient: {exc}", lineno) from None
    if len(rows) != 3:
        raise ParseError(f"expected 3 rows, got {len(rows)}")
    return Homography(rows)


def format_homography(h: Homography) -> str:
    return "".join(" ".join(repr(float(v)) for v in row) + "\n" for row in h.matrix)


def write_homography(h: Homography, dest: str | Path) -> None:
    Path(dest).write_text(format_homography(h), encoding="utf-8", newline="\n")


class CameraModel:
    """Pinhole camera with world-to-camera pose ``Xc = R @ X + t``."""

    __slots__ = ("fx", "fy", "cx", "cy", "rotation", "translation")

    def __init__(self, fx: float, fy: float, cx: float, cy: float, rotation, translation):
        rotation = np.array(rotation, dtype=float).reshape(3, 3)
        translation = np.array(translation, dtype=float).reshape(3)
        if not (fx > 0 and fy > 0):
            raise ValueError("focal lengths must be positive")
        if np.max(np.abs(rotation @ rotation.T - np.eye(3))) > ORTHONORMAL_TOL:
            raise ValueError("rotation is not orthonormal")
        if np.linalg.det(rotation) < 0:
            raise ValueError("rotation has a reflection (det = -1)")
        if not np.all(np.isfinite(translation)):
            raise ValueError("translation must be finite")
        rotation.setflags(write=False)
        translation.setflags(write=False)
        self.fx, self.fy, self.cx, self.cy = float(fx), float(fy), float(cx), float(cy)
        self.rotation = rotation
        self.translation = translation

    @classmethod
    def look_at(
        cls,
        position: Sequence[float],
        target: Sequence[float],
        fx: float,
        fy: float | None = None,
        cx: float = 0.0,
        cy: float = 0.0,
        up: Sequence[float] = (0.0, 0.0, 1.0),
    ) -> CameraModel:
        """Camera at ``position`` with its optical axis through ``target``.

        Image y points away from ``up`` so the world up direction appears at
        the top of the image.
        """
        position = np.asarray(position, dtype=float)
        forward = np.asarray(target, dtype=float) - position
        forward /= np.linalg.norm(forward)
        right = np.cross(forward, np.asarray(up, dtype=float))
        if np.linalg.norm(right) < 1e-9:
            raise ValueError("up vector is parallel to the viewing direction")
        right /= np.linalg.norm(right)
        down = np.cross(forward, right)
        rotation = np.vstack([right, down, forward])
        return cls(fx, fx if fy is None else fy, cx, cy, rotation, -rotation @ position)

    @property
    def intrinsics(self) -> np.ndarray:
        return np.array([[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]])

    @property
    def center(self) -> np.ndarray:
        """Camera center in world coordinates."""
        return -self.rotation.T @ self.translation

    @property
    def optical_axis(self) -> np.ndarray:
        """Unit viewing direction in world coordinates."""
        return self.rotation[2].copy()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CameraModel):
            return NotImplemented
        return (
            (self.fx, self.fy, self.cx, self.cy) == (other.fx, other.fy, other.cx, other.cy)
            and np.array_equal(self.rotation, other.rotation)
            and np.array_equal(self.translation, other.translation)
        )

    def __repr__(self) -> str:
        return (
            f"CameraModel(fx={self.fx}, fy={self.fy}, cx={self.cx}, cy={self.cy}, "
            f"center={np.round(self.center, 6).tolist()})"
        )


def project_point(cam: CameraModel, x: Point3) -> Point2:
    """Pinhole projection of a world point.

    Raises:
        BehindCameraError: camera-frame depth is not positive.
    """
    xc = cam.rotation @ np.array([x.x, x.y, x.z]) + cam.translation
    if xc[2] <= DEPTH_EPS:
        raise BehindCameraError(f"point {tuple(x)} is behind the camera (depth {xc[2]:.3e})")
    return Point2(float(cam.fx * xc[0] / xc[2] + cam.cx), float(cam.fy * xc[1] / xc[2] + cam.cy))


def project_points(cam: CameraModel, xs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Project an ``(N, 3)`` array; returns ``(uv, in_front)``.

    Rows behind the camera get NaN coordinates and ``in_front = False``.
    """
    xs = np.asarray(xs, dtype=float).reshape(-1, 3)
    xc = xs @ cam.rotation.T + cam.translation
    in_front = xc[:, 2] > DEPTH_EPS
    uv = np.full((len(xs), 2), np.nan)
    z = xc[in_front, 2]
    uv[in_front, 0] = cam.fx * xc[in_front, 0] / z + cam.cx
    uv[in_front, 1] = cam.fy * xc[in_front, 1] / z + cam.cy
    return uv, in_front


def min_mapped_distance(
    points1: Iterable[Point2],
    points2: Iterable[Point2],
    h: Homography,
    metric: Metric | str = Metric.MANHATTAN,
) -> float | None:
    """Smallest distance between a camera-1 point and a mapped camera-2 point.

    Camera-2 points that map to infinity are ignored. Returns None when
    either side is empty.
    """
    mapped = []
    for q in points2:
        try:
            mapped.append(apply_homography(h, q))
        except DegeneratePointError:
            continue
    best = None
    for p in points1:
        for q in mapped:
            dist = distance(p, q, metric)
            if best is None or dist < best:
                best = dist
    return best
