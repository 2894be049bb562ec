"""Cross-view contact detection.

An object touching a planar surface projects to the same surface location
from both cameras, so the camera-1 detection and the camera-2 detection
mapped by the plane homography nearly coincide. A camera-1 point is accepted
as a contact when that distance is strictly below the threshold ``d``.
"""

from __future__ import annotations

import logging
from collections.abc import Mapping
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Union

from .calibration import ThresholdMap
from .errors import DegeneratePointError, ParseError
from .geometry import Homography, Metric, Point2, apply_homography, distance
from .streams import DetectionStream, FramePair

logger = logging.getLogger(__name__)

ThresholdSpec = Union[float, ThresholdMap]


def resolve_threshold(thr: ThresholdSpec, at: Point2) -> float:
    """Threshold in effect at ``at``; map lookups clamp to the nearest patch."""
    if isinstance(thr, ThresholdMap):
        return thr.value_at(at)
    return float(thr)


def _validate_threshold(thr: ThresholdSpec) -> None:
    if not isinstance(thr, ThresholdMap) and not thr > 0:
        raise ValueError(f"global threshold must be positive, got {thr}")


def consistency_check(
    p1: Point2,
    p2: Point2,
    h: Homography,
    d: float,
    metric: Metric | str = Metric.MANHATTAN,
) -> Point2 | None:
    """Return ``p1`` if ``h(p2)`` lies strictly closer than ``d``, else None.

    Raises:
        DegeneratePointError: ``p2`` maps to infinity under ``h``.
    """
    if not d > 0:
        raise ValueError(f"threshold must be positive, got {d}")
    if distance(p1, apply_homography(h, p2), metric) < d:
        return p1
    return None


@dataclass(frozen=True, slots=True, order=True)
class ContactPoint:
    frame: int
    point: Point2
    source_labels: tuple[str, str]


class ContactSet(Mapping):
    """Frame index to contact points, frames ascending, no empty entries.

    Points within a frame are unique by location and kept sorted by
    ``(x, y)``. ``skipped`` counts camera pairs dropped because the camera-2
    point mapped to infinity.
    """

    def __init__(self, entries: Mapping[int, Iterable[ContactPoint]] | None = None, skipped: int = 0):
        data: dict[int, tuple[ContactPoint, ...]] = {}
        for frame, points in sorted((entries or {}).items()):
            by_loc: dict[Point2, ContactPoint] = {}
            for cp in points:
                if cp.frame != frame:
                    raise ValueError(f"contact point {cp} filed under frame {frame}")
                by_loc.setdefault(cp.point, cp)
            if by_loc:
                data[frame] = tuple(by_loc[k] for k in sorted(by_loc))
        self._data = data
        self.skipped = skipped

    @classmethod
    def from_points(cls, points: Iterable[ContactPoint], skipped: int = 0) -> ContactSet:
        grouped: dict[int, list[ContactPoint]] = {}
        for cp in points:
            grouped.setdefault(cp.frame, []).append(cp)
        return cls(grouped, skipped)

    def __getitem__(self, frame: int) -> tuple[ContactPoint, ...]:
        return self._data[frame]

    def __iter__(self) -> Iterator[int]:
        return iter(self._data)

    def __len__(self) -> int:
        return len(self._data)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, ContactSet):
            return self._data == other._data
        return NotImplemented

    def __repr__(self) -> str:
        return f"ContactSet({len(self._data)} frames, {self.total_points()} points)"

    def points(self) -> Iterator[ContactPoint]:
        for pts in self._data.values():
            yield from pts

    def locations(self, frame: int) -> set[Point2]:
        return {cp.point for cp in self._data.get(frame, ())}

    def total_points(self) -> int:
        return sum(len(v) for v in self._data.values())

    def union(self, other: ContactSet) -> ContactSet:
        return ContactSet.from_points([*self.points(), *other.points()], self.skipped + other.skipped)


def _frame_contacts(
    frame: int,
    cam1: Iterable,
    cam2: Iterable,
    h: Homography,
    thr: ThresholdSpec,
    metric: Metric | str,
    same_label: bool,
) -> tuple[list[ContactPoint], int]:
    mapped = []
    skipped = 0
    cam1 = list(cam1)
    for det in cam2:
        try:
            mapped.append((det, apply_homography(h, det.point)))
        except DegeneratePointError:
            # counted once per camera-1 partner it would have been paired with
            skipped += len(cam1)
    found: dict[Point2, ContactPoint] = {}
    for d1 in cam1:
        if d1.point in found:
            continue
        d = resolve_threshold(thr, d1.point)
        for d2, q in mapped:
            if same_label and d1.label != d2.label:
                continue
            if distance(d1.point, q, metric) < d:
                found[d1.point] = ContactPoint(frame, d1.point, (d1.label, d2.label))
                break
    return list(found.values()), skipped


def detect_contacts(
    s1: DetectionStream,
    s2: DetectionStream,
    h: Homography,
    thr: ThresholdSpec,
    metric: Metric | str = Metric.MANHATTAN,
    same_label: bool = False,
    workers: int = 1,
) -> ContactSet:
    """Contact set over all frames seen by both cameras.

    Camera-1 detections are taken from ``s1`` and camera-2 detections from
    ``s2``; pass the same merged stream twice when both cameras share a file.
    Every camera-1 point is tried against every camera-2 point of the frame
    (restricted to equal labels when ``same_label``), and a point enters the
    frame's set once, labelled with its first accepted partner in camera-2
    order. Frames without any accepted pair get no entry.

    Pairs whose camera-2 point maps to infinity are skipped and counted in
    ``ContactSet.skipped`` rather than aborting the run.

    ``workers > 1`` splits frames across threads; the output is identical
    for every worker count.
    """
    _validate_threshold(thr)
    jobs: list[tuple[int, tuple, tuple]] = []
    for pair in s1:
        other: FramePair | None = s2.get(pair.frame)
        if pair.cam1 and other is not None and other.cam2:
            jobs.append((pair.frame, pair.cam1, other.cam2))

    def run(chunk):
        return [_frame_contacts(f, c1, c2, h, thr, metric, same_label) for f, c1, c2 in chunk]

    if workers > 1 and len(jobs) > 1:
        size = -(-len(jobs) // workers)
        chunks = [jobs[i : i + size] for i in range(0, len(jobs), size)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = [r for part in pool.map(run, chunks) for r in part]
    else:
        results = run(jobs)

    points = [cp for found, _ in results for cp in found]
    skipped = sum(n for _, n in results)
    if skipped:
        logger.warning("skipped %d camera pairs that map to infinity", skipped)
    return ContactSet.from_points(points, skipped)


def format_contacts(q: ContactSet) -> str:
    return "".join(
        f"{cp.frame},{cp.point.x!r},{cp.point.y!r},{cp.source_labels[0]},{cp.source_labels[1]}\n"
        for cp in q.points()
    )


def parse_contacts(text: str) -> ContactSet:
    """Parse ``frame,x,y,label1,label2`` lines."""
    points = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split(",")
        if len(fields) != 5:
            raise ParseError(f"expected 5 fields, got {len(fields)}", lineno)
        try:
            frame = int(fields[0])
            pt = Point2(float(fields[1]), float(fields[2]))
        except ValueError:
            raise ParseError("bad frame or coordinate", lineno) from None
        if frame < 0:
            raise ParseError(f"negative frame {frame}", lineno)
        if not fields[3] or not fields[4]:
            raise ParseError("empty label", lineno)
        points.append(ContactPoint(frame, pt, (fields[3], fields[4])))
    return ContactSet.from_points(points)


def read_contacts(path: str | Path) -> ContactSet:
    return parse_contacts(Path(path).read_text(encoding="utf-8"))


def write_contacts(q: ContactSet, path: str | Path) -> None:
    Path(path).write_text(format_contacts(q), encoding="utf-8", newline="\n")
