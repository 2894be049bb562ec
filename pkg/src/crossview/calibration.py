"""Distance-threshold calibration and contact-driven surface mapping.

Three ways to obtain what the detector needs:

* a single global threshold observed over a clip of known contact frames;
* a per-patch threshold map learned from single-person footage, where the
  modal histogram bin of the collected cross-view distances in each patch
  sets that patch's threshold and sparse patches are filled from their
  neighbours;
* for non-planar surfaces, a nearest-neighbour lookup table of camera-2 to
  camera-1 positions recorded while a single object touches the surface.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import CalibrationError, ParseError
from .geometry import (
    Homography,
    Metric,
    Point2,
    manhattan_distance,
    min_mapped_distance,
)
from .grid import PatchGrid, parse_header, parse_number_rows
from .streams import DetectionStream

DEFAULT_BIN_WIDTH = 1.0
DEFAULT_MIN_SAMPLES = 10


def _points(pair, cam: int) -> list[Point2]:
    if pair is None:
        return []
    dets = pair.cam1 if cam == 1 else pair.cam2
    return [d.point for d in dets]


def observe_global_d(
    s1: DetectionStream,
    s2: DetectionStream,
    h: Homography,
    contact_frames: Iterable[int],
    safety_factor: float = 1.0,
    metric: Metric | str = Metric.MANHATTAN,
) -> float:
    """Global threshold from a clip in which contact is known to happen.

    For every listed frame take the smallest distance between a camera-1
    point and a mapped camera-2 point; the threshold is the largest of these
    minima times ``safety_factor``.

    Note that the detector compares with strict ``<``, so the frame that set
    the maximum is itself rejected unless ``safety_factor > 1``.
    """
    frames = list(contact_frames)
    if not frames:
        raise CalibrationError("no contact frames given")
    worst = 0.0
    for frame in frames:
        best = min_mapped_distance(_points(s1.get(frame), 1), _points(s2.get(frame), 2), h, metric)
        if best is None:
            raise CalibrationError(f"frame {frame} lacks a detection in one of the cameras")
        worst = max(worst, best)
    return worst * safety_factor


class DistanceBags:
    """Per-patch lists of collected cross-view distances."""

    def __init__(self, grid: PatchGrid, bags: Sequence[Sequence[list[float]]] | None = None):
        self.grid = grid
        if bags is None:
            bags = [[[] for _ in range(grid.cols)] for _ in range(grid.rows)]
        if len(bags) != grid.rows or any(len(row) != grid.cols for row in bags):
            raise ValueError("bag layout does not match the grid")
        self._bags = [[list(b) for b in row] for row in bags]

    def __getitem__(self, index: tuple[int, int]) -> list[float]:
        r, c = index
        return self._bags[r][c]

    def add(self, row: int, col: int, value: float) -> None:
        if value < 0:
            raise ValueError("distances are non-negative")
        self._bags[row][col].append(value)

    def counts(self) -> np.ndarray:
        return np.array([[len(b) for b in row] for row in self._bags], dtype=np.int64)

    def merge(self, other: DistanceBags) -> DistanceBags:
        if other.grid != self.grid:
            raise ValueError("cannot merge bags over different grids")
        return DistanceBags(
            self.grid,
            [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(self._bags, other._bags)],
        )


def collect_patch_distances(
    s1: DetectionStream,
    s2: DetectionStream,
    h: Homography,
    grid: PatchGrid,
    metric: Metric | str = Metric.MANHATTAN,
) -> DistanceBags:
    """Bag, per patch, the cross-view distance of every in-grid camera-1 point.

    The streams are expected to hold a single person's wrist detections
    already; for each camera-1 point the smallest distance to any mapped
    camera-2 point of the same frame is recorded in the patch it falls in.
    """
    bags = DistanceBags(grid)
    for pair in s1:
        p1s = _points(pair, 1)
        if not p1s:
            continue
        p2s = _points(s2.get(pair.frame), 2)
        if not p2s:
            continue
        for p1 in p1s:
            cell = grid.locate(p1)
            if cell is None:
                continue
            best = min_mapped_distance([p1], p2s, h, metric)
            if best is not None:
                bags.add(*cell, best)
    return bags


def select_d_from_histogram(bag: Sequence[float], bin_width: float = DEFAULT_BIN_WIDTH) -> float:
    """Upper edge of the most populated bin ``[k*w, (k+1)*w)``.

    Ties go to the lowest bin. The upper edge (rather than the centre) lets
    every value in the modal bin pass a strict ``distance < d`` test.
    """
    if not bag:
        raise CalibrationError("cannot select a threshold from an empty bag")
    if not bin_width > 0:
        raise ValueError("bin_width must be positive")
    hist = Counter(math.floor(v / bin_width) for v in bag)
    top = max(hist.values())
    k = min(b for b, n in hist.items() if n == top)
    return (k + 1) * bin_width


@dataclass(frozen=True, eq=False)
class ThresholdMap:
    """Per-patch distance thresholds with measured/interpolated provenance."""

    grid: PatchGrid
    values: np.ndarray
    measured: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        measured = np.array(self.measured, dtype=bool)
        if values.shape != self.grid.shape or measured.shape != self.grid.shape:
            raise ValueError(f"map shape {values.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(values)) or np.any(values <= 0):
            raise ValueError("threshold values must be finite and positive")
        values.setflags(write=False)
        measured.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "measured", measured)

    def value_at(self, p: Point2) -> float:
        r, c = self.grid.nearest(p)
        return float(self.values[r, c])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ThresholdMap):
            return NotImplemented
        return (
            self.grid == other.grid
            and np.array_equal(self.values, other.values)
            and np.array_equal(self.measured, other.measured)
        )


def interpolate_missing(
    grid: PatchGrid,
    values: np.ndarray,
    counts: np.ndarray | None = None,
    min_samples: int = 1,
) -> ThresholdMap:
    """Fill patches without enough measurements from their 8-neighbourhood.

    A patch counts as measured when its value is finite and, if ``counts`` is
    given, it holds at least ``min_samples`` measurements. Each pass assigns
    every unfilled patch touching a filled one the mean of its filled
    neighbours; passes read only the previous pass's state, so the result
    does not depend on visiting order.
    """
    values = np.array(values, dtype=float)
    if values.shape != grid.shape:
        raise ValueError(f"values shape {values.shape} does not match grid {grid.shape}")
    measured = np.isfinite(values)
    if counts is not None:
        measured &= np.asarray(counts) >= min_samples
    if not measured.any():
        raise CalibrationError(f"no patch has at least {min_samples} measurements")

    filled = measured.copy()
    current = np.where(measured, values, 0.0)
    rows, cols = grid.shape
    while not filled.all():
        # 8-neighbour sums via a zero-padded 3x3 window
        pv = np.pad(np.where(filled, current, 0.0), 1)
        pf = np.pad(filled.astype(float), 1)
        total = np.zeros(grid.shape)
        n = np.zeros(grid.shape)
        for dr in (-1, 0, 1):
            for dc in (-1, 0, 1):
                if dr == 0 and dc == 0:
                    continue
                total += pv[1 + dr : 1 + dr + rows, 1 + dc : 1 + dc + cols]
                n += pf[1 + dr : 1 + dr + rows, 1 + dc : 1 + dc + cols]
        frontier = ~filled & (n > 0)
        current = current.copy()
        current[frontier] = total[frontier] / n[frontier]
        filled = filled | frontier
    return ThresholdMap(grid, current, measured)


def build_threshold_map(
    s1: DetectionStream,
    s2: DetectionStream,
    h: Homography,
    grid: PatchGrid,
    bin_width: float = DEFAULT_BIN_WIDTH,
    min_samples: int = DEFAULT_MIN_SAMPLES,
    metric: Metric | str = Metric.MANHATTAN,
) -> ThresholdMap:
    """Collect per-patch distances, pick each patch's modal bin, fill the gaps."""
    bags = collect_patch_distances(s1, s2, h, grid, metric)
    counts = bags.counts()
    values = np.full(grid.shape, np.nan)
    for r in range(grid.rows):
        for c in range(grid.cols):
            if counts[r, c] >= min_samples and counts[r, c] > 0:
                values[r, c] = select_d_from_histogram(bags[r, c], bin_width)
    return interpolate_missing(grid, values, counts, min_samples)


def format_threshold_map(tmap: ThresholdMap) -> str:
    lines = [tmap.grid.header("dmap")]
    lines += [" ".join(repr(float(v)) for v in row) for row in tmap.values]
    lines += ["".join("m" if m else "i" for m in row) for row in tmap.measured]
    return "\n".join(lines) + "\n"


def parse_threshold_map(text: str) -> ThresholdMap:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise ParseError("empty threshold map")
    grid, _ = parse_header(lines[0], "dmap")
    values = parse_number_rows(lines[1:], grid, 2)
    prov_lines = lines[1 + grid.rows :]
    if len(prov_lines) != grid.rows:
        raise ParseError(f"expected {grid.rows} provenance rows, got {len(prov_lines)}")
    measured = []
    for i, line in enumerate(prov_lines):
        line = line.strip()
        if len(line) != grid.cols or set(line) - {"m", "i"}:
            raise ParseError("provenance rows hold one m/i flag per patch", 2 + grid.rows + i)
        measured.append([ch == "m" for ch in line])
    try:
        return ThresholdMap(grid, values, np.array(measured))
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def read_threshold_map(path: str | Path) -> ThresholdMap:
    return parse_threshold_map(Path(path).read_text(encoding="utf-8"))


def write_threshold_map(tmap: ThresholdMap, path: str | Path) -> None:
    Path(path).write_text(format_threshold_map(tmap), encoding="utf-8", newline="\n")


@dataclass(frozen=True)
class MappingTable:
    """Contact-event correspondences, each ``(camera-2 point, camera-1 point)``."""

    entries: tuple[tuple[Point2, Point2], ...] = ()

    def __len__(self) -> int:
        return len(self.entries)


def learn_mapping_table(
    s1: DetectionStream, s2: DetectionStream, contact_frames: Iterable[int]
) -> MappingTable:
    """One ``p2 -> p1`` entry per listed frame of a single-object contact clip."""
    entries = []
    for frame in contact_frames:
        p1s = _points(s1.get(frame), 1)
        p2s = _points(s2.get(frame), 2)
        if len(p1s) != 1 or len(p2s) != 1:
            raise CalibrationError(
                f"frame {frame} is ambiguous: {len(p1s)} camera-1 and {len(p2s)} camera-2 detections"
            )
        entries.append((p2s[0], p1s[0]))
    return MappingTable(tuple(entries))


def map_point(table: MappingTable, p2: Point2) -> Point2:
    """Camera-1 position recorded for the nearest stored camera-2 position."""
    if not table.entries:
        raise CalibrationError("mapping table is empty")
    best_i = 0
    best = math.inf
    for i, (q2, _) in enumerate(table.entries):
        dist = manhattan_distance(q2, p2)
        if dist < best:
            best, best_i = dist, i
    return table.entries[best_i][1]


def format_mapping_table(table: MappingTable) -> str:
    return "".join(f"{p2.x!r},{p2.y!r},{p1.x!r},{p1.y!r}\n" for p2, p1 in table.entries)


def parse_mapping_table(text: str) -> MappingTable:
    """Parse ``x2,y2,x1,y1`` lines (also the correspondence file format)."""
    entries = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split(",")
        if len(fields) != 4:
            raise ParseError(f"expected 4 fields, got {len(fields)}", lineno)
        try:
            x2, y2, x1, y1 = (float(f) for f in fields)
            entries.append((Point2(x2, y2), Point2(x1, y1)))
        except ValueError:
            raise ParseError("non-numeric or non-finite coordinate", lineno) from None
    return MappingTable(tuple(entries))


def read_mapping_table(path: str | Path) -> MappingTable:
    return parse_mapping_table(Path(path).read_text(encoding="utf-8"))


def write_mapping_table(table: MappingTable, path: str | Path) -> None:
    Path(path).write_text(format_mapping_table(table), encoding="utf-8", newline="\n")
