"""Products derived from a contact set: heat-maps, region occupancy, distance traces."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .consistency import ContactSet
from .errors import DegeneratePointError, ParseError
from .geometry import Homography, Metric, Point2, apply_homography, min_mapped_distance
from .grid import PatchGrid, parse_header, parse_number_rows
from .streams import FRAME_PERIOD_S, DetectionStream

# one minute of frames at the nominal 0.04 s period
DEFAULT_MAX_GAP = round(60 / FRAME_PERIOD_S)


@dataclass(frozen=True, eq=False)
class HeatMap:
    """Contact counts per top-view cell; ``dropped`` counts points off the grid."""

    grid: PatchGrid
    counts: np.ndarray
    dropped: int = 0

    def __post_init__(self):
        counts = np.array(self.counts, dtype=np.int64)
        if counts.shape != self.grid.shape:
            raise ValueError(f"counts shape {counts.shape} does not match grid {self.grid.shape}")
        if np.any(counts < 0) or self.dropped < 0:
            raise ValueError("counts must be non-negative")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __add__(self, other: HeatMap) -> HeatMap:
        if other.grid != self.grid:
            raise ValueError("cannot add heat-maps over different grids")
        return HeatMap(self.grid, self.counts + other.counts, self.dropped + other.dropped)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, HeatMap):
            return NotImplemented
        return self.grid == other.grid and self.dropped == other.dropped and np.array_equal(self.counts, other.counts)


def accumulate_heatmap(q: ContactSet, top_h: Homography, grid: PatchGrid) -> HeatMap:
    """Map every contact point to the top view and count it in its cell.

    No identities are attached to contacts, so one person touching the same
    spot n times contributes n counts.
    """
    counts = np.zeros(grid.shape, dtype=np.int64)
    dropped = 0
    for cp in q.points():
        try:
            top = apply_homography(top_h, cp.point)
        except DegeneratePointError:
            dropped += 1
            continue
        cell = grid.locate(top)
        if cell is None:
            dropped += 1
        else:
            counts[cell] += 1
    return HeatMap(grid, counts, dropped)


def format_heatmap(hm: HeatMap) -> str:
    lines = [f"{hm.grid.header('heatmap')} {hm.dropped}"]
    lines += [" ".join(str(int(v)) for v in row) for row in hm.counts]
    return "\n".join(lines) + "\n"


def parse_heatmap(text: str) -> HeatMap:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ParseError("empty heat-map")
    grid, extra = parse_header(lines[0], "heatmap")
    try:
        dropped = int(extra[0]) if extra else 0
    except ValueError:
        raise ParseError("bad dropped count", 1) from None
    counts = parse_number_rows(lines[1:], grid, 2, kind=int)
    return HeatMap(grid, counts, dropped)


def write_heatmap(hm: HeatMap, path: str | Path) -> None:
    Path(path).write_text(format_heatmap(hm), encoding="utf-8", newline="\n")


def read_heatmap(path: str | Path) -> HeatMap:
    return parse_heatmap(Path(path).read_text(encoding="utf-8"))


def render_grid(hm: HeatMap) -> str:
    """Plain (P2) PGM text, counts scaled by ``floor(255 * count / max)``."""
    peak = int(hm.counts.max()) if hm.counts.size else 0
    if peak > 0:
        pixels = (hm.counts * 255) // peak
    else:
        pixels = np.zeros_like(hm.counts)
    lines = ["P2", f"{hm.grid.cols} {hm.grid.rows}", "255"]
    lines += [" ".join(str(int(v)) for v in row) for row in pixels]
    return "\n".join(lines) + "\n"


def write_pgm(hm: HeatMap, path: str | Path) -> None:
    Path(path).write_text(render_grid(hm), encoding="ascii", newline="\n")


@dataclass(frozen=True)
class Region:
    """Axis-aligned rectangle in camera-1 pixels, ``[x0, x1) x [y0, y1)``."""

    name: str
    x0: float
    y0: float
    x1: float
    y1: float

    def __post_init__(self):
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise ValueError(f"region {self.name!r} is empty")

    def contains(self, p: Point2) -> bool:
        return self.x0 <= p.x < self.x1 and self.y0 <= p.y < self.y1

    @classmethod
    def parse(cls, text: str) -> Region:
        """Parse the ``name,x0,y0,x1,y1`` command-line form."""
        parts = text.split(",")
        if len(parts) != 5:
            raise ValueError("region must be name,x0,y0,x1,y1")
        return cls(parts[0], *(float(v) for v in parts[1:]))


@dataclass(frozen=True, eq=False)
class OccupancySeries:
    """Per-frame occupancy of ``region`` over frames ``start..start+len-1``."""

    region: str
    start: int
    occupied: np.ndarray

    def __post_init__(self):
        occ = np.array(self.occupied, dtype=bool).reshape(-1)
        occ.setflags(write=False)
        object.__setattr__(self, "occupied", occ)

    @property
    def end(self) -> int:
        return self.start + len(self.occupied) - 1

    def __len__(self) -> int:
        return len(self.occupied)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, OccupancySeries):
            return NotImplemented
        return (
            self.region == other.region
            and self.start == other.start
            and np.array_equal(self.occupied, other.occupied)
        )

    def frames(self) -> np.ndarray:
        return np.arange(self.start, self.start + len(self.occupied))


def raw_occupancy(q: ContactSet, region: Region, start: int, end: int) -> OccupancySeries:
    """True on frames where some contact point lies inside ``region``."""
    if end < start:
        raise ValueError(f"empty frame range {start}..{end}")
    occ = np.zeros(end - start + 1, dtype=bool)
    for frame, points in q.items():
        if start <= frame <= end and any(region.contains(cp.point) for cp in points):
            occ[frame - start] = True
    return OccupancySeries(region.name, start, occ)


def fill_gaps(s: OccupancySeries, max_gap: int = DEFAULT_MAX_GAP) -> OccupancySeries:
    """Mark internal idle runs shorter than ``max_gap`` frames as occupied.

    Idle runs before the first or after the last occupied frame are left
    alone.
    """
    occ = s.occupied.copy()
    on = np.flatnonzero(occ)
    if len(on) >= 2:
        gaps = np.diff(on) - 1
        for i in np.flatnonzero((gaps > 0) & (gaps < max_gap)):
            occ[on[i] + 1 : on[i + 1]] = True
    return OccupancySeries(s.region, s.start, occ)


def format_occupancy(s: OccupancySeries) -> str:
    return "".join(f"{f},{int(v)}\n" for f, v in zip(s.frames(), s.occupied))


def parse_occupancy(text: str, region: str = "") -> OccupancySeries:
    frames, values = [], []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split(",")
        if len(fields) != 2 or fields[1] not in ("0", "1"):
            raise ParseError("expected frame,0|1", lineno)
        try:
            frames.append(int(fields[0]))
        except ValueError:
            raise ParseError("bad frame", lineno) from None
        values.append(fields[1] == "1")
    if frames and frames != list(range(frames[0], frames[0] + len(frames))):
        raise ParseError("frames must be consecutive")
    return OccupancySeries(region, frames[0] if frames else 0, values)


def min_distance_series(
    s1: DetectionStream,
    s2: DetectionStream,
    h: Homography,
    start: int,
    end: int,
    metric: Metric | str = Metric.MANHATTAN,
) -> list[float | None]:
    """Per-frame smallest camera-1 to mapped camera-2 distance over ``start..end``.

    None marks frames where either camera has no detection.
    """
    out: list[float | None] = []
    for frame in range(start, end + 1):
        a, b = s1.get(frame), s2.get(frame)
        p1s = [d.point for d in a.cam1] if a else []
        p2s = [d.point for d in b.cam2] if b else []
        out.append(min_mapped_distance(p1s, p2s, h, metric))
    return out


def format_distance_series(values: Iterable[float | None], start: int) -> str:
    return "".join(
        f"{start + i},{'' if v is None else repr(float(v))}\n" for i, v in enumerate(values)
    )
