"""Rasterization of an image or desk region into square patches."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParseError
from .geometry import Point2


@dataclass(frozen=True)
class PatchGrid:
    """``rows x cols`` square patches of side ``patch_size`` starting at ``origin``.

    Patch ``(r, c)`` covers ``[x0 + c*s, x0 + (c+1)*s) x [y0 + r*s, y0 + (r+1)*s)``.
    """

    origin: Point2
    patch_size: float
    cols: int
    rows: int

    def __post_init__(self):
        object.__setattr__(self, "patch_size", float(self.patch_size))
        object.__setattr__(self, "cols", int(self.cols))
        object.__setattr__(self, "rows", int(self.rows))
        if not (self.patch_size > 0 and math.isfinite(self.patch_size)):
            raise ValueError(f"patch_size must be positive, got {self.patch_size}")
        if self.cols < 1 or self.rows < 1:
            raise ValueError(f"grid must have at least one patch, got {self.cols}x{self.rows}")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def _fractional(self, p: Point2) -> tuple[float, float]:
        return (p.y - self.origin.y) / self.patch_size, (p.x - self.origin.x) / self.patch_size

    def locate(self, p: Point2) -> tuple[int, int] | None:
        """``(row, col)`` of the patch containing ``p``, or None outside the grid."""
        fr, fc = self._fractional(p)
        r, c = math.floor(fr), math.floor(fc)
        if 0 <= r < self.rows and 0 <= c < self.cols:
            return r, c
        return None

    def nearest(self, p: Point2) -> tuple[int, int]:
        """Patch containing ``p`` with out-of-grid points clamped to the border."""
        fr, fc = self._fractional(p)
        r = min(max(math.floor(fr), 0), self.rows - 1)
        c = min(max(math.floor(fc), 0), self.cols - 1)
        return r, c

    def center(self, row: int, col: int) -> Point2:
        s = self.patch_size
        return Point2(self.origin.x + (col + 0.5) * s, self.origin.y + (row + 0.5) * s)

    def header(self, tag: str) -> str:
        return f"{tag} {self.cols} {self.rows} {self.origin.x!r} {self.origin.y!r} {self.patch_size!r}"

    @classmethod
    def parse(cls, text: str) -> PatchGrid:
        """Parse the ``x0,y0,patch,cols,rows`` command-line form."""
        parts = text.split(",")
        if len(parts) != 5:
            raise ValueError("grid must be x0,y0,patch,cols,rows")
        x0, y0, s = (float(v) for v in parts[:3])
        return cls(Point2(x0, y0), s, int(parts[3]), int(parts[4]))


def parse_header(line: str, tag: str, lineno: int = 1) -> tuple[PatchGrid, list[str]]:
    """Split a ``tag cols rows x0 y0 size [extra...]`` header line."""
    fields = line.split()
    if len(fields) < 6 or fields[0] != tag:
        raise ParseError(f"expected header '{tag} cols rows origin_x origin_y patch_size'", lineno)
    try:
        cols, rows = int(fields[1]), int(fields[2])
        grid = PatchGrid(Point2(float(fields[3]), float(fields[4])), float(fields[5]), cols, rows)
    except ValueError as exc:
        raise ParseError(f"bad header: {exc}", lineno) from None
    return grid, fields[6:]


def parse_number_rows(lines: list[str], grid: PatchGrid, first_lineno: int, kind=float) -> np.ndarray:
    if len(lines) < grid.rows:
        raise ParseError(f"expected {grid.rows} value rows, got {len(lines)}")
    out = []
    for i, line in enumerate(lines[: grid.rows]):
        fields = line.split()
        if len(fields) != grid.cols:
            raise ParseError(f"expected {grid.cols} values, got {len(fields)}", first_lineno + i)
        try:
            out.append([kind(f) for f in fields])
        except ValueError:
            raise ParseError("non-numeric value", first_lineno + i) from None
    return np.array(out, dtype=float if kind is float else np.int64)
