"""Timestamped two-camera keypoint detections and their CSV record format.

Each record is ``frame,camera,label,x,y``. Frames are integer indices with
a nominal period of 0.04 s; both cameras are assumed frame-synchronized.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, TextIO

from .errors import ParseError
from .geometry import Point2

FRAME_PERIOD_S = 0.04


@dataclass(frozen=True, slots=True)
class Detection:
    frame: int
    camera: int
    label: str
    point: Point2

    def __post_init__(self):
        if self.camera not in (1, 2):
            raise ValueError(f"camera must be 1 or 2, got {self.camera}")
        if self.frame < 0:
            raise ValueError(f"frame must be non-negative, got {self.frame}")
        if not self.label or any(c in self.label for c in ",\n\r"):
            raise ValueError(f"invalid label {self.label!r}")


@dataclass(frozen=True, slots=True)
class FramePair:
    """All detections of one frame, split by camera."""

    frame: int
    cam1: tuple[Detection, ...] = ()
    cam2: tuple[Detection, ...] = ()

    def __post_init__(self):
        for cam, dets in ((1, self.cam1), (2, self.cam2)):
            for det in dets:
                if det.frame != self.frame or det.camera != cam:
                    raise ValueError(f"detection {det} does not belong to frame {self.frame} camera {cam}")

    def __len__(self) -> int:
        return len(self.cam1) + len(self.cam2)

    def detections(self) -> Iterator[Detection]:
        yield from self.cam1
        yield from self.cam2


@dataclass(frozen=True)
class DetectionStream:
    """Frame pairs in strictly increasing frame order."""

    pairs: tuple[FramePair, ...] = ()
    frame_period_s: float = FRAME_PERIOD_S
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        pairs = tuple(self.pairs)
        object.__setattr__(self, "pairs", pairs)
        for a, b in zip(pairs, pairs[1:]):
            if b.frame <= a.frame:
                raise ValueError(f"frames not strictly increasing: {a.frame} then {b.frame}")
        object.__setattr__(self, "_index", {p.frame: p for p in pairs})

    @classmethod
    def from_detections(cls, detections: Iterable[Detection], frame_period_s: float = FRAME_PERIOD_S) -> DetectionStream:
        """Group detections into frame pairs, dropping exact duplicates.

        Within a camera the first-seen order of detections is preserved.
        """
        by_frame: dict[int, tuple[dict, dict]] = {}
        for det in detections:
            sides = by_frame.setdefault(det.frame, ({}, {}))
            sides[det.camera - 1].setdefault(det, None)
        pairs = tuple(
            FramePair(frame, tuple(c1), tuple(c2)) for frame, (c1, c2) in sorted(by_frame.items())
        )
        return cls(pairs, frame_period_s)

    def __iter__(self) -> Iterator[FramePair]:
        return iter(self.pairs)

    def __len__(self) -> int:
        return len(self.pairs)

    def __getitem__(self, frame: int) -> FramePair:
        return self._index[frame]

    def get(self, frame: int) -> FramePair | None:
        return self._index.get(frame)

    @property
    def frames(self) -> list[int]:
        return [p.frame for p in self.pairs]

    def detections(self) -> Iterator[Detection]:
        for pair in self.pairs:
            yield from pair.detections()

    def count(self) -> int:
        return sum(len(p) for p in self.pairs)

    def camera(self, cam: int) -> DetectionStream:
        """Only the detections of one camera."""
        return DetectionStream.from_detections(
            (d for d in self.detections() if d.camera == cam), self.frame_period_s
        )


def merge_streams(*streams: DetectionStream) -> DetectionStream:
    period = streams[0].frame_period_s if streams else FRAME_PERIOD_S
    return DetectionStream.from_detections((d for s in streams for d in s.detections()), period)


def _parse_records(lines: Iterable[str]) -> Iterator[Detection]:
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split(",")
        if len(fields) != 5:
            raise ParseError(f"expected 5 fields, got {len(fields)}", lineno)
        frame_s, cam_s, label, x_s, y_s = fields
        try:
            frame = int(frame_s)
            camera = int(cam_s)
        except ValueError:
            raise ParseError("frame and camera must be integers", lineno) from None
        try:
            x, y = float(x_s), float(y_s)
        except ValueError:
            raise ParseError("x and y must be numeric", lineno) from None
        if frame < 0:
            raise ParseError(f"negative frame {frame}", lineno)
        if camera not in (1, 2):
            raise ParseError(f"camera must be 1 or 2, got {camera}", lineno)
        if not label:
            raise ParseError("empty label", lineno)
        try:
            yield Detection(frame, camera, label, Point2(x, y))
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None


def parse_stream(source: str | TextIO, frame_period_s: float = FRAME_PERIOD_S) -> DetectionStream:
    """Parse detection records from a string or text stream."""
    if isinstance(source, str):
        source = io.StringIO(source)
    return DetectionStream.from_detections(_parse_records(source), frame_period_s)


def format_detection(det: Detection) -> str:
    return f"{det.frame},{det.camera},{det.label},{det.point.x!r},{det.point.y!r}"


def write_stream(s: DetectionStream, out: TextIO | None = None) -> str:
    """Serialize ``s``; also written to ``out`` when given."""
    text = "".join(format_detection(d) + "\n" for d in s.detections())
    if out is not None:
        out.write(text)
    return text


def read_stream(path: str | Path, frame_period_s: float = FRAME_PERIOD_S) -> DetectionStream:
    with open(path, encoding="utf-8") as fh:
        return parse_stream(fh, frame_period_s)


def save_stream(s: DetectionStream, path: str | Path) -> None:
    Path(path).write_text(write_stream(s), encoding="utf-8", newline="\n")


def filter_label(s: DetectionStream, labels: Iterable[str]) -> DetectionStream:
    """Keep only detections whose label is in ``labels``; empty frames vanish."""
    keep = frozenset(labels)
    pairs = []
    for pair in s:
        c1 = tuple(d for d in pair.cam1 if d.label in keep)
        c2 = tuple(d for d in pair.cam2 if d.label in keep)
        if c1 or c2:
            pairs.append(FramePair(pair.frame, c1, c2))
    return DetectionStream(tuple(pairs), s.frame_period_s)
