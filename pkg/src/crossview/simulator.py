"""Synthetic two-camera scene over the world plane ``z = 0``.

Point objects follow per-frame 3D trajectories and are observed by two
pinhole cameras. Each visible object yields one detection per camera,
perturbed by independent Gaussian pixel noise. The exact world positions
are kept as ground truth: an object is in contact when its height is zero.

Noise is drawn by the Box-Muller transform from uniforms of a PCG64
generator (numpy's ``PCG64``), seeded from the configuration, so a given
seed always produces the same streams.
"""

from __future__ import annotations

import configparser
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .calibration import observe_global_d
from .consistency import detect_contacts
from .errors import ConfigError, SingularMatrixError
from .geometry import (
    CameraModel,
    Homography,
    Metric,
    Point2,
    min_mapped_distance,
    project_points,
)
from .streams import Detection, DetectionStream

CONTACT_EPS = 1e-9
MIN_TILT_DEG = 5.0
MAX_TILT_DEG = 85.0

# default desk: 1.2 m x 0.8 m centred on the world origin
DESK_RECT = (-0.6, -0.4, 0.6, 0.4)
IMAGE_SIZE = (1280, 720)


def gaussian_noise(seed: int, shape: tuple[int, ...]) -> np.ndarray:
    """Standard normal samples via Box-Muller over PCG64 uniforms."""
    n = int(np.prod(shape))
    rng = np.random.Generator(np.random.PCG64(seed))
    m = (n + 1) // 2
    u1 = 1.0 - rng.random(m)  # (0, 1], keeps log finite
    u2 = rng.random(m)
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.empty(2 * m)
    z[0::2] = r * np.cos(2 * np.pi * u2)
    z[1::2] = r * np.sin(2 * np.pi * u2)
    return z[:n].reshape(shape)


def tilt_deg(cam: CameraModel) -> float:
    """Acute angle between the optical axis and the plane normal, in degrees."""
    c = abs(float(cam.optical_axis[2]))
    return math.degrees(math.acos(min(1.0, c)))


@dataclass(frozen=True, eq=False)
class SceneConfig:
    """Cameras, object trajectories and noise for one simulated run.

    ``objects`` holds one ``(frames, 3)`` array of world positions per
    object. ``image_size`` is ``(width, height)``; detections are emitted
    only for projections inside it (None disables the bounds check).
    """

    cam1: CameraModel
    cam2: CameraModel
    objects: tuple[np.ndarray, ...]
    noise_sigma: float = 0.0
    seed: int = 0
    labels: tuple[str, ...] | None = None
    image_size: tuple[int, int] | None = IMAGE_SIZE

    def __post_init__(self):
        objects = tuple(np.array(o, dtype=float).reshape(-1, 3) for o in self.objects)
        object.__setattr__(self, "objects", objects)
        if self.labels is None:
            object.__setattr__(self, "labels", tuple(f"object{i + 1}" for i in range(len(objects))))
        else:
            object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def frames(self) -> int:
        return len(self.objects[0]) if self.objects else 0

    def validate(self) -> None:
        if not self.objects:
            raise ConfigError("scene has no objects")
        if self.frames < 1:
            raise ConfigError("scene must have at least one frame")
        for i, traj in enumerate(self.objects):
            if traj.shape != (self.frames, 3):
                raise ConfigError(f"object {i + 1} trajectory has shape {traj.shape}, expected ({self.frames}, 3)")
            if not np.all(np.isfinite(traj)):
                raise ConfigError(f"object {i + 1} trajectory is not finite")
            if np.any(traj[:, 2] < -CONTACT_EPS):
                raise ConfigError(f"object {i + 1} goes below the surface plane")
        if len(self.labels) != len(self.objects):
            raise ConfigError("one label per object is required")
        if not (self.noise_sigma >= 0 and math.isfinite(self.noise_sigma)):
            raise ConfigError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        for name, cam in (("cam1", self.cam1), ("cam2", self.cam2)):
            tilt = tilt_deg(cam)
            if not MIN_TILT_DEG < tilt < MAX_TILT_DEG:
                raise ConfigError(
                    f"{name} must view the plane obliquely (axis-normal angle {tilt:.1f} deg "
                    f"outside ({MIN_TILT_DEG}, {MAX_TILT_DEG}))"
                )
            if cam.center[2] <= 0:
                raise ConfigError(f"{name} must be above the surface plane")


@dataclass(frozen=True, eq=False)
class GroundTruth:
    """Exact world positions, shape ``(frames, objects, 3)``."""

    positions: np.ndarray
    labels: tuple[str, ...] = field(default=())

    @property
    def heights(self) -> np.ndarray:
        return self.positions[:, :, 2]

    @property
    def contact(self) -> np.ndarray:
        return np.abs(self.heights) <= CONTACT_EPS

    @property
    def frames(self) -> int:
        return self.positions.shape[0]

    def contact_frames(self, obj: int | None = None) -> list[int]:
        """Frames in which any object (or object ``obj``) touches the plane."""
        c = self.contact if obj is None else self.contact[:, [obj]]
        return np.flatnonzero(c.any(axis=1)).tolist()

    def to_csv(self) -> str:
        lines = []
        for f in range(self.frames):
            for o in range(self.positions.shape[1]):
                x, y, z = (float(v) for v in self.positions[f, o])
                lines.append(f"{f},{o + 1},{x!r},{y!r},{z!r},{int(self.contact[f, o])}")
        return "".join(line + "\n" for line in lines)


def plane_induced_homography(cam1: CameraModel, cam2: CameraModel) -> Homography:
    """Homography mapping camera-2 pixels of the plane ``z = 0`` to camera-1 pixels.

    A plane point ``(x, y, 0)`` images as ``K [r1 r2 t] [x, y, 1]^T``, so with
    ``G_i = K_i [r1 r2 t]_i`` the map is ``G_1 G_2^{-1}``.

    Raises:
        SingularMatrixError: a camera sees the plane edge-on.
    """
    def plane_to_image(cam: CameraModel) -> np.ndarray:
        g = cam.intrinsics @ np.column_stack([cam.rotation[:, 0], cam.rotation[:, 1], cam.translation])
        scale = np.linalg.norm(g)
        if abs(np.linalg.det(g / scale)) <= 1e-12:
            raise SingularMatrixError("camera sees the surface plane edge-on")
        return g

    return Homography(plane_to_image(cam1) @ np.linalg.inv(plane_to_image(cam2)))


def _visible(uv: np.ndarray, in_front: np.ndarray, size: tuple[int, int] | None) -> np.ndarray:
    ok = in_front.copy()
    if size is not None:
        w, h = size
        with np.errstate(invalid="ignore"):
            ok &= (uv[:, 0] >= 0) & (uv[:, 0] < w) & (uv[:, 1] >= 0) & (uv[:, 1] < h)
    return ok


def simulate(cfg: SceneConfig) -> tuple[DetectionStream, DetectionStream, GroundTruth]:
    """Render the scene into camera-1 and camera-2 detection streams.

    Noise for every (frame, object, camera, axis) is drawn up front, so
    visibility never shifts the random sequence.
    """
    cfg.validate()
    frames, n_obj = cfg.frames, len(cfg.objects)
    positions = np.stack(cfg.objects, axis=1)
    noise = cfg.noise_sigma * gaussian_noise(cfg.seed, (frames, n_obj, 2, 2))
    streams = []
    for ci, cam in enumerate((cfg.cam1, cfg.cam2)):
        dets = []
        for o in range(n_obj):
            uv, front = project_points(cam, positions[:, o])
            vis = _visible(uv, front, cfg.image_size)
            noisy = uv + noise[:, o, ci]
            for f in np.flatnonzero(vis):
                dets.append(Detection(int(f), ci + 1, cfg.labels[o], Point2(float(noisy[f, 0]), float(noisy[f, 1]))))
        dets.sort(key=lambda d: d.frame)  # stable: object order within a frame
        streams.append(DetectionStream.from_detections(dets))
    return streams[0], streams[1], GroundTruth(positions, cfg.labels)


def lift_profile(cfg: SceneConfig, metric: Metric | str = Metric.MANHATTAN) -> list[tuple[float, float]]:
    """``(height, cross-view distance)`` per frame for a single noise-free object.

    Frames where the object is outside either view are omitted.
    """
    if len(cfg.objects) != 1:
        raise ConfigError("lift profile needs exactly one object")
    if cfg.noise_sigma != 0:
        raise ConfigError("lift profile needs a noise-free scene")
    s1, s2, truth = simulate(cfg)
    h = plane_induced_homography(cfg.cam1, cfg.cam2)
    out = []
    for f in range(truth.frames):
        a, b = s1.get(f), s2.get(f)
        if a is None or b is None:
            continue
        dist = min_mapped_distance([d.point for d in a.cam1], [d.point for d in b.cam2], h, metric)
        out.append((float(truth.heights[f, 0]), dist))
    return out


# -- trajectory builders ---------------------------------------------------


def static_trajectory(position: Sequence[float], frames: int) -> np.ndarray:
    return np.tile(np.asarray(position, dtype=float), (frames, 1))


def linear_trajectory(start: Sequence[float], end: Sequence[float], frames: int) -> np.ndarray:
    t = np.linspace(0.0, 1.0, frames)[:, None]
    return (1 - t) * np.asarray(start, dtype=float) + t * np.asarray(end, dtype=float)


def lift_trajectory(base_xy: Sequence[float], heights: Sequence[float]) -> np.ndarray:
    """Vertical lift above ``base_xy`` through the given heights."""
    heights = np.asarray(heights, dtype=float)
    xy = np.tile(np.asarray(base_xy, dtype=float), (len(heights), 1))
    return np.column_stack([xy, heights])


def _hop(air: int, height: float) -> np.ndarray:
    # half-sine arc that leaves and lands on the plane
    return height * np.sin(np.pi * np.arange(1, air + 1) / (air + 1))


def tap_trajectory(
    spots: Sequence[Sequence[float]], contact: int, air: int, height: float
) -> np.ndarray:
    """Rest on each spot for ``contact`` frames, then arc to the next one.

    Each airborne stretch lasts ``air`` frames, moves linearly in x-y and
    rises in a half-sine of peak ``height``.
    """
    spots = np.asarray(spots, dtype=float).reshape(-1, 2)
    chunks = []
    for i, spot in enumerate(spots):
        chunks.append(np.column_stack([np.tile(spot, (contact, 1)), np.zeros(contact)]))
        if air > 0:
            nxt = spots[(i + 1) % len(spots)]
            t = (np.arange(1, air + 1) / (air + 1))[:, None]
            chunks.append(np.column_stack([(1 - t) * spot + t * nxt, _hop(air, height)]))
    return np.vstack(chunks)


def random_taps(
    rng: np.random.Generator,
    cycles: int,
    contact: int,
    air: int,
    height: float,
    rect: Sequence[float] = DESK_RECT,
) -> np.ndarray:
    x0, y0, x1, y1 = rect
    spots = np.column_stack([rng.uniform(x0, x1, cycles), rng.uniform(y0, y1, cycles)])
    return tap_trajectory(spots, contact, air, height)


def sweep_trajectory(
    rect: Sequence[float],
    cols: int,
    rows: int,
    dwell: int,
    hop: int = 0,
    height: float = 0.05,
    rest_height: float = 0.0,
) -> np.ndarray:
    """Boustrophedon visit of a ``cols x rows`` lattice over ``rect``.

    The object rests at each lattice point (cell centres) at ``rest_height``
    for ``dwell`` frames and hops to the next over ``hop`` frames.
    """
    x0, y0, x1, y1 = rect
    xs = x0 + (np.arange(cols) + 0.5) * (x1 - x0) / cols
    ys = y0 + (np.arange(rows) + 0.5) * (y1 - y0) / rows
    spots = []
    for r, y in enumerate(ys):
        for x in xs if r % 2 == 0 else xs[::-1]:
            spots.append((x, y))
    traj = tap_trajectory(spots, dwell, hop, height - rest_height)
    traj[:, 2] += rest_height
    return traj[: len(spots) * (dwell + hop) - hop] if hop else traj


def random_airborne_pair(
    rng: np.random.Generator,
    frames: int,
    h_min: float = 0.05,
    h_max: float = 0.3,
    rect: Sequence[float] = DESK_RECT,
) -> tuple[np.ndarray, np.ndarray]:
    """Two airborne objects at random positions, one over each half of ``rect``."""
    x0, y0, x1, y1 = rect
    xm = 0.5 * (x0 + x1)
    a = np.column_stack([rng.uniform(x0, xm, frames), rng.uniform(y0, y1, frames), rng.uniform(h_min, h_max, frames)])
    b = np.column_stack([rng.uniform(xm, x1, frames), rng.uniform(y0, y1, frames), rng.uniform(h_min, h_max, frames)])
    return a, b


def adversarial_pair(
    rng: np.random.Generator,
    cam1: CameraModel,
    cam2: CameraModel,
    frames: int,
    h_min: float = 0.05,
    h_max: float = 0.3,
    rect: Sequence[float] = DESK_RECT,
) -> tuple[np.ndarray, np.ndarray]:
    """Two airborne objects placed so camera 1 sees the first and camera 2 sees
    the second in front of the same surface point.

    The first object sits on the ray from camera 1 to a random desk point,
    the second on the ray from camera 2 to that same point.
    """
    x0, y0, x1, y1 = rect
    ground = np.column_stack([rng.uniform(x0, x1, frames), rng.uniform(y0, y1, frames), np.zeros(frames)])
    out = []
    for cam in (cam1, cam2):
        c = cam.center
        h = rng.uniform(h_min, h_max, frames)[:, None]
        out.append(ground + (c - ground) * (h / c[2]))
    return out[0], out[1]


def random_oblique_camera(
    rng: np.random.Generator,
    azimuth_deg: float | None = None,
    fx: float = 900.0,
    size: tuple[int, int] = IMAGE_SIZE,
) -> CameraModel:
    """Camera 1.6-2.6 m from the desk centre, tilted 35-65 deg from vertical."""
    az = math.radians(rng.uniform(0, 360) if azimuth_deg is None else azimuth_deg)
    tilt = math.radians(rng.uniform(35, 65))
    dist = rng.uniform(1.6, 2.6)
    target = np.array([rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1), 0.0])
    offset = dist * np.array([math.sin(tilt) * math.cos(az), math.sin(tilt) * math.sin(az), math.cos(tilt)])
    return CameraModel.look_at(target + offset, target, fx, fx, size[0] / 2, size[1] / 2)


def random_camera_pair(rng: np.random.Generator, min_sep_deg: float = 40, max_sep_deg: float = 140):
    """Two oblique cameras whose azimuths differ by ``min_sep_deg..max_sep_deg``."""
    az = rng.uniform(0, 360)
    sep = rng.uniform(min_sep_deg, max_sep_deg) * rng.choice([-1, 1])
    return random_oblique_camera(rng, az), random_oblique_camera(rng, az + sep)


def default_cameras() -> tuple[CameraModel, CameraModel]:
    """Fixed desk rig used by the demos and the CLI sample config."""
    cx, cy = IMAGE_SIZE[0] / 2, IMAGE_SIZE[1] / 2
    cam1 = CameraModel.look_at((-1.1, -1.3, 1.5), (0.0, 0.0, 0.0), 900.0, 900.0, cx, cy)
    cam2 = CameraModel.look_at((1.4, -0.9, 1.3), (0.0, 0.05, 0.0), 900.0, 900.0, cx, cy)
    return cam1, cam2


def calibrate_global_d(
    cam1: CameraModel,
    cam2: CameraModel,
    sigma: float = 1.0,
    frames: int = 200,
    seed: int = 0,
    rect: Sequence[float] = DESK_RECT,
    metric: Metric | str = Metric.MANHATTAN,
) -> float:
    """Global threshold observed on a single object resting at random desk spots."""
    rng = np.random.default_rng(seed)
    x0, y0, x1, y1 = rect
    traj = np.column_stack([rng.uniform(x0, x1, frames), rng.uniform(y0, y1, frames), np.zeros(frames)])
    cfg = SceneConfig(cam1, cam2, (traj,), noise_sigma=sigma, seed=seed)
    s1, s2, truth = simulate(cfg)
    seen = sorted(set(s1.frames) & set(s2.frames))
    h = plane_induced_homography(cam1, cam2)
    return observe_global_d(s1, s2, h, seen, metric=metric)


@dataclass(frozen=True)
class AmbiguityResult:
    """Outcome of the multi-object ambiguity experiment.

    ``rate`` is ``flagged_frames / evaluated_frames``: the share of frames
    seen by both cameras in which the detector reported a contact. Under the
    intended setup no object touches the plane, so every flagged frame is a
    false positive; ``false_positive_frames`` excludes frames with a real
    contact for runs that break that setup.
    """

    rate: float
    flagged_frames: int
    false_positive_frames: int
    evaluated_frames: int
    trials: int
    d: float


def _ambiguity_trial(cfg: SceneConfig, d: float, metric) -> tuple[int, int, int]:
    s1, s2, truth = simulate(cfg)
    h = plane_induced_homography(cfg.cam1, cfg.cam2)
    q = detect_contacts(s1, s2, h, d, metric=metric)
    in_view = set(s1.frames) & set(s2.frames)
    flagged = [f for f in q if f in in_view]
    real = set(truth.contact_frames())
    return len(flagged), sum(1 for f in flagged if f not in real), len(in_view)


def ambiguity_experiment(
    cfg: SceneConfig,
    trials: int = 1,
    d: float | None = None,
    trajectory_fn: Callable[[np.random.Generator, int], Sequence[np.ndarray]] | None = None,
    metric: Metric | str = Metric.MANHATTAN,
    workers: int = 1,
) -> AmbiguityResult:
    """Rate at which two airborne objects fool the single-object detector.

    Trial ``i`` runs with seed ``cfg.seed + i``; when ``trajectory_fn`` is
    given it draws that trial's object trajectories from a generator seeded
    the same way, otherwise ``cfg.objects`` are reused. Without an explicit
    ``d`` the threshold is observed on a one-object resting clip with 1 px
    noise in the same camera rig.
    """
    if trials < 1:
        raise ConfigError("need at least one trial")
    if d is None:
        d = calibrate_global_d(cfg.cam1, cfg.cam2, sigma=1.0, seed=cfg.seed, metric=metric)

    def trial_cfg(i: int) -> SceneConfig:
        seed = cfg.seed + i
        objects = cfg.objects
        if trajectory_fn is not None:
            objects = tuple(trajectory_fn(np.random.default_rng(seed), cfg.frames))
        return replace(cfg, objects=objects, seed=seed)

    configs = [trial_cfg(i) for i in range(trials)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda c: _ambiguity_trial(c, d, metric), configs))
    else:
        results = [_ambiguity_trial(c, d, metric) for c in configs]
    flagged = sum(r[0] for r in results)
    fp = sum(r[1] for r in results)
    evaluated = sum(r[2] for r in results)
    return AmbiguityResult(flagged / evaluated if evaluated else 0.0, flagged, fp, evaluated, trials, d)


# -- configuration files ---------------------------------------------------


def _floats(text: str, n: int | None = None) -> list[float]:
    vals = [float(v) for v in text.replace(",", " ").split()]
    if n is not None and len(vals) != n:
        raise ConfigError(f"expected {n} numbers, got {text!r}")
    return vals


def _camera(section: configparser.SectionProxy) -> CameraModel:
    fx = float(section["fx"])
    fy = float(section.get("fy", fx))
    cx, cy = float(section.get("cx", IMAGE_SIZE[0] / 2)), float(section.get("cy", IMAGE_SIZE[1] / 2))
    if "position" in section:
        return CameraModel.look_at(_floats(section["position"], 3), _floats(section.get("look_at", "0,0,0"), 3), fx, fy, cx, cy)
    return CameraModel(fx, fy, cx, cy, _floats(section["rotation"], 9), _floats(section["translation"], 3))


def _trajectory(section: configparser.SectionProxy, frames: int) -> np.ndarray:
    kind = section.get("kind", "static")
    if kind == "static":
        return static_trajectory(_floats(section["position"], 3), frames)
    if kind == "linear":
        return linear_trajectory(_floats(section["start"], 3), _floats(section["end"], 3), frames)
    if kind == "lift":
        return lift_trajectory(_floats(section["base"], 2), np.linspace(0, float(section["max_height"]), frames))
    if kind == "tap":
        contact, air = int(section["contact"]), int(section["air"])
        cycles = -(-frames // (contact + air))
        spots = linear_trajectory(_floats(section["start"], 2) + [0], _floats(section["end"], 2) + [0], cycles)[:, :2]
        return tap_trajectory(spots, contact, air, float(section["height"]))[:frames]
    if kind == "sweep":
        traj = sweep_trajectory(
            _floats(section["rect"], 4),
            int(section["cols"]),
            int(section["rows"]),
            int(section["dwell"]),
            int(section.get("hop", 0)),
            float(section.get("height", 0.05)),
            float(section.get("rest_height", 0.0)),
        )
        reps = -(-frames // len(traj))
        return np.vstack([traj] * reps)[:frames]
    raise ConfigError(f"unknown trajectory kind {kind!r}")


def parse_scene_config(text: str) -> SceneConfig:
    """Build a scene from INI text with sections ``[camera1]``, ``[camera2]``,
    ``[object.N]``, ``[noise]`` and ``[run]``."""
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
        run = parser["run"] if parser.has_section("run") else {}
        frames = int(run.get("frames", 100))
        seed = int(run.get("seed", 0))
        size = (int(run.get("width", IMAGE_SIZE[0])), int(run.get("height", IMAGE_SIZE[1])))
        sigma = float(parser["noise"].get("sigma", 0.0)) if parser.has_section("noise") else 0.0
        names = sorted(
            (s for s in parser.sections() if s.startswith("object.")), key=lambda s: int(s.split(".", 1)[1])
        )
        objects = tuple(_trajectory(parser[s], frames) for s in names)
        labels = tuple(parser[s].get("label", f"object{s.split('.', 1)[1]}") for s in names)
        cfg = SceneConfig(_camera(parser["camera1"]), _camera(parser["camera2"]), objects, sigma, seed, labels, size)
    except (KeyError, ValueError, configparser.Error) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid scene config: {exc}") from None
    cfg.validate()
    return cfg


def load_scene_config(path: str | Path) -> SceneConfig:
    return parse_scene_config(Path(path).read_text(encoding="utf-8"))
