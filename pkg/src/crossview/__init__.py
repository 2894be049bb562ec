"""Hand/object contact detection on a planar surface from two uncalibrated views.

A camera-1 keypoint is a surface contact when it nearly coincides with the
matching camera-2 keypoint mapped through the plane homography between the
views. The package covers homography estimation, the contact detector,
threshold calibration, contact heat-maps and occupancy series, and a
synthetic two-camera simulator that supplies ground truth.
"""

from .analytics import (
    HeatMap,
    OccupancySeries,
    Region,
    accumulate_heatmap,
    fill_gaps,
    min_distance_series,
    raw_occupancy,
    render_grid,
)
from .calibration import (
    MappingTable,
    ThresholdMap,
    build_threshold_map,
    collect_patch_distances,
    interpolate_missing,
    learn_mapping_table,
    map_point,
    observe_global_d,
    select_d_from_histogram,
)
from .consistency import ContactPoint, ContactSet, consistency_check, detect_contacts, resolve_threshold
from .errors import CrossviewError
from .geometry import (
    CameraModel,
    Homography,
    Metric,
    Point2,
    Point3,
    apply_homography,
    estimate_homography,
    invert_homography,
    manhattan_distance,
    project_point,
)
from .grid import PatchGrid
from .simulator import (
    GroundTruth,
    SceneConfig,
    ambiguity_experiment,
    lift_profile,
    plane_induced_homography,
    simulate,
)
from .streams import Detection, DetectionStream, FramePair, filter_label, parse_stream, write_stream

__version__ = "0.1.0"

__all__ = [
    "HeatMap",
    "OccupancySeries",
    "Region",
    "accumulate_heatmap",
    "fill_gaps",
    "min_distance_series",
    "raw_occupancy",
    "render_grid",
    "MappingTable",
    "ThresholdMap",
    "build_threshold_map",
    "collect_patch_distances",
    "interpolate_missing",
    "learn_mapping_table",
    "map_point",
    "observe_global_d",
    "select_d_from_histogram",
    "ContactPoint",
    "ContactSet",
    "consistency_check",
    "detect_contacts",
    "resolve_threshold",
    "CrossviewError",
    "CameraModel",
    "Homography",
    "Metric",
    "Point2",
    "Point3",
    "apply_homography",
    "estimate_homography",
    "invert_homography",
    "manhattan_distance",
    "project_point",
    "PatchGrid",
    "GroundTruth",
    "SceneConfig",
    "ambiguity_experiment",
    "lift_profile",
    "plane_induced_homography",
    "simulate",
    "Detection",
    "DetectionStream",
    "FramePair",
    "filter_label",
    "parse_stream",
    "write_stream",
]
