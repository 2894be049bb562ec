"""
Heat-maps and desk occupancy
============================

Contacts are only points in camera 1. Mapping them onto a top view of the
desk and binning them gives a touch heat-map; checking them against a
region of interest frame by frame gives an occupancy series, whose short
idle stretches can be closed up.
"""

# %%
import numpy as np

from crossview import (
    Homography,
    PatchGrid,
    Region,
    SceneConfig,
    accumulate_heatmap,
    detect_contacts,
    fill_gaps,
    plane_induced_homography,
    raw_occupancy,
    render_grid,
    simulate,
)
from crossview.geometry import Point2
from crossview.simulator import default_cameras, random_taps

cam1, cam2 = default_cameras()
h = plane_induced_homography(cam1, cam2)
left = random_taps(np.random.default_rng(11), 60, contact=20, air=10, height=0.1, rect=(-0.6, -0.4, -0.1, 0.4))
s1, s2, truth = simulate(SceneConfig(cam1, cam2, (left,), noise_sigma=1.0, seed=12))
q = detect_contacts(s1, s2, h, 8.0)
print(q)

# %%
# A top view in centimetres: camera-1 pixels go back to the desk plane
# through the inverse of camera 1's plane-to-image map.
plane_to_cam1 = cam1.intrinsics @ np.column_stack([cam1.rotation[:, :2], cam1.translation])
to_top = Homography(np.diag([100.0, 100.0, 1.0]) @ np.linalg.inv(plane_to_cam1))
grid = PatchGrid(Point2(-60, -40), 10, 12, 8)
hm = accumulate_heatmap(q, to_top, grid)
print(hm.counts)
print("dropped:", hm.dropped)
print(render_grid(hm).splitlines()[:3])

# %%
# Occupancy of the left half of the camera-1 image, with idle runs shorter
# than 30 frames filled in.
region = Region("left", 0, 0, 640, 720)
raw = raw_occupancy(q, region, 0, truth.frames - 1)
filled = fill_gaps(raw, max_gap=30)
print(f"occupied frames: raw {raw.occupied.sum()}, filled {filled.occupied.sum()} of {len(raw)}")
