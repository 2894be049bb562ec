"""
Estimating the view-to-view homography
======================================

Four or more point correspondences between two views of the desk fix the
3x3 projective map between them. Here the correspondences come from the
simulator, so the fitted map can be compared with the exact one.
"""

# %%
import numpy as np

from crossview import estimate_homography, plane_induced_homography
from crossview.geometry import Point2, Point3, project_point, transfer_residual
from crossview.simulator import DESK_RECT, default_cameras

cam1, cam2 = default_cameras()
exact = plane_induced_homography(cam1, cam2)
print(exact.matrix)

# %%
# Click-style correspondences: desk corners and a few interior marks, seen
# with about a pixel of jitter in both views.
rng = np.random.default_rng(0)
x0, y0, x1, y1 = DESK_RECT
marks = [(x0, y0), (x1, y0), (x1, y1), (x0, y1), (0.0, 0.0), (0.3, -0.2), (-0.25, 0.15)]
pairs = []
for x, y in marks:
    u2 = project_point(cam2, Point3(x, y, 0.0))
    u1 = project_point(cam1, Point3(x, y, 0.0))
    jitter = rng.normal(0, 1.0, 4)
    pairs.append((Point2(u2.x + jitter[0], u2.y + jitter[1]), Point2(u1.x + jitter[2], u1.y + jitter[3])))

fitted = estimate_homography(pairs)
print("largest coefficient difference:", np.abs(fitted.matrix - exact.matrix).max())
print("transfer residual (px):", transfer_residual(fitted, pairs))

# %%
# The fitted map only holds on the desk plane. A point 10 cm above the desk
# lands somewhere else in camera 1 than the mapped camera-2 view predicts,
# which is exactly what the contact detector relies on.
for z in (0.0, 0.02, 0.1):
    p = Point3(0.1, 0.1, z)
    u1 = project_point(cam1, p)
    mapped = fitted(project_point(cam2, p))
    print(f"height {z:.2f} m: camera-1 {tuple(round(v, 1) for v in u1)}, mapped {tuple(round(v, 1) for v in mapped)}")
