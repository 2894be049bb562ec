import subprocess
import sys

import pytest

from crossview import analytics, calibration, consistency, geometry, streams
from crossview.cli import main
from crossview.grid import PatchGrid
from crossview.geometry import Point2

SCENE = """
[camera1]
fx = 900
position = -1.1, -1.3, 1.5
look_at = 0, 0, 0
[camera2]
fx = 900
position = 1.4, -0.9, 1.3
look_at = 0, 0.05, 0
[object.1]
label = wrist_r
kind = tap
start = -0.4, -0.2
end = 0.4, 0.25
contact = 12
air = 8
height = 0.1
[noise]
sigma = {sigma}
[run]
frames = 400
seed = 11
"""

SWEEP = """
[camera1]
fx = 900
position = -1.1, -1.3, 1.5
[camera2]
fx = 900
position = 1.4, -0.9, 1.3
look_at = 0, 0.05, 0
[object.1]
label = wrist_r
kind = sweep
rect = -0.6, -0.4, 0.6, 0.4
cols = 6
rows = 4
dwell = 20
hop = 4
[noise]
sigma = 1.0
[run]
frames = 570
seed = 2
"""


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture
def scene(tmp_path):
    def make(sigma=0.0, text=SCENE, name="sim"):
        cfg = tmp_path / f"{name}.ini"
        cfg.write_text(text.format(sigma=sigma))
        out = tmp_path / name
        assert run("simulate", "--config", cfg, "--out", out) == 0
        return out
    return make


def truth_contact_frames(path):
    frames = set()
    for line in path.read_text().splitlines():
        f, _, _, _, _, c = line.split(",")
        if c == "1":
            frames.add(int(f))
    return sorted(frames)


def test_no_args(capsys):
    assert main([]) == 2
    assert "usage" in capsys.readouterr().err


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "crossview"], capture_output=True, text=True)
    assert res.returncode == 2 and "usage" in res.stderr


def test_help_marks_constants(capsys):
    assert main(["occupancy", "--help"]) == 0
    text = " ".join(capsys.readouterr().out.split())
    assert "1500" in text and "one minute at 0.04 s/frame" in text
    assert "default: None" not in text


def test_usage_errors(tmp_path, capsys):
    assert main(["bogus"]) == 2
    assert main(["detect", "x.csv", "--h", "h.txt", "--d", "-3"]) == 2
    f = tmp_path / "s.csv"
    f.write_text("")
    h = tmp_path / "h.txt"
    geometry.write_homography(geometry.Homography.identity(), h)
    assert main(["detect", str(f), "--h", str(h)]) == 2
    assert main(["detect", str(f), "--h", str(h), "--d", "2", "--out", str(f)]) == 2


def test_data_errors(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("1,9,a,0,0\n")
    h = tmp_path / "h.txt"
    geometry.write_homography(geometry.Homography.identity(), h)
    assert main(["detect", str(bad), "--h", str(h), "--d", "2"]) == 1
    assert "line 1" in capsys.readouterr().err
    assert main(["detect", str(tmp_path / "missing.csv"), "--h", str(h), "--d", "2"]) == 1


def test_detect_noise_free_matches_truth(scene, tmp_path):
    out = scene()
    contacts = tmp_path / "contacts.csv"
    assert run("detect", out / "cam1.csv", out / "cam2.csv", "--h", out / "plane_h.txt", "--d", 1, "--out", contacts) == 0
    frames = sorted(consistency.read_contacts(contacts))
    assert frames == truth_contact_frames(out / "truth.csv") and frames


def test_simulate_overrides_and_reproducible(scene, tmp_path):
    a = scene(sigma=1.0, name="a")
    b = scene(sigma=1.0, name="b")
    for name in ("cam1.csv", "cam2.csv", "truth.csv", "plane_h.txt"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    cfg = tmp_path / "a.ini"
    assert run("simulate", "--config", cfg, "--out", tmp_path / "c", "--seed", 5) == 0
    assert (tmp_path / "c" / "cam1.csv").read_bytes() != (a / "cam1.csv").read_bytes()


def test_pipeline_equals_in_process(scene, tmp_path):
    cal = scene(text=SWEEP, name="cal")
    run_dir = scene(sigma=1.0, name="run")
    dmap = tmp_path / "dmap.txt"
    grid = "340,200,50,12,8"
    assert run("calib-dmap", cal / "cam1.csv", cal / "cam2.csv", "--h", cal / "plane_h.txt",
               "--grid", grid, "--bin-width", 6, "--labels", "wrist_r", "--out", dmap) == 0
    contacts = tmp_path / "contacts.csv"
    assert run("detect", run_dir / "cam1.csv", run_dir / "cam2.csv", "--h", run_dir / "plane_h.txt",
               "--dmap", dmap, "--out", contacts) == 0

    h = geometry.read_homography(cal / "plane_h.txt")
    c1, c2 = streams.read_stream(cal / "cam1.csv"), streams.read_stream(cal / "cam2.csv")
    tmap = calibration.build_threshold_map(c1, c2, h, PatchGrid.parse(grid), bin_width=6)
    assert calibration.read_threshold_map(dmap) == tmap
    r1, r2 = streams.read_stream(run_dir / "cam1.csv"), streams.read_stream(run_dir / "cam2.csv")
    q = consistency.detect_contacts(r1, r2, geometry.read_homography(run_dir / "plane_h.txt"), tmap)
    assert consistency.read_contacts(contacts) == q
    assert contacts.read_text() == consistency.format_contacts(q)

    top = tmp_path / "top.txt"
    geometry.write_homography(geometry.Homography.identity(), top)
    heat, pgm = tmp_path / "heat.txt", tmp_path / "heat.pgm"
    assert run("heatmap", contacts, "--h", top, "--grid", "300,150,40,20,14", "--out", heat, "--pgm", pgm) == 0
    hm = analytics.read_heatmap(heat)
    assert hm.total + hm.dropped == q.total_points()
    assert pgm.read_text().startswith("P2\n20 14\n255\n")

    dist = tmp_path / "dist.csv"
    assert run("distplot", run_dir / "cam1.csv", run_dir / "cam2.csv", "--h", run_dir / "plane_h.txt", "--out", dist) == 0
    rows = dist.read_text().splitlines()
    assert rows[0].startswith("0,") and len(rows) == 400


def test_merged_stream_input(scene, tmp_path):
    out = scene()
    merged = tmp_path / "merged.csv"
    streams.save_stream(
        streams.merge_streams(streams.read_stream(out / "cam1.csv"), streams.read_stream(out / "cam2.csv")), merged
    )
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run("detect", merged, "--h", out / "plane_h.txt", "--d", 1, "--out", a)
    run("detect", out / "cam1.csv", out / "cam2.csv", "--h", out / "plane_h.txt", "--d", 1, "--out", b)
    assert a.read_bytes() == b.read_bytes()


def test_occupancy_fill(tmp_path):
    contacts = tmp_path / "c.csv"
    lines = [f"{f},5.0,5.0,a,b" for f in list(range(0, 100)) + list(range(200, 300))]
    contacts.write_text("\n".join(lines) + "\n")
    raw, filled = tmp_path / "raw.csv", tmp_path / "filled.csv"
    assert run("occupancy", contacts, "--region", "desk,0,0,10,10", "--out", raw) == 0
    assert run("occupancy", contacts, "--region", "desk,0,0,10,10", "--fill", "--out", filled) == 0
    raw_s = analytics.parse_occupancy(raw.read_text())
    filled_s = analytics.parse_occupancy(filled.read_text())
    assert raw_s.occupied.sum() == 200 and filled_s.occupied.all() and len(filled_s) == 300
    assert run("occupancy", contacts, "--region", "desk,0,0,10,10", "--fill", "--max-gap", 50,
               "--range", "0,400", "--out", filled) == 0
    assert analytics.parse_occupancy(filled.read_text()).occupied.sum() == 200


def test_calib_h(tmp_path, rng):
    truth = geometry.Homography([[1.1, 0.05, 30], [-0.02, 0.9, 12], [1e-4, 2e-4, 1]])
    entries = []
    for x, y in rng.uniform(0, 1000, (10, 2)):
        p2 = Point2(x, y)
        entries.append((p2, geometry.apply_homography(truth, p2)))
    corr, out = tmp_path / "corr.csv", tmp_path / "h.txt"
    calibration.write_mapping_table(calibration.MappingTable(tuple(entries)), corr)
    assert run("calib-h", corr, "--out", out) == 0
    assert geometry.read_homography(out).allclose(truth, 1e-6)
    corr.write_text("0,0,0,0\n1,1,1,1\n")
    assert run("calib-h", corr, "--out", out) == 1


def test_stdout_output(tmp_path, capsys):
    s = tmp_path / "s.csv"
    s.write_text("1,1,a,0,0\n1,2,a,1,0\n")
    h = tmp_path / "h.txt"
    geometry.write_homography(geometry.Homography.identity(), h)
    assert main(["detect", str(s), "--h", str(h), "--d", "2"]) == 0
    assert capsys.readouterr().out == "1,0.0,0.0,a,a\n"
