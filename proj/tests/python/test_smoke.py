import json

import numpy as np
import pytest

import imreg


def random_rotation(rng):
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q @ np.diag(np.sign(np.diag(r)))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def test_procrustes_recovers_a_rigid_transform():
    rng = np.random.default_rng(0)
    r = random_rotation(rng)
    t = rng.normal(size=3)
    src = rng.normal(size=(30, 3))
    pose = imreg.procrustes(src, src @ r.T + t)
    assert np.allclose(pose.rotation, r, atol=1e-10)
    assert np.allclose(pose.translation, t, atol=1e-10)
    assert np.allclose(pose.apply(src), src @ r.T + t, atol=1e-10)


def test_averaging_helpers():
    r = np.eye(3)
    assert np.allclose(imreg.rotation_average(r, [r, r], [0.5, 1.0]), r)
    t = imreg.translation_average(r, [r, r], [np.ones(3), np.ones(3)], [0.4, 0.6])
    assert np.allclose(t, np.ones(3))
    assert imreg.keep_new_probability(3) == 0.25


def test_overlap_ratio_extremes():
    pts = np.random.default_rng(1).uniform(-1, 1, size=(50, 3))
    assert imreg.overlap_ratio(pts, pts, imreg.Pose(), 0.07) == 1.0
    far = imreg.Pose(np.eye(3), np.array([100.0, 0, 0]))
    assert imreg.overlap_ratio(pts, pts, far, 0.07) == 0.0


def test_scene_registration_end_to_end():
    frames = imreg.generate_scene(seed=42, frame_count=4, points_per_frame=250)
    result = imreg.register_scene(frames, imreg.PipelineConfig())
    assert result["failed"] == []
    assert sorted(result["order"]) == [f.id for f in frames]
    gt = {f.id: f.gt_pose.matrix() for f in frames}
    report = imreg.evaluate(result["poses"], gt)
    assert report["rr"] == 1.0
    assert report["mean_te"] < 0.02
    doc = json.loads(result["json"])
    assert doc["config"]["seed"] == 42


def test_aisle_pair_fails_but_scene_registers():
    frames = imreg.generate_aisle_scene(42)
    assert not imreg.register_pair(frames[0], frames[1])["ok"]
    result = imreg.register_scene(frames)
    assert result["order"][-1] == 1
    assert result["failed"] == []


def test_errors_are_typed(tmp_path):
    with pytest.raises(imreg.InvalidArgument):
        cfg = imreg.PipelineConfig()
        cfg.merge_mode = "median"
    with pytest.raises(imreg.DegenerateError):
        imreg.procrustes(np.zeros((2, 3)), np.zeros((2, 3)))
    bad = tmp_path / "bad.ply"
    bad.write_text("not a ply\n")
    with pytest.raises(imreg.ParseError):
        imreg.read_ply(bad)


def test_ply_round_trip(tmp_path):
    pts = np.random.default_rng(2).normal(size=(17, 3))
    imreg.write_ply(tmp_path / "p.ply", pts)
    assert np.array_equal(imreg.read_ply(tmp_path / "p.ply"), pts)
