import numpy as np
import pytest

from travkit.errors import EmptyInputError, InvalidParameterError
from travkit.geometry import (
    CameraModel,
    FootstepSet,
    PixelPoints,
    Pose,
    Trajectory,
    extract_footsteps,
    farthest_point_sample,
    load_camera,
    load_trajectory,
    project_points,
    save_camera,
    save_trajectory,
    select_window,
    unproject_points,
)

from conftest import random_pose, random_rotation, straight_trajectory
from oracles import fps_oracle, project_oracle


class TestPoseValidation:
    def test_rejects_non_orthonormal(self):
        bad = np.eye(3)
        bad[0, 0] = 1.1
        with pytest.raises(InvalidParameterError):
            Pose(0.0, bad, np.zeros(3))

    def test_rejects_reflection(self):
        flip = np.diag([1.0, 1.0, -1.0])
        with pytest.raises(InvalidParameterError):
            Pose(0.0, flip, np.zeros(3))

    def test_trajectory_requires_increasing_timestamps(self):
        p0 = Pose(1.0, np.eye(3), np.zeros(3))
        p1 = Pose(1.0, np.eye(3), np.ones(3))
        with pytest.raises(InvalidParameterError):
            Trajectory((p0, p1))

    def test_trajectory_rejects_empty(self):
        with pytest.raises(EmptyInputError):
            Trajectory(())


class TestExtractFootsteps:
    def test_camera_height_from_mount(self):
        traj = Trajectory((Pose(0.0, np.eye(3), np.array([0.0, 0.0, 1.36])),))
        steps = extract_footsteps(traj, 1.36)
        np.testing.assert_allclose(steps.points_world, [[0.0, 0.0, 0.0]])

    def test_direct_formula(self):
        poses = (
            Pose(0.0, np.eye(3), np.array([1.0, 2.0, 3.0])),
            Pose(1.0, np.eye(3), np.array([4.0, 5.0, 6.0])),
        )
        steps = extract_footsteps(Trajectory(poses), 1.0)
        np.testing.assert_allclose(steps.points_world, [[1, 2, 2], [4, 5, 5]])

    def test_rotation_is_ignored(self, rng):
        height = 1.2
        positions = rng.normal(size=(5, 3))
        poses = tuple(
            Pose(float(i), random_rotation(rng), positions[i]) for i in range(5)
        )
        steps = extract_footsteps(Trajectory(poses), height)
        np.testing.assert_allclose(steps.points_world, positions - [0, 0, height])

    def test_commutes_with_horizontal_translation(self, rng):
        traj = straight_trajectory()
        shift = np.array([3.7, -2.1, 0.0])
        shifted = Trajectory(
            tuple(Pose(p.timestamp, p.rotation, p.position + shift) for p in traj.keyframes)
        )
        a = extract_footsteps(traj, 1.36).points_world + shift
        b = extract_footsteps(shifted, 1.36).points_world
        np.testing.assert_allclose(a, b)

    def test_non_positive_height_rejected(self):
        traj = straight_trajectory()
        with pytest.raises(InvalidParameterError):
            extract_footsteps(traj, 0.0)
        with pytest.raises(InvalidParameterError):
            extract_footsteps(traj, -1.0)


class TestSelectWindow:
    def test_integer_second_window(self):
        traj = straight_trajectory(n=6, dt=1.0)
        assert list(select_window(traj, 0, 3.0)) == [0, 1, 2, 3]

    def test_last_frame_is_singleton(self):
        traj = straight_trajectory(n=6, dt=1.0)
        assert list(select_window(traj, 5, 10.0)) == [5]

    def test_half_second_keyframes(self):
        # timestamps 0, 0.5, ..., 5.0; frame 2 (t=1.0), horizon 3 -> t in [1, 4]
        traj = straight_trajectory(n=11, dt=0.5)
        window = select_window(traj, 2, 3.0)
        assert len(window) == 7
        assert list(window) == [2, 3, 4, 5, 6, 7, 8]

    def test_matches_brute_force_scan(self, rng):
        for _ in range(200):
            n = int(rng.integers(1, 30))
            ts = np.cumsum(rng.uniform(0.05, 1.0, size=n))
            poses = tuple(Pose(float(t), np.eye(3), np.zeros(3)) for t in ts)
            traj = Trajectory(poses)
            i = int(rng.integers(0, n))
            horizon = float(rng.uniform(0.1, 5.0))
            expected = [
                j for j in range(n) if ts[i] <= ts[j] <= ts[i] + horizon
            ]
            got = list(select_window(traj, i, horizon))
            assert got == expected
            # contiguous range starting at the frame itself
            assert got[0] == i

    def test_out_of_range_index(self):
        traj = straight_trajectory(n=3)
        with pytest.raises(IndexError):
            select_window(traj, 3, 1.0)
        with pytest.raises(IndexError):
            select_window(traj, -1, 1.0)


class TestProjectPoints:
    def test_principal_point(self, camera):
        pose = Pose(0.0, np.eye(3), np.zeros(3))
        pix = project_points(FootstepSet(np.array([[0.0, 0.0, 1.0]])), pose, camera)
        np.testing.assert_allclose(pix.points, [[camera.cx, camera.cy]])

    def test_point_behind_camera_dropped(self, camera):
        pose = Pose(0.0, np.eye(3), np.zeros(3))
        pix = project_points(FootstepSet(np.array([[0.0, 0.0, -1.0]])), pose, camera)
        assert len(pix) == 0

    def test_matches_homogeneous_oracle(self, rng, camera):
        for _ in range(1000):
            pose = random_pose(rng)
            # Lift a random in-image pixel at a random depth to a world point
            # so every case is visible; the oracle recomputes independently.
            u = rng.uniform(0, camera.width - 1e-6)
            v = rng.uniform(0, camera.height - 1e-6)
            depth = rng.uniform(0.5, 20.0)
            cam_pt = np.array(
                [(u - camera.cx) / camera.fx * depth, (v - camera.cy) / camera.fy * depth, depth]
            )
            point = pose.rotation @ cam_pt + pose.position
            u_exp, v_exp, z = project_oracle(
                point, pose.rotation, pose.position,
                camera.fx, camera.fy, camera.cx, camera.cy,
            )
            assert z == pytest.approx(depth, abs=1e-9)
            pix = project_points(FootstepSet(point[None, :]), pose, camera)
            assert len(pix) == 1
            np.testing.assert_allclose(pix.points[0], [u_exp, v_exp], atol=1e-6)
            np.testing.assert_allclose(pix.points[0], [u, v], atol=1e-6)

    def test_invisible_points_dropped_consistently(self, rng, camera):
        dropped = 0
        for _ in range(300):
            pose = random_pose(rng)
            point = rng.normal(scale=4.0, size=3)
            u_exp, v_exp, depth = project_oracle(
                point, pose.rotation, pose.position,
                camera.fx, camera.fy, camera.cx, camera.cy,
            )
            visible = (
                depth > 0.05
                and 0 <= u_exp < camera.width
                and 0 <= v_exp < camera.height
            )
            pix = project_points(FootstepSet(point[None, :]), pose, camera)
            assert len(pix) == (1 if visible else 0)
            dropped += 0 if visible else 1
        assert dropped > 50

    def test_round_trip_recovers_world_point(self, rng, camera):
        for _ in range(200):
            pose = random_pose(rng)
            # build a point guaranteed in front of the camera
            pix_target = rng.uniform([0, 0], [camera.width, camera.height])
            depth = rng.uniform(0.5, 20.0)
            world = unproject_points(pix_target[None, :], [depth], pose, camera)
            pix = project_points(FootstepSet(world), pose, camera)
            assert len(pix) == 1
            np.testing.assert_allclose(pix.points[0], pix_target, atol=1e-6)
            again = unproject_points(pix.points, [depth], pose, camera)
            np.testing.assert_allclose(again[0], world[0], atol=1e-6)


class TestFarthestPointSample:
    def test_collinear_points(self):
        pts = PixelPoints(np.array([[float(u), 7.0] for u in range(11)]))
        out = farthest_point_sample(pts, 3)
        np.testing.assert_allclose(out.points[:, 0], [0.0, 10.0, 5.0])

    def test_identity_when_count_exceeds(self):
        pts = PixelPoints(np.array([[3.0, 1.0], [1.0, 5.0]]))
        out = farthest_point_sample(pts, 5)
        np.testing.assert_allclose(out.points, pts.points)

    def test_empty_rejected(self):
        with pytest.raises(EmptyInputError):
            farthest_point_sample(PixelPoints(np.empty((0, 2))), 3)

    def test_seed_is_lowest_point(self, rng):
        pts = rng.uniform(0, 100, size=(40, 2))
        out = farthest_point_sample(PixelPoints(pts), 4)
        expected_seed = max(range(40), key=lambda i: (pts[i, 1], -pts[i, 0]))
        np.testing.assert_allclose(out.points[0], pts[expected_seed])

    def test_matches_greedy_oracle(self, rng):
        for _ in range(1000):
            n = int(rng.integers(1, 60))
            count = int(rng.integers(1, 12))
            pts = rng.uniform(0, 512, size=(n, 2))
            expected = fps_oracle(pts.tolist(), count)
            got = farthest_point_sample(PixelPoints(pts), count)
            np.testing.assert_array_equal(got.points, pts[expected])


class TestFileFormats:
    def test_tum_round_trip(self, tmp_path, rng):
        poses = tuple(random_pose(rng, timestamp=float(i) * 0.5) for i in range(8))
        traj = Trajectory(poses)
        path = tmp_path / "traj.txt"
        save_trajectory(traj, path)
        loaded = load_trajectory(path)
        assert len(loaded) == 8
        for a, b in zip(traj.keyframes, loaded.keyframes):
            assert a.timestamp == pytest.approx(b.timestamp, abs=1e-9)
            np.testing.assert_allclose(a.rotation, b.rotation, atol=1e-7)
            np.testing.assert_allclose(a.position, b.position, atol=1e-9)

    def test_tum_comments_and_blank_lines(self, tmp_path):
        path = tmp_path / "traj.txt"
        path.write_text("# comment\n\n0.0 1 2 3 0 0 0 1\n")
        traj = load_trajectory(path)
        assert len(traj) == 1
        np.testing.assert_allclose(traj[0].position, [1, 2, 3])

    def test_camera_round_trip(self, tmp_path, camera):
        path = tmp_path / "camera.json"
        save_camera(camera, path)
        assert load_camera(path) == camera

    def test_camera_validation(self):
        with pytest.raises(InvalidParameterError):
            CameraModel(fx=-1, fy=1, cx=0, cy=0, width=10, height=10)
        with pytest.raises(InvalidParameterError):
            CameraModel(fx=1, fy=1, cx=20, cy=0, width=10, height=10)
