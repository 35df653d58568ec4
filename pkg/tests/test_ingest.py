"""Converter fidelity: exact timestamps, bit-exact payloads, error reporting."""

from __future__ import annotations

import numpy as np
import pytest
from conftest import build_euroc_fixture, build_tum_fixture

from slamkit.datafile import (
    SensorType,
    decode_gt_pose,
    decode_image,
    decode_imu_sample,
    decode_point_cloud,
    open_datafile,
    summarize_datafile,
)
from slamkit.geometry import Pose, Timestamp
from slamkit.ingest import (
    BadCsvHeader,
    InvalidConfig,
    MissingListFile,
    MissingRaster,
    SyntheticSceneConfig,
    UnparseableLine,
    convert_euroc,
    convert_icl_nuim,
    convert_tum,
    generate_synthetic,
    parse_synthetic_config,
)
from slamkit.ingest.cli import main as dataset_generator_main


class TestTum:
    def test_three_frame_fixture_exact_timestamps(self, tmp_path):
        root = tmp_path / "tum"
        stamps = ["1305031102.175304", "1305031102.211214", "1305031102.243211"]
        gt_rows = [f"{ts} 1 2 3 0 0 0 1" for ts in stamps]
        pixels = build_tum_fixture(root, stamps, gt_rows)
        out = tmp_path / "tum.slam"
        summary = convert_tum(root, out)
        assert summary.frames_per_sensor == {"rgb": 3, "depth": 3, "gt_pose": 3}

        reader = open_datafile(out)
        expected_ns = [Timestamp.from_decimal_string(s) for s in stamps]
        gt = list(reader.gt_frames())
        assert [f.timestamp for f in gt] == expected_ns
        by_sensor = {0: [], 1: []}
        for frame in reader.input_frames():
            by_sensor[frame.sensor_index].append(frame)
        assert [f.timestamp for f in by_sensor[0]] == expected_ns
        assert [f.timestamp for f in by_sensor[1]] == expected_ns
        # payloads bit-exact
        for i, frame in enumerate(by_sensor[0]):
            assert np.array_equal(decode_image(frame.payload, reader.sensors[0]), pixels["rgb"][i])
        for i, frame in enumerate(by_sensor[1]):
            assert np.array_equal(decode_image(frame.payload, reader.sensors[1]), pixels["depth"][i])

    def test_identity_gt_row_decodes_to_identity_pose(self, tmp_path):
        root = tmp_path / "tum"
        build_tum_fixture(root, ["0.0"], ["0.0 0 0 0 0 0 0 1"])
        out = tmp_path / "x.slam"
        convert_tum(root, out)
        gt = list(open_datafile(out).gt_frames())
        pose = Pose.from_matrix(decode_gt_pose(gt[0].payload))
        assert pose.almost_equal(Pose.identity(), tol=1e-9)

    def test_empty_groundtruth_produces_empty_gt_section(self, tmp_path):
        root = tmp_path / "tum"
        build_tum_fixture(root, ["5.0", "5.5"], gt_rows=None)
        out = tmp_path / "x.slam"
        summary = convert_tum(root, out)
        reader = open_datafile(out)
        assert list(reader.gt_frames()) == []
        assert any(s.sensor_type == SensorType.GT_POSE for s in reader.sensors)
        assert summary.frames_per_sensor["gt_pose"] == 0

    def test_missing_list_file(self, tmp_path):
        root = tmp_path / "tum"
        build_tum_fixture(root, ["1.0"], ["1.0 0 0 0 0 0 0 1"])
        (root / "depth.txt").unlink()
        with pytest.raises(MissingListFile):
            convert_tum(root, tmp_path / "x.slam")

    def test_unparseable_line_carries_number(self, tmp_path):
        root = tmp_path / "tum"
        build_tum_fixture(root, ["1.0"], ["1.0 0 0 0 0 0 0 1"])
        (root / "rgb.txt").write_text("# header\n1.0 rgb/1.0.ppm\nbroken\n")
        with pytest.raises(UnparseableLine) as err:
            convert_tum(root, tmp_path / "x.slam")
        assert err.value.line_number == 3

    def test_missing_raster(self, tmp_path):
        root = tmp_path / "tum"
        build_tum_fixture(root, ["1.0"], ["1.0 0 0 0 0 0 0 1"])
        (root / "rgb" / "1.0.ppm").unlink()
        with pytest.raises(MissingRaster):
            convert_tum(root, tmp_path / "x.slam")

    def test_accelerometer_rows_become_imu_frames(self, tmp_path):
        root = tmp_path / "tum"
        build_tum_fixture(
            root, ["1.0"], ["1.0 0 0 0 0 0 0 1"],
            accel_rows=["1.0 0.1 0.2 9.8"],
        )
        out = tmp_path / "x.slam"
        summary = convert_tum(root, out)
        assert summary.frames_per_sensor["imu"] == 1
        assert summary.notes  # flagged as accelerometer-only
        reader = open_datafile(out)
        imu_frames = [f for f in reader.input_frames()
                      if reader.sensors[f.sensor_index].sensor_type == SensorType.IMU]
        gyro, accel = decode_imu_sample(imu_frames[0].payload)
        assert np.array_equal(gyro, [0.0, 0.0, 0.0])
        assert np.allclose(accel, [0.1, 0.2, 9.8], atol=1e-6)

    def test_camera_file_overrides_intrinsics(self, tmp_path):
        root = tmp_path / "tum"
        build_tum_fixture(root, ["1.0"], ["1.0 0 0 0 0 0 0 1"],
                          camera_line="520.9 521.0 1.5 1.25 0.1 -0.2 0 0 0.05")
        out = tmp_path / "x.slam"
        convert_tum(root, out)
        cam = open_datafile(out).sensors[0]
        assert cam.fx == pytest.approx(520.9, abs=1e-4)
        assert cam.distortion[0] == pytest.approx(0.1, abs=1e-6)

    def test_freiburg_style_duration(self, tmp_path):
        # fixture spanning the Freiburg1/xyz duration: last - first = 30.1 s
        root = tmp_path / "tum"
        stamps = ["100.0", "115.05", "130.1"]
        build_tum_fixture(root, stamps, [f"{s} 0 0 0 0 0 0 1" for s in stamps])
        out = tmp_path / "x.slam"
        convert_tum(root, out)
        assert summarize_datafile(out).duration_seconds == pytest.approx(30.1, abs=1e-9)


class TestIclNuim:
    def test_scene_cloud_becomes_gt_point_cloud_frame(self, tmp_path):
        root = tmp_path / "icl"
        build_tum_fixture(root, ["0.0"], ["0.0 0 0 0 0 0 0 1"])
        rng = np.random.default_rng(3)
        cloud = rng.normal(size=(100, 3)).astype(np.float32)
        lines = ["ply", "format ascii 1.0", "element vertex 100",
                 "property float x", "property float y", "property float z", "end_header"]
        lines += [" ".join(f"{v:.6f}" for v in p) for p in cloud]
        (root / "scene.ply").write_text("\n".join(lines) + "\n")
        out = tmp_path / "icl.slam"
        summary = convert_icl_nuim(root, out)
        assert summary.frames_per_sensor["gt_point_cloud"] == 1
        reader = open_datafile(out)
        cloud_frames = [f for f in reader.gt_frames()
                        if reader.sensors[f.sensor_index].sensor_type == SensorType.GT_POINT_CLOUD]
        assert len(cloud_frames) == 1
        assert decode_point_cloud(cloud_frames[0].payload).shape == (100, 3)

    def test_absent_cloud_emits_no_cloud_sensor(self, tmp_path):
        root = tmp_path / "icl"
        build_tum_fixture(root, ["0.0"], ["0.0 0 0 0 0 0 0 1"])
        out = tmp_path / "icl.slam"
        summary = convert_icl_nuim(root, out)
        assert "gt_point_cloud" not in summary.frames_per_sensor
        types = [s.sensor_type for s in open_datafile(out).sensors]
        assert SensorType.GT_POINT_CLOUD not in types

    def test_trajectory_of_four_poses_in_order(self, tmp_path):
        root = tmp_path / "icl"
        stamps = ["0.0", "0.1", "0.2", "0.3"]
        gt = [f"{s} {i} 0 0 0 0 0 1" for i, s in enumerate(stamps)]
        build_tum_fixture(root, stamps, gt)
        out = tmp_path / "icl.slam"
        convert_icl_nuim(root, out)
        reader = open_datafile(out)
        poses = [Pose.from_matrix(decode_gt_pose(f.payload)) for f in reader.gt_frames()]
        assert len(poses) == 4
        assert [p.translation[0] for p in poses] == [0.0, 1.0, 2.0, 3.0]


class TestEuroc:
    def test_imu_payload_order(self, tmp_path):
        root = tmp_path / "euroc"
        build_euroc_fixture(
            root, [1000000000],
            imu_rows=["1000000000,0,0,0,0,0,-9.81"],
            gt_rows=["1000000000,0,0,0,1,0,0,0"],
        )
        out = tmp_path / "euroc.slam"
        convert_euroc(root, out)
        reader = open_datafile(out)
        imu = [f for f in reader.input_frames()
               if reader.sensors[f.sensor_index].sensor_type == SensorType.IMU]
        gyro, accel = decode_imu_sample(imu[0].payload)
        assert np.array_equal(gyro, [0.0, 0.0, 0.0])
        assert np.allclose(accel, [0.0, 0.0, -9.81], atol=1e-6)

    def test_nanosecond_timestamp_split(self, tmp_path):
        root = tmp_path / "euroc"
        ts = 1403636579763555584
        build_euroc_fixture(root, [ts])
        out = tmp_path / "euroc.slam"
        convert_euroc(root, out)
        frame = next(iter(open_datafile(out).input_frames()))
        assert (frame.timestamp.seconds, frame.timestamp.nanoseconds) == (1403636579, 763555584)

    def test_single_camera_sensor_count(self, tmp_path):
        root = tmp_path / "euroc"
        build_euroc_fixture(
            root, [0, 50_000_000],
            imu_rows=["0,0,0,0,0,0,1"],
            gt_rows=["0,0,0,0,1,0,0,0"],
        )
        out = tmp_path / "euroc.slam"
        convert_euroc(root, out)
        assert len(open_datafile(out).sensors) == 3  # grey, imu, gt_pose

    def test_stereo_pair_and_payloads(self, tmp_path):
        root = tmp_path / "euroc"
        pixels = build_euroc_fixture(root, [0, 50_000_000], stereo=True)
        out = tmp_path / "euroc.slam"
        summary = convert_euroc(root, out)
        assert summary.frames_per_sensor["grey0"] == 2
        assert summary.frames_per_sensor["grey1"] == 2
        reader = open_datafile(out)
        first_cam0 = [f for f in reader.input_frames() if f.sensor_index == 0][0]
        assert np.array_equal(decode_image(first_cam0.payload, reader.sensors[0]), pixels["cam0"][0])

    def test_missing_header_rejected(self, tmp_path):
        root = tmp_path / "euroc"
        build_euroc_fixture(root, [0])
        (root / "cam0" / "data.csv").write_text("0,0.pgm\n")
        with pytest.raises(BadCsvHeader):
            convert_euroc(root, tmp_path / "x.slam")

    def test_missing_cam0_rejected(self, tmp_path):
        (tmp_path / "euroc").mkdir()
        with pytest.raises(MissingListFile):
            convert_euroc(tmp_path / "euroc", tmp_path / "x.slam")


def small_scene(**overrides) -> SyntheticSceneConfig:
    base = dict(
        room_half_extents=(2.0, 2.0, 1.0),
        width=16, height=12, fx=10.0, fy=10.0, cx=7.5, cy=5.5,
        radius=0.5, angular_rate=0.05, frame_count=4, rate_hz=30.0,
        wall_grid_step=0.5,
    )
    base.update(overrides)
    return SyntheticSceneConfig(**base)


def _oracle_ray_depth(origin, direction, extents):
    """Independent ray/box oracle: min positive bounded-face intersection."""
    best = np.inf
    for axis in range(3):
        for sign in (-1.0, 1.0):
            d = direction[axis]
            if d == 0.0:
                continue
            t = (sign * extents[axis] - origin[axis]) / d
            if t <= 0:
                continue
            hit = origin + t * direction
            others = [a for a in range(3) if a != axis]
            if all(abs(hit[a]) <= extents[a] + 1e-9 for a in others):
                best = min(best, t)
    return best


class TestSynthetic:
    def test_center_pixel_depth_is_exact(self, tmp_path):
        # camera at the room center with no rotation looks at the z=+1 wall
        cfg = small_scene(width=5, height=5, cx=2.0, cy=2.0, radius=0.0,
                          orientation="identity", depth_scale=1 / 5000)
        out = tmp_path / "synth.slam"
        generate_synthetic(cfg, out)
        reader = open_datafile(out)
        frame = next(iter(reader.input_frames()))
        from slamkit.datafile import decode_image

        depth = decode_image(frame.payload, reader.sensors[0])
        assert depth[2, 2] == 5000  # exactly 1.0 m in raw units

    def test_every_pixel_matches_analytic_oracle(self, tmp_path):
        cfg = small_scene(sigma_depth=0.0)
        out = tmp_path / "synth.slam"
        generate_synthetic(cfg, out)
        reader = open_datafile(out)
        gt_poses = [decode_gt_pose(f.payload) for f in reader.gt_frames()
                    if reader.sensors[f.sensor_index].sensor_type == SensorType.GT_POSE]
        cam = reader.sensors[0]
        extents = np.array(cfg.room_half_extents)
        for k, frame in enumerate(reader.input_frames()):
            depth = decode_image(frame.payload, cam).astype(np.float64) * cam.depth_scale
            pose = gt_poses[k]
            rot, origin = pose[:3, :3], pose[:3, 3]
            for v in range(0, cfg.height, 5):
                for u in range(0, cfg.width, 5):
                    ray_cam = np.array([(u - cam.cx) / cam.fx, (v - cam.cy) / cam.fy, 1.0])
                    t = _oracle_ray_depth(origin, rot @ ray_cam, extents)
                    # camera-z depth equals t because the camera ray has unit z
                    assert depth[v, u] == pytest.approx(t, abs=cam.depth_scale)

    def test_same_seed_is_bit_identical(self, tmp_path):
        cfg = small_scene(sigma_depth=0.005, seed=42)
        a, b = tmp_path / "a.slam", tmp_path / "b.slam"
        generate_synthetic(cfg, a)
        generate_synthetic(small_scene(sigma_depth=0.005, seed=42), b)
        assert a.read_bytes() == b.read_bytes()
        generate_synthetic(small_scene(sigma_depth=0.005, seed=43), b)
        assert a.read_bytes() != b.read_bytes()

    def test_invalid_configs_rejected(self):
        with pytest.raises(InvalidConfig):
            small_scene(radius=5.0).validate()
        with pytest.raises(InvalidConfig):
            small_scene(frame_count=1).validate()
        with pytest.raises(InvalidConfig):
            small_scene(sigma_depth=-0.1).validate()

    def test_config_file_round_trip(self, tmp_path):
        text = (
            "room_half_extents=2.0,2.0,1.0\n"
            "width=16\nheight=12\nfx=10\nfy=10\ncx=7.5\ncy=5.5\n"
            "radius=0.5\nangular_rate=0.05\nframe_count=4\nseed=9\n"
            "wall_grid_step=0.5\n"
        )
        path = tmp_path / "scene.cfg"
        path.write_text(text)
        cfg = parse_synthetic_config(path)
        assert cfg.frame_count == 4 and cfg.seed == 9
        path.write_text(text + "bogus_key=1\n")
        with pytest.raises(InvalidConfig):
            parse_synthetic_config(path)


class TestCli:
    def test_synthetic_generation_prints_summary(self, tmp_path, capsys):
        cfg_path = tmp_path / "scene.cfg"
        cfg_path.write_text(
            "width=16\nheight=12\nfx=10\nfy=10\ncx=7.5\ncy=5.5\n"
            "room_half_extents=2.0,2.0,1.0\nradius=0.5\nframe_count=3\nwall_grid_step=0.5\n"
        )
        out = tmp_path / "scene.slam"
        code = dataset_generator_main(
            ["--format", "synthetic", "--config", str(cfg_path), "--output", str(out)]
        )
        assert code == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert "depth 3" in lines
        assert "gt_pose 3" in lines
        assert out.exists()

    def test_tum_conversion_via_cli(self, tmp_path, tum_dir, capsys):
        out = tmp_path / "tum.slam"
        code = dataset_generator_main(
            ["--format", "tum", "--input", str(tum_dir), "--output", str(out)]
        )
        assert code == 0
        assert "rgb 3" in capsys.readouterr().out

    def test_error_exit_code(self, tmp_path, capsys):
        code = dataset_generator_main(
            ["--format", "tum", "--input", str(tmp_path / "nope"), "--output",
             str(tmp_path / "x.slam")]
        )
        assert code == 1
        assert "error" in capsys.readouterr().err
