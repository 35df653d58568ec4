"""Acceptance gate: one test per criterion, each at its stated tolerance.

Every test prints a single PASS line on success (visible with -s or in the
captured output), so a full run doubles as the acceptance report.
"""

from __future__ import annotations

import io
import time

import numpy as np
import pytest
from conftest import build_euroc_fixture, build_tum_fixture
from helpers import random_pose, random_sim_transform

from slamkit.api import load_algorithm
from slamkit.datafile import SensorType, decode_gt_pose, decode_image, open_datafile
from slamkit.geometry import Pose, Timestamp, umeyama_align
from slamkit.ingest import convert_euroc, convert_icl_nuim, convert_tum
from slamkit.ingest.synthetic import SyntheticSceneConfig, generate_synthetic
from slamkit.metrics.probes import AllocationHookProbe
from slamkit.metrics.registration import IcpParams, icp
from slamkit.metrics.trajectory import associate, ate_aligned, ate_runtime, rpe
from slamkit.runner import AlgorithmRun, RunSpec, run_benchmark
from slamkit.runner.sweep import ParameterDomain, SweepSpec, compute_pareto, run_sweep

from test_datafile import build_random_datafile, roundtrip_in_memory
from test_metrics_trajectory import (
    brute_force_associate,
    make_trajectory,
    matrix_ate_oracle,
    matrix_rpe_oracle,
    pairs_of,
    sample,
)
from test_sweep import brute_force_front, make_sample


def passed(name: str) -> None:
    print(f"ACCEPTANCE PASS: {name}")


# ---------------------------------------------------------------------------
def test_criterion_datafile_round_trip():
    """>= 1000 random (sensors, frames) instances, write-read bit-exact, < 60 s."""
    start = time.monotonic()
    for seed in range(1000):
        sensors, gt_frames, in_frames = build_random_datafile(seed)
        got_sensors, got_gt, got_in = roundtrip_in_memory(sensors, gt_frames, in_frames)
        assert list(got_sensors) == sensors
        assert got_gt == gt_frames and got_in == in_frames
    elapsed = time.monotonic() - start
    assert elapsed < 60.0, f"round-trip property took {elapsed:.1f} s"
    passed(f"datafile round-trip (1000 instances, {elapsed:.1f} s)")


# ---------------------------------------------------------------------------
def test_criterion_converter_fidelity(tmp_path):
    """TUM/ICL-NUIM/EuRoC fixtures convert with exact timestamps and bit-exact
    payloads; the empty-ground-truth branch yields the EMPTY GT section."""
    # TUM with fractional timestamps
    tum_root = tmp_path / "tum"
    stamps = ["1305031102.175304", "1305031102.211214", "1305031102.243211"]
    pixels = build_tum_fixture(tum_root, stamps, [f"{s} 1 2 3 0 0 0 1" for s in stamps])
    tum_out = tmp_path / "tum.slam"
    convert_tum(tum_root, tum_out)
    reader = open_datafile(tum_out)
    expected = [Timestamp.from_decimal_string(s) for s in stamps]
    rgb = [f for f in reader.input_frames() if f.sensor_index == 0]
    depth = [f for f in reader.input_frames() if f.sensor_index == 1]
    assert [f.timestamp for f in rgb] == expected
    assert [f.timestamp for f in depth] == expected
    for i, frame in enumerate(rgb):
        assert np.array_equal(decode_image(frame.payload, reader.sensors[0]), pixels["rgb"][i])
    for i, frame in enumerate(depth):
        assert np.array_equal(decode_image(frame.payload, reader.sensors[1]), pixels["depth"][i])

    # ICL-NUIM: TUM layout plus a scene cloud
    icl_root = tmp_path / "icl"
    build_tum_fixture(icl_root, ["0.0", "0.1"], ["0.0 0 0 0 0 0 0 1", "0.1 1 0 0 0 0 0 1"])
    (icl_root / "cloud.xyz").write_text("\n".join(f"{i} {i} {i}" for i in range(10)))
    icl_out = tmp_path / "icl.slam"
    summary = convert_icl_nuim(icl_root, icl_out)
    assert summary.frames_per_sensor["gt_point_cloud"] == 1

    # EuRoC with nanosecond timestamps
    euroc_root = tmp_path / "euroc"
    ns = 1403636579763555584
    euroc_pixels = build_euroc_fixture(
        euroc_root, [ns, ns + 50_000_000],
        imu_rows=[f"{ns},0,0,0,0,0,-9.81"],
        gt_rows=[f"{ns},1,2,3,1,0,0,0"],
    )
    euroc_out = tmp_path / "euroc.slam"
    convert_euroc(euroc_root, euroc_out)
    reader = open_datafile(euroc_out)
    first = next(iter(reader.input_frames()))
    assert (first.timestamp.seconds, first.timestamp.nanoseconds) == (1403636579, 763555584)
    assert np.array_equal(decode_image(first.payload, reader.sensors[0]), euroc_pixels["cam0"][0])

    # empty ground truth -> EMPTY GT section, sensor still present
    empty_root = tmp_path / "tum_empty"
    build_tum_fixture(empty_root, ["1.0"], gt_rows=None)
    empty_out = tmp_path / "empty.slam"
    convert_tum(empty_root, empty_out)
    reader = open_datafile(empty_out)
    assert list(reader.gt_frames()) == []
    assert any(s.sensor_type == SensorType.GT_POSE for s in reader.sensors)
    passed("converter fidelity (TUM, ICL-NUIM, EuRoC, EMPTY GT branch)")


# ---------------------------------------------------------------------------
def test_criterion_metric_oracles():
    """ate_runtime, rpe, associate match brute force on 500 seeded random
    trajectory pairs within 1e-9; the three invariance properties hold."""
    rng = np.random.default_rng(2024)
    for trial in range(500):
        n = int(rng.integers(2, 14))
        gt = make_trajectory(rng, n)
        est = make_trajectory(rng, n)
        pairs = pairs_of(est, gt)

        want_errors, want_rmse = matrix_ate_oracle(pairs)
        got = ate_runtime(pairs)
        assert np.max(np.abs(got.errors - want_errors)) < 1e-9
        assert abs(got.rmse - want_rmse) < 1e-9

        delta = int(rng.integers(1, n))
        want_t, want_r = matrix_rpe_oracle(pairs, delta)
        got_rpe = rpe(pairs, delta=delta)
        assert np.max(np.abs(got_rpe.trans_errors - want_t)) < 1e-9
        assert np.max(np.abs(got_rpe.rot_errors - want_r)) < 1e-7

        gt_times = np.sort(rng.uniform(0, 2, size=int(rng.integers(0, 15))))
        est_times = np.sort(rng.uniform(0, 2, size=int(rng.integers(0, 15))))
        gt_samples = [sample(t, Pose.identity()) for t in gt_times]
        est_samples = [sample(t, Pose.identity()) for t in est_times]
        max_dt = float(rng.uniform(0.02, 0.4))
        got_assoc = associate(est_samples, gt_samples, max_dt)
        want_assoc = brute_force_associate(est_samples, gt_samples, max_dt)
        assert [(p.gt.timestamp, p.est.timestamp) for p in got_assoc] == \
               [(p.gt.timestamp, p.est.timestamp) for p in want_assoc]

    # invariance 1: ATE under a common left-composition
    rng = np.random.default_rng(77)
    gt = make_trajectory(rng, 10)
    est = make_trajectory(rng, 10)
    base = ate_runtime(pairs_of(est, gt)).errors
    world = random_pose(rng)
    moved = ate_runtime(pairs_of(
        [sample(s.timestamp.to_float_seconds(), world.compose(s.pose)) for s in est],
        [sample(s.timestamp.to_float_seconds(), world.compose(s.pose)) for s in gt],
    )).errors
    assert np.max(np.abs(base - moved)) < 1e-9

    # invariance 2: RPE under independent constant left-offsets
    off_est, off_gt = random_pose(rng), random_pose(rng)
    base_rpe = rpe(pairs_of(est, gt), delta=1)
    moved_rpe = rpe(pairs_of(
        [sample(s.timestamp.to_float_seconds(), off_est.compose(s.pose)) for s in est],
        [sample(s.timestamp.to_float_seconds(), off_gt.compose(s.pose)) for s in gt],
    ), delta=1)
    assert np.max(np.abs(base_rpe.trans_errors - moved_rpe.trans_errors)) < 1e-9

    # invariance 3: similarity-mode aligned ATE under uniform scaling
    base_sim = ate_aligned(pairs_of(est, gt), "similarity").rmse
    est_scaled = [sample(s.timestamp.to_float_seconds(),
                         Pose(s.pose.rotation, s.pose.translation * 4.2)) for s in est]
    scaled_sim = ate_aligned(pairs_of(est_scaled, gt), "similarity").rmse
    assert abs(base_sim - scaled_sim) < 1e-9
    passed("metric oracles (500 seeded pairs, 3 invariance properties)")


# ---------------------------------------------------------------------------
def test_criterion_alignment_recovery():
    """umeyama recovers 1000 seeded Sim(3)/SE(3) transforms within 1e-6 per
    component; ICP recovers small rigid perturbations within 1e-4 with
    monotone non-increasing residuals."""
    rng = np.random.default_rng(31)
    for trial in range(1000):
        with_scale = trial % 2 == 0
        truth = random_sim_transform(rng, with_scale=with_scale)
        src = rng.normal(size=(int(rng.integers(10, 60)), 3))
        got = umeyama_align(src, truth.apply(src), with_scale=with_scale)
        assert abs(got.scale - truth.scale) < 1e-6
        assert np.max(np.abs(got.rotation - truth.rotation)) < 1e-6
        assert np.max(np.abs(got.translation - truth.translation)) < 1e-6

    from slamkit.geometry import quat_from_axis_angle

    for trial in range(20):
        per = 200
        planes = [
            np.column_stack([rng.uniform(-1, 1, per), rng.uniform(-1, 1, per), np.zeros(per)]),
            np.column_stack([rng.uniform(-1, 1, per), np.zeros(per), rng.uniform(-1, 1, per)]),
            np.column_stack([np.zeros(per), rng.uniform(-1, 1, per), rng.uniform(-1, 1, per)]),
        ]
        target = np.concatenate(planes)  # 600 points, 3 orientations
        truth = Pose(
            quat_from_axis_angle(rng.normal(size=3), rng.uniform(-np.radians(5), np.radians(5))),
            rng.uniform(-0.05, 0.05, size=3),
        )
        result = icp(truth.inverse().apply(target), target,
                     IcpParams(max_iterations=100, tolerance=1e-12))
        err = truth.inverse().compose(result.transform)
        assert np.linalg.norm(err.translation) < 1e-4
        assert err.rotation_angle() < 1e-4
        history = result.residual_history
        assert all(a >= b for a, b in zip(history, history[1:]))
    passed("alignment recovery (1000 umeyama, 20 ICP perturbations)")


# ---------------------------------------------------------------------------
@pytest.fixture(scope="module")
def long_scene(tmp_path_factory):
    """1000-frame low-resolution scene for the statistical oracle runs."""
    path = tmp_path_factory.mktemp("acceptance") / "long.slam"
    cfg = SyntheticSceneConfig(
        width=16, height=12, fx=10.0, fy=10.0, cx=7.5, cy=5.5,
        frame_count=1000, angular_rate=0.006, wall_grid_step=0.5,
    )
    generate_synthetic(cfg, path)
    return path


def test_criterion_end_to_end_oracles(long_scene, tmp_path):
    """gt-replay: runtime ATE RMSE <= 1e-9. noisy-replay (sigma 0.01 m, 1000
    frames): pipeline ATE RMSE within 15% of the log-recomputed RMSE.
    drift-only: RPE(delta=1) equals the drift within 1e-9."""
    base = dict(datafile=str(long_scene), deliver_gt_frames=True, memory_probe="none")

    report = run_benchmark(RunSpec(algorithms=[AlgorithmRun("gt-replay")], **base),
                           stream=io.StringIO())[0]
    assert report.summary.frames_processed == 1000
    assert report.summary.ate_rmse <= 1e-9

    # same oracle over a converted (TUM-layout) fixture, not just synthetic data
    tum_root = tmp_path / "tum_replay"
    stamps = [f"{10 + k * 0.0333:.4f}" for k in range(6)]
    build_tum_fixture(tum_root, stamps, [f"{s} {i} 0 1 0 0 0 1" for i, s in enumerate(stamps)])
    tum_file = tmp_path / "tum_replay.slam"
    convert_tum(tum_root, tum_file)
    converted = run_benchmark(
        RunSpec(datafile=str(tum_file), algorithms=[AlgorithmRun("gt-replay")],
                deliver_gt_frames=True, memory_probe="none"),
        stream=io.StringIO(),
    )[0]
    assert converted.summary.frames_processed == 6
    assert converted.summary.ate_rmse <= 1e-9

    log_path = tmp_path / "noise.log"
    noisy = run_benchmark(
        RunSpec(algorithms=[AlgorithmRun("noisy-replay", {
            "sigma-trans": 0.01, "seed": 17, "noise-log": str(log_path)})], **base),
        stream=io.StringIO(),
    )[0]
    from slamkit.algorithms import parse_noise_log

    rows = parse_noise_log(log_path)
    assert len(rows) == 1000
    reader = open_datafile(long_scene)
    gt_poses = [Pose.from_matrix(decode_gt_pose(f.payload)) for f in reader.gt_frames()
                if reader.sensors[f.sensor_index].sensor_type == SensorType.GT_POSE]
    # recompute the expected runtime ATE directly from the logged samples
    perturbed = [gt.compose(Pose(np.array([1.0, 0, 0, 0]), row["eps"]))
                 for gt, row in zip(gt_poses, rows)]
    alignment = gt_poses[0].compose(perturbed[0].inverse())
    expected = np.array([
        np.linalg.norm(gt.translation - alignment.compose(est).translation)
        for gt, est in zip(gt_poses, perturbed)
    ])
    expected_rmse = float(np.sqrt((expected**2).mean()))
    assert noisy.summary.ate_rmse == pytest.approx(expected_rmse, rel=0.15)

    drift = run_benchmark(
        RunSpec(algorithms=[AlgorithmRun("noisy-replay", {"drift-per-frame": 0.001})], **base),
        stream=io.StringIO(),
    )[0]
    assert drift.summary.rpe_trans_rmse == pytest.approx(0.001, abs=1e-9)
    passed("end-to-end oracles (gt-replay zero ATE, noisy ATE vs log, drift RPE)")


# ---------------------------------------------------------------------------
def test_criterion_dense_pipeline(tmp_path):
    """icp-odometry on the noise-free synthetic circle (64 frames, 160x120):
    offline-aligned ATE RMSE < 0.01 m, RER < 0.01 m, total runtime < 2 min;
    stride 2 -> 8 strictly reduces mean per-frame duration on the same input."""
    start = time.monotonic()
    path = tmp_path / "circle.slam"
    generate_synthetic(SyntheticSceneConfig(), path)  # 64 frames, 160x120

    spec = RunSpec(datafile=str(path), algorithms=[AlgorithmRun("icp-odometry")],
                   memory_probe="none", compute_rer=True)
    report = run_benchmark(spec, stream=io.StringIO())[0]
    assert report.failure is None
    assert report.summary.frames_processed >= 60
    assert report.summary.ate_aligned_rmse < 0.01
    assert report.summary.rer < 0.01

    durations = {}
    for stride in (2, 8):
        spec = RunSpec(
            datafile=str(path),
            algorithms=[AlgorithmRun("icp-odometry", {"stride": stride})],
            frame_limit=12, memory_probe="none",
        )
        rows = run_benchmark(spec, stream=io.StringIO())[0].rows
        durations[stride] = float(np.mean([r.duration for r in rows]))
    assert durations[8] < durations[2]

    elapsed = time.monotonic() - start
    assert elapsed < 120.0, f"dense pipeline took {elapsed:.0f} s"
    passed(
        f"dense pipeline (ATE {report.summary.ate_aligned_rmse * 1000:.2f} mm, "
        f"RER {report.summary.rer * 1000:.2f} mm, {elapsed:.0f} s, "
        f"stride 2/8 mean durations {durations[2] * 1000:.1f}/{durations[8] * 1000:.1f} ms)"
    )


# ---------------------------------------------------------------------------
def test_criterion_pareto_correctness(tmp_path):
    """compute_pareto equals the O(n^2) dominance filter on 1000 seeded
    samples; a 3x3 icp-odometry grid sweep has zero dominated front members."""
    rng = np.random.default_rng(5150)
    samples = [make_sample(float(rng.integers(0, 50)) / 10.0,
                           float(rng.integers(0, 50)) / 10.0) for _ in range(1000)]
    got = compute_pareto(samples)
    want = brute_force_front(samples)
    assert [(s.mean_duration, s.ate_rmse) for s in got] == \
           [(s.mean_duration, s.ate_rmse) for s in want]

    path = tmp_path / "sweep.slam"
    cfg = SyntheticSceneConfig(width=80, height=60, cx=39.5, cy=29.5, fx=25.0, fy=25.0,
                               frame_count=6, wall_grid_step=0.5)
    generate_synthetic(cfg, path)
    result = run_sweep(SweepSpec(
        base=RunSpec(datafile=str(path), algorithms=[AlgorithmRun("icp-odometry")],
                     memory_probe="none"),
        domains={
            "stride": ParameterDomain(values=[2, 4, 8]),
            "max-iterations": ParameterDomain(values=[4, 8, 16]),
        },
        strategy="grid",
    ))
    assert len(result.samples) == 9
    assert result.front == brute_force_front(result.samples)
    for member in result.front:
        dominated = any(
            other.valid
            and other.mean_duration <= member.mean_duration
            and other.ate_rmse <= member.ate_rmse
            and (other.mean_duration < member.mean_duration or other.ate_rmse < member.ate_rmse)
            for other in result.samples if other is not member
        )
        assert not dominated
    passed("pareto correctness (1000-sample oracle match, 3x3 sweep front clean)")


# ---------------------------------------------------------------------------
ALLOC_PLUGIN = '''
from slamkit.api import OutputKind
from slamkit.geometry import Pose

sb_api_version = 2
_state = {}

def sb_new_slam_configuration(config):
    return True

def sb_init_slam_system(config):
    _state["pose"] = config.register_output("pose", OutputKind.POSE)
    _state["block"] = bytearray(64 * 1024 * 1024)
    return True

def sb_update_frame(config, frame):
    return True

def sb_process_once(config):
    return True

def sb_update_outputs(config):
    _state["pose"].set(Pose.identity())
    return True

def sb_clean_slam_system():
    _state.pop("block", None)
    return True
'''


def test_criterion_plugin_contract(tmp_path):
    """Conformance via dynamic loading for all three reference plugins plus
    the loader's negative cases; a 64 MiB allocation fixture is measured by
    the allocation-hook probe within +5%."""
    from slamkit.api import (
        ApiVersionMismatch,
        DuplicateParameter,
        LifecycleError,
        MissingSymbol,
        OutputKind,
    )
    from slamkit.plugins import BUNDLED, bundled_plugin_path
    from test_plugins import full_sensor_table, imu_frame

    for name in BUNDLED:
        handle = load_algorithm(bundled_plugin_path(name))
        with pytest.raises(LifecycleError):
            handle.init(full_sensor_table())
        handle.configure(ui_enabled=False)
        assert handle.init(full_sensor_table())
        assert handle.update_frame(imu_frame(1)) is False  # ignore-unknown rule
        kinds = {c.kind for c in handle.config.outputs.values()}
        assert OutputKind.RGB_FRAME not in kinds  # ui_enabled=False behavior
        assert handle.clean() in (True, False)
        with pytest.raises(LifecycleError):
            handle.clean()

    missing = tmp_path / "missing.py"
    missing.write_text(ALLOC_PLUGIN.replace("def sb_process_once", "def sb_other"))
    with pytest.raises(MissingSymbol):
        load_algorithm(missing)

    old = tmp_path / "old.py"
    old.write_text(ALLOC_PLUGIN.replace("sb_api_version = 2", "sb_api_version = 1"))
    with pytest.raises(ApiVersionMismatch):
        load_algorithm(old)

    dup = tmp_path / "dup.py"
    dup.write_text(ALLOC_PLUGIN.replace(
        "def sb_new_slam_configuration(config):\n    return True",
        "def sb_new_slam_configuration(config):\n"
        "    from slamkit.api import ParameterSpec, ParamType\n"
        "    config.declare_parameter(ParameterSpec('a', 'alpha', '', ParamType.INT, 1))\n"
        "    config.declare_parameter(ParameterSpec('a', 'alpha', '', ParamType.INT, 2))\n"
        "    return True",
    ))
    with pytest.raises(DuplicateParameter):
        load_algorithm(dup).configure()

    alloc = tmp_path / "alloc64.py"
    alloc.write_text(ALLOC_PLUGIN)
    probe = AllocationHookProbe()
    probe.start()
    try:
        handle = load_algorithm(alloc)
        handle.configure()
        before = probe.sample()
        assert handle.init(full_sensor_table())
        delta = probe.sample() - before
        expected = 64 * 1024 * 1024
        assert expected <= delta < expected * 1.05, f"measured {delta} bytes"
        handle.clean()
        # released buffers: net plugin allocations back to ~0 after clean
        assert abs(probe.sample() - before) < 1024 * 1024
    finally:
        probe.stop()
    passed("plugin contract (3 plugins dynamic, loader negatives, 64 MiB probe)")


# ---------------------------------------------------------------------------
def test_criterion_cli_output_format(tmp_path, capsys):
    """Header row `frame ... <algo>_ATE`, numeric per-frame rows, and one ATE
    column per loaded algorithm."""
    from slamkit.runner.cli import main as sb_loader_main

    path = tmp_path / "cli.slam"
    generate_synthetic(SyntheticSceneConfig(frame_count=6, wall_grid_step=0.5), path)
    code = sb_loader_main([
        "-i", str(path),
        "-load", "gt-replay", "-load", "noisy-replay",
        "--deliver-gt-frames", "--memory-probe", "none",
    ])
    assert code == 0
    lines = capsys.readouterr().out.strip().splitlines()
    header = lines[0].split("\t")
    assert header[0] == "frame"
    assert "gt-replay_ATE" in header and "noisy-replay_ATE" in header
    ate_cols = [i for i, h in enumerate(header) if h.endswith("_ATE")]
    assert len(ate_cols) == 2
    for line in lines[1:]:
        cells = line.split("\t")
        assert int(cells[0]) >= 0
        for col in ate_cols:
            float(cells[col])  # numeric ATE in the paper's listing shape
    with capsys.disabled():
        passed("CLI output format (frame header, two ATE columns, numeric rows)")
