"""Memory/power probes and the report model."""

from __future__ import annotations

import pytest

from slamkit.metrics.probes import (
    AllocationHookProbe,
    FilePowerProbe,
    ProbeUnavailable,
    ResidentSetProbe,
    make_memory_probe,
    make_power_probe,
)
from slamkit.metrics.report import MetricRow, RunReport, summarize_rows
from slamkit.runner.export import export_report, import_csv_rows, import_report


class TestMemoryProbes:
    def test_allocation_hook_sees_python_allocations(self):
        probe = AllocationHookProbe()
        probe.start()
        try:
            before = probe.sample()
            block = bytearray(8 * 1024 * 1024)
            after = probe.sample()
            assert after - before >= 8 * 1024 * 1024
            del block
            assert probe.sample() < after
        finally:
            probe.stop()

    def test_resident_set_positive(self):
        assert ResidentSetProbe().sample() > 1024 * 1024

    def test_factory(self):
        assert make_memory_probe("alloc").kind == "allocation-hook"
        assert make_memory_probe("rss").kind == "resident-set"
        assert make_memory_probe("none").sample() is None
        with pytest.raises(ValueError):
            make_memory_probe("bogus")


class TestPowerProbe:
    def test_linear_interpolation(self, tmp_path):
        trace = tmp_path / "power.txt"
        trace.write_text("0.0 5.0\n1.0 7.0\n")
        probe = FilePowerProbe(trace)
        assert probe.sample_at(0.5) == pytest.approx(6.0)
        assert probe.sample_at(0.25) == pytest.approx(5.5)

    def test_clamped_to_trace_endpoints(self, tmp_path):
        trace = tmp_path / "power.txt"
        trace.write_text("1.0 4.2\n2.0 4.2\n")
        probe = FilePowerProbe(trace)
        assert probe.sample_at(0.0) == 4.2
        assert probe.sample_at(99.0) == 4.2

    def test_none_probe_yields_absent_not_zero(self):
        assert make_power_probe(None).sample() is None

    def test_malformed_traces(self, tmp_path):
        empty = tmp_path / "empty.txt"
        empty.write_text("# nothing\n")
        with pytest.raises(ProbeUnavailable):
            FilePowerProbe(empty)
        unsorted = tmp_path / "unsorted.txt"
        unsorted.write_text("1.0 5\n0.5 6\n")
        with pytest.raises(ProbeUnavailable):
            FilePowerProbe(unsorted)
        bad = tmp_path / "bad.txt"
        bad.write_text("1.0\n")
        with pytest.raises(ProbeUnavailable):
            FilePowerProbe(bad)


def make_rows(n=5):
    return [
        MetricRow(
            frame_index=k,
            timestamp=k * 0.1,
            duration=0.01 + 0.001 * k,
            phases={"icp": 0.005},
            memory_bytes=1000 + k,
            plugin_memory_bytes=500,
            power_watts=5.0 + k,
            ate=0.01 * k,
            tracking_status="tracking",
        )
        for k in range(n)
    ]


class TestReports:
    def test_summary_recomputable_from_rows(self):
        rows = make_rows(8)
        summary = summarize_rows(rows)
        ates = [r.ate for r in rows]
        assert summary.ate_mean == pytest.approx(sum(ates) / len(ates), abs=1e-12)
        assert summary.ate_max == pytest.approx(max(ates), abs=1e-12)
        assert summary.mean_fps == pytest.approx(len(rows) / sum(r.duration for r in rows), abs=1e-12)
        assert summary.peak_memory_bytes == max(r.memory_bytes for r in rows)
        assert summary.mean_power_watts == pytest.approx(
            sum(r.power_watts for r in rows) / len(rows), abs=1e-12)

    def test_json_round_trip_is_identical(self, tmp_path):
        report = RunReport(
            algorithm="gt-replay",
            library="/lib/gt-replay.py",
            datafile="x.slam",
            parameters={"sigma-trans": 0.1},
            seed=7,
            memory_probe="allocation-hook",
            rows=make_rows(4),
        )
        report.summary = summarize_rows(report.rows)
        path = tmp_path / "report.json"
        export_report([report], path, "json")
        back = import_report(path)
        assert len(back) == 1
        assert back[0] == report

    def test_csv_row_count_matches_frames(self, tmp_path):
        report = RunReport(algorithm="a", library="l", datafile="d", rows=make_rows(6))
        path = tmp_path / "rows.csv"
        export_report([report], path, "csv")
        rows = import_csv_rows(path)
        assert len(rows) == 6
        assert rows[2].ate == pytest.approx(report.rows[2].ate)
        assert rows[0].tracking_status == "tracking"

    def test_absent_values_survive_round_trip(self, tmp_path):
        row = MetricRow(frame_index=0, timestamp=0.0, duration=0.1,
                        memory_bytes=None, power_watts=None, ate=None)
        report = RunReport(algorithm="a", library="l", datafile="d", rows=[row])
        json_path = tmp_path / "r.json"
        export_report([report], json_path, "json")
        assert import_report(json_path)[0].rows[0].ate is None
        csv_path = tmp_path / "r.csv"
        export_report([report], csv_path, "csv")
        assert import_csv_rows(csv_path)[0].power_watts is None
