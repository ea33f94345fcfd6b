import io

import numpy as np
import pytest

from ssfilt import bench


def test_record_validation():
    with pytest.raises(ValueError):
        bench.BenchRecord("sequential", "sideways", 2, 16, 1, "f32", 1.0, 5)
    with pytest.raises(ValueError):
        bench.BenchRecord("sequential", "forward", 2, 16, 1, "f32", 0.0, 5)
    with pytest.raises(ValueError):
        bench.BenchRecord("sequential", "forward", 2, 16, 1, "f32", 1.0, 4)


def test_csv_round_trip():
    records = [
        bench.BenchRecord("blocked-scan", "forward", 2, 1024, 4, "f32", 1.5e-4, 5),
        bench.BenchRecord("rtf", "forward", 2, 1024, 1, "f64", 3.25e-3, 7),
    ]
    buf = io.StringIO()
    bench.write_csv(buf, records)
    assert buf.getvalue().splitlines()[0] == ",".join(bench.CSV_COLUMNS)
    buf.seek(0)
    assert bench.read_csv(buf) == records


def test_csv_header_checked():
    with pytest.raises(ValueError):
        bench.read_csv(io.StringIO("implementation,direction\nx,forward\n"))


def test_median_time_counts_calls():
    calls = []
    t = bench.median_time(lambda: calls.append(1), warmup=2, runs=5)
    assert len(calls) == 7 and t > 0


@pytest.mark.parametrize("precision", ["f32", "f64"])
def test_small_run(precision):
    records = bench.run_benchmark(lengths=(64, 300), workers_list=(1, 3), precision=precision, block_size=32)
    forward = [r for r in records if r.direction == "forward"]
    # 4 serial implementations, 2 parallel ones at 2 worker counts, 2 lengths
    assert len(forward) == 2 * (4 + 2 * 2)
    assert len(records) - len(forward) == 2 * (3 + 2 * 2)
    assert all(r.precision == precision and r.iterations == bench.MIN_RUNS for r in records)
    assert all(r.timestamp is not None for r in records)


def test_minimum_runs_enforced():
    with pytest.raises(ValueError):
        bench.run_benchmark(lengths=(16,), runs=3)


def test_non_diagonalizable_skipped(monkeypatch, caplog):
    from ssfilt import errors

    def refuse(*a, **k):
        raise errors.NotDiagonalizableError("defective")

    monkeypatch.setattr("ssfilt.scan.diagonalize", refuse)
    records = bench.run_benchmark(lengths=(32,), implementations=("sequential", "diagonal-scan"), workers_list=(1,))
    assert {r.implementation for r in records} == {"sequential"}
    assert "skipped" in caplog.text


def test_tolerance_table_covers_precisions():
    for precision in bench.PRECISIONS:
        assert bench.TOLERANCES[precision]["default"] <= bench.TOLERANCES[precision]["diagonal-scan"]
    assert np.float32 in bench.PRECISIONS.values()
