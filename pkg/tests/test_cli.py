import io as _io

import numpy as np
import pytest

from ssfilt import TransferFunction, filter_tf
from ssfilt import bench as bench_mod
from ssfilt.cli import EXIT_BENCH, EXIT_CHECK, EXIT_DIMENSION, EXIT_DIVERGED, EXIT_PARSE, main
from ssfilt.io import read_coefficients, read_signal, write_coefficients, write_signal
from ssfilt.verify import oracle_df_filter, random_stable_tf


@pytest.fixture
def files(tmp_path):
    def make(tf, x, name="x.f64"):
        write_coefficients(tmp_path / "c.txt", tf)
        write_signal(tmp_path / name, x)
        return str(tmp_path / "c.txt"), str(tmp_path / name), str(tmp_path / ("y" + name[1:]))

    return make


class TestFilter:
    def test_identity_is_byte_identical(self, files):
        x = np.random.default_rng(0).standard_normal(100)
        c, i, o = files(TransferFunction([1, 0, 0], [1, 0, 0]), x)
        assert main(["filter", c, i, o]) == 0
        assert open(o, "rb").read() == open(i, "rb").read()

    def test_delay_text(self, files):
        c, i, o = files(TransferFunction([0, 1], [1, 0]), [1.0, 2.0, 3.0], "x.txt")
        assert main(["filter", c, i, o]) == 0
        np.testing.assert_array_equal(read_signal(o), [0.0, 1.0, 2.0])

    @pytest.mark.parametrize("strategy", ["sequential", "blocked-scan", "diagonal-scan"])
    def test_biquad_vs_oracle(self, files, strategy):
        tf = random_stable_tf(2, 0.9, 7)
        x = np.random.default_rng(7).standard_normal(500)
        c, i, o = files(tf, x)
        assert main(["filter", c, i, o, "--strategy", strategy, "--workers", "2", "--block-size", "64"]) == 0
        ref = oracle_df_filter(tf, x)
        assert np.max(np.abs(read_signal(o) - ref)) / np.max(np.abs(ref)) < 1e-6

    def test_initial_state_and_f32(self, files):
        c, i, o = files(TransferFunction([0, 1], [1, 0]), [1.0, 2.0])
        assert main(["filter", c, i, o, "--v0", "4", "--precision", "f32"]) == 0
        np.testing.assert_array_equal(read_signal(o), [4.0, 1.0])

    def test_parse_error(self, tmp_path, files):
        c, i, o = files(TransferFunction([1, 0], [1, 0]), [1.0])
        (tmp_path / "c.txt").write_text("1\nnope\n\n1\n")
        assert main(["filter", c, i, o]) == EXIT_PARSE

    def test_dimension_error(self, files):
        c, i, o = files(TransferFunction([1, 0, 0], [1, 0.1, 0]), [1.0, 2.0])
        assert main(["filter", c, i, o, "--v0", "1,2,3"]) == EXIT_DIMENSION

    def test_bad_workers(self, files):
        c, i, o = files(TransferFunction([1, 0], [1, 0]), [1.0])
        assert main(["filter", c, i, o, "--workers", "0"]) == EXIT_PARSE


class TestCheck:
    def test_passes(self, capsys):
        assert main(["check"]) == 0
        assert "PASS" in capsys.readouterr().out

    def test_tiny(self):
        assert main(["check", "--order", "1", "--length", "1"]) == 0

    def test_f32_blocked(self):
        assert main(["check", "--order", "3", "--precision", "f32", "--strategy", "blocked-scan", "--workers", "2"]) == 0

    def test_corrupted_fails(self, capsys):
        assert main(["check", "--corrupt", "dA"]) == EXIT_CHECK
        assert "worst offender dA" in capsys.readouterr().err


class TestBench:
    def test_small_grid_csv(self, tmp_path):
        out = tmp_path / "b.csv"
        args = ["bench", "--length", "16", "64", "--workers", "1", "2", "--csv", str(out)]
        assert main(args) == 0
        with open(out) as fh:
            records = bench_mod.read_csv(fh)
        impls = {r.implementation for r in records}
        assert impls == set(bench_mod.IMPLEMENTATIONS)
        assert not any(r.implementation == "rtf" and r.direction == "backward" for r in records)
        assert {r.workers for r in records if r.implementation == "blocked-scan"} == {1, 2}

    def test_cross_validation_failure(self, monkeypatch):
        real = bench_mod._forward_backward

        def broken(impl, sys, tf, x, cfg):
            fwd, bwd = real(impl, sys, tf, x, cfg)
            if impl != "unrolled":
                return fwd, bwd
            return (lambda: (fwd()[0] + 1.0, fwd()[1])), bwd

        monkeypatch.setattr(bench_mod, "_forward_backward", broken)
        assert main(["bench", "--length", "16", "--strategy", "unrolled"]) == EXIT_BENCH


class TestFit:
    def test_recovers_default_target(self, tmp_path, capsys):
        out = tmp_path / "fit.txt"
        assert main(["fit", "--seed", "1", "--output", str(out)]) == 0
        got = read_coefficients(out)
        truth = random_stable_tf(2, 0.9, 1)
        assert max(np.max(np.abs(got.b - truth.b)), np.max(np.abs(got.a - truth.a))) < 1e-3
        assert "iterations:" in capsys.readouterr().out

    def test_zero_iterations_at_target(self, tmp_path, capsys):
        tf = random_stable_tf(2, 0.9, 0)
        write_coefficients(tmp_path / "t.txt", tf)
        assert main(["fit", "--target", str(tmp_path / "t.txt"), "--init", str(tmp_path / "t.txt")]) == 0
        assert "iterations: 0" in capsys.readouterr().out

    def test_target_output_file(self, tmp_path):
        tf = TransferFunction([0.5, 0.2], [1.0, -0.6])
        x = np.random.default_rng(0).standard_normal(1024)
        write_signal(tmp_path / "x.f64", x)
        write_signal(tmp_path / "t.f64", filter_tf(tf, x))
        args = ["fit", "--order", "1", "--input", str(tmp_path / "x.f64"), "--target-output", str(tmp_path / "t.f64")]
        assert main(args + ["--output", str(tmp_path / "o.txt")]) == 0
        got = read_coefficients(tmp_path / "o.txt")
        np.testing.assert_allclose(got.a, tf.a, atol=1e-4)

    def test_unstable_init_diverges(self, tmp_path):
        write_coefficients(tmp_path / "i.txt", TransferFunction([1.0, 0.0, 0.0], [1.0, -2.2, 1.3]))
        assert main(["fit", "--init", str(tmp_path / "i.txt")]) == EXIT_DIVERGED

    def test_order_mismatch(self, tmp_path):
        write_coefficients(tmp_path / "t.txt", random_stable_tf(3, 0.9, 0))
        assert main(["fit", "--target", str(tmp_path / "t.txt")]) == EXIT_DIMENSION

    def test_target_output_needs_input(self, tmp_path):
        write_signal(tmp_path / "t.f64", [1.0])
        assert main(["fit", "--target-output", str(tmp_path / "t.f64")]) == EXIT_PARSE


def test_module_entry_point():
    import runpy
    import sys

    argv = sys.argv
    sys.argv = ["ssfilt", "check", "--order", "1", "--length", "4"]
    try:
        with pytest.raises(SystemExit) as info:
            runpy.run_module("ssfilt", run_name="__main__")
    finally:
        sys.argv = argv
    assert info.value.code == 0


def test_bench_stdout(capsys):
    assert main(["bench", "--length", "16", "--strategy", "sequential", "rtf"]) == 0
    text = capsys.readouterr().out
    records = bench_mod.read_csv(_io.StringIO(text))
    assert [(r.implementation, r.direction) for r in records] == [
        ("sequential", "forward"),
        ("sequential", "backward"),
        ("rtf", "forward"),
    ]
