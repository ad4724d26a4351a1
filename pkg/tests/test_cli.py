from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from dkstp.cli import build_parser, diff_path, run
from dkstp.config import BENCHMARK_CSV_HEADER, SWEEP_DIFF_CSV_HEADER
from dkstp.io.packet import read_packet
from dkstp.io.pgm import read_pgm, write_pgm
from dkstp.models import GrayImage, Method


def _run(tmp_path: Path, *args: str) -> int:
    return run(["--log-dir", str(tmp_path / "logs"), *args])


@pytest.fixture
def image_path(tmp_path: Path, gradient_image: GrayImage) -> Path:
    path = tmp_path / "in.pgm"
    write_pgm(gradient_image, path)
    return path


def test_gamma_one_dkstp_matches_cs_end_to_end(tmp_path: Path, image_path: Path) -> None:
    for method in ("cs", "dkstp"):
        assert _run(tmp_path, "compress", "--image", str(image_path), "--method", method, "--cr", "0.5",
                    "--gamma", "1", "--block", "8", "--seed", "3", "--out", str(tmp_path / f"{method}.pkt")) == 0
        assert _run(tmp_path, "reconstruct", "--packet", str(tmp_path / f"{method}.pkt"), "--solver", "bp",
                    "--max-iters", "500", "--out", str(tmp_path / f"{method}.pgm")) == 0

    assert read_packet(tmp_path / "dkstp.pkt").scheme.method is Method.DKSTPCS
    assert (tmp_path / "cs.pgm").read_bytes() == (tmp_path / "dkstp.pgm").read_bytes()


def test_reconstruct_writes_json_report(tmp_path: Path, image_path: Path) -> None:
    packet = tmp_path / "p.pkt"
    assert _run(tmp_path, "compress", "--image", str(image_path), "--method", "dkstp", "--cr", "0.75",
                "--gamma", "2", "--block", "8", "--seed", "1", "--out", str(packet)) == 0
    assert _run(tmp_path, "reconstruct", "--packet", str(packet), "--out", str(tmp_path / "out.pgm"),
                "--report", str(tmp_path / "r.json"), "--reference", str(image_path)) == 0

    report = json.loads((tmp_path / "r.json").read_text(encoding="utf-8"))
    assert len(report["blocks"]) == 4
    assert report["decomposition"]["total_l2"] <= report["decomposition"]["bound_safe"]
    assert read_pgm(tmp_path / "out.pgm").pixels.shape == (16, 16)


def test_benchmark_row_count(tmp_path: Path, image_path: Path) -> None:
    csv_path = tmp_path / "bench.csv"
    assert _run(tmp_path, "benchmark", "--image", str(image_path), "--methods", "cs,stp,dkstp",
                "--cr", "0.25:0.5:0.25", "--gamma", "2", "--trials", "2", "--seed", "4", "--block", "8",
                "--max-iters", "200", "--csv", str(csv_path), "--summary", str(tmp_path / "summary.csv"),
                "--increase-rate", str(tmp_path / "rate.csv")) == 0

    lines = csv_path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == ",".join(BENCHMARK_CSV_HEADER)
    assert len(lines) == 1 + 2 * 3 * 2
    assert len(pd.read_csv(tmp_path / "summary.csv")) == 3 * 2
    assert list(pd.read_csv(tmp_path / "rate.csv").columns) == ["cr", "increase_vs_cs", "increase_vs_stp"]


def test_benchmark_output_is_deterministic(tmp_path: Path, image_path: Path) -> None:
    outputs = []
    for name in ("a.csv", "b.csv"):
        assert _run(tmp_path, "benchmark", "--image", str(image_path), "--methods", "dkstp", "--cr", "0.5",
                    "--trials", "1", "--noise-var", "0.001", "--block", "8", "--csv", str(tmp_path / name)) == 0
        table = pd.read_csv(tmp_path / name)
        outputs.append(table.drop(columns=["seconds"]))
    pd.testing.assert_frame_equal(outputs[0], outputs[1])


def test_mae_sweep_writes_companion_table(tmp_path: Path, image_path: Path) -> None:
    csv_path = tmp_path / "sweep.csv"
    assert _run(tmp_path, "mae-sweep", "--image", str(image_path), "--gamma", "2", "--cr", "0.25:1.0:0.25",
                "--blocks", "2", "--block", "8", "--max-iters", "200", "--csv", str(csv_path)) == 0

    diff = pd.read_csv(diff_path(csv_path))
    assert list(diff.columns) == list(SWEEP_DIFF_CSV_HEADER)
    assert diff["mae_at_double_cr"].notna().sum() == 2
    assert len(pd.read_csv(csv_path)) == 4


def test_error_decomp_exports(tmp_path: Path, image_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    assert _run(tmp_path, "error-decomp", "--image", str(image_path), "--gamma", "2",
                "--heatmap", str(tmp_path / "h.pgm"), "--hist", str(tmp_path / "h.csv")) == 0
    assert "equalization MAE" in capsys.readouterr().out
    assert read_pgm(tmp_path / "h.pgm").pixels.shape == (16, 16)
    assert len(pd.read_csv(tmp_path / "h.csv")) == 256


ANALYZE_KEYS = {"spark", "spark_witness", "coherence", "k_spark", "k_mu", "rip", "intra_group"}


def test_gen_matrix_and_analyze(tmp_path: Path) -> None:
    desc = tmp_path / "a.json"
    dump = tmp_path / "a.npy"
    assert _run(tmp_path, "gen-matrix", "--kind", "gaussian", "--rows", "4", "--cols", "3", "--seed", "5",
                "--out", str(desc), "--dump-matrix", str(dump)) == 0
    assert np.load(dump).shape == (4, 3)

    out = tmp_path / "analysis.json"
    assert _run(tmp_path, "analyze", "--matrix-desc", str(desc), "--spark-limit", "2", "--rip-k", "1",
                "--rip-k", "2", "--tau", "0.99", "--gamma", "2", "--out", str(out)) == 0
    result = json.loads(out.read_text(encoding="utf-8"))
    assert ANALYZE_KEYS <= set(result)
    assert result["shape"] == [4, 6]
    assert result["spark"] == 2
    assert result["spark_witness"] == [0, 1]
    assert result["coherence"] == pytest.approx(1.0)
    assert result["k_spark"] == 0
    assert result["k_mu"] == 0
    assert [entry["k"] for entry in result["rip"]] == [1, 2]
    assert all({"k", "delta", "mode"} <= set(entry) for entry in result["rip"])
    assert result["rip"][1]["mode"] == "exhaustive"
    assert result["rip"][1]["failed"] is True
    assert result["intra_group"]["within_group_equal"] is True


def test_analyze_prints_json_to_stdout(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    desc = tmp_path / "a.json"
    assert _run(tmp_path, "gen-matrix", "--kind", "toeplitz", "--rows", "5", "--cols", "8", "--seed", "1",
                "--out", str(desc)) == 0
    capsys.readouterr()
    assert _run(tmp_path, "analyze", "--matrix-desc", str(desc), "--rip-k", "2", "--rip-mode", "sampled") == 0
    result = json.loads(capsys.readouterr().out)
    assert ANALYZE_KEYS <= set(result)
    assert [(entry["k"], entry["mode"]) for entry in result["rip"]] == [(2, "sampled")]
    assert result["spark"] is None
    assert result["spark_witness"] is None
    assert result["k_spark"] is None
    assert result["intra_group"] is None
    assert isinstance(result["k_mu"], int)


def test_make_image(tmp_path: Path) -> None:
    out = tmp_path / "smooth.pgm"
    assert _run(tmp_path, "make-image", "--name", "smooth", "--size", "32", "--out", str(out)) == 0
    assert read_pgm(out).pixels.shape == (32, 32)


def test_settings_are_persisted_and_used(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    settings = tmp_path / "cli_settings.json"
    assert _run(tmp_path, "--settings", str(settings), "settings", "--set", "block=4", "--set", "solver=omp") == 0
    shown = json.loads(capsys.readouterr().out)
    assert shown["block"] == 4
    assert shown["solver"] == "omp"
    assert json.loads(settings.read_text(encoding="utf-8"))["block"] == 4


def test_unknown_setting_fails(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    assert _run(tmp_path, "settings", "--set", "colour=blue") == 1
    err = capsys.readouterr().err.strip().splitlines()
    assert err[-1].startswith("dkstp settings: error: Unknown setting")


def test_errors_exit_with_one_line_diagnostic(tmp_path: Path, image_path: Path,
                                              capsys: pytest.CaptureFixture[str]) -> None:
    code = _run(tmp_path, "compress", "--image", str(image_path), "--method", "dkstp", "--gamma", "3",
                "--block", "8", "--out", str(tmp_path / "x.pkt"))
    assert code == 1
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1
    assert "gamma=3" in err[0]


def test_missing_file_is_reported(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    assert _run(tmp_path, "reconstruct", "--packet", str(tmp_path / "none.pkt"), "--out", str(tmp_path / "o.pgm")) == 1
    assert "error" in capsys.readouterr().err


def test_unknown_flags_exit_nonzero() -> None:
    with pytest.raises(SystemExit) as excinfo:
        build_parser().parse_args(["compress", "--bogus"])
    assert excinfo.value.code != 0
