import dataclasses
import json
import os
import pathlib

import pytest
import pytest_mock

from onebit_mimo import __version__, cli, montecarlo

BOUND_ARGS = ["bound", "--scheme", "tx-beamform", "--n", "2", "--power", "1"]
SIMULATE_ARGS = [
    "simulate",
    "--scheme",
    "rx-combine",
    "--m",
    "2",
    "--n",
    "4",
    "--power",
    "1",
    "--pilot-power",
    "1",
    "--pilots",
    "3",
    "--trials",
    "600",
    "--seed",
    "11",
]


@pytest.fixture()
def filename() -> str:
    return "rows.csv"


def _fields(row_type: type) -> list[str]:
    return [field.name for field in dataclasses.fields(row_type)]


def _run(argv: list[str], capsys: pytest.CaptureFixture[str]) -> str:
    assert cli.main(argv) == cli.EXIT_OK
    return capsys.readouterr().out


def _usage_error(argv: list[str], capsys: pytest.CaptureFixture[str]) -> str:
    with pytest.raises(SystemExit) as excinfo:
        cli.main(argv)
    assert excinfo.value.code == cli.EXIT_USAGE
    return capsys.readouterr().err


def describe_sweep_spec() -> None:
    def test_db_applies_to_powers_only() -> None:
        assert cli.SweepSpec.parse("Pp", "10, 20", db=True).values == (10.0, 100.0)
        assert cli.SweepSpec.parse("M", "10", db=True).values == (10,)

    @pytest.mark.parametrize(
        "parameter, text", [("M", "4,x"), ("M", "2.5"), ("P", "nan"), ("N", ",")]
    )
    def test_invalid(parameter: cli.SweepParameter, text: str) -> None:
        with pytest.raises(ValueError):
            cli.SweepSpec.parse(parameter, text)


def describe_bound() -> None:
    def test_single_point(
        capsys: pytest.CaptureFixture[str], filepath: str | os.PathLike[str]
    ) -> None:
        argv = [*BOUND_ARGS, "--m", "64", "--pilot-power", "1", "--out", str(filepath)]
        _run(argv, capsys)
        [row] = cli.read_rows(filepath)
        assert list(row) == _fields(cli.BoundRow)
        assert row["p_eps"] == pytest.approx(0.25)
        assert row["bound_asymptotic"] is None
        assert row["bound_chernoff"] >= row["bound_union"]

    def test_huge_pilot_power_has_no_csi_errors(
        capsys: pytest.CaptureFixture[str], filepath: str | os.PathLike[str]
    ) -> None:
        argv = [*BOUND_ARGS, "--m", "4", "--pilot-power", "1e30"]
        argv += ["--out", str(filepath)]
        _run(argv, capsys)
        [row] = cli.read_rows(filepath)
        assert row["bound_union"] == pytest.approx(1.0295, abs=5e-4)

    def test_sweep_over_m_is_non_increasing(
        capsys: pytest.CaptureFixture[str], filepath: str | os.PathLike[str]
    ) -> None:
        argv = [
            *BOUND_ARGS,
            "--m-list",
            "4,8,16,32,64,128,256",
            "--pilot-power",
            "1",
            "--out",
            str(filepath),
        ]
        _run(argv, capsys)
        rows = cli.read_rows(filepath)
        assert [row["M"] for row in rows] == [4, 8, 16, 32, 64, 128, 256]
        values = [row["bound_union"] for row in rows]
        assert all(a >= b for a, b in zip(values, values[1:]))

    def test_sweep_order_is_cartesian(capsys: pytest.CaptureFixture[str]) -> None:
        argv = [*BOUND_ARGS, "--m-list", "4,8", "--pilot-power-list", "1,2,3"]
        argv += ["--format", "json"]
        rows = json.loads(_run(argv, capsys))
        points = [(row["M"], row["Pp"]) for row in rows]
        assert points == [(4, 1.0), (4, 2.0), (4, 3.0), (8, 1.0), (8, 2.0), (8, 3.0)]

    def test_rx_combine(capsys: pytest.CaptureFixture[str]) -> None:
        argv = ["bound", "--scheme", "rx-combine", "--m", "2", "--n-list", "1,5"]
        argv += ["--power", "1", "--pilot-power", "1", "--pilots", "3"]
        argv += ["--format", "json"]
        rows = json.loads(_run(argv, capsys))
        assert [row["bound_union"] for row in rows] == [None, None]
        assert rows[0]["p_eps"] == pytest.approx(0.15625)
        assert rows[1]["bound_asymptotic"] < rows[0]["bound_asymptotic"]

    def test_db(capsys: pytest.CaptureFixture[str]) -> None:
        argv = ["bound", "--scheme", "tx-beamform", "--m", "4", "--n", "2"]
        argv += ["--power", "10", "--pilot-power", "0", "--db", "--format", "json"]
        [row] = json.loads(_run(argv, capsys))
        assert row["P"] == pytest.approx(10.0)
        assert row["Pp"] == pytest.approx(1.0)
        assert row["p_eps"] == pytest.approx(0.25)

    def test_json_keys(capsys: pytest.CaptureFixture[str]) -> None:
        argv = [*BOUND_ARGS, "--m", "8", "--pilot-power", "1", "--format", "json"]
        rows = json.loads(_run(argv, capsys))
        assert [list(row) for row in rows] == [_fields(cli.BoundRow)]


def describe_simulate() -> None:
    def test_header(capsys: pytest.CaptureFixture[str]) -> None:
        out = _run(SIMULATE_ARGS, capsys)
        header, *lines = out.splitlines()
        assert header.split(",") == _fields(cli.ResultRow)
        assert len(lines) == 1

    @pytest.mark.parametrize("workers", ["1", "4", "16"])
    def test_reruns_are_byte_identical(
        capsys: pytest.CaptureFixture[str], tmp_path: pathlib.Path, workers: str
    ) -> None:
        first, second = tmp_path / "first.csv", tmp_path / "second.csv"
        argv = [*SIMULATE_ARGS, "--trials", "2100"]
        _run([*argv, "--out", str(first)], capsys)
        _run([*argv, "--workers", workers, "--out", str(second)], capsys)
        assert first.read_bytes() == second.read_bytes()

    def test_read_rows_round_trip(
        capsys: pytest.CaptureFixture[str], filepath: str | os.PathLike[str]
    ) -> None:
        _run([*SIMULATE_ARGS, "--out", str(filepath)], capsys)
        rows = json.loads(_run([*SIMULATE_ARGS, "--format", "json"], capsys))
        assert cli.read_rows(filepath) == rows

    def test_analytic_columns_match_bound(capsys: pytest.CaptureFixture[str]) -> None:
        argv = ["simulate", "--scheme", "tx-beamform", "--m", "8", "--n", "2"]
        argv += ["--power", "2", "--pilot-power", "1", "--trials", "100"]
        argv += ["--seed", "1", "--format", "json"]
        [simulated] = json.loads(_run(argv, capsys))
        argv = ["bound", "--scheme", "tx-beamform", "--m", "8", "--n", "2"]
        argv += ["--power", "2", "--pilot-power", "1", "--format", "json"]
        [bound] = json.loads(_run(argv, capsys))
        for key in _fields(cli.BoundRow):
            assert simulated[key] == bound[key]

    def test_block_errors_match_library(capsys: pytest.CaptureFixture[str]) -> None:
        [row] = json.loads(_run([*SIMULATE_ARGS, "--format", "json"], capsys))
        stats = montecarlo.run_trials(
            montecarlo.SystemConfig(
                scheme="rx-combine",  # type: ignore[arg-type]
                m=2,
                n=4,
                power=1.0,
                pilot_power=1.0,
                pilots=3,
                trials=600,
                seed=11,
            )
        )
        assert row["block_errors"] == stats.block_errors
        assert row["bit_error_rate"] == stats.bit_error_rate

    def test_workers_from_environment(
        capsys: pytest.CaptureFixture[str], monkeypatch: pytest.MonkeyPatch
    ) -> None:
        monkeypatch.setenv(montecarlo.WORKERS_ENV, "two")
        err = _usage_error(SIMULATE_ARGS, capsys)
        assert montecarlo.WORKERS_ENV in err

    def test_rows_name_the_mi_estimator(capsys: pytest.CaptureFixture[str]) -> None:
        [row] = json.loads(_run([*SIMULATE_ARGS, "--format", "json"], capsys))
        assert row["mi_estimator"] == montecarlo.MI_ESTIMATOR

    @pytest.mark.parametrize("command", ["simulate", "bound"])
    def test_even_pilots_with_weak_pilots_leave_rx_bounds_empty(
        capsys: pytest.CaptureFixture[str], command: str
    ) -> None:
        argv = [command, "--scheme", "rx-combine", "--m", "2", "--n", "8"]
        argv += ["--power", "1", "--pilot-power", "0.1", "--pilots", "2"]
        if command == "simulate":
            argv += ["--trials", "300", "--seed", "1"]
        [row] = json.loads(_run([*argv, "--format", "json"], capsys))
        assert row["p_eps"] == pytest.approx(0.643, abs=1e-3)
        assert row["bound_chernoff"] is None
        assert row["bound_asymptotic"] is None


def describe_pilot_error() -> None:
    def test_row(capsys: pytest.CaptureFixture[str]) -> None:
        argv = ["pilot-error", "--pilot-power", "1", "--pilots-list", "1,3"]
        argv += ["--samples", "2000", "--seed", "4", "--format", "json"]
        rows = json.loads(_run(argv, capsys))
        assert [list(row) for row in rows] == [_fields(cli.PilotErrorRow)] * 2
        assert rows[0]["p_eps"] == pytest.approx(0.25)
        assert rows[1]["p_eps"] == pytest.approx(0.15625)
        assert rows[1]["measured"] == rows[1]["errors"] / 4000
        assert rows[0]["p_eps_exact"] == pytest.approx(0.25)
        assert rows[1]["p_eps_exact"] > rows[1]["p_eps"]

    def test_even_pilots_report_tiebreak(capsys: pytest.CaptureFixture[str]) -> None:
        argv = ["pilot-error", "--pilot-power", "1", "--pilots", "2"]
        argv += ["--samples", "500", "--seed", "4", "--format", "json"]
        [row] = json.loads(_run(argv, capsys))
        assert row["p_eps_tiebreak"] < row["p_eps"]


def describe_mi() -> None:
    def test_noiseless_exact_csi_reaches_capacity(
        capsys: pytest.CaptureFixture[str],
    ) -> None:
        argv = ["mi", "--scheme", "tx-beamform", "--m", "16", "--n", "1"]
        argv += ["--power", "1", "--pilot-power", "1", "--trials", "1000"]
        argv += ["--seed", "3", "--noiseless", "--exact-csi", "--format", "json"]
        [row] = json.loads(_run(argv, capsys))
        assert list(row) == _fields(cli.MutualInformationRow)
        assert row["mi_bits_per_use"] == 2.0
        assert row["capacity_upper_bound"] == 2
        assert row["bit_error_rate"] == 0.0

    def test_bounded_by_capacity(capsys: pytest.CaptureFixture[str]) -> None:
        argv = ["mi", "--scheme", "rx-combine", "--m", "2", "--n-list", "2,16"]
        argv += ["--power", "1", "--pilot-power", "1", "--trials", "500"]
        argv += ["--seed", "3", "--format", "json"]
        rows = json.loads(_run(argv, capsys))
        for row in rows:
            assert 0.0 <= row["mi_bits_per_use"] <= row["capacity_upper_bound"]
            assert row["capacity_limit"] == 4
            assert row["mi_estimator"] == montecarlo.MI_ESTIMATOR


def describe_errors() -> None:
    def test_n_must_divide_m(capsys: pytest.CaptureFixture[str]) -> None:
        argv = [*BOUND_ARGS[:3], "--m", "10", "--n", "4", "--power", "1"]
        argv += ["--pilot-power", "1"]
        err = _usage_error(argv, capsys)
        assert "N must divide M" in err

    def test_no_output_before_validation(
        capsys: pytest.CaptureFixture[str], tmp_path: pathlib.Path
    ) -> None:
        out = tmp_path / "rows.csv"
        argv = [*BOUND_ARGS, "--m-list", "4,5", "--pilot-power", "1"]
        _usage_error([*argv, "--out", str(out)], capsys)
        assert not out.exists()

    @pytest.mark.parametrize(
        "argv",
        [
            [*BOUND_ARGS, "--pilot-power", "1"],
            [*BOUND_ARGS, "--m", "4", "--m-list", "4,8", "--pilot-power", "1"],
            [*BOUND_ARGS, "--m", "x", "--pilot-power", "1"],
            [*BOUND_ARGS, "--m-list", "4,x", "--pilot-power", "1"],
            [*BOUND_ARGS, "--m", "4", "--pilot-power", "0"],
            [*BOUND_ARGS, "--m", "4", "--pilot-power", "1", "--pilots", "0"],
            [*BOUND_ARGS, "--m", "4", "--pilot-power", "1", "--format", "xml"],
            ["bound", "--m", "4", "--n", "2", "--power", "1", "--pilot-power", "1"],
            SIMULATE_ARGS[:-2],
            [*SIMULATE_ARGS, "--workers", "0"],
            ["pilot-error", "--pilot-power", "1", "--seed", "1", "--samples", "0"],
            [],
        ],
        ids=[
            "missing_m",
            "scalar_and_list",
            "malformed_m",
            "malformed_list",
            "zero_pilot_power",
            "zero_pilots",
            "unknown_format",
            "missing_scheme",
            "missing_seed",
            "zero_workers",
            "zero_samples",
            "missing_command",
        ],
    )
    def test_usage(capsys: pytest.CaptureFixture[str], argv: list[str]) -> None:
        err = _usage_error(argv, capsys)
        assert cli.PROG in err

    def test_unwritable_output(
        capsys: pytest.CaptureFixture[str], tmp_path: pathlib.Path
    ) -> None:
        out = tmp_path / "missing" / "rows.csv"
        argv = [*BOUND_ARGS, "--m", "4", "--pilot-power", "1", "--out", str(out)]
        assert cli.main(argv) == cli.EXIT_RUNTIME
        assert "error" in capsys.readouterr().err

    def test_unwritable_output_is_detected_before_trials(
        capsys: pytest.CaptureFixture[str],
        tmp_path: pathlib.Path,
        mocker: pytest_mock.MockerFixture,
    ) -> None:
        spy = mocker.spy(montecarlo, "run_trials")
        out = tmp_path / "missing" / "rows.csv"
        assert cli.main([*SIMULATE_ARGS, "--out", str(out)]) == cli.EXIT_RUNTIME
        assert "No such directory" in capsys.readouterr().err
        spy.assert_not_called()

    def test_directory_as_output(
        capsys: pytest.CaptureFixture[str], tmp_path: pathlib.Path
    ) -> None:
        assert cli.main([*SIMULATE_ARGS, "--out", str(tmp_path)]) == cli.EXIT_RUNTIME
        assert "Is a directory" in capsys.readouterr().err

    def test_version(capsys: pytest.CaptureFixture[str]) -> None:
        with pytest.raises(SystemExit) as excinfo:
            cli.main(["--version"])
        assert excinfo.value.code == 0
        assert __version__ in capsys.readouterr().out
