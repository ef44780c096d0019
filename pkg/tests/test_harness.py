import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from uamo.harness import ConfigError, ExperimentConfig, ResultTable, parse_config, run_experiment
from uamo.harness.cli import main
from uamo.harness.config import parse_omega
from uamo.harness.runner import subtask_rng
from uamo.harness.table import Column
from uamo.model import GOLDEN, SILVER


def test_parse_omega_forms():
    assert parse_omega("golden") == GOLDEN
    assert parse_omega("silver") == SILVER
    assert parse_omega("2/7") == pytest.approx(2 / 7)
    assert parse_omega("0.25") == 0.25
    for bad in ("pi", "nan", "1/0"):
        with pytest.raises(ConfigError):
            parse_omega(bad)


def test_flags_override_config_file(tmp_path):
    f = tmp_path / "cfg.json"
    f.write_text(json.dumps({"l1": 0.3, "l2": 0.7, "n": 64}))
    cfg = parse_config(["spectrum", "--config", str(f), "--n", "32"], environ={})
    assert (cfg.l1, cfg.l2, cfg.n) == (0.3, 0.7, 32)


@pytest.mark.parametrize("argv", [
    ["spectrum", "--l1", "1.5"],
    ["spectrum", "--format", "xml"],
    ["spectrum", "--method", "qr"],
    ["sweep", "--of", "spectrum"],
    ["sweep", "--of", "sweep", "--over", "l1=0.1"],
    ["sweep", "--of", "spectrum", "--over", "omega=0.1"],
    ["spectrum", "--over", "l1=0.1"],
    ["nonsense"],
])
def test_config_errors(argv):
    with pytest.raises(ConfigError):
        parse_config(argv, environ={})


def test_unknown_config_key(tmp_path):
    f = tmp_path / "cfg.json"
    f.write_text(json.dumps({"lambda": 0.3}))
    with pytest.raises(ConfigError, match="allowed keys"):
        parse_config(["spectrum", "--config", str(f)], environ={})


def test_output_dir_from_environment(tmp_path):
    cfg = parse_config(["arith"], environ={"UAMO_OUTPUT_DIR": str(tmp_path)})
    assert cfg.out == str(tmp_path / "arith.csv")


def test_subtask_streams_are_stable():
    a = subtask_rng(7, 3).random(4)
    b = subtask_rng(7, 3).random(4)
    c = subtask_rng(7, 4).random(4)
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def _table():
    t = ResultTable([Column("k"), Column("x", "turns"), Column("name"), Column("ok")])
    t.append(1, 0.1, "a", True)
    t.append(2, 1e-300, "b,c", False)
    t.append(3, 2.0, "d", True)
    t.append(4, -math.pi, "e", False)
    t.metadata["config"] = {"seed": 1}
    t.failures.append("example")
    return t


def test_csv_round_trip():
    t = _table()
    assert ResultTable.from_csv(t.to_csv()) == t


def test_json_round_trip():
    t = _table()
    assert ResultTable.from_json(t.to_json()) == t


@given(st.lists(st.tuples(st.integers(-10**12, 10**12),
                          st.floats(allow_nan=False, allow_infinity=False)), max_size=20))
def test_csv_round_trip_exact_floats(rows):
    t = ResultTable(["i", "x"], rows)
    back = ResultTable.from_csv(t.to_csv())
    assert back.rows == [tuple(r) for r in rows]


def test_row_length_checked():
    t = ResultTable(["a", "b"])
    with pytest.raises(ValueError):
        t.append(1)


def test_numpy_scalars_become_plain():
    t = ResultTable(["a"])
    t.append(np.float64(0.5))
    assert type(t.rows[0][0]) is float


def test_spectrum_command_fields():
    cfg = ExperimentConfig(command="spectrum", n=16)
    t = run_experiment(cfg)
    assert len(t) == 16
    assert max(t.column("modulus_error")) < 1e-12
    assert t.metadata["config"]["n"] == 16
    assert "versions" in t.metadata


def test_arith_command():
    t = run_experiment(ExperimentConfig(command="arith", omega="golden"))
    assert t.column("q_k")[:6] == [1, 2, 3, 5, 8, 13]


def test_cocycle_check_command():
    t = run_experiment(ExperimentConfig(command="cocycle-check", samples=20))
    assert not t.failures
    assert max(t.column("szego_gz") + t.column("gz_standard")) <= 1e-12


def test_detpoly_command():
    t = run_experiment(ExperimentConfig(command="detpoly", n=8, samples=3))
    assert not t.failures and len(t) == 3


def test_green_command():
    t = run_experiment(ExperimentConfig(command="green", n=16))
    assert not t.failures and len(t) == 32


def test_sweep_orders_points(tmp_path):
    cfg = parse_config(["sweep", "--of", "spectrum", "--over", "n=6,4", "--over", "l1=0.3,0.5",
                        "--workers", "1"], environ={})
    t = run_experiment(cfg)
    assert t.column("point") == sorted(t.column("point"))
    assert len(t) == 2 * 6 + 2 * 4
    assert set(t.column("n")) == {4, 6}


def test_cli_byte_identical(tmp_path, capsys):
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    argv = ["detpoly", "--n", "4", "--samples", "3", "--seed", "11"]
    assert main(argv + ["--out", str(out1)]) == 0
    assert main(argv + ["--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_cli_json_output(tmp_path):
    out = tmp_path / "s.json"
    assert main(["spectrum", "--n", "8", "--format", "json", "--out", str(out)]) == 0
    t = ResultTable.from_json(out.read_text())
    assert len(t) == 8


def test_cli_exit_codes(tmp_path, capsys):
    assert main(["spectrum", "--l1", "1.5"]) == 2
    assert "out of range" in capsys.readouterr().err
    assert main(["evolve", "--n", "1", "--t", "5"]) == 4
    out = tmp_path / "c.csv"
    assert main(["certificate", "--l1", "0.7", "--l2", "0.7", "--n", "1000", "--y", "300",
                 "--out", str(out)]) == 3
    assert out.exists()
    assert "check failed" in capsys.readouterr().err


def test_cli_stdout(capsys):
    assert main(["arith", "--omega", "2/7"]) == 0
    text = capsys.readouterr().out
    t = ResultTable.from_csv(text)
    assert t.metadata["rational"] is True
    assert t.column("q_k")[-1] == 7
