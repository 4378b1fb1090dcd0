import csv
import json
from pathlib import Path

from uhlmann_ness.cli import main


def test_sweep_writes_a_table(tmp_path: Path) -> None:
    out = tmp_path / "boundary_map.csv"
    code = main(
        [
            "sweep",
            "--recipe", "boundary_map",
            "--set", "sizes=[6]",
            "--set", "grid.delta=[0.5, 1.0, 2]",
            "--set", "grid.h=[0.2, 0.4, 2]",
            "--out", str(out),
            "--threads", "2",
        ]
    )
    assert code == 0
    with out.open() as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == [
        "delta", "h", "n", "gap", "U_dh", "J_dd", "J_dh", "J_hh", "detJ", "normJinf", "flag",
    ]
    assert [(r["delta"], r["h"]) for r in rows] == [
        ("0.5", "0.20000000000000001"),
        ("0.5", "0.40000000000000002"),
        ("1", "0.20000000000000001"),
        ("1", "0.40000000000000002"),
    ]
    assert all(float(r["detJ"]) > 0 for r in rows)


def test_translational_writes_json_lines(tmp_path: Path) -> None:
    out = tmp_path / "example_ring_scan.jsonl"
    code = main(
        ["translational", "--recipe", "example_ring_scan", "--set", "grid.lambda=[0.25, 0.75, 3]", "--out", str(out)]
    )
    assert code == 0
    records = [json.loads(line) for line in out.read_text().splitlines()]
    assert [r["lambda"] for r in records] == [0.25, 0.5, 0.75]
    assert set(records[0]) == {"lambda", "theta", "U_bar_quad", "U_bar_res", "xi_inv", "gap", "flag"}
    assert all(r["flag"] == "" for r in records)


def test_check_recipe(tmp_path: Path) -> None:
    out = tmp_path / "checks.jsonl"
    code = main(
        [
            "check",
            "--recipe", "self_test",
            "--set", "check.points=2",
            "--set", "check.lyapunov_instances=4",
            "--format", "jsonl",
            "--out", str(out),
        ]
    )
    assert code == 0
    records = [json.loads(line) for line in out.read_text().splitlines()]
    assert records and all(r["passed"] for r in records)


def test_oracle_command(tmp_path: Path) -> None:
    out = tmp_path / "oracle.csv"
    assert main(["oracle", "--set", "sizes=[2]", "--out", str(out)]) == 0
    with out.open() as fh:
        checks = {r["check"]: r["passed"] for r in csv.DictReader(fh)}
    assert checks == {"oracle_U": "true", "oracle_J": "true", "oracle_g": "true"}
