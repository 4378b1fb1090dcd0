import json
from pathlib import Path

import pytest

from uhlmann_ness.cli import (
    RECIPES,
    RunConfig,
    apply_override,
    build_parser,
    build_run_config,
    load_config_file,
    load_recipe,
    main,
    parse_value,
    render,
    write_atomic,
)
from uhlmann_ness.errors import ConfigError, IoError
from uhlmann_ness.records import SweepRow, TranslationalRow


def sweep_row(**values) -> SweepRow:
    return SweepRow(index=0, params=("delta", "h"), mu_value=1.25, nu_value=0.3, n=40, **values)


def test_sweep_row_columns() -> None:
    assert sweep_row().columns() == [
        "delta", "h", "n", "gap", "U_dh", "J_dd", "J_dh", "J_hh", "detJ", "normJinf", "flag",
    ]


def test_translational_row_columns() -> None:
    row = TranslationalRow(index=0, params=("lambda", "theta"), mu_value=0.5, nu_value=0.3)
    assert row.columns() == ["lambda", "theta", "U_bar_quad", "U_bar_res", "xi_inv", "gap", "flag"]


def test_csv_leaves_failed_values_empty() -> None:
    text = render([sweep_row(gap=0.5, flag="gapless_drift")], "csv")
    header, line = text.splitlines()
    assert header.startswith("delta,h,n,gap,U_dh")
    assert line == "1.25,0.29999999999999999,40,0.5,,,,,,,gapless_drift"


def test_jsonl_records_read_back() -> None:
    rows = [sweep_row(gap=0.5, U_mn=-1e-3, detJ=2.0), sweep_row(flag="not_psd")]
    lines = render(rows, "jsonl").splitlines()
    restored = [SweepRow.from_record(("delta", "h"), json.loads(line)) for line in lines]
    assert restored == rows
    assert json.loads(lines[1])["U_dh"] is None


def test_infinite_values_in_jsonl() -> None:
    row = TranslationalRow(
        index=0, params=("lambda", "theta"), mu_value=0.5, nu_value=0.3, xi_inv=float("inf")
    )
    assert '"xi_inv": Infinity' in render([row], "jsonl")


def test_parse_value() -> None:
    assert parse_value("1.5") == 1.5
    assert parse_value("[20, 40]") == [20, 40]
    assert parse_value("true") is True
    assert parse_value('"rotated_xy"') == "rotated_xy"
    assert parse_value("rotated_xy") == "rotated_xy"


def test_apply_override_creates_sections() -> None:
    data: dict = {"model": {"family": "boundary_xy"}}
    apply_override(data, "model.params.delta=0.5")
    apply_override(data, "sizes=[8, 16]")
    assert data == {"model": {"family": "boundary_xy", "params": {"delta": 0.5}}, "sizes": [8, 16]}


@pytest.mark.parametrize("assignment", ["novalue", "=3"])
def test_apply_override_rejects_malformed(assignment: str) -> None:
    with pytest.raises(ConfigError):
        apply_override({}, assignment)


def test_apply_override_rejects_scalar_section() -> None:
    with pytest.raises(ConfigError):
        apply_override({"sizes": [4]}, "sizes.first=1")


def test_run_config_rejects_unknown_keys() -> None:
    with pytest.raises(ValueError):
        RunConfig.model_validate({"command": "muc", "colour": "blue"})
    with pytest.raises(ValueError):
        RunConfig.model_validate({"schema_version": 2})


def test_tolerances_flow_into_configuration() -> None:
    run = RunConfig.model_validate({"tolerances": {"fd_step": 1e-4}})
    assert run.configuration().fd_step == 1e-4
    with pytest.raises(ConfigError):
        RunConfig.model_validate({"tolerances": {"nope": 1.0}}).configuration()


@pytest.mark.parametrize("name", list(RECIPES))
def test_recipes_validate(name: str) -> None:
    data = load_recipe(name)
    run = RunConfig.model_validate(data)
    run.model.point()
    assert run.command == data["command"]


def test_help_lists_recipes() -> None:
    text = build_parser().format_help()
    for name, study in RECIPES.items():
        assert name in text
        assert study in text


def test_unknown_recipe() -> None:
    with pytest.raises(ConfigError):
        load_recipe("no_such_recipe")


def test_precedence(tmp_path: Path) -> None:
    args = build_parser().parse_args(
        [
            "sweep",
            "--recipe", "boundary_map",
            "--set", "sizes=[10]",
            "--set", "output.format=jsonl",
            "--format", "csv",
            "--out", str(tmp_path / "out.csv"),
            "--threads", "3",
        ]
    )
    run = build_run_config(args)
    assert run.sizes == [10]
    assert run.output.format == "csv"
    assert run.output.path == tmp_path / "out.csv"
    assert run.threads == 3
    assert run.grid["delta"] == (0.0, 2.0, 41)


def test_command_line_overrides_recipe_command() -> None:
    run = build_run_config(build_parser().parse_args(["oracle", "--recipe", "boundary_map"]))
    assert run.command == "oracle"


def test_config_file_errors(tmp_path: Path) -> None:
    with pytest.raises(IoError):
        load_config_file(tmp_path / "missing.toml")
    broken = tmp_path / "broken.toml"
    broken.write_text("sizes = [1,")
    with pytest.raises(ConfigError):
        load_config_file(broken)


def test_write_atomic(tmp_path: Path) -> None:
    target = tmp_path / "nested" / "rows.csv"
    write_atomic(target, "a,b\n1,2\n")
    write_atomic(target, "a,b\n3,4\n")
    assert target.read_text() == "a,b\n3,4\n"
    assert [p.name for p in target.parent.iterdir()] == ["rows.csv"]


def test_main_exit_codes(tmp_path: Path) -> None:
    assert main(["muc", "--set", "model.family=nonsense", "--set", "sizes=[4]"]) == 2
    assert main(["muc", "--set", "model.params.colour=1", "--set", "sizes=[4]"]) == 2
    assert main(["muc", "--config", str(tmp_path / "missing.toml")]) == 4


def test_main_writes_ness_records(tmp_path: Path) -> None:
    out = tmp_path / "ness.jsonl"
    code = main(["ness", "--set", "sizes=[4]", "--format", "jsonl", "--out", str(out)])
    assert code == 0
    record = json.loads(out.read_text())
    assert record["n"] == 4
    assert record["gap"] > 0
    assert len(record["purity"]) == 8
    assert len(record["magnetization"]) == 4
