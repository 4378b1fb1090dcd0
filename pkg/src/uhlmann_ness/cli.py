"""Command-line front end.

Every run is described by one ``RunConfig``: a bundled recipe or a TOML file,
then ``--set section.key=value`` overrides, then the global flags. The
subcommand picks what to compute; records are written as CSV or JSON lines,
atomically, to ``--out`` or standard output.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - Python 3.10 backport
    import tomli as tomllib
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Literal, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from uhlmann_ness.checks import oracle_equivalence, run_checks
from uhlmann_ness.configuration import Configuration
from uhlmann_ness.errors import ComputeError, ConfigError, IoError, MucError
from uhlmann_ness.gaussian_state import magnetization, purity_spectrum
from uhlmann_ness.geometry import evaluate_point, gap_bound_check, incompatibility_report
from uhlmann_ness.lyapunov import solve_continuous
from uhlmann_ness.models import ModelPoint, dissipative_gap, drift_bath, family_spec
from uhlmann_ness.records import SweepRow
from uhlmann_ness.scaling import (
    DEFAULT_SIZES,
    TABLE_DELTA,
    ScalingFit,
    fits_from_rows,
    grid_points,
    plan_tasks,
    scaling_table,
    sweep,
    table_regimes,
)
from uhlmann_ness.settings import Settings

logger = logging.getLogger(__name__)

RECIPES = {
    "boundary_map": "phase map of |U_dh| and the Fisher matrix over (delta, h) at n = 300",
    "boundary_growth": "growth of det J, det 2U and the largest eigenvalues with n",
    "rotated_weak_coupling": "weak-coupling U_bar_h_theta of the rotated XY ring across h",
    "scaling_regimes": "table of scaling exponents of the gap, |U|, ||J|| and det J per regime",
    "example_ring_scan": "U_bar and inverse correlation length of the example ring across lambda",
    "self_test": "oracle, Lyapunov and bound self-checks on seeded random inputs",
}
SCHEMA_VERSION = 1

Command = Literal["ness", "muc", "sweep", "scaling", "translational", "oracle", "check"]


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ModelSection(_Section):
    family: str = "boundary_xy"
    params: dict[str, float] = Field(default_factory=dict)
    source: Optional[Path] = None
    pair: tuple[str, str] = ("delta", "h")
    symbol: Literal["stencil", "closed_form"] = "stencil"

    def point(self) -> ModelPoint:
        return ModelPoint(family=self.family, params=self.params, source=self.source)


class OutputSection(_Section):
    path: Optional[Path] = None
    format: Literal["csv", "jsonl"] = "csv"


class ScalingSection(_Section):
    table: bool = False
    delta: float = TABLE_DELTA


class CheckSection(_Section):
    seed: int = 0
    points: int = 20
    sizes: list[int] = Field(default_factory=lambda: [2, 3])
    lyapunov_instances: int = 20
    random_models: int = 50


class RunConfig(_Section):
    """Validated description of one run; unknown keys are rejected."""

    schema_version: Literal[1] = SCHEMA_VERSION
    command: Command = "muc"
    model: ModelSection = Field(default_factory=ModelSection)
    sizes: list[int] = Field(default_factory=list)
    grid: dict[str, tuple[float, float, int]] = Field(default_factory=dict)
    tolerances: dict[str, float] = Field(default_factory=dict)
    output: OutputSection = Field(default_factory=OutputSection)
    scaling: ScalingSection = Field(default_factory=ScalingSection)
    check: CheckSection = Field(default_factory=CheckSection)
    threads: Optional[int] = Field(default=None, ge=1)

    def configuration(self) -> Configuration:
        return Configuration().override(**self.tolerances)


# config loading


def load_recipe(name: str) -> dict[str, Any]:
    if name not in RECIPES:
        raise ConfigError(f"unknown recipe {name!r}; choose from {', '.join(RECIPES)}")
    text = resources.files("uhlmann_ness.recipes").joinpath(f"{name}.toml").read_text()
    return tomllib.loads(text)


def load_config_file(path: Path) -> dict[str, Any]:
    try:
        with path.open("rb") as fh:
            return tomllib.load(fh)
    except OSError as exc:
        raise IoError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def parse_value(text: str) -> Any:
    """TOML value syntax, falling back to a bare string."""
    try:
        return tomllib.loads(f"value = {text}")["value"]
    except tomllib.TOMLDecodeError:
        return text


def apply_override(data: dict[str, Any], assignment: str) -> None:
    """Apply one ``section.key=value`` assignment in place."""
    key, sep, value = assignment.partition("=")
    if not sep or not key.strip():
        raise ConfigError(f"--set expects section.key=value, got {assignment!r}")
    *sections, leaf = key.strip().split(".")
    target = data
    for section in sections:
        nested = target.setdefault(section, {})
        if not isinstance(nested, dict):
            raise ConfigError(f"{section} in {key!r} is not a section")
        target = nested
    target[leaf] = parse_value(value.strip())


def build_run_config(args: argparse.Namespace) -> RunConfig:
    data: dict[str, Any] = {}
    if args.recipe:
        data = load_recipe(args.recipe)
    if args.config:
        data = load_config_file(Path(args.config))
    for assignment in args.set or ():
        apply_override(data, assignment)
    data["command"] = args.command
    output = data.setdefault("output", {})
    if args.out:
        output["path"] = args.out
    if args.format:
        output["format"] = args.format
    if args.threads is not None:
        data["threads"] = args.threads
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(f"invalid run configuration:\n{exc}") from None


# output


def _format_csv(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value) if not math.isfinite(value) else f"{value:.17g}"
    if isinstance(value, (list, tuple, dict)):
        return json.dumps(value)
    return str(value)


def to_record(model: BaseModel) -> dict[str, Any]:
    record = getattr(model, "record", None)
    return record() if callable(record) else model.model_dump()


def render(records: Sequence[BaseModel], fmt: str) -> str:
    buffer = io.StringIO()
    dicts = [to_record(r) for r in records]
    if fmt == "jsonl":
        for d in dicts:
            buffer.write(json.dumps(d) + "\n")
        return buffer.getvalue()
    if not dicts:
        return ""
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(list(dicts[0]))
    for d in dicts:
        writer.writerow([_format_csv(v) for v in d.values()])
    return buffer.getvalue()


def write_atomic(path: Path, text: str) -> None:
    """Write through a temporary file in the target directory, then rename."""
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with tempfile.NamedTemporaryFile(
            "w", dir=path.parent, prefix=f".{path.name}.", delete=False, encoding="utf-8"
        ) as fh:
            fh.write(text)
            tmp = Path(fh.name)
        os.replace(tmp, path)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


# records of the single-point commands


class NessRecord(BaseModel):
    n: int
    gap: float
    purity: list[float]
    magnetization: list[float]


class MucRecord(BaseModel):
    n: int
    params: list[str]
    U: list[list[float]]
    J: list[list[float]]
    g: list[list[float]]
    det_J: float
    det_2U: float
    ratio_incompat: float
    discrepancy_bound: Optional[float]
    gap: float
    gap_bound: Optional[float]
    gap_bound_holds: Optional[bool]
    flag: str = ""


class FitRecord(BaseModel):
    label: str
    quantity: str
    exponent: float
    prefactor: float
    r_squared: float
    n_min: int
    n_max: int
    refit_exponent: Optional[float] = None
    refit_r_squared: Optional[float] = None
    expected: Optional[float] = None
    within: Optional[bool] = None


def _fit_records(
    label: str, fits: dict[str, ScalingFit], expected: Optional[dict[str, float]] = None, tolerance: float = 0.3
) -> list[FitRecord]:
    records = []
    for quantity, fit in fits.items():
        target = expected.get(quantity) if expected else None
        records.append(
            FitRecord(
                label=label,
                quantity=quantity,
                exponent=fit.exponent,
                prefactor=fit.prefactor,
                r_squared=fit.r_squared,
                n_min=fit.n_range[0],
                n_max=fit.n_range[1],
                refit_exponent=fit.refit.exponent if fit.refit else None,
                refit_r_squared=fit.refit.r_squared if fit.refit else None,
                expected=target,
                within=None if target is None else abs(fit.best.exponent - target) <= tolerance,
            )
        )
    return records


# commands


def _require_sizes(run: RunConfig) -> list[int]:
    if not run.sizes:
        raise ConfigError(f"{run.command} needs at least one size in `sizes`")
    return run.sizes


def command_ness(run: RunConfig, cfg: Configuration) -> list[BaseModel]:
    point = run.model.point()
    records: list[BaseModel] = []
    for n in _require_sizes(run):
        pair = drift_bath(point, n, cfg)
        gamma = solve_continuous(pair, cfg)
        records.append(
            NessRecord(
                n=n,
                gap=dissipative_gap(pair, cfg),
                purity=purity_spectrum(gamma, cfg).values.tolist(),
                magnetization=np.real(magnetization(gamma)).tolist(),
            )
        )
    return records


def command_muc(run: RunConfig, cfg: Configuration) -> list[BaseModel]:
    point = run.model.point()
    if not run.sizes and family_spec(point.family).translational:
        return command_translational(run, cfg)
    records: list[BaseModel] = []
    for n in _require_sizes(run):
        geometry = evaluate_point(point, run.model.pair, n, config=cfg)
        report = geometry.report
        flags = list(report.flags)
        discrepancy = bound = holds = None
        try:
            discrepancy = incompatibility_report(report, config=cfg).discrepancy_bound
            gap = gap_bound_check(geometry.pair, geometry.spectrum, report, geometry.drift_derivs, cfg)
            bound, holds = gap.bound, gap.holds
        except ComputeError as exc:
            flags.append(exc.tag)
        records.append(
            MucRecord(
                n=n,
                params=list(report.params),
                U=np.asarray(report.U).tolist(),
                J=np.asarray(report.J).tolist(),
                g=np.asarray(report.g).tolist(),
                det_J=report.det_J,
                det_2U=report.det_2U,
                ratio_incompat=report.ratio_incompat,
                discrepancy_bound=discrepancy,
                gap=geometry.gap,
                gap_bound=bound,
                gap_bound_holds=holds,
                flag=";".join(flags),
            )
        )
    return records


def _points(run: RunConfig) -> list[ModelPoint]:
    base = run.model.point()
    return grid_points(base, run.grid) if run.grid else [base]


def command_sweep(run: RunConfig, cfg: Configuration) -> list[BaseModel]:
    if not run.sizes:
        return command_translational(run, cfg)
    tasks = plan_tasks(_points(run), run.sizes, run.model.pair)
    return list(sweep(tasks, cfg, run.threads or 1))


def command_translational(run: RunConfig, cfg: Configuration) -> list[BaseModel]:
    tasks = plan_tasks(
        _points(run), [None], run.model.pair, kind="translational", symbol=run.model.symbol
    )
    return list(sweep(tasks, cfg, run.threads or 1))


def command_scaling(run: RunConfig, cfg: Configuration) -> list[BaseModel]:
    sizes = run.sizes or list(DEFAULT_SIZES)
    threads = run.threads or 1
    records: list[BaseModel] = []
    if run.scaling.table:
        for regime in table_regimes(run.scaling.delta):
            _, fits = scaling_table(regime.point, sizes, run.model.pair, cfg, threads)
            records.extend(_fit_records(regime.name, fits, regime.exponents, regime.tolerance))
        return records
    points = _points(run)
    rows = sweep(plan_tasks(points, sizes, run.model.pair), cfg, threads)
    for k, point in enumerate(points):
        chunk = [r for r in rows[k * len(sizes) : (k + 1) * len(sizes)] if isinstance(r, SweepRow)]
        records.extend(_fit_records(json.dumps(point.params, sort_keys=True), fits_from_rows(chunk)))
    return records


def command_oracle(run: RunConfig, cfg: Configuration) -> list[BaseModel]:
    point = run.model.point()
    records: list[BaseModel] = []
    for n in run.sizes or [2, 3]:
        records.extend(oracle_equivalence(point, n, run.model.pair, cfg))
    return records


def command_check(run: RunConfig, cfg: Configuration) -> list[BaseModel]:
    section = run.check
    return list(
        run_checks(
            seed=section.seed,
            points=section.points,
            sizes=section.sizes,
            lyapunov_instances=section.lyapunov_instances,
            random_models=section.random_models,
            config=cfg,
        )
    )


HANDLERS = {
    "ness": command_ness,
    "muc": command_muc,
    "sweep": command_sweep,
    "scaling": command_scaling,
    "translational": command_translational,
    "oracle": command_oracle,
    "check": command_check,
}


def run(config: RunConfig) -> list[BaseModel]:
    """Execute ``config`` and write its records.

    Raises:
        ComputeError: the check or oracle command found a failing comparison.
    """
    cfg = config.configuration()
    logger.info("running %s on %s", config.command, config.model.family)
    records = HANDLERS[config.command](config, cfg)
    text = render(records, config.output.format)
    if config.output.path is None:
        sys.stdout.write(text)
    else:
        write_atomic(config.output.path, text)
        logger.info("wrote %d records to %s", len(records), config.output.path)
    failed = [r for r in records if getattr(r, "passed", True) is False]
    if failed:
        raise ComputeError(f"{len(failed)} of {len(records)} checks failed")
    return records


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    source = common.add_mutually_exclusive_group()
    source.add_argument("--config", help="TOML run configuration")
    source.add_argument("--recipe", choices=RECIPES, help="bundled run configuration")
    common.add_argument(
        "--set", action="append", metavar="SECTION.KEY=VALUE", help="override one config value"
    )
    common.add_argument("--out", help="output file (default: standard output)")
    common.add_argument("--format", choices=("csv", "jsonl"))
    common.add_argument("--threads", type=int, help="sweep workers")
    common.add_argument("--log-level", help="DEBUG, INFO, WARNING or ERROR")

    parser = argparse.ArgumentParser(
        prog="uhlmann-ness",
        description="Mean Uhlmann curvature of fermionic Gaussian steady states.",
        epilog="bundled recipes:\n"
        + "\n".join(f"  {name:<22} {text}" for name, text in RECIPES.items()),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    commands = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("ness", "steady-state purity spectrum and magnetization"),
        ("muc", "curvature and Fisher matrices at one point"),
        ("sweep", "grid of points and sizes as a table"),
        ("scaling", "power-law fits over sizes"),
        ("translational", "thermodynamic-limit curvature per site"),
        ("oracle", "compare against the exact density matrix"),
        ("check", "self-test suite"),
    ):
        commands.add_parser(name, parents=[common], help=text)
    return parser


def main(argv: Optional[Iterable[str]] = None) -> int:
    args = build_parser().parse_args(None if argv is None else list(argv))
    try:
        settings = Settings.validate(args.log_level)
        settings.configure_logging()
        config = build_run_config(args)
        if config.threads is None:
            config = config.model_copy(update={"threads": settings.threads})
        run(config)
    except MucError as exc:
        logger.error("%s: %s", exc.tag, exc)
        return exc.exit_code
    except ValidationError as exc:
        logger.error("invalid model point: %s", exc)
        return ConfigError.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
