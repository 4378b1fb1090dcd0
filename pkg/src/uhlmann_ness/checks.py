"""Self-test suite behind the ``check`` command.

Seeded random inputs go through four families of checks. The Gaussian route
is compared with the exact density-matrix oracle and the Schur Lyapunov
solver with the Kronecker-vectorized linear system. The incompatibility and
gap inequalities run on every evaluated chain and on random quadratic models.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict

from uhlmann_ness.configuration import Configuration, resolve
from uhlmann_ness.errors import ComputeError
from uhlmann_ness.gaussian_state import PuritySpectrum, purity_spectrum
from uhlmann_ness.geometry import (
    GeometryReport,
    PointGeometry,
    evaluate_point,
    gap_bound_check,
    incompatibility_report,
    quantum_fisher_tensor,
)
from uhlmann_ness.lyapunov import (
    DriftBathPair,
    relative_residual,
    solve_continuous,
    solve_derivative,
    solve_with_drift,
    validate_drift_bath,
)
from uhlmann_ness.models import ModelPoint, QuadraticModel, assemble_drift_bath
from uhlmann_ness.oracle import exact_geometry

logger = logging.getLogger(__name__)

ORACLE_ABS = 1e-8
ORACLE_REL = 1e-6
KRONECKER_TOL = 1e-9


class CheckRecord(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    check: str
    n: int
    passed: bool
    value: Optional[float] = None
    detail: str = ""


def random_boundary_point(rng: np.random.Generator) -> ModelPoint:
    """Boundary XY chain with δ, h in [0, 2] and bath rates in [0.1, 1]."""
    rates = rng.uniform(0.1, 1.0, size=4)
    return ModelPoint(
        family="boundary_xy",
        params=dict(
            delta=float(rng.uniform(0.0, 2.0)),
            h=float(rng.uniform(0.0, 2.0)),
            kappa_l_plus=float(rates[0]),
            kappa_l_minus=float(rates[1]),
            kappa_r_plus=float(rates[2]),
            kappa_r_minus=float(rates[3]),
        ),
    )


def _close(a: np.ndarray, b: np.ndarray) -> tuple[bool, float]:
    diff = float(np.max(np.abs(a - b), initial=0.0))
    scale = float(np.max(np.abs(b), initial=0.0))
    return diff <= ORACLE_ABS or diff <= ORACLE_REL * scale, diff


def oracle_equivalence(
    point: ModelPoint,
    n: int,
    params: Sequence[str] = ("delta", "h"),
    config: Optional[Configuration] = None,
) -> list[CheckRecord]:
    """Compare U, J and g of the Gaussian route with the exact oracle."""
    cfg = resolve(config)
    report = evaluate_point(point, params, n, config=cfg).report
    U_exact, J_exact = exact_geometry(point, params, n, cfg)
    records = []
    for name, ours, theirs in (
        ("oracle_U", report.U, U_exact),
        ("oracle_J", report.J, J_exact),
        ("oracle_g", report.g, J_exact / 4),
    ):
        passed, diff = _close(ours, theirs)
        records.append(
            CheckRecord(check=name, n=n, passed=passed, value=diff, detail=str(point.params))
        )
    return records


def random_drift_bath(rng: np.random.Generator, dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Real drift with spectrum in the right half-plane and an imaginary antisymmetric bath."""
    B = rng.standard_normal((dim, dim))
    shift = max(0.0, -float(np.min(np.linalg.eigvals(B).real))) + 0.5
    A = rng.standard_normal((dim, dim))
    return B + shift * np.eye(dim), 1j * (A - A.T)


def lyapunov_kronecker(
    rng: np.random.Generator, dim: int, config: Optional[Configuration] = None
) -> list[CheckRecord]:
    """Schur solve against ``(X⊗1 + 1⊗X) vec S = vec Y`` (row-major), plus its residual."""
    cfg = resolve(config)
    X, Y = random_drift_bath(rng, dim)
    pair = validate_drift_bath(X, Y, cfg)
    ours = solve_with_drift(pair, pair.Y, cfg)
    eye = np.eye(dim)
    reference = np.linalg.solve(np.kron(X, eye) + np.kron(eye, X), pair.Y.reshape(-1))
    diff = float(np.max(np.abs(ours.reshape(-1) - reference)))
    residual = relative_residual(pair, ours, pair.Y)
    return [
        CheckRecord(check="lyapunov_kronecker", n=dim // 2, passed=diff <= KRONECKER_TOL, value=diff),
        CheckRecord(
            check="lyapunov_residual", n=dim // 2, passed=residual <= cfg.tol_resid, value=residual
        ),
    ]


@dataclass(frozen=True)
class RandomModel:
    """A random quadratic model with one Hamiltonian parameter ``a`` and one bath parameter ``b``.

    ``H = i(A₀ + aA₁)`` with real antisymmetric ``A``, and ``4n`` baths
    ``l = l₀ + b l₁``, evaluated at ``a = b = 0``.
    """

    pair: DriftBathPair
    drift_derivs: tuple[tuple[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]

    @property
    def n_sites(self) -> int:
        return self.pair.dim // 2


def random_quadratic_model(
    rng: np.random.Generator, n: int, config: Optional[Configuration] = None
) -> RandomModel:
    dim = 2 * n

    def antisymmetric() -> np.ndarray:
        A = rng.standard_normal((dim, dim))
        return (A - A.T) / 2

    def bath_vectors() -> np.ndarray:
        count = 2 * dim
        return (rng.standard_normal((count, dim)) + 1j * rng.standard_normal((count, dim))) / np.sqrt(count)

    A0, A1 = antisymmetric(), antisymmetric()
    L0, L1 = bath_vectors(), bath_vectors()
    model = QuadraticModel(n_sites=n, H=1j * A0, baths=tuple(L0))
    pair = assemble_drift_bath(model, config)
    dM = L0.T @ L1.conj() + L1.T @ L0.conj()
    d_hamiltonian = (-4.0 * A1, np.zeros((dim, dim), dtype=complex))
    d_bath = (4.0 * dM.real, -8j * dM.imag)
    return RandomModel(pair=pair, drift_derivs=(d_hamiltonian, d_bath))


def bound_records(
    pair: DriftBathPair,
    spectrum: PuritySpectrum,
    report: GeometryReport,
    drift_derivs: Sequence[tuple[np.ndarray, np.ndarray]],
    n: int,
    config: Optional[Configuration] = None,
) -> list[CheckRecord]:
    """Determinant, norm, curvature and gap inequalities for one report."""
    cfg = resolve(config)
    bounds = incompatibility_report(report, config=cfg)
    records = [
        CheckRecord(check="det_inequality", n=n, passed=bounds.det_inequality, value=bounds.det_J - bounds.det_2U),
        CheckRecord(
            check="norm_inequality",
            n=n,
            passed=bounds.norm_inequality,
            value=report.norm_inf_J - report.norm_inf_2U,
        ),
    ]
    if bounds.muc_margin is not None:
        records.append(
            CheckRecord(
                check="muc_bound",
                n=n,
                passed=bounds.muc_margin >= -cfg.tol_psd * max(1.0, report.norm_inf_J),
                value=bounds.muc_margin,
            )
        )
    gap = gap_bound_check(pair, spectrum, report, drift_derivs, cfg)
    records.append(CheckRecord(check="gap_bound", n=n, passed=gap.holds, value=gap.margin))
    return records


def bound_suite(geometry: PointGeometry, config: Optional[Configuration] = None) -> list[CheckRecord]:
    """`bound_records` at one evaluated model point."""
    return bound_records(
        geometry.pair,
        geometry.spectrum,
        geometry.report,
        geometry.drift_derivs,
        geometry.n or 0,
        config,
    )


def random_model_bounds(
    rng: np.random.Generator, n: int, config: Optional[Configuration] = None
) -> list[CheckRecord]:
    """`bound_records` on a `random_quadratic_model` with two parameters."""
    cfg = resolve(config)
    model = random_quadratic_model(rng, n, cfg)
    gamma = solve_continuous(model.pair, cfg)
    spectrum = purity_spectrum(gamma, cfg)
    derivs = [solve_derivative(model.pair, dX, dY, gamma, cfg) for dX, dY in model.drift_derivs]
    report = quantum_fisher_tensor(spectrum, derivs, ("a", "b"), config=cfg)
    return bound_records(model.pair, spectrum, report, model.drift_derivs, n, cfg)


def run_checks(
    seed: int = 0,
    points: int = 20,
    sizes: Sequence[int] = (2, 3),
    lyapunov_instances: int = 20,
    random_models: int = 50,
    config: Optional[Configuration] = None,
) -> list[CheckRecord]:
    """Every check on ``points`` random chains per size; errors become failed records.

    ``random_models`` random quadratic models with one to four sites go
    through the bound inequalities as well.
    """
    cfg = resolve(config)
    rng = np.random.default_rng(seed)
    records: list[CheckRecord] = []
    for n in sizes:
        for _ in range(points):
            point = random_boundary_point(rng)
            try:
                records.extend(oracle_equivalence(point, n, config=cfg))
                records.extend(bound_suite(evaluate_point(point, ("delta", "h"), n, config=cfg), cfg))
            except ComputeError as exc:
                records.append(
                    CheckRecord(check="evaluation", n=n, passed=False, detail=f"{exc.tag}: {exc}")
                )
    for _ in range(random_models):
        n = int(rng.integers(1, 5))
        try:
            records.extend(random_model_bounds(rng, n, cfg))
        except ComputeError as exc:
            records.append(
                CheckRecord(check="random_model", n=n, passed=False, detail=f"{exc.tag}: {exc}")
            )
    for _ in range(lyapunov_instances):
        dim = 2 * int(rng.integers(1, 7))
        records.extend(lyapunov_kronecker(rng, dim, cfg))
    failed = [r for r in records if not r.passed]
    logger.info("%d checks, %d failed", len(records), len(failed))
    for record in failed:
        logger.warning("check %s (n=%d) failed: value=%s %s", record.check, record.n, record.value, record.detail)
    return records
