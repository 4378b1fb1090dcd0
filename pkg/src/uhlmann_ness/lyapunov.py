"""Solvers for the matrix equations behind the steady state and its SLDs.

``XΓ + ΓXᵀ = Y`` is solved by Bartels-Stewart on the complex Schur form of the
drift ``X``; the factorization is cached on the `DriftBathPair` so derivative
solves reuse it. The discrete equation ``ΓKΓ - K = dΓ`` is solved in the
eigenbasis of Γ.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from uhlmann_ness.configuration import Configuration, resolve
from uhlmann_ness.errors import (
    EigensolverFailure,
    GaplessDrift,
    IllConditioned,
    StructureViolation,
)
from uhlmann_ness.gaussian_state import (
    CovarianceMatrix,
    PuritySpectrum,
    validate_covariance,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DriftBathPair:
    """Drift ``X`` (real) and bath term ``Y`` (imaginary antisymmetric)."""

    X: np.ndarray
    Y: np.ndarray

    @property
    def dim(self) -> int:
        return self.X.shape[0]

    @cached_property
    def schur(self) -> tuple[np.ndarray, np.ndarray]:
        """Complex Schur form ``X = Z T Z†``, computed once."""
        try:
            T, Z = scipy.linalg.schur(self.X.astype(complex), output="complex")
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise EigensolverFailure(f"Schur factorization failed: {exc}") from exc
        return T, Z

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        return np.diag(self.schur[0]).copy()

    @property
    def gap(self) -> float:
        """Dissipative gap ``Δ = 2 min_j Re x_j``."""
        return float(2.0 * np.min(self.eigenvalues.real))


@dataclass(frozen=True)
class SldKernel:
    """Hermitian antisymmetric ``K`` with ``L = ½ ωᵀKω + η``."""

    K: np.ndarray


def validate_drift_bath(
    X: np.ndarray, Y: np.ndarray, config: Optional[Configuration] = None
) -> DriftBathPair:
    """Check the structure of ``X`` and ``Y`` and return a pair."""
    cfg = resolve(config)
    X = np.asarray(X)
    Y = np.asarray(Y, dtype=complex)
    if X.ndim != 2 or X.shape[0] != X.shape[1] or X.shape != Y.shape:
        raise StructureViolation(f"incompatible drift/bath shapes {X.shape}, {Y.shape}")
    x_scale = max(1.0, float(np.max(np.abs(X), initial=0.0)))
    y_scale = max(1.0, float(np.max(np.abs(Y), initial=0.0)))
    if np.iscomplexobj(X) and np.max(np.abs(X.imag), initial=0.0) > cfg.tol_struct * x_scale:
        raise StructureViolation("drift matrix X is not real")
    if np.max(np.abs(Y + Y.T), initial=0.0) > cfg.tol_struct * y_scale:
        raise StructureViolation("bath matrix Y is not antisymmetric")
    if np.max(np.abs(Y.real), initial=0.0) > cfg.tol_struct * y_scale:
        raise StructureViolation("bath matrix Y is not purely imaginary")
    return DriftBathPair(X=np.real(X).astype(float), Y=1j * ((Y - Y.T) / 2).imag)


def _require_gap(pair: DriftBathPair, cfg: Configuration) -> None:
    gap = pair.gap
    if gap <= cfg.gap_floor:
        raise GaplessDrift(f"dissipative gap {gap:.3e} is below gap_floor {cfg.gap_floor:.1e}")


def _triangular_sylvester(T: np.ndarray, C: np.ndarray) -> np.ndarray:
    """Solve ``T G + G Tᵀ = C`` for upper triangular ``T``, column by column."""
    N = T.shape[0]
    G = np.zeros((N, N), dtype=complex)
    eye = np.eye(N)
    for j in range(N - 1, -1, -1):
        rhs = C[:, j] - G[:, j + 1 :] @ T[j, j + 1 :]
        G[:, j] = scipy.linalg.solve_triangular(T + T[j, j] * eye, rhs, check_finite=False)
    return G


def _residual(pair: DriftBathPair, sol: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    return rhs - (pair.X @ sol + sol @ pair.X.T)


def relative_residual(pair: DriftBathPair, sol: np.ndarray, rhs: np.ndarray) -> float:
    """``‖X S + S Xᵀ - rhs‖_F / ‖rhs‖_F``; the absolute residual when ``rhs = 0``."""
    res = float(np.linalg.norm(_residual(pair, sol, rhs)))
    scale = float(np.linalg.norm(rhs))
    return res / scale if scale else res


def _backward_error(pair: DriftBathPair, sol: np.ndarray, rhs: np.ndarray) -> float:
    scale = np.linalg.norm(rhs) + 2 * np.linalg.norm(pair.X) * np.linalg.norm(sol)
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(_residual(pair, sol, rhs)) / scale)


def solve_with_drift(
    pair: DriftBathPair,
    rhs: np.ndarray,
    config: Optional[Configuration] = None,
    backward_error: bool = False,
) -> np.ndarray:
    """Solve ``X S + S Xᵀ = rhs`` for any right-hand side.

    The residual is measured relative to ``‖rhs‖_F``, or with
    ``backward_error=True`` relative to ``‖rhs‖ + 2‖X‖‖S‖``. One round of
    iterative refinement runs whenever the first residual is above
    ``tol_resid``.

    Raises:
        GaplessDrift: ``Δ ≤ gap_floor``.
        IllConditioned: the refined residual is still above ``tol_resid``.
    """
    cfg = resolve(config)
    _require_gap(pair, cfg)
    T, Z = pair.schur
    measure = _backward_error if backward_error else relative_residual

    def solve(c: np.ndarray) -> np.ndarray:
        G = _triangular_sylvester(T, Z.conj().T @ c @ Z.conj())
        return Z @ G @ Z.T

    rhs = np.asarray(rhs, dtype=complex)
    sol = solve(rhs)
    rel = measure(pair, sol, rhs)
    if rel > cfg.tol_resid:
        logger.debug("Lyapunov residual %.3e above tolerance, refining", rel)
        sol = sol + solve(_residual(pair, sol, rhs))
        rel = measure(pair, sol, rhs)
        if rel > cfg.tol_resid:
            raise IllConditioned(f"Lyapunov residual {rel:.3e} after refinement")
    logger.debug("Lyapunov solve of size %d, relative residual %.3e", pair.dim, rel)
    return sol


def _imaginary_antisymmetric(matrix: np.ndarray) -> np.ndarray:
    return 1j * ((matrix - matrix.T) / 2).imag


def solve_continuous(
    pair: DriftBathPair, config: Optional[Configuration] = None
) -> CovarianceMatrix:
    """Steady-state covariance: the solution of ``XΓ + ΓXᵀ = Y``."""
    cfg = resolve(config)
    sol = solve_with_drift(pair, pair.Y, cfg)
    return validate_covariance(_imaginary_antisymmetric(sol), cfg)


def solve_derivative(
    pair: DriftBathPair,
    dX: np.ndarray,
    dY: np.ndarray,
    gamma: CovarianceMatrix,
    config: Optional[Configuration] = None,
) -> np.ndarray:
    """Parameter derivative ``∂Γ`` from ``X ∂Γ + ∂Γ Xᵀ = dY - dX Γ - Γ dXᵀ``.

    ``∂Γ`` grows with the inverse gap, so the residual is checked as a
    backward error rather than relative to the right-hand side.
    """
    cfg = resolve(config)
    rhs = np.asarray(dY, dtype=complex) - dX @ gamma.data - gamma.data @ np.asarray(dX).T
    return _imaginary_antisymmetric(solve_with_drift(pair, rhs, cfg, backward_error=True))


def solve_discrete_K(
    spec: PuritySpectrum, d_gamma: np.ndarray, config: Optional[Configuration] = None
) -> SldKernel:
    """Solve ``ΓKΓ - K = dΓ`` in the eigenbasis of Γ.

    Entries with ``1 - γ_jγ_k ≤ pure_tol`` are set to zero (continuity
    extension at pure modes).
    """
    cfg = resolve(config)
    spec.check_basis(cfg)
    rotated = spec.to_eigenbasis(np.asarray(d_gamma, dtype=complex))
    denom = 1.0 - np.outer(spec.values, spec.values)
    mask = denom > cfg.pure_tol
    kernel = np.zeros_like(rotated)
    kernel[mask] = -rotated[mask] / denom[mask]
    return SldKernel(K=_imaginary_antisymmetric(spec.from_eigenbasis(kernel)))


def sld_kernels(
    spec: PuritySpectrum,
    derivs: Sequence[np.ndarray],
    config: Optional[Configuration] = None,
) -> list[SldKernel]:
    return [solve_discrete_K(spec, d, config) for d in derivs]
