"""Quantum Fisher tensor, Uhlmann curvature and the incompatibility bounds.

Everything is evaluated in the eigenbasis of Γ. With eigenvalues ``λ_j`` and
``A = V†∂_μΓV``, ``B = V†∂_νΓV``:

    I_μν = ½ Σ_jk (1 + λ_k)(1 - λ_j) / (1 - λ_jλ_k)² A_jk B_kj

``J = Re I`` is the Fisher information matrix, ``U = -Im I / 2`` the mean
Uhlmann curvature and ``g = J/4`` the Bures metric.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from uhlmann_ness.configuration import Configuration, resolve
from uhlmann_ness.errors import (
    GaplessDrift,
    NotPositiveSemidefinite,
    SingularFisher,
)
from uhlmann_ness.gaussian_state import CovarianceMatrix, PuritySpectrum, purity_spectrum
from uhlmann_ness.lyapunov import (
    DriftBathPair,
    solve_continuous,
    solve_derivative,
)
from uhlmann_ness.models import (
    ModelPoint,
    dissipative_gap,
    drift_bath,
    drift_derivatives,
    fd_step,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GeometryReport:
    """Quantum Fisher tensor and the scalars derived from it."""

    params: tuple[str, ...]
    I: np.ndarray
    J: np.ndarray
    U: np.ndarray
    g: np.ndarray
    det_J: float
    det_2U: float
    norm_inf_J: float
    norm_inf_2U: float
    ratio_incompat: float
    flags: tuple[str, ...] = ()

    def entry(self, matrix: str, mu: str, nu: str) -> float:
        """``report.entry("U", "delta", "h")`` style lookup by parameter name."""
        a, b = self.params.index(mu), self.params.index(nu)
        return float(getattr(self, matrix)[a, b])

    def discrepancy_bound(self, G: Optional[np.ndarray] = None) -> float:
        """``2‖√G J⁻¹UJ⁻¹√G‖₁``, the bound on the Holevo/SLD discrepancy."""
        p = len(self.params)
        G = np.eye(p) if G is None else np.asarray(G, dtype=float)
        root = scipy.linalg.sqrtm(G)
        inv = _fisher_inverse(self.J)
        core = root @ inv @ self.U @ inv @ root
        return float(2.0 * np.sum(np.linalg.svd(core, compute_uv=False)))


@dataclass(frozen=True)
class IncompatibilityReport:
    det_J: float
    det_2U: float
    det_inequality: bool
    max_eig_J: float
    max_eig_2iU: float
    norm_inequality: bool
    muc_margin: Optional[float]
    discrepancy_bound: float
    discrepancy_closed_form: Optional[float]
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class GapBound:
    """Per-site bound ``|U_μν|/n ≤ (P_Γ/Δ²)(‖dY‖ + 2‖dX‖)²``."""

    p_gamma: float
    p_gamma_alt: float
    gap: float
    coupling: float
    bound: float
    per_site_muc: float
    margin: float
    holds: bool


@dataclass(frozen=True)
class PointGeometry:
    """All intermediate objects of one geometry evaluation."""

    point: ModelPoint
    n: Optional[int]
    pair: DriftBathPair
    covariance: CovarianceMatrix
    spectrum: PuritySpectrum
    derivs: list[np.ndarray]
    drift_derivs: list[tuple[np.ndarray, np.ndarray]]
    report: GeometryReport
    gap: float = field(default=0.0)


def _fisher_inverse(J: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.inv(J)
    except np.linalg.LinAlgError:
        return np.linalg.pinv(J)


def parameter_derivatives(
    point: ModelPoint,
    gamma: CovarianceMatrix,
    params: Sequence[str],
    n: Optional[int] = None,
    pair: Optional[DriftBathPair] = None,
    method: str = "lyapunov",
    config: Optional[Configuration] = None,
) -> list[np.ndarray]:
    """``∂_μΓ`` for each parameter.

    ``method="lyapunov"`` solves the differentiated Lyapunov equation;
    ``method="fd"`` takes central differences of the steady state.
    """
    cfg = resolve(config)
    if method == "lyapunov":
        pair = pair if pair is not None else drift_bath(point, n, cfg)
        derivs = []
        for name in params:
            dX, dY = drift_derivatives(point, n, name, cfg)
            derivs.append(solve_derivative(pair, dX, dY, gamma, cfg))
        return derivs
    if method == "fd":
        derivs = []
        for name in params:
            step = fd_step(point.value(name), cfg)
            plus = solve_continuous(drift_bath(point.shifted(name, step), n, cfg), cfg)
            minus = solve_continuous(drift_bath(point.shifted(name, -step), n, cfg), cfg)
            derivs.append((plus.data - minus.data) / (2 * step))
        return derivs
    raise ValueError(f"unknown derivative method {method!r}")


def fisher_weights(spec: PuritySpectrum, config: Optional[Configuration] = None) -> np.ndarray:
    """``(1 + λ_k)(1 - λ_j)/(1 - λ_jλ_k)²`` with pure pairs masked to zero."""
    cfg = resolve(config)
    lam = spec.values
    denom = 1.0 - np.outer(lam, lam)
    weights = np.zeros_like(denom)
    mask = denom > cfg.pure_tol
    numer = np.outer(1.0 - lam, 1.0 + lam)
    weights[mask] = numer[mask] / denom[mask] ** 2
    return weights


def quantum_fisher_tensor(
    spec: PuritySpectrum,
    derivs: Sequence[np.ndarray],
    params: Optional[Sequence[str]] = None,
    strict: bool = False,
    config: Optional[Configuration] = None,
) -> GeometryReport:
    """Build the report for ``p = len(derivs)`` parameters.

    Raises:
        BasisMismatch: ``spec`` does not diagonalize its covariance.
        NotPositiveSemidefinite: ``I`` has an eigenvalue below ``-tol_psd·‖I‖``.
        SingularFisher: only with ``strict=True``; otherwise flagged.
    """
    cfg = resolve(config)
    spec.check_basis(cfg)
    p = len(derivs)
    names = tuple(params) if params is not None else tuple(f"p{k}" for k in range(p))
    weights = fisher_weights(spec, cfg)
    rotated = [spec.to_eigenbasis(np.asarray(d, dtype=complex)) for d in derivs]
    I = np.zeros((p, p), dtype=complex)
    for a in range(p):
        for b in range(p):
            I[a, b] = 0.5 * np.sum(weights * rotated[a] * rotated[b].T)
    I = (I + I.conj().T) / 2
    norm = float(np.linalg.norm(I, 2)) if p else 0.0
    if p:
        low = float(np.min(np.linalg.eigvalsh(I)))
        if low < -cfg.tol_psd * norm:
            raise NotPositiveSemidefinite(f"quantum Fisher tensor has eigenvalue {low:.3e}")
    J = I.real.copy()
    U = -I.imag / 2
    J = (J + J.T) / 2
    U = (U - U.T) / 2

    flags: list[str] = []
    det_J = float(np.linalg.det(J)) if p else 1.0
    det_2U = float(np.linalg.det(2 * U)) if p else 0.0
    if p and abs(det_J) <= cfg.tol_psd * max(norm, np.finfo(float).tiny) ** p:
        if strict:
            raise SingularFisher(f"det J = {det_J:.3e}")
        logger.warning("Fisher information matrix is singular (det J = %.3e)", det_J)
        flags.append(SingularFisher.tag)
    ratio = float(2 * abs(U[0, 1]) / det_J) if p == 2 and det_J > 0 else float("nan")
    return GeometryReport(
        params=names,
        I=I,
        J=J,
        U=U,
        g=J / 4,
        det_J=det_J,
        det_2U=det_2U,
        norm_inf_J=float(np.linalg.norm(J, 2)) if p else 0.0,
        norm_inf_2U=float(np.linalg.norm(2 * U, 2)) if p else 0.0,
        ratio_incompat=ratio,
        flags=tuple(flags),
    )


def holevo_matrix(report: GeometryReport) -> np.ndarray:
    """``Z̃ = J⁻¹ I J⁻¹ = J⁻¹ - 2i J⁻¹UJ⁻¹``."""
    inv = _fisher_inverse(report.J)
    return inv @ report.I @ inv


def incompatibility_report(
    report: GeometryReport,
    G: Optional[np.ndarray] = None,
    config: Optional[Configuration] = None,
) -> IncompatibilityReport:
    """Check the determinant and norm inequalities and evaluate the discrepancy bound."""
    cfg = resolve(config)
    p = len(report.params)
    G = np.eye(p) if G is None else np.asarray(G, dtype=float)
    scale = max(1.0, report.norm_inf_J)
    max_eig_J = float(np.max(np.linalg.eigvalsh(report.J))) if p else 0.0
    max_eig_2iU = float(np.max(np.abs(np.linalg.eigvalsh(2j * report.U)))) if p else 0.0
    muc_margin = None
    closed_form = None
    if p == 2:
        muc_margin = float(np.sqrt(max(report.det_J, 0.0)) / 2 - abs(report.U[0, 1]))
        if report.det_J > 0:
            closed_form = float(
                2 * np.sqrt(np.linalg.det(G)) * np.sqrt(max(report.det_2U, 0.0)) / report.det_J
            )
    return IncompatibilityReport(
        det_J=report.det_J,
        det_2U=report.det_2U,
        det_inequality=report.det_J >= report.det_2U - cfg.tol_psd * scale**p,
        max_eig_J=max_eig_J,
        max_eig_2iU=max_eig_2iU,
        norm_inequality=report.norm_inf_J >= report.norm_inf_2U - cfg.tol_psd * scale,
        muc_margin=muc_margin,
        discrepancy_bound=report.discrepancy_bound(G) if p else 0.0,
        discrepancy_closed_form=closed_form,
        flags=report.flags,
    )


def purity_factor(spec: PuritySpectrum) -> tuple[float, float]:
    """``P_Γ`` as ``1/min|1 + λ_jλ_k|`` and the variant ``1/min|1 - λ_jλ_k|``."""
    prod = np.outer(spec.values, spec.values)
    with np.errstate(divide="ignore"):
        literal = float(1.0 / np.min(np.abs(1.0 + prod)))
        alternate = float(1.0 / np.min(np.abs(1.0 - prod)))
    if not np.isclose(literal, alternate, rtol=1e-9):
        logger.warning("P_Γ variants differ: %.6g (1+γγ) vs %.6g (1-γγ)", literal, alternate)
    return literal, alternate


def gap_bound_check(
    pair: DriftBathPair,
    spec: PuritySpectrum,
    report: GeometryReport,
    drift_derivs: Sequence[tuple[np.ndarray, np.ndarray]],
    config: Optional[Configuration] = None,
) -> GapBound:
    """Evaluate the per-site gap bound for the largest ``|U_μν|``.

    Raises:
        GaplessDrift: ``Δ ≤ gap_floor``.
    """
    cfg = resolve(config)
    gap = dissipative_gap(pair, cfg)
    if gap <= cfg.gap_floor:
        raise GaplessDrift(f"gap {gap:.3e} too small for the bound")
    literal, alternate = purity_factor(spec)
    p_gamma = max(literal, alternate)
    coupling = max(
        (np.linalg.norm(dY, 2) + 2 * np.linalg.norm(dX, 2) for dX, dY in drift_derivs),
        default=0.0,
    )
    bound = p_gamma / gap**2 * coupling**2
    n = spec.covariance.n_sites
    per_site = float(np.max(np.abs(report.U), initial=0.0)) / n
    margin = bound - per_site
    return GapBound(
        p_gamma=literal,
        p_gamma_alt=alternate,
        gap=gap,
        coupling=float(coupling),
        bound=float(bound),
        per_site_muc=per_site,
        margin=float(margin),
        holds=bool(margin >= -cfg.tol_psd * max(1.0, per_site)),
    )


def evaluate_point(
    point: ModelPoint,
    params: Sequence[str],
    n: Optional[int] = None,
    strict: bool = False,
    config: Optional[Configuration] = None,
) -> PointGeometry:
    """Steady state, derivatives and geometry report at one model point."""
    cfg = resolve(config)
    pair = drift_bath(point, n, cfg)
    gamma = solve_continuous(pair, cfg)
    spec = purity_spectrum(gamma, cfg)
    drift_derivs = [drift_derivatives(point, n, name, cfg) for name in params]
    derivs = [solve_derivative(pair, dX, dY, gamma, cfg) for dX, dY in drift_derivs]
    report = quantum_fisher_tensor(spec, derivs, params, strict=strict, config=cfg)
    logger.debug("geometry at %s n=%s: det J = %.6g", point.params, n, report.det_J)
    return PointGeometry(
        point=point,
        n=n,
        pair=pair,
        covariance=gamma,
        spectrum=spec,
        derivs=derivs,
        drift_derivs=drift_derivs,
        report=report,
        gap=dissipative_gap(pair, cfg),
    )
