"""Fermionic Gaussian states through their Majorana covariance matrices.

A covariance matrix ``Γ_jk = ½ Tr ρ[ω_j, ω_k]`` is purely imaginary and
antisymmetric, hence Hermitian, with spectrum ``±γ_k`` in ``[-1, 1]``. The
canonical single-mode block is ``[[0, iγ], [-iγ, 0]]``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np
import scipy.linalg

from uhlmann_ness.configuration import Configuration, resolve
from uhlmann_ness.errors import (
    BasisMismatch,
    EigensolverFailure,
    IndexOutOfRange,
    RepeatedIndex,
    SpectrumViolation,
    StructureViolation,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CovarianceMatrix:
    """A validated 2n×2n covariance matrix."""

    n_sites: int
    data: np.ndarray

    def __post_init__(self) -> None:
        self.data.setflags(write=False)

    @property
    def dim(self) -> int:
        return 2 * self.n_sites


@dataclass(frozen=True)
class PuritySpectrum:
    """Eigen-decomposition of Γ with the ``±γ_k`` pairing made explicit.

    Attributes:
        gammas: the ``n`` values ``γ_k ≥ 0`` in descending order.
        values: all ``2n`` eigenvalues, ascending, aligned with ``basis`` columns.
        basis: unitary eigenvector matrix.
        covariance: the Γ that was decomposed.
    """

    gammas: np.ndarray
    values: np.ndarray
    basis: np.ndarray
    covariance: CovarianceMatrix

    @cached_property
    def omegas(self) -> np.ndarray:
        """``Ω_k = 2 artanh γ_k``; infinite for pure modes."""
        with np.errstate(divide="ignore"):
            return 2.0 * np.arctanh(np.clip(self.gammas, 0.0, 1.0))

    def reconstruct(self) -> np.ndarray:
        return (self.basis * self.values) @ self.basis.conj().T

    def to_eigenbasis(self, matrix: np.ndarray) -> np.ndarray:
        return self.basis.conj().T @ matrix @ self.basis

    def from_eigenbasis(self, matrix: np.ndarray) -> np.ndarray:
        return self.basis @ matrix @ self.basis.conj().T

    def check_basis(self, config: Optional[Configuration] = None) -> None:
        """Raise BasisMismatch when the basis does not diagonalize the stored Γ."""
        cfg = resolve(config)
        gamma = self.covariance.data
        residual = np.max(np.abs(self.reconstruct() - gamma), initial=0.0)
        scale = max(1.0, np.max(np.abs(gamma), initial=0.0))
        if residual > cfg.tol_recon * scale * self.covariance.dim:
            raise BasisMismatch(
                f"spectrum reconstruction residual {residual:.3e} exceeds tolerance"
            )


def _structure_scale(data: np.ndarray) -> float:
    return max(1.0, float(np.max(np.abs(data), initial=0.0)))


def validate_covariance(
    data: np.ndarray, config: Optional[Configuration] = None
) -> CovarianceMatrix:
    """Check and symmetrize a candidate covariance matrix.

    Raises:
        StructureViolation: not square of even dimension, or antisymmetry or
            imaginarity violated beyond ``tol_struct`` (relative to the entries).
        SpectrumViolation: an eigenvalue has modulus above ``1 + tol_spec``.
    """
    cfg = resolve(config)
    data = np.asarray(data, dtype=complex)
    if data.ndim != 2 or data.shape[0] != data.shape[1] or data.shape[0] % 2:
        raise StructureViolation(f"expected a square matrix of even size, got {data.shape}")
    scale = _structure_scale(data)
    asym = float(np.max(np.abs(data + data.T), initial=0.0))
    real = float(np.max(np.abs(data.real), initial=0.0))
    if asym > cfg.tol_struct * scale:
        raise StructureViolation(f"Γ + Γᵀ has entries up to {asym:.3e}")
    if real > cfg.tol_struct * scale:
        raise StructureViolation(f"Re Γ has entries up to {real:.3e}")
    clean = 1j * ((data - data.T) / 2).imag
    try:
        eigenvalues = np.linalg.eigvalsh(clean)
    except np.linalg.LinAlgError as exc:
        raise EigensolverFailure(str(exc)) from exc
    top = float(np.max(np.abs(eigenvalues), initial=0.0))
    if top > 1.0 + cfg.tol_spec:
        raise SpectrumViolation(f"|eigenvalue| {top:.12g} exceeds 1")
    return CovarianceMatrix(n_sites=data.shape[0] // 2, data=clean)


def purity_spectrum(
    gamma: CovarianceMatrix, config: Optional[Configuration] = None
) -> PuritySpectrum:
    """Diagonalize Γ with a Hermitian eigensolver and pair the ``±γ`` values."""
    cfg = resolve(config)
    try:
        values, basis = scipy.linalg.eigh(gamma.data)
    except np.linalg.LinAlgError as exc:
        raise EigensolverFailure(str(exc)) from exc
    n = gamma.n_sites
    pairing = np.max(np.abs(values[:n] + values[::-1][:n]), initial=0.0)
    if pairing > cfg.tol_spec:
        raise EigensolverFailure(f"eigenvalues not paired as ±γ (mismatch {pairing:.3e})")
    spec = PuritySpectrum(
        gammas=values[n:][::-1].copy(),
        values=values,
        basis=basis,
        covariance=gamma,
    )
    spec.check_basis(cfg)
    return spec


def two_point(gamma: CovarianceMatrix, j: int, k: int) -> complex:
    """``⟨ω_j ω_k⟩ = δ_jk + Γ_jk`` with 1-based indices."""
    _check_indices(gamma, (j, k), distinct=False)
    return complex((j == k) + gamma.data[j - 1, k - 1])


def four_point_wick(gamma: CovarianceMatrix, j: int, k: int, l: int, m: int) -> complex:
    """``⟨ω_j ω_k ω_l ω_m⟩`` from Wick's theorem, 1-based distinct indices."""
    _check_indices(gamma, (j, k, l, m), distinct=True)
    a = gamma.data + np.eye(gamma.dim)
    j, k, l, m = j - 1, k - 1, l - 1, m - 1
    return complex(a[j, k] * a[l, m] - a[j, l] * a[k, m] + a[j, m] * a[k, l])


def magnetization(gamma: CovarianceMatrix) -> np.ndarray:
    """``⟨σ^z_j⟩ = -i Γ_{2j-1, 2j}`` for every site."""
    diag = np.array([gamma.data[2 * s, 2 * s + 1] for s in range(gamma.n_sites)])
    return (-1j * diag).real


def sld_offset(kernel: np.ndarray, gamma: CovarianceMatrix) -> float:
    """Scalar ``η = ½ Tr(KΓ)`` that makes ``⟨½ ωᵀKω + η⟩ = 0``."""
    return float(0.5 * np.trace(kernel @ gamma.data).real)


def _check_indices(gamma: CovarianceMatrix, indices: tuple[int, ...], distinct: bool) -> None:
    for idx in indices:
        if not 1 <= idx <= gamma.dim:
            raise IndexOutOfRange(f"index {idx} outside [1, {gamma.dim}]")
    if distinct and len(set(indices)) != len(indices):
        raise RepeatedIndex(f"indices {indices} must be pairwise distinct")
