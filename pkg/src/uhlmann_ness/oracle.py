"""Exact density-matrix reference for up to four modes.

Everything here works on the full ``2^n``-dimensional Hilbert space: the
Liouvillian superoperator (row-major vectorization, ``vec(AρB) = (A⊗Bᵀ) vec ρ``),
its null vector, exact symmetric logarithmic derivatives and the curvature and
Fisher matrix built from them.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from uhlmann_ness.configuration import Configuration, resolve
from uhlmann_ness.conventions import (
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    SIGMA_MINUS,
    SIGMA_PLUS,
    linear_operator,
    majorana_operators,
    quadratic_operator,
    site_operator,
)
from uhlmann_ness.errors import (
    DegenerateNess,
    IllConditioned,
    IndexOutOfRange,
    InvalidSize,
    RankDeficiency,
    SizeLimit,
    SpectrumViolation,
)
from uhlmann_ness.gaussian_state import CovarianceMatrix, validate_covariance
from uhlmann_ness.models import ModelPoint, QuadraticModel, fd_step, quadratic_model

logger = logging.getLogger(__name__)

MAX_SITES = 4
DENSE_SITES = 3
_INVERSE_ITERATIONS = 50


@dataclass(frozen=True)
class DensityMatrix:
    data: np.ndarray

    def __post_init__(self) -> None:
        rho = self.data
        if abs(np.trace(rho) - 1.0) > 1e-12:
            raise SpectrumViolation(f"trace of ρ is {np.trace(rho)!r}")
        if np.max(np.abs(rho - rho.conj().T)) > 1e-12:
            raise SpectrumViolation("ρ is not Hermitian")
        low = float(np.min(np.linalg.eigvalsh(rho)))
        if low < -1e-10:
            raise SpectrumViolation(f"ρ has eigenvalue {low:.3e}")

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    @property
    def n_sites(self) -> int:
        return int(round(math.log2(self.dim)))


@dataclass(frozen=True)
class SldOperator:
    L: np.ndarray
    rank_deficient: bool = False


def _normalized(rho: np.ndarray) -> DensityMatrix:
    rho = (rho + rho.conj().T) / 2
    return DensityMatrix(rho / np.trace(rho).real)


def lindblad_superoperator(hamiltonian: np.ndarray, jumps: Sequence[np.ndarray]) -> np.ndarray:
    """``-i(H⊗1 - 1⊗Hᵀ) + Σ[2Λ⊗Λ* - Λ†Λ⊗1 - 1⊗(Λ†Λ)ᵀ]``."""
    dim = hamiltonian.shape[0]
    eye = np.eye(dim)
    out = -1j * (np.kron(hamiltonian, eye) - np.kron(eye, hamiltonian.T))
    for jump in jumps:
        product = jump.conj().T @ jump
        out += 2 * np.kron(jump, jump.conj()) - np.kron(product, eye) - np.kron(eye, product.T)
    return out


def liouvillian(model: QuadraticModel) -> np.ndarray:
    """Superoperator of the quadratic model in the Jordan-Wigner basis."""
    _check_size(model.n_sites)
    jumps = [linear_operator(l) for l in model.baths]
    return lindblad_superoperator(quadratic_operator(model.H), jumps)


def _check_size(n: int) -> None:
    if n > MAX_SITES:
        raise SizeLimit(f"the exact oracle handles n <= {MAX_SITES}, got {n}")
    if n < 1:
        raise InvalidSize(f"need at least one mode, got {n}")


def _null_vector(superop: np.ndarray, n: int, cfg: Configuration) -> np.ndarray:
    scale = max(1.0, float(np.linalg.norm(superop, 2)))
    if n <= DENSE_SITES:
        values, vectors = np.linalg.eig(superop)
        order = np.argsort(np.abs(values))
        if abs(values[order[1]]) <= cfg.rank_tol * scale:
            raise DegenerateNess("Liouvillian has more than one zero eigenvalue")
        return vectors[:, order[0]]
    singular = scipy.linalg.svdvals(superop)
    if singular[-2] <= cfg.rank_tol * scale:
        raise DegenerateNess("Liouvillian has more than one zero singular value")
    shift = 1e-9 * scale
    lu = scipy.linalg.lu_factor(superop - shift * np.eye(superop.shape[0]))
    vector = np.ones(superop.shape[0], dtype=complex)
    for _ in range(_INVERSE_ITERATIONS):
        nxt = scipy.linalg.lu_solve(lu, vector)
        nxt /= np.linalg.norm(nxt)
        if np.linalg.norm(nxt - vector * np.vdot(vector, nxt)) < 1e-14:
            vector = nxt
            break
        vector = nxt
    return vector


def _steady_state(superop: np.ndarray, n: int, cfg: Configuration) -> DensityMatrix:
    dim = 2**n
    vector = _null_vector(superop, n, cfg)
    rho = _normalized(vector.reshape(dim, dim))
    residual = float(np.linalg.norm(superop @ rho.data.reshape(-1)))
    if residual > 1e-10 * max(1.0, float(np.linalg.norm(superop, 2))):
        raise IllConditioned(f"Liouvillian residual {residual:.3e} for the steady state")
    return rho


def exact_ness(model: QuadraticModel, config: Optional[Configuration] = None) -> DensityMatrix:
    """Steady state of the quadratic model as a full density matrix.

    Raises:
        SizeLimit: ``n > 4``.
        DegenerateNess: the Liouvillian null space is not one-dimensional.
    """
    cfg = resolve(config)
    return _steady_state(liouvillian(model), model.n_sites, cfg)


def exact_spin_ness(
    n: int,
    delta: float,
    h: float,
    kappa_l_plus: float,
    kappa_l_minus: float,
    kappa_r_plus: float,
    kappa_r_minus: float,
    config: Optional[Configuration] = None,
) -> DensityMatrix:
    """NESS of the boundary-driven XY chain written directly with Pauli operators."""
    cfg = resolve(config)
    _check_size(n)
    if n < 2:
        raise InvalidSize(f"boundary chain needs n >= 2, got {n}")
    dim = 2**n
    hamiltonian = np.zeros((dim, dim), dtype=complex)
    for j in range(n):
        hamiltonian += h * site_operator(PAULI_Z, j, n)
    for j in range(n - 1):
        hamiltonian += (1 + delta) / 2 * site_operator(PAULI_X, j, n) @ site_operator(PAULI_X, j + 1, n)
        hamiltonian += (1 - delta) / 2 * site_operator(PAULI_Y, j, n) @ site_operator(PAULI_Y, j + 1, n)
    jumps = [
        math.sqrt(rate) * site_operator(op, site, n)
        for rate, op, site in (
            (kappa_l_plus, SIGMA_PLUS, 0),
            (kappa_l_minus, SIGMA_MINUS, 0),
            (kappa_r_plus, SIGMA_PLUS, n - 1),
            (kappa_r_minus, SIGMA_MINUS, n - 1),
        )
        if rate > 0
    ]
    return _steady_state(lindblad_superoperator(hamiltonian, jumps), n, cfg)


def liouvillian_gap(model: QuadraticModel, config: Optional[Configuration] = None) -> float:
    """Smallest ``|Re λ|`` over the non-zero Liouvillian eigenvalues."""
    values = np.linalg.eigvals(liouvillian(model))
    order = np.argsort(np.abs(values))
    return float(np.min(-values[order[1:]].real))


def covariance_from_rho(
    rho: DensityMatrix, config: Optional[Configuration] = None
) -> CovarianceMatrix:
    """``Γ_jk = ½ Tr ρ[ω_j, ω_k]``."""
    omegas = majorana_operators(rho.n_sites)
    dim = len(omegas)
    gamma = np.zeros((dim, dim), dtype=complex)
    for j in range(dim):
        for k in range(j + 1, dim):
            value = np.trace(rho.data @ omegas[j] @ omegas[k])
            gamma[j, k] = value
            gamma[k, j] = -value
    return validate_covariance(gamma, config)


def gaussian_density_matrix(gamma: CovarianceMatrix) -> DensityMatrix:
    """``ρ = exp(-(i/4) ωᵀΩω)/Z`` with ``Ω = -2i artanh Γ``.

    Pure modes are approached by clipping ``|γ|`` just below 1.
    """
    _check_size(gamma.n_sites)
    values, basis = scipy.linalg.eigh(gamma.data)
    clipped = np.clip(values, -1 + 1e-12, 1 - 1e-12)
    omega = -2j * (basis * np.arctanh(clipped)) @ basis.conj().T
    omega = ((omega - omega.T) / 2).real
    generator = quadratic_operator(0.25j * omega)
    energies, vectors = scipy.linalg.eigh((generator + generator.conj().T) / 2)
    weights = np.exp(-(energies - energies.min()))
    return _normalized((vectors * weights) @ vectors.conj().T)


def exact_four_point(rho: DensityMatrix, j: int, k: int, l: int, m: int) -> complex:
    """``Tr ρ ω_j ω_k ω_l ω_m`` with 1-based indices."""
    omegas = majorana_operators(rho.n_sites)
    for idx in (j, k, l, m):
        if not 1 <= idx <= len(omegas):
            raise IndexOutOfRange(f"index {idx} outside [1, {len(omegas)}]")
    op = omegas[j - 1] @ omegas[k - 1] @ omegas[l - 1] @ omegas[m - 1]
    return complex(np.trace(rho.data @ op))


def exact_sld(
    rho: DensityMatrix, d_rho: np.ndarray, config: Optional[Configuration] = None
) -> SldOperator:
    """``L_jk = 2 (∂ρ)_jk / (p_j + p_k)`` in the eigenbasis of ρ, zero on the kernel."""
    cfg = resolve(config)
    probs, basis = scipy.linalg.eigh(rho.data)
    rotated = basis.conj().T @ d_rho @ basis
    total = probs[:, None] + probs[None, :]
    mask = total > cfg.rank_tol
    L = np.zeros_like(rotated)
    L[mask] = 2 * rotated[mask] / total[mask]
    deficient = bool(np.any(~mask))
    if deficient and np.max(np.abs(rotated[~mask]), initial=0.0) > cfg.rank_tol:
        logger.warning("%s: ∂ρ has weight on the kernel of ρ", RankDeficiency.tag)
    L = basis @ L @ basis.conj().T
    return SldOperator(L=(L + L.conj().T) / 2, rank_deficient=deficient)


def exact_muc_fim(
    rho: DensityMatrix, L_mu: SldOperator, L_nu: SldOperator
) -> tuple[float, float]:
    """``U = (i/4) Tr ρ[L_μ, L_ν]`` and ``J = ½ Tr ρ{L_μ, L_ν}``."""
    ab = L_mu.L @ L_nu.L
    ba = L_nu.L @ L_mu.L
    U = (0.25j * np.trace(rho.data @ (ab - ba))).real
    J = (0.5 * np.trace(rho.data @ (ab + ba))).real
    return float(U), float(J)


def _ness_at(point: ModelPoint, n: Optional[int], cfg: Configuration) -> DensityMatrix:
    return exact_ness(quadratic_model(point, n), cfg)


def exact_geometry(
    point: ModelPoint,
    params: Sequence[str],
    n: Optional[int] = None,
    config: Optional[Configuration] = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Full ``p×p`` curvature and Fisher matrices from exact SLDs.

    ``∂ρ`` comes from central differences of `exact_ness`.
    """
    cfg = resolve(config)
    rho = _ness_at(point, n, cfg)
    slds = []
    for name in params:
        step = fd_step(point.value(name), cfg)
        plus = _ness_at(point.shifted(name, step), n, cfg)
        minus = _ness_at(point.shifted(name, -step), n, cfg)
        slds.append(exact_sld(rho, (plus.data - minus.data) / (2 * step), cfg))
    p = len(params)
    U = np.zeros((p, p))
    J = np.zeros((p, p))
    for a in range(p):
        for b in range(p):
            U[a, b], J[a, b] = exact_muc_fim(rho, slds[a], slds[b])
    return U, J


def _sqrt_psd(matrix: np.ndarray) -> np.ndarray:
    values, vectors = scipy.linalg.eigh((matrix + matrix.conj().T) / 2)
    return (vectors * np.sqrt(np.clip(values, 0.0, None))) @ vectors.conj().T


def fidelity(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Uhlmann fidelity ``(Tr √(√ρ σ √ρ))²``."""
    root = _sqrt_psd(rho.data)
    inner = root @ sigma.data @ root
    values = scipy.linalg.eigvalsh((inner + inner.conj().T) / 2)
    return float(np.sum(np.sqrt(np.clip(values, 0.0, None))) ** 2)


def bures_metric_fd(
    point: ModelPoint,
    params: Sequence[str],
    n: Optional[int] = None,
    step: float = 1e-2,
    config: Optional[Configuration] = None,
) -> np.ndarray:
    """Bures metric from ``d² = 2(1 - √F)`` on symmetric parameter displacements."""
    cfg = resolve(config)
    steps = {name: step * max(1.0, abs(point.value(name))) for name in params}

    def distance2(direction: dict[str, float]) -> float:
        lo = point.with_params(**{k: point.value(k) - v / 2 for k, v in direction.items()})
        hi = point.with_params(**{k: point.value(k) + v / 2 for k, v in direction.items()})
        F = fidelity(_ness_at(lo, n, cfg), _ness_at(hi, n, cfg))
        return 2.0 * (1.0 - math.sqrt(min(F, 1.0)))

    p = len(params)
    g = np.zeros((p, p))
    for a, name in enumerate(params):
        g[a, a] = distance2({name: steps[name]}) / steps[name] ** 2
    for a in range(p):
        for b in range(a + 1, p):
            mu, nu = params[a], params[b]
            both = distance2({mu: steps[mu], nu: steps[nu]})
            cross = both - g[a, a] * steps[mu] ** 2 - g[b, b] * steps[nu] ** 2
            g[a, b] = g[b, a] = cross / (2 * steps[mu] * steps[nu])
    return g
