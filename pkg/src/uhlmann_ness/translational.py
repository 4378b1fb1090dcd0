"""Thermodynamic limit of translation-invariant models.

Stencils become 2×2 symbol matrices of Laurent polynomials in ``z = e^{iφ}``:

    x̃(z) = 2[2i h̃(z) + m̃(z) + m̃(1/z)ᵀ],   ỹ(z) = -4[m̃(z) - m̃(1/z)ᵀ]

and the steady state solves ``x̃(z)γ̃ + γ̃ x̃(1/z)ᵀ = ỹ(z)`` at every ``z`` on the
unit circle. Vectorizing row-major gives ``X̂ = x̃(z)⊗1 + 1⊗x̃(1/z)`` and the
rational form ``γ̃ = η/d`` with ``η = adj(X̂) vec ỹ`` and ``d = det X̂``.

The mean Uhlmann curvature per site is ``Ū = (1/2π)∫ u(φ) dφ`` with

    u = -(i/4) Tr{γ̃[∂_μγ̃, ∂_νγ̃]} / (1 - Det γ̃)²

evaluated either by adaptive quadrature on the circle or as the sum of the
residues of ``u(z)/z`` inside the unit disk.
"""

from __future__ import annotations

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Callable, Optional, Sequence, Union

import numpy as np
import scipy.integrate
import scipy.stats

from uhlmann_ness.configuration import Configuration, resolve
from uhlmann_ness.errors import (
    CriticalPoint,
    DegenerateBath,
    IllConditioned,
    LemmaViolation,
    NoDecayDetected,
    PoleOnCircle,
    SingularSymbolPoint,
    SpectrumViolation,
    StructureViolation,
    UnknownFamily,
)
from uhlmann_ness.laurent import (
    LaurentMatrix,
    LaurentPolynomial,
    adjugate,
    adjugate_derivative,
    determinant,
    determinant_derivative,
    pole_residue,
    series_residue,
)
from uhlmann_ness.models import (
    ModelPoint,
    TranslationalModel,
    fd_step,
    translational_model,
)

logger = logging.getLogger(__name__)

# 2×2 matrix of Laurent polynomials
SymbolFunction = LaurentMatrix

_EYE2 = np.eye(2, dtype=complex)
_CLUSTER_TOL = 1e-5
_ENVELOPE_BLOCK = 8
_FIT_R2 = 0.999
_NOISE_FLOOR = 1e-10


@dataclass(frozen=True, eq=False)
class RationalSymbol:
    """``γ̃(z) = η(z)/d(z)``."""

    eta: LaurentMatrix
    d: LaurentPolynomial

    def __call__(self, z: Union[complex, np.ndarray]) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        return self.eta(z) / np.asarray(self.d(z))[..., None, None]

    def at(self, phi: Union[float, np.ndarray]) -> np.ndarray:
        return self(np.exp(1j * np.asarray(phi)))


@dataclass(frozen=True)
class CircleRoot:
    """A root of ``d`` within the lemma window of the unit circle."""

    z: complex
    distance: float
    eta_norm: float
    removable: bool
    u_bounded: Optional[bool] = None


@dataclass(frozen=True)
class LemmaReport:
    roots: tuple[CircleRoot, ...]
    eta_scale: float

    @property
    def critical(self) -> bool:
        return any(not r.removable and r.distance == 0.0 for r in self.roots)


@dataclass(frozen=True)
class CorrelationLength:
    """Inverse correlation length from the slowest pole of γ̃ inside the disk."""

    xi_inv: float
    pole: Optional[complex]
    fft_xi_inv: Optional[float] = None
    flag: str = ""

    @property
    def xi(self) -> float:
        return math.inf if self.xi_inv == 0 else 1.0 / self.xi_inv


# symbols


def symbol_from_stencils(
    model: TranslationalModel, config: Optional[Configuration] = None
) -> tuple[SymbolFunction, SymbolFunction]:
    """Drift and bath symbols ``(x̃, ỹ)``.

    Raises:
        StructureViolation: ``m̃(φ)`` is not positive semidefinite.
    """
    cfg = resolve(config)
    h = LaurentMatrix.from_stencil(model.stencil_h)
    m = LaurentMatrix.zeros(2, 2)
    for stencil in model.stencil_baths:
        l = LaurentMatrix.from_stencil(stencil)
        l_bar = LaurentMatrix.from_stencil({r: v.conj() for r, v in stencil.items()}, sign=1)
        m = m + l @ l_bar.T
    _check_psd_symbol(m, cfg)
    m_sym = m + m.reflect().T
    x = h * 4j + m_sym * 2.0
    y = (m - m.reflect().T) * -4.0
    return x, y


def _check_psd_symbol(m: LaurentMatrix, cfg: Configuration, points: int = 64) -> None:
    values = m(_circle(points))
    herm = (values + np.conj(np.swapaxes(values, -1, -2))) / 2
    low = float(np.min(np.linalg.eigvalsh(herm), initial=0.0))
    if low < -cfg.tol_struct * max(1.0, m.scale()):
        raise StructureViolation(f"bath symbol has eigenvalue {low:.3e} on the circle")


def _circle(points: int) -> np.ndarray:
    return np.exp(2j * np.pi * np.arange(points) / points)


def _kron_sum(x: SymbolFunction) -> LaurentMatrix:
    eye = LaurentMatrix.identity(2)
    return x.kron(eye) + eye.kron(x.reflect())


def _vec(m: SymbolFunction) -> LaurentMatrix:
    return LaurentMatrix.from_rows([[m[i, j]] for i in range(2) for j in range(2)])


def _unvec(v: LaurentMatrix) -> LaurentMatrix:
    return LaurentMatrix.from_rows([[v[0, 0], v[1, 0]], [v[2, 0], v[3, 0]]])


def _batched_kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n, r1, c1 = a.shape
    _, r2, c2 = b.shape
    return (a[:, :, None, :, None] * b[:, None, :, None, :]).reshape(n, r1 * r2, c1 * c2)


def _solve_batch(
    x_z: np.ndarray, x_r: np.ndarray, rhs: np.ndarray, cfg: Configuration
) -> tuple[np.ndarray, np.ndarray]:
    """Solve ``x γ + γ x_rᵀ = rhs`` point-wise; singular points come back as NaN."""
    count = x_z.shape[0]
    eye = np.broadcast_to(_EYE2, x_z.shape)
    xhat = _batched_kron(x_z, eye) + _batched_kron(eye, x_r)
    sv = np.linalg.svd(xhat, compute_uv=False)
    singular = sv[:, -1] <= cfg.sing_tol * np.maximum(sv[:, 0], np.finfo(float).tiny)
    out = np.full((count, 2, 2), np.nan, dtype=complex)
    ok = ~singular
    if np.any(ok):
        sol = np.linalg.solve(xhat[ok], rhs[ok].reshape(-1, 4, 1))
        out[ok] = sol.reshape(-1, 2, 2)
    return out, singular


def solve_symbol_covariance(
    x: SymbolFunction,
    y: SymbolFunction,
    phi: float,
    config: Optional[Configuration] = None,
) -> np.ndarray:
    """``γ̃(φ)`` from the 2×2 Lyapunov equation.

    Raises:
        SingularSymbolPoint: ``X̂(e^{iφ})`` is singular to ``sing_tol``.
        SpectrumViolation: an eigenvalue of ``γ̃`` leaves ``[-1, 1]``.
    """
    cfg = resolve(config)
    z = np.array([np.exp(1j * phi)])
    x_z, x_r, y_z = x(z), x(1 / z), y(z)
    values, singular = _solve_batch(x_z, x_r, y_z, cfg)
    if singular[0]:
        raise SingularSymbolPoint(f"X̂ is singular at φ = {phi!r}")
    gamma = values[0]
    residual = np.linalg.norm(x_z[0] @ gamma + gamma @ x_r[0].T - y_z[0])
    scale = np.linalg.norm(y_z[0])
    if scale and residual / scale > cfg.tol_resid:
        raise IllConditioned(f"symbol residual {residual / scale:.3e} at φ = {phi!r}")
    gamma = (gamma + gamma.conj().T) / 2
    top = float(np.max(np.abs(np.linalg.eigvalsh(gamma))))
    if top > 1.0 + cfg.tol_spec:
        raise SpectrumViolation(f"|eigenvalue| {top:.12g} of γ̃({phi:.6f}) exceeds 1")
    return gamma


# symbol sources


class SymbolSource(ABC):
    """Anything that yields γ̃ on the circle, its rational form and parameter derivatives."""

    @abstractmethod
    def rational(self) -> RationalSymbol: ...

    @abstractmethod
    def covariance(
        self, phis: np.ndarray, config: Optional[Configuration] = None
    ) -> tuple[np.ndarray, np.ndarray]:
        """``(γ̃ values, singular mask)`` at the angles ``phis``."""

    @abstractmethod
    def value(self, name: str) -> float: ...

    @abstractmethod
    def shifted(self, name: str, step: float) -> SymbolSource: ...

    def _neighbours(self, name: str, cfg: Configuration) -> tuple[Any, Any, float]:
        """Sources shifted by ±step in ``name``, built once per parameter."""
        cache = self.__dict__.setdefault("_neighbour_cache", {})
        key = (name, cfg.fd_step)
        if key not in cache:
            step = fd_step(self.value(name), cfg)
            cache[key] = (self.shifted(name, step), self.shifted(name, -step), step)
        return cache[key]

    def covariance_with_derivatives(
        self,
        phis: np.ndarray,
        names: Sequence[str],
        config: Optional[Configuration] = None,
    ) -> tuple[np.ndarray, list[np.ndarray], np.ndarray]:
        """γ̃ and central-difference ``∂γ̃`` for each parameter."""
        cfg = resolve(config)
        gamma, singular = self.covariance(phis, cfg)
        derivs = []
        for name in names:
            up, down, step = self._neighbours(name, cfg)
            plus, s_plus = up.covariance(phis, cfg)
            minus, s_minus = down.covariance(phis, cfg)
            singular = singular | s_plus | s_minus
            derivs.append((plus - minus) / (2 * step))
        return gamma, derivs, singular

    def rational_derivative(
        self, name: str, config: Optional[Configuration] = None
    ) -> RationalSymbol:
        """``(∂η, ∂d)`` by central differences of the coefficients."""
        cfg = resolve(config)
        up, down, step = self._neighbours(name, cfg)
        plus, minus = up.rational(), down.rational()
        scale = 1.0 / (2 * step)
        return RationalSymbol(eta=(plus.eta - minus.eta) * scale, d=(plus.d - minus.d) * scale)


class StencilSymbol(SymbolSource):
    """Symbols assembled from the stencils of a `TranslationalModel`."""

    def __init__(self, model: TranslationalModel, config: Optional[Configuration] = None):
        self.model = model
        self.config = resolve(config)

    @cached_property
    def symbols(self) -> tuple[SymbolFunction, SymbolFunction]:
        return symbol_from_stencils(self.model, self.config)

    def rational(self) -> RationalSymbol:
        return self._rational

    @cached_property
    def _rational(self) -> RationalSymbol:
        """``η = adj(X̂)·vec ỹ`` and ``d = det X̂``, kept exact in ``z``."""
        xhat, adj = self._kron_parts
        return RationalSymbol(eta=_unvec(adj @ _vec(self.symbols[1])), d=determinant(xhat))

    @cached_property
    def _kron_parts(self) -> tuple[LaurentMatrix, LaurentMatrix]:
        xhat = _kron_sum(self.symbols[0])
        return xhat, adjugate(xhat)

    def rational_derivative(
        self, name: str, config: Optional[Configuration] = None
    ) -> RationalSymbol:
        """``(∂η, ∂d)`` by the product rule through ``adj`` and ``det``.

        Only the stencil symbols ``∂x̃, ∂ỹ`` are differenced; the rational
        form is differentiated exactly.
        """
        cfg = resolve(config)
        cache = self.__dict__.setdefault("_derivative_cache", {})
        key = (name, cfg.fd_step)
        if key not in cache:
            dx, dy = self._symbol_derivative(name, cfg)
            xhat, adj = self._kron_parts
            dxhat = _kron_sum(dx)
            d_eta = adjugate_derivative(xhat, dxhat) @ _vec(self.symbols[1]) + adj @ _vec(dy)
            cache[key] = RationalSymbol(
                eta=_unvec(d_eta), d=determinant_derivative(xhat, dxhat)
            )
        return cache[key]

    def value(self, name: str) -> float:
        if self.model.point is None:
            return float(self.model.params[name])
        return self.model.point.value(name)

    def shifted(self, name: str, step: float) -> StencilSymbol:
        return StencilSymbol(self.model.shifted(name, step), self.config)

    def covariance(
        self, phis: np.ndarray, config: Optional[Configuration] = None
    ) -> tuple[np.ndarray, np.ndarray]:
        cfg = resolve(config)
        x, y = self.symbols
        z = np.exp(1j * np.atleast_1d(phis))
        return _solve_batch(x(z), x(1 / z), y(z), cfg)

    def covariance_with_derivatives(
        self,
        phis: np.ndarray,
        names: Sequence[str],
        config: Optional[Configuration] = None,
    ) -> tuple[np.ndarray, list[np.ndarray], np.ndarray]:
        """Derivatives from the differentiated 2×2 equation."""
        cfg = resolve(config)
        x, y = self.symbols
        z = np.exp(1j * np.atleast_1d(phis))
        x_z, x_r = x(z), x(1 / z)
        gamma, singular = _solve_batch(x_z, x_r, y(z), cfg)
        derivs = []
        for name in names:
            dx, dy = self._symbol_derivative(name, cfg)
            dx_z, dx_r = dx(z), dx(1 / z)
            rhs = dy(z) - dx_z @ gamma - gamma @ np.swapaxes(dx_r, -1, -2)
            rhs = np.nan_to_num(rhs)
            d_gamma, _ = _solve_batch(x_z, x_r, rhs, cfg)
            derivs.append(d_gamma)
        return gamma, derivs, singular

    def _symbol_derivative(
        self, name: str, cfg: Configuration
    ) -> tuple[SymbolFunction, SymbolFunction]:
        up, down, step = self._neighbours(name, cfg)
        x_plus, y_plus = up.symbols
        x_minus, y_minus = down.symbols
        scale = 1.0 / (2 * step)
        return (x_plus - x_minus) * scale, (y_plus - y_minus) * scale


_SINE = LaurentPolynomial.from_terms({1: 0.5 / 1j, -1: -0.5 / 1j})
_COSINE = LaurentPolynomial.from_terms({1: 0.5, -1: 0.5})


def _pauli(
    gx: LaurentPolynomial, gy: LaurentPolynomial, gz: LaurentPolynomial
) -> LaurentMatrix:
    return LaurentMatrix.from_rows([[gz, gx - gy * 1j], [gx + gy * 1j, -gz]])


class WeakCouplingSymbol(SymbolSource):
    """Closed-form weak-coupling symbol of the rotated XY chain.

    With ``s = δ sinφ`` and ``c = cosφ - h`` (both Laurent polynomials in z):
    ``η = G[sc cosθ σx - c² σy + sc sinθ σz]`` and ``d = c² + s²``, where
    ``G = (μ² - ν²)/(μ² + ν²)``. Parameter derivatives are exact.
    """

    def __init__(self, point: ModelPoint, config: Optional[Configuration] = None):
        if point.family != "rotated_xy":
            raise UnknownFamily(f"no closed-form symbol for family {point.family!r}")
        self.point = point
        self.config = resolve(config)

    @cached_property
    def _parts(self) -> dict[str, Any]:
        p = self.point.resolved()
        mu, nu = p["mu"], p["nu"]
        if mu == 0 and nu == 0:
            raise DegenerateBath("closed-form symbol needs μ or ν non-zero")
        return {
            **p,
            "G": (mu**2 - nu**2) / (mu**2 + nu**2),
            "s": _SINE * p["delta"],
            "c": _COSINE - p["h"],
        }

    def rational(self) -> RationalSymbol:
        return self._rational

    @cached_property
    def _rational(self) -> RationalSymbol:
        parts = self._parts
        G, theta, s, c = parts["G"], parts["theta"], parts["s"], parts["c"]
        sc = s * c
        eta = _pauli(sc * (G * math.cos(theta)), c * c * (-G), sc * (G * math.sin(theta)))
        return RationalSymbol(eta=eta, d=c * c + s * s)

    def rational_derivative(
        self, name: str, config: Optional[Configuration] = None
    ) -> RationalSymbol:
        self.point.value(name)
        cache = self.__dict__.setdefault("_derivative_cache", {})
        if name in cache:
            return cache[name]
        parts = self._parts
        G, theta, s, c = parts["G"], parts["theta"], parts["s"], parts["c"]
        mu, nu = parts["mu"], parts["nu"]
        zero = LaurentPolynomial.constant(0.0)
        ds, dc = zero, zero
        d_g, d_cos, d_sin = 0.0, 0.0, 0.0
        if name == "delta":
            ds = _SINE
        elif name == "h":
            dc = LaurentPolynomial.constant(-1.0)
        elif name == "theta":
            d_cos, d_sin = -math.sin(theta), math.cos(theta)
        elif name == "mu":
            d_g = 4 * mu * nu**2 / (mu**2 + nu**2) ** 2
        elif name == "nu":
            d_g = -4 * mu**2 * nu / (mu**2 + nu**2) ** 2
        sc, d_sc = s * c, ds * c + s * dc
        cos, sin = math.cos(theta), math.sin(theta)
        d_eta = _pauli(
            d_sc * (G * cos) + sc * (d_g * cos + G * d_cos),
            -(c * dc * (2 * G) + c * c * d_g),
            d_sc * (G * sin) + sc * (d_g * sin + G * d_sin),
        )
        cache[name] = RationalSymbol(eta=d_eta, d=(c * dc + s * ds) * 2.0)
        return cache[name]

    def value(self, name: str) -> float:
        return self.point.value(name)

    def shifted(self, name: str, step: float) -> WeakCouplingSymbol:
        return WeakCouplingSymbol(self.point.shifted(name, step), self.config)

    def covariance(
        self, phis: np.ndarray, config: Optional[Configuration] = None
    ) -> tuple[np.ndarray, np.ndarray]:
        values, _, singular = self.covariance_with_derivatives(phis, (), config)
        return values, singular

    def covariance_with_derivatives(
        self,
        phis: np.ndarray,
        names: Sequence[str],
        config: Optional[Configuration] = None,
    ) -> tuple[np.ndarray, list[np.ndarray], np.ndarray]:
        """``∂γ̃ = (∂η - γ̃ ∂d)/d``."""
        cfg = resolve(config)
        rat = self.rational()
        z = np.exp(1j * np.atleast_1d(phis))
        d = np.asarray(rat.d(z))
        singular = np.abs(d) <= cfg.sing_tol * max(rat.d.scale(), np.finfo(float).tiny)
        safe = np.where(singular, 1.0, d)[..., None, None]
        values = rat.eta(z) / safe
        derivs = []
        for name in names:
            dr = self.rational_derivative(name, cfg)
            derivs.append((dr.eta(z) - values * np.asarray(dr.d(z))[..., None, None]) / safe)
        values[singular] = np.nan
        return values, derivs, singular


Translational = Union[TranslationalModel, SymbolSource, ModelPoint]


def as_symbol_source(
    model: Translational, config: Optional[Configuration] = None
) -> SymbolSource:
    if isinstance(model, SymbolSource):
        return model
    if isinstance(model, ModelPoint):
        model = translational_model(model)
    return StencilSymbol(model, config)


def symbol_from_closed_form(
    point: ModelPoint, config: Optional[Configuration] = None
) -> RationalSymbol:
    """Weak-coupling rotated XY symbol as a `RationalSymbol`."""
    return WeakCouplingSymbol(point, config).rational()


# integrands


def _u_values(
    gamma: np.ndarray, d_mu: np.ndarray, d_nu: np.ndarray, det_tol: float
) -> np.ndarray:
    comm = d_mu @ d_nu - d_nu @ d_mu
    trace = np.trace(gamma @ comm, axis1=-2, axis2=-1)
    gap = 1.0 - np.linalg.det(gamma)
    degenerate = np.abs(gap) <= det_tol
    safe = np.where(degenerate, 1.0, gap)
    u = -0.25j * trace / safe**2
    return np.where(degenerate, 0.0, u.real)


def u_integrand(
    gamma: np.ndarray,
    d_mu: np.ndarray,
    d_nu: np.ndarray,
    config: Optional[Configuration] = None,
) -> float:
    """``u_μν(φ)``; zero when ``|1 - Det γ̃| ≤ det_tol``."""
    cfg = resolve(config)
    return float(_u_values(gamma, d_mu, d_nu, cfg.det_tol))


def kappa_route_integrand(
    gamma: np.ndarray,
    d_mu: np.ndarray,
    d_nu: np.ndarray,
    config: Optional[Configuration] = None,
) -> float:
    """``u_μν(φ) = -(i/4) Tr{γ̃[κ_μ, κ_ν]}`` with ``γ̃κγ̃ - κ = ∂γ̃``."""
    cfg = resolve(config)
    values, basis = np.linalg.eigh((gamma + gamma.conj().T) / 2)
    denom = 1.0 - np.outer(values, values)
    mask = denom > cfg.pure_tol

    def kappa(d_gamma: np.ndarray) -> np.ndarray:
        rotated = basis.conj().T @ d_gamma @ basis
        out = np.zeros_like(rotated)
        out[mask] = -rotated[mask] / denom[mask]
        return basis @ out @ basis.conj().T

    k_mu, k_nu = kappa(d_mu), kappa(d_nu)
    return float((-0.25j * np.trace(gamma @ (k_mu @ k_nu - k_nu @ k_mu))).real)


# poles


def _cluster_counts(roots: np.ndarray) -> list[tuple[complex, int]]:
    """Merge roots closer than a relative ``1e-5``; centroids with multiplicities."""
    clusters: list[list[complex]] = []
    for r in sorted(roots, key=lambda v: (abs(v), np.angle(v))):
        for group in clusters:
            centre = np.mean(group)
            if abs(r - centre) <= _CLUSTER_TOL * max(1.0, abs(centre)):
                group.append(complex(r))
                break
        else:
            clusters.append([complex(r)])
    return [(complex(np.mean(g)), len(g)) for g in clusters]


def _cluster(roots: np.ndarray) -> list[complex]:
    return [z0 for z0, _ in _cluster_counts(roots)]


def _nearest(z0: complex, others: Sequence[complex]) -> float:
    distances = [abs(z0 - w) for w in others if w != z0]
    distances.append(abs(z0))
    return min(distances)


def _bounded_near(
    fn: Callable[[np.ndarray], np.ndarray], z0: complex, reach: float, nodes: int = 16
) -> bool:
    """Whether ``|fn|`` stays bounded on circles of shrinking radius around ``z0``."""
    theta = 2 * np.pi * np.arange(nodes) / nodes
    radius = min(1e-3, reach / 4)
    maxima = []
    for r in (radius, radius * 1e-1, radius * 1e-2):
        values = np.abs(fn(z0 + r * np.exp(1j * theta)))
        maxima.append(float(np.max(values)))
    return maxima[-1] <= 10.0 * maxima[0] + np.finfo(float).tiny


def _gamma_norm(rat: RationalSymbol) -> Callable[[np.ndarray], np.ndarray]:
    return lambda z: np.max(np.abs(rat(z)), axis=(-2, -1))


def _classify_circle_roots(
    rat: RationalSymbol, window: float, cfg: Configuration
) -> list[CircleRoot]:
    clusters = _cluster(rat.d.roots())
    eta_scale = rat.eta.scale()
    found = []
    for z0 in clusters:
        distance = abs(abs(z0) - 1.0)
        if distance > window:
            continue
        eta_norm = float(np.max(np.abs(rat.eta(z0))))
        removable = _bounded_near(_gamma_norm(rat), z0, _nearest(z0, clusters))
        logger.debug(
            "root of d at %s: |1-|z|| = %.3e, ‖η‖ = %.3e, removable = %s",
            z0,
            distance,
            eta_norm,
            removable,
        )
        found.append(
            CircleRoot(
                z=z0,
                distance=0.0 if distance <= cfg.circle_tol else distance,
                eta_norm=eta_norm / max(eta_scale, np.finfo(float).tiny),
                removable=removable,
            )
        )
    return found


def lemma_property_checks(
    model: Translational,
    params: Optional[tuple[str, str]] = None,
    config: Optional[Configuration] = None,
) -> LemmaReport:
    """Check the structure of ``γ̃`` at roots of ``d`` on or near the circle.

    A root on the circle (within ``circle_tol``) must be a zero of ``η`` as
    well. With ``params`` the curvature integrand is also sampled around each
    removable root.

    Raises:
        LemmaViolation: ``η`` does not vanish at a root of ``d`` on the circle.
    """
    cfg = resolve(config)
    source = as_symbol_source(model, cfg)
    rat = source.rational()
    roots = _classify_circle_roots(rat, cfg.lemma_window, cfg)
    checked = []
    u_fn = _rational_u(source, params, cfg) if params else None
    clusters = [r.z for r in roots]
    for root in roots:
        if root.distance == 0.0 and root.eta_norm > cfg.lemma_tol:
            raise LemmaViolation(
                f"d vanishes on the circle at {root.z} but ‖η‖ = {root.eta_norm:.3e}"
            )
        u_bounded = None
        if u_fn is not None and root.removable:
            reach = _nearest(root.z, clusters)
            u_bounded = _bounded_near(lambda z: np.abs(u_fn(z)), root.z, reach)
            if not u_bounded:
                logger.warning("curvature integrand grows near removable root %s", root.z)
        checked.append(
            CircleRoot(
                z=root.z,
                distance=root.distance,
                eta_norm=root.eta_norm,
                removable=root.removable,
                u_bounded=u_bounded,
            )
        )
    return LemmaReport(roots=tuple(checked), eta_scale=rat.eta.scale())


def _critical_check(rat: RationalSymbol, cfg: Configuration) -> list[CircleRoot]:
    roots = _classify_circle_roots(rat, cfg.lemma_window, cfg)
    for root in roots:
        if root.distance == 0.0 and not root.removable:
            raise CriticalPoint(f"γ̃ has a pole on the unit circle at {root.z}")
    return roots


# mean Uhlmann curvature per site


def muc_per_site_quadrature(
    model: Translational,
    mu: str,
    nu: str,
    config: Optional[Configuration] = None,
) -> float:
    """``Ū_μν = (1/2π)∫ u_μν(φ) dφ`` by adaptive Gauss-Kronrod quadrature.

    Raises:
        CriticalPoint: γ̃ has a genuine pole on the unit circle.
    """
    cfg = resolve(config)
    if mu == nu:
        return 0.0
    source = as_symbol_source(model, cfg)
    roots = _critical_check(source.rational(), cfg)
    breaks = sorted({float(np.angle(r.z)) for r in roots if abs(np.angle(r.z)) < np.pi})

    def integrand(phi: float) -> float:
        gamma, (d_mu, d_nu), singular = source.covariance_with_derivatives(
            np.array([phi]), (mu, nu), cfg
        )
        if singular[0]:
            return 0.0
        return float(_u_values(gamma[0], d_mu[0], d_nu[0], cfg.det_tol))

    value, error = scipy.integrate.quad(
        integrand,
        -np.pi,
        np.pi,
        epsabs=cfg.quad_tol,
        epsrel=cfg.quad_tol,
        points=breaks or None,
        limit=500,
    )
    logger.debug("quadrature Ū_%s%s = %.12g (error estimate %.1e)", mu, nu, value, error)
    return value / (2 * np.pi)


def _rational_u_parts(
    source: SymbolSource, params: tuple[str, str], cfg: Configuration
) -> tuple[LaurentPolynomial, LaurentPolynomial]:
    """``(N, q)`` with ``u(z) = N(z)/q(z)²``.

    ``q = d² - Det η`` is trimmed once so the residue at zero and the root
    search see the same polynomial.
    """
    rat = source.rational()
    d_mu = source.rational_derivative(params[0], cfg).eta
    d_nu = source.rational_derivative(params[1], cfg).eta
    trace = (rat.eta @ (d_mu @ d_nu - d_nu @ d_mu)).trace()
    numerator = rat.d * trace * -0.25j
    q = (rat.d * rat.d - determinant(rat.eta)).trim(1e-13)
    return numerator, q


def _rational_u(
    source: SymbolSource, params: tuple[str, str], cfg: Configuration
) -> Callable[[np.ndarray], np.ndarray]:
    numerator, q = _rational_u_parts(source, params, cfg)
    return lambda z: np.asarray(numerator(z)) / np.asarray(q(z)) ** 2


def muc_per_site_residues(
    model: Translational,
    mu: str,
    nu: str,
    config: Optional[Configuration] = None,
) -> float:
    """``Ū_μν`` as the sum of residues of ``u(z)/z`` inside the unit disk.

    The residue at ``z = 0`` comes from power-series division. At every
    other root of ``q`` inside the disk the Laurent expansion of ``N/(z q²)``
    is built from Taylor coefficients, with the root's multiplicity taken
    from the clustered root set; common zeros of ``N`` are deflated there.

    Raises:
        PoleOnCircle: a non-removable pole lies within ``circle_tol`` of the circle.
        RootFindingFailure: the denominator vanishes identically.
    """
    cfg = resolve(config)
    if mu == nu:
        return 0.0
    source = as_symbol_source(model, cfg)
    numerator, q = _rational_u_parts(source, (mu, nu), cfg)
    total = series_residue(numerator, q * q, rtol=0.0)

    def u_abs(z: np.ndarray) -> np.ndarray:
        return np.abs(np.asarray(numerator(z)) / np.asarray(q(z)) ** 2)

    clusters = _cluster_counts(q.roots())
    centres = [z0 for z0, _ in clusters]
    for z0, multiplicity in clusters:
        distance = abs(abs(z0) - 1.0)
        if distance <= cfg.circle_tol:
            if not _bounded_near(u_abs, z0, _nearest(z0, centres)):
                raise PoleOnCircle(f"u(z) has a pole on the unit circle at {z0}")
            continue
        if abs(z0) > 1.0:
            continue
        residue = pole_residue(numerator, q, z0, multiplicity)
        logger.debug("residue at %s (order %d): %s", z0, 2 * multiplicity, residue)
        total += residue
    if abs(total.imag) > cfg.cross_tol * max(1.0, abs(total.real)):
        logger.warning("residue sum has imaginary part %.3e", total.imag)
    return float(total.real)


# correlations


def correlation_profile(
    model: Translational,
    config: Optional[Configuration] = None,
    points: Optional[int] = None,
) -> np.ndarray:
    """``γ(r)`` for ``r = 0 … N-1`` (periodic) by inverse FFT of γ̃ on ``N`` angles.

    Raises:
        CriticalPoint: γ̃ is singular at a grid angle.
    """
    cfg = resolve(config)
    count = points or cfg.fft_points
    source = as_symbol_source(model, cfg)
    phis = 2 * np.pi * np.arange(count) / count
    values, singular = source.covariance(phis, cfg)
    if np.any(singular):
        raise CriticalPoint(f"γ̃ singular at {int(np.sum(singular))} grid angle(s)")
    return np.fft.ifft(values, axis=0)


def decay_rate_fit(profile: np.ndarray, config: Optional[Configuration] = None) -> float:
    """Fit ``ln‖γ(r)‖ ≈ -r/ξ + c`` on the exponential tail of a profile.

    The norm is replaced by its maximum over blocks of 8 sites to smooth
    oscillations; points below a relative noise floor are cut. The window
    start slides forward until the fit reaches ``R² > 0.999``.

    Raises:
        NoDecayDetected: no window fits, or the fitted slope is not negative.
    """
    count = profile.shape[0]
    r_max = count // 4
    norms = np.linalg.norm(profile[1 : r_max + 1], axis=(-2, -1))
    blocks = norms.size // _ENVELOPE_BLOCK
    if blocks < 4:
        raise NoDecayDetected("profile too short for a decay fit")
    envelope = norms[: blocks * _ENVELOPE_BLOCK].reshape(blocks, _ENVELOPE_BLOCK)
    env = envelope.max(axis=1)
    where = 1 + _ENVELOPE_BLOCK * np.arange(blocks) + envelope.argmax(axis=1)
    floor = _NOISE_FLOOR * max(float(env.max()), np.finfo(float).tiny)
    above = np.nonzero(env > floor)[0]
    if above.size < 4:
        raise NoDecayDetected("correlations fall below the noise floor immediately")
    cut = above[-1] + 1
    r, log_env = where[:cut].astype(float), np.log(env[:cut])
    for start in range(0, cut - 3):
        fit = scipy.stats.linregress(r[start:], log_env[start:])
        if fit.rvalue**2 > _FIT_R2:
            if fit.slope >= 0:
                raise NoDecayDetected(f"fitted slope {fit.slope:.3e} is not negative")
            return float(-fit.slope)
    raise NoDecayDetected("no window with an exponential fit of R² > 0.999")


def correlation_length(
    model: Translational,
    config: Optional[Configuration] = None,
    fit: bool = False,
) -> CorrelationLength:
    """``ξ⁻¹ = -ln|z*|`` for the non-removable pole of γ̃ inside the disk closest to the circle.

    With ``fit=True`` the value is cross-checked by `decay_rate_fit` of the
    FFT profile. Models without any such pole are flagged ``delta-correlated``.

    Raises:
        CriticalPoint: a non-removable pole sits on the circle.
    """
    cfg = resolve(config)
    source = as_symbol_source(model, cfg)
    rat = source.rational()
    _critical_check(rat, cfg)
    clusters = _cluster(rat.d.roots())
    best: Optional[complex] = None
    for z0 in clusters:
        if abs(z0) >= 1.0 - cfg.circle_tol:
            continue
        if _bounded_near(_gamma_norm(rat), z0, _nearest(z0, clusters)):
            continue
        if best is None or abs(z0) > abs(best):
            best = z0
    if best is None:
        return CorrelationLength(xi_inv=math.inf, pole=None, flag="delta-correlated")
    xi_inv = -math.log(abs(best))
    fft_value = decay_rate_fit(correlation_profile(source, cfg), cfg) if fit else None
    return CorrelationLength(xi_inv=xi_inv, pole=best, fft_xi_inv=fft_value)


def translational_gap(
    model: Translational,
    config: Optional[Configuration] = None,
    points: int = 1024,
) -> float:
    """``Δ = 2 min_φ min_j Re x_j(φ)`` on a uniform angle grid."""
    source = as_symbol_source(model, config)
    if not isinstance(source, StencilSymbol):
        raise UnknownFamily("the dissipative gap needs a stencil model")
    x, _ = source.symbols
    values = np.linalg.eigvals(x(_circle(points)))
    return float(2.0 * np.min(values.real))
