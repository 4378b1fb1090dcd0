"""Model builders: spin chains in Majorana form, translational stencils, drift and bath.

Three families are built in:

* ``boundary_xy``: open XY chain driven at both ends by raising/lowering baths.
* ``rotated_xy``: periodic XY chain rotated about z, weakly coupled to on-site
  raising (strength ``εμ``) and lowering (strength ``εν``) baths.
* ``example_ring``: a purely dissipative ring whose single bath stencil spans
  three sites.

A fourth family, ``custom``, loads ``H`` and bath vectors from an ``.npz`` file.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from uhlmann_ness.configuration import Configuration, resolve
from uhlmann_ness.conventions import LOWERING, RAISING, add_bilinear
from uhlmann_ness.errors import (
    AllBathsZero,
    ConfigError,
    DegenerateBath,
    EigensolverFailure,
    InvalidSize,
    IoError,
    SingularSymbolPoint,
    StructureViolation,
    UnknownFamily,
    UnknownParameter,
)
from uhlmann_ness.lyapunov import DriftBathPair, validate_drift_bath

logger = logging.getLogger(__name__)

Stencil = dict[int, np.ndarray]


@dataclass(frozen=True)
class QuadraticModel:
    """``𝓗 = ωᵀHω`` with linear Lindblad operators ``Λ_α = l_αᵀω``."""

    n_sites: int
    H: np.ndarray
    baths: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        dim = 2 * self.n_sites
        if self.H.shape != (dim, dim):
            raise StructureViolation(f"H has shape {self.H.shape}, expected {(dim, dim)}")
        for l in self.baths:
            if l.shape != (dim,):
                raise StructureViolation(f"bath vector has shape {l.shape}, expected {(dim,)}")
        tol = resolve(None).tol_struct * max(1.0, float(np.max(np.abs(self.H), initial=0.0)))
        if np.max(np.abs(self.H + self.H.T), initial=0.0) > tol:
            raise StructureViolation("H is not antisymmetric")
        if np.max(np.abs(self.H - self.H.conj().T), initial=0.0) > tol:
            raise StructureViolation("H is not Hermitian")


@dataclass(frozen=True)
class TranslationalModel:
    """Translation-invariant model given by finite stencils.

    ``𝓗 = Σ_{r,s} ω_rᵀ h(r-s) ω_s`` and ``Λ_{α,c} = Σ_p l_α(p-c)ᵀ ω_p`` where
    ``ω_r`` is the Majorana pair of site ``r``.
    """

    stencil_h: Stencil
    stencil_baths: tuple[Stencil, ...]
    point: Optional["ModelPoint"] = None
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        tol = resolve(None).tol_struct
        for r, block in self.stencil_h.items():
            partner = self.stencil_h.get(-r, np.zeros((2, 2), dtype=complex))
            if np.max(np.abs(block - partner.conj().T)) > tol * max(1.0, np.max(np.abs(block))):
                raise StructureViolation(f"h({r}) is not h({-r})†")

    @property
    def support(self) -> int:
        offsets = list(self.stencil_h)
        for stencil in self.stencil_baths:
            offsets.extend(stencil)
        return max((abs(r) for r in offsets), default=0)

    def shifted(self, name: str, step: float) -> TranslationalModel:
        """The same model with parameter ``name`` moved by ``step``."""
        if self.point is None:
            raise UnknownParameter(f"model has no parameter hooks, cannot shift {name!r}")
        return translational_model(self.point.shifted(name, step))


class ModelPoint(BaseModel):
    """A family name plus a point of its parameter manifold."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    family: str
    params: dict[str, float] = Field(default_factory=dict)
    source: Optional[Path] = None

    @model_validator(mode="after")
    def _check_family(self) -> ModelPoint:
        spec = family_spec(self.family)
        unknown = sorted(set(self.params) - set(spec.parameters))
        if unknown:
            raise UnknownParameter(f"{self.family} has no parameter(s) {', '.join(unknown)}")
        if self.family == "custom" and self.source is None:
            raise ConfigError("the custom family needs a source .npz file")
        return self

    def value(self, name: str) -> float:
        spec = family_spec(self.family)
        if name not in spec.parameters:
            raise UnknownParameter(f"{self.family} has no parameter {name!r}")
        return float(self.params.get(name, spec.defaults[name]))

    def resolved(self) -> dict[str, float]:
        """Every parameter of the family, defaults filled in."""
        return {name: self.value(name) for name in family_spec(self.family).parameters}

    def with_params(self, **changes: float) -> ModelPoint:
        return ModelPoint(family=self.family, params={**self.params, **changes}, source=self.source)

    def shifted(self, name: str, step: float) -> ModelPoint:
        return self.with_params(**{name: self.value(name) + step})


# boundary-driven XY chain


def _xy_bond(H: np.ndarray, j: int, k: int, xx: float, yy: float, xy: float) -> None:
    """Add ``xx XX + yy YY + xy (XY + YX)`` on sites ``j, k`` (0-based, ``k = j+1``)."""
    add_bilinear(H, 2 * j + 1, 2 * k, -1j * xx)
    add_bilinear(H, 2 * j, 2 * k + 1, 1j * yy)
    add_bilinear(H, 2 * j + 1, 2 * k + 1, -1j * xy)
    add_bilinear(H, 2 * j, 2 * k, 1j * xy)


def _site_bath(n: int, site: int, local: np.ndarray) -> np.ndarray:
    l = np.zeros(2 * n, dtype=complex)
    l[2 * site : 2 * site + 2] = local
    return l


def build_boundary_xy(
    n: int,
    delta: float,
    h: float,
    kappa_l_plus: float,
    kappa_l_minus: float,
    kappa_r_plus: float,
    kappa_r_minus: float,
) -> QuadraticModel:
    """Open XY chain with raising/lowering baths on the first and last site.

    Raises:
        InvalidSize: ``n < 2``.
        AllBathsZero: every rate vanishes.
        ConfigError: a negative rate.
    """
    if n < 2:
        raise InvalidSize(f"boundary chain needs n >= 2, got {n}")
    rates = (kappa_l_plus, kappa_l_minus, kappa_r_plus, kappa_r_minus)
    if any(k < 0 for k in rates):
        raise ConfigError(f"bath rates must be non-negative, got {rates}")
    if not any(k > 0 for k in rates):
        raise AllBathsZero("all four boundary rates are zero")
    H = np.zeros((2 * n, 2 * n), dtype=complex)
    for j in range(n):
        add_bilinear(H, 2 * j, 2 * j + 1, -1j * h)
    for j in range(n - 1):
        _xy_bond(H, j, j + 1, (1 + delta) / 2, (1 - delta) / 2, 0.0)
    candidates = (
        (kappa_l_plus, 0, RAISING),
        (kappa_l_minus, 0, LOWERING),
        (kappa_r_plus, n - 1, RAISING),
        (kappa_r_minus, n - 1, LOWERING),
    )
    baths = tuple(
        _site_bath(n, site, math.sqrt(rate) * local)
        for rate, site, local in candidates
        if rate > 0
    )
    return QuadraticModel(n_sites=n, H=H, baths=baths)


def critical_field(delta: float) -> float:
    """``h_c = |1 - δ²|``, the boundary of the long-range correlated phase."""
    return abs(1.0 - delta**2)


def short_range_inverse_length(delta: float, h: float) -> float:
    """Estimate ``ξ⁻¹ ≈ 4√(2(h - h_c)/h_c)`` above the critical field, ``0`` below."""
    h_c = critical_field(delta)
    if h <= h_c:
        return 0.0
    if h_c == 0.0:
        return math.inf
    return 4.0 * math.sqrt(2.0 * (h - h_c) / h_c)


# translational stencils


def add_stencil_bilinear(
    stencil: Stencil, offset: int, alpha: int, beta: int, coeff: complex
) -> None:
    """Accumulate ``coeff * ω_{r,α} ω_{r+offset,β}`` (summed over r) into ``stencil``."""
    if offset == 0 and alpha == beta:
        raise ValueError("a Majorana bilinear needs two distinct operators")
    stencil.setdefault(-offset, np.zeros((2, 2), dtype=complex))[alpha, beta] += coeff / 2
    stencil.setdefault(offset, np.zeros((2, 2), dtype=complex))[beta, alpha] -= coeff / 2


def build_rotated_xy(
    delta: float,
    h: float,
    theta: float,
    mu: float,
    nu: float,
    epsilon: float,
    point: Optional[ModelPoint] = None,
) -> TranslationalModel:
    """Periodic XY chain rotated by ``θ`` about z, with on-site baths.

    ``εμ`` drives the raising bath and ``εν`` the lowering one. The rotation
    turns the couplings into ``(1±δcosθ)/2`` for XX/YY and
    ``-δ sinθ/2`` for ``XY + YX``.

    Raises:
        DegenerateBath: ``εμ`` and ``εν`` both vanish.
    """
    if epsilon * mu == 0 and epsilon * nu == 0:
        raise DegenerateBath("rotated XY needs a non-zero raising or lowering bath")
    d_rot = delta * math.cos(theta)
    cross = -delta * math.sin(theta) / 2
    stencil: Stencil = {}
    add_stencil_bilinear(stencil, 0, 0, 1, -1j * h)
    add_stencil_bilinear(stencil, 1, 1, 0, -1j * (1 + d_rot) / 2)
    add_stencil_bilinear(stencil, 1, 0, 1, 1j * (1 - d_rot) / 2)
    add_stencil_bilinear(stencil, 1, 1, 1, -1j * cross)
    add_stencil_bilinear(stencil, 1, 0, 0, 1j * cross)
    baths = tuple(
        {0: epsilon * strength * local}
        for strength, local in ((mu, RAISING), (nu, LOWERING))
        if strength != 0
    )
    return TranslationalModel(
        stencil_h=stencil,
        stencil_baths=baths,
        point=point,
        params=dict(delta=delta, h=h, theta=theta, mu=mu, nu=nu, epsilon=epsilon),
    )


def closed_form_symbol(
    delta: float, h: float, theta: float, mu: float, nu: float, phi: float
) -> np.ndarray:
    """Weak-coupling NESS symbol ``γ̃(φ) = g[t cosθ, -1, t sinθ]·σ``.

    Uses ``t = s/c`` with ``s = δ sinφ``, ``c = cosφ - h`` in the regular form
    ``G/(c² + s²)·[sc cosθ, -c², sc sinθ]``, finite where ``t`` diverges, with
    ``G = (μ² - ν²)/(μ² + ν²)``: a raising-dominated bath gives ``G > 0``.

    Raises:
        DegenerateBath: ``μ = ν = 0``.
        SingularSymbolPoint: ``s = c = 0``.
    """
    if mu == 0 and nu == 0:
        raise DegenerateBath("closed-form symbol needs μ or ν non-zero")
    G = (mu**2 - nu**2) / (mu**2 + nu**2)
    s = delta * math.sin(phi)
    c = math.cos(phi) - h
    denom = c * c + s * s
    if denom == 0.0:
        raise SingularSymbolPoint(f"closed-form symbol undefined at φ = {phi!r}")
    gx, gy, gz = G * s * c * math.cos(theta), -G * c * c, G * s * c * math.sin(theta)
    return np.array([[gz, gx - 1j * gy], [gx + 1j * gy, -gz]], dtype=complex) / denom


def build_example_ring(
    lam: float, theta: float, point: Optional[ModelPoint] = None
) -> TranslationalModel:
    """Purely dissipative ring with one bath stencil on offsets 0, 1, 2.

    The amplitude is divided by ``n(λ) = 4(λ² + λ + 1)``.
    """
    norm = 4.0 * (lam**2 + lam + 1.0)
    l0 = np.array([math.cos(theta), -math.sin(theta)], dtype=complex)
    l1 = 1j * np.array([math.sin(theta), math.cos(theta)], dtype=complex)
    bath = {0: (1 + lam) * l0 / norm, 1: l1 / norm, 2: lam * l1 / norm}
    return TranslationalModel(
        stencil_h={},
        stencil_baths=(bath,),
        point=point,
        params={"lambda": lam, "theta": theta},
    )


def build_ring(model: TranslationalModel, n: int) -> QuadraticModel:
    """Periodic ring of ``n`` sites with the stencils wrapped modulo ``n``."""
    if n < 3:
        raise InvalidSize(f"a ring needs n >= 3, got {n}")
    H = np.zeros((2 * n, 2 * n), dtype=complex)
    for offset, block in model.stencil_h.items():
        for p in range(n):
            q = (p - offset) % n
            H[2 * p : 2 * p + 2, 2 * q : 2 * q + 2] += block
    baths = []
    for stencil in model.stencil_baths:
        for c in range(n):
            l = np.zeros(2 * n, dtype=complex)
            for offset, local in stencil.items():
                p = (c + offset) % n
                l[2 * p : 2 * p + 2] += local
            baths.append(l)
    return QuadraticModel(n_sites=n, H=H, baths=tuple(baths))


# custom family


def load_custom(path: Union[str, Path]) -> QuadraticModel:
    """Read ``H`` (2n×2n) and ``baths`` (k×2n) from an ``.npz`` file."""
    try:
        with np.load(path) as data:
            H = np.asarray(data["H"], dtype=complex)
            baths = np.atleast_2d(np.asarray(data["baths"], dtype=complex))
    except KeyError as exc:
        raise ConfigError(f"{path}: missing array {exc}") from exc
    except (OSError, ValueError) as exc:
        raise IoError(f"cannot read model file {path}: {exc}") from exc
    if H.ndim != 2 or H.shape[0] % 2:
        raise StructureViolation(f"{path}: H must be 2n×2n, got {H.shape}")
    if not np.any(baths):
        raise AllBathsZero(f"{path}: every bath vector is zero")
    return QuadraticModel(n_sites=H.shape[0] // 2, H=H, baths=tuple(baths))


# registry


@dataclass(frozen=True)
class FamilySpec:
    """Parameters, defaults and builder of a model family."""

    name: str
    parameters: tuple[str, ...]
    defaults: Mapping[str, float]
    translational: bool
    build: Callable[[ModelPoint, Optional[int]], Union[QuadraticModel, TranslationalModel]]


def _build_boundary(point: ModelPoint, n: Optional[int]) -> QuadraticModel:
    if n is None:
        raise InvalidSize("boundary_xy needs a chain length")
    return build_boundary_xy(n, **point.resolved())


def _build_rotated(point: ModelPoint, n: Optional[int]) -> TranslationalModel:
    return build_rotated_xy(**point.resolved(), point=point)


def _build_ring(point: ModelPoint, n: Optional[int]) -> TranslationalModel:
    values = point.resolved()
    return build_example_ring(values["lambda"], values["theta"], point=point)


def _build_custom(point: ModelPoint, n: Optional[int]) -> QuadraticModel:
    assert point.source is not None
    model = load_custom(point.source)
    if n is not None and n != model.n_sites:
        raise InvalidSize(f"{point.source} holds {model.n_sites} sites, asked for {n}")
    return model


FAMILIES: dict[str, FamilySpec] = {
    spec.name: spec
    for spec in (
        FamilySpec(
            name="boundary_xy",
            parameters=(
                "delta",
                "h",
                "kappa_l_plus",
                "kappa_l_minus",
                "kappa_r_plus",
                "kappa_r_minus",
            ),
            defaults=dict(
                delta=1.25,
                h=0.3,
                kappa_l_plus=0.3,
                kappa_l_minus=0.5,
                kappa_r_plus=0.1,
                kappa_r_minus=0.5,
            ),
            translational=False,
            build=_build_boundary,
        ),
        FamilySpec(
            name="rotated_xy",
            parameters=("delta", "h", "theta", "mu", "nu", "epsilon"),
            defaults=dict(delta=0.5, h=0.5, theta=0.0, mu=1.0, nu=0.5, epsilon=0.5),
            translational=True,
            build=_build_rotated,
        ),
        FamilySpec(
            name="example_ring",
            parameters=("lambda", "theta"),
            defaults={"lambda": 0.5, "theta": 0.3},
            translational=True,
            build=_build_ring,
        ),
        FamilySpec(
            name="custom",
            parameters=(),
            defaults={},
            translational=False,
            build=_build_custom,
        ),
    )
}


def family_spec(name: str) -> FamilySpec:
    try:
        return FAMILIES[name]
    except KeyError:
        raise UnknownFamily(
            f"unknown model family {name!r}; choose from {', '.join(FAMILIES)}"
        ) from None


def translational_model(point: ModelPoint) -> TranslationalModel:
    """Stencils of a translation-invariant family."""
    spec = family_spec(point.family)
    if not spec.translational:
        raise UnknownFamily(f"{point.family} is not translation invariant")
    model = spec.build(point, None)
    assert isinstance(model, TranslationalModel)
    return model


def quadratic_model(point: ModelPoint, n: Optional[int] = None) -> QuadraticModel:
    """Finite quadratic model at ``point``; translational families become rings of ``n``."""
    spec = family_spec(point.family)
    if spec.translational:
        if n is None:
            raise InvalidSize(f"{point.family} needs a ring size")
        return build_ring(translational_model(point), n)
    model = spec.build(point, n)
    assert isinstance(model, QuadraticModel)
    return model


# drift and bath


def bath_matrix(model: QuadraticModel) -> np.ndarray:
    """``M = Σ_α l_α l_α†``."""
    dim = 2 * model.n_sites
    M = np.zeros((dim, dim), dtype=complex)
    for l in model.baths:
        M += np.outer(l, l.conj())
    return M


def assemble_drift_bath(
    model: QuadraticModel, config: Optional[Configuration] = None
) -> DriftBathPair:
    """``X = 4[iH + Re M]`` and ``Y = -8i Im M``."""
    M = bath_matrix(model)
    X = 4.0 * ((1j * model.H).real + M.real)
    Y = -8j * M.imag
    return validate_drift_bath(X, Y, config)


def drift_bath(
    point: ModelPoint, n: Optional[int] = None, config: Optional[Configuration] = None
) -> DriftBathPair:
    return assemble_drift_bath(quadratic_model(point, n), config)


def dissipative_gap(pair: DriftBathPair, config: Optional[Configuration] = None) -> float:
    """``Δ = 2 min_j Re x_j``, the Liouvillian spectral gap.

    Raises:
        EigensolverFailure: the drift spectrum reaches into the left half-plane.
    """
    cfg = resolve(config)
    gap = pair.gap
    if gap < -cfg.tol_spec:
        raise EigensolverFailure(f"drift has eigenvalues with negative real part (Δ = {gap:.3e})")
    return max(gap, 0.0)


def fd_step(value: float, config: Optional[Configuration] = None) -> float:
    """Central-difference step, relative to ``|value|`` unless it is zero."""
    cfg = resolve(config)
    return cfg.fd_step * abs(value) if value != 0 else cfg.fd_step


def drift_derivatives(
    point: ModelPoint,
    n: Optional[int],
    name: str,
    config: Optional[Configuration] = None,
) -> tuple[np.ndarray, np.ndarray]:
    """``(∂X, ∂Y)`` with respect to ``name`` by central differences."""
    cfg = resolve(config)
    step = fd_step(point.value(name), cfg)
    plus = assemble_drift_bath(quadratic_model(point.shifted(name, step), n), cfg)
    minus = assemble_drift_bath(quadratic_model(point.shifted(name, -step), n), cfg)
    dX = (plus.X - minus.X) / (2 * step)
    dY = (plus.Y - minus.Y) / (2 * step)
    return dX, dY
