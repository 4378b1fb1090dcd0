"""Define the numerical tolerances shared by every computation."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from typing import Any, Optional

from langchain_core.runnables import RunnableConfig

from uhlmann_ness.errors import ConfigError


@dataclass(kw_only=True, frozen=True)
class Configuration:
    """Tolerances and discretization constants.

    The same object drives library calls, sweep graph nodes (through the
    ``configurable`` mapping of a RunnableConfig) and the CLI ``[tolerances]``
    section.
    """

    # covariance validation
    tol_struct: float = 1e-9
    tol_spec: float = 1e-9
    tol_recon: float = 1e-10

    # Lyapunov solves
    tol_resid: float = 1e-10
    pure_tol: float = 1e-8
    gap_floor: float = 1e-12

    # geometry
    fd_step: float = 1e-5
    tol_psd: float = 1e-8

    # translational pipeline
    circle_tol: float = 1e-7
    quad_tol: float = 1e-9
    det_tol: float = 1e-10
    sing_tol: float = 1e-13
    lemma_tol: float = 1e-9
    lemma_window: float = 1e-2
    cross_tol: float = 1e-8
    fft_points: int = 2**14

    # oracle
    rank_tol: float = 1e-10

    def __post_init__(self) -> None:
        """Reject non-positive tolerances."""
        for f in fields(self):
            value = getattr(self, f.name)
            if value <= 0:
                raise ConfigError(f"tolerance {f.name} must be positive, got {value!r}")

    def override(self, **changes: Any) -> Configuration:
        """Return a copy with some fields replaced; unknown names are rejected."""
        known = {f.name for f in fields(self)}
        unknown = sorted(set(changes) - known)
        if unknown:
            raise ConfigError(f"unknown tolerance(s): {', '.join(unknown)}")
        return Configuration(**{**asdict(self), **changes})

    @classmethod
    def from_runnable_config(
        cls, config: Optional[RunnableConfig] = None
    ) -> Configuration:
        """Create a Configuration instance from a RunnableConfig object."""
        configurable = (config.get("configurable") or {}) if config else {}
        _fields = {f.name for f in fields(cls) if f.init}
        return cls(**{k: v for k, v in configurable.items() if k in _fields})

    def as_configurable(self) -> dict[str, Any]:
        """Inverse of `from_runnable_config`."""
        return asdict(self)


DEFAULT = Configuration()


def resolve(config: Optional[Configuration]) -> Configuration:
    """Return ``config`` or the documented defaults."""
    return DEFAULT if config is None else config
