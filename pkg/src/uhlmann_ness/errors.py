"""Exception hierarchy shared by every module.

Each error carries a short ``tag`` (written into the ``flag`` column of sweep
tables) and the process ``exit_code`` the CLI maps it to.
"""

from __future__ import annotations


class MucError(Exception):
    """Base class for all errors raised by the package."""

    tag = "error"
    exit_code = 3


class ConfigError(MucError, ValueError):
    """Invalid input: configuration, model parameters or arguments."""

    tag = "config_error"
    exit_code = 2


class ComputeError(MucError):
    """A numerical operation could not produce a trustworthy result."""

    tag = "compute_error"
    exit_code = 3


class IoError(MucError, OSError):
    """Reading inputs or writing artifacts failed."""

    tag = "io_error"
    exit_code = 4


# gaussian_state


class StructureViolation(ComputeError):
    """Matrix is not (imaginary) antisymmetric within tolerance."""

    tag = "structure_violation"


class SpectrumViolation(ComputeError):
    """Covariance eigenvalue outside [-1, 1]."""

    tag = "spectrum_violation"


class EigensolverFailure(ComputeError):
    tag = "eigensolver_failure"


class IndexOutOfRange(ConfigError, IndexError):
    tag = "index_out_of_range"


class RepeatedIndex(ConfigError):
    tag = "repeated_index"


# lyapunov


class GaplessDrift(ComputeError):
    """Drift spectrum touches the imaginary axis; the NESS is not unique."""

    tag = "gapless_drift"


class IllConditioned(ComputeError):
    """Residual stays above tolerance after iterative refinement."""

    tag = "ill_conditioned"


class BasisMismatch(ComputeError):
    """A purity spectrum does not diagonalize the covariance it is paired with."""

    tag = "basis_mismatch"


# models


class InvalidSize(ConfigError):
    tag = "invalid_size"


class AllBathsZero(ConfigError):
    tag = "all_baths_zero"


class DegenerateBath(ConfigError):
    tag = "degenerate_bath"


class UnknownFamily(ConfigError):
    tag = "unknown_family"


class UnknownParameter(ConfigError):
    tag = "unknown_parameter"


# geometry


class SingularFisher(ComputeError):
    tag = "singular_fisher"


class NotPositiveSemidefinite(ComputeError):
    tag = "not_psd"


# translational


class SingularSymbolPoint(ComputeError):
    tag = "singular_symbol_point"


class CriticalPoint(ComputeError):
    """The symbol denominator has a genuine zero on the unit circle."""

    tag = "critical_point"


class PoleOnCircle(ComputeError):
    tag = "pole_on_circle"


class RootFindingFailure(ComputeError):
    tag = "root_finding_failure"


class NoDecayDetected(ComputeError):
    tag = "no_decay_detected"


class LemmaViolation(ComputeError):
    """A structural property of the symbol solution failed; indicates a bug."""

    tag = "lemma_violation"


# oracle


class DegenerateNess(ComputeError):
    tag = "degenerate_ness"


class SizeLimit(ConfigError):
    tag = "size_limit"


class RankDeficiency(ComputeError):
    tag = "rank_deficiency"


# scaling


class InsufficientData(ComputeError):
    tag = "insufficient_data"


class NonPositiveValues(ComputeError):
    tag = "non_positive_values"
