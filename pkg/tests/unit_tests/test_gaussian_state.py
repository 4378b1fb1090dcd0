import numpy as np
import pytest
import scipy.stats

from uhlmann_ness.errors import (
    BasisMismatch,
    IndexOutOfRange,
    RepeatedIndex,
    SpectrumViolation,
    StructureViolation,
)
from uhlmann_ness.gaussian_state import (
    PuritySpectrum,
    four_point_wick,
    magnetization,
    purity_spectrum,
    sld_offset,
    two_point,
    validate_covariance,
)


def canonical(gammas: list[float]) -> np.ndarray:
    n = len(gammas)
    out = np.zeros((2 * n, 2 * n), dtype=complex)
    for k, g in enumerate(gammas):
        out[2 * k, 2 * k + 1] = 1j * g
        out[2 * k + 1, 2 * k] = -1j * g
    return out


def rotated(gammas: list[float], seed: int = 0) -> np.ndarray:
    """A generic covariance: the canonical form conjugated by a real rotation."""
    O = scipy.stats.special_ortho_group.rvs(2 * len(gammas), random_state=seed)
    return O @ canonical(gammas) @ O.T


def test_single_mode() -> None:
    gamma = validate_covariance(canonical([0.6]))
    spec = purity_spectrum(gamma)
    assert spec.gammas == pytest.approx([0.6])
    assert spec.omegas == pytest.approx([2 * np.arctanh(0.6)])
    assert magnetization(gamma) == pytest.approx([0.6])


def test_pure_mode_has_infinite_omega() -> None:
    spec = purity_spectrum(validate_covariance(canonical([1.0, 0.2])))
    assert np.isinf(spec.omegas[0])
    assert spec.omegas[1] == pytest.approx(2 * np.arctanh(0.2))


def test_spectrum_of_rotated_state() -> None:
    gamma = validate_covariance(rotated([0.9, 0.5, 0.1]))
    spec = purity_spectrum(gamma)
    assert spec.gammas == pytest.approx([0.9, 0.5, 0.1])
    assert np.max(np.abs(spec.reconstruct() - gamma.data)) < 1e-12
    assert spec.values == pytest.approx(sorted(spec.values))


def test_validate_symmetrizes_small_noise() -> None:
    noisy = rotated([0.4, 0.3]) + 1e-12 * np.ones((4, 4))
    gamma = validate_covariance(noisy)
    assert np.max(np.abs(gamma.data + gamma.data.T)) == 0.0
    assert np.max(np.abs(gamma.data.real)) == 0.0


def test_validate_rejects_structure() -> None:
    with pytest.raises(StructureViolation):
        validate_covariance(np.zeros((3, 3)))
    with pytest.raises(StructureViolation):
        validate_covariance(np.abs(canonical([0.5])))
    symmetric = canonical([0.5])
    symmetric[1, 0] = symmetric[0, 1]
    with pytest.raises(StructureViolation):
        validate_covariance(symmetric)


def test_validate_rejects_spectrum_above_one() -> None:
    with pytest.raises(SpectrumViolation):
        validate_covariance(canonical([1.01]))


def test_covariance_is_read_only() -> None:
    gamma = validate_covariance(canonical([0.5]))
    with pytest.raises(ValueError):
        gamma.data[0, 1] = 0.0


def test_basis_mismatch_detected() -> None:
    gamma = validate_covariance(rotated([0.8, 0.3]))
    spec = purity_spectrum(gamma)
    broken = PuritySpectrum(
        gammas=spec.gammas, values=spec.values, basis=np.eye(4), covariance=gamma
    )
    with pytest.raises(BasisMismatch):
        broken.check_basis()


def test_two_point() -> None:
    gamma = validate_covariance(canonical([0.6]))
    assert two_point(gamma, 1, 1) == 1.0
    assert two_point(gamma, 1, 2) == pytest.approx(0.6j)
    assert two_point(gamma, 2, 1) == pytest.approx(-0.6j)
    with pytest.raises(IndexOutOfRange):
        two_point(gamma, 0, 1)
    with pytest.raises(IndexOutOfRange):
        two_point(gamma, 1, 3)


def test_four_point_factorizes_on_product_state() -> None:
    gamma = validate_covariance(canonical([0.6, -0.3]))
    # ω1ω2 and ω3ω4 live on different modes
    assert four_point_wick(gamma, 1, 2, 3, 4) == pytest.approx(0.6j * -0.3j)
    with pytest.raises(RepeatedIndex):
        four_point_wick(gamma, 1, 1, 2, 3)


def test_sld_offset_centres_the_operator() -> None:
    gamma = validate_covariance(rotated([0.7, 0.2], seed=3))
    K = rotated([0.5, 0.1], seed=4)
    # ⟨½ ωᵀKω⟩ = ½ Σ K_ab Γ_ab = -½ Tr(KΓ)
    expectation = 0.5 * np.sum(K * gamma.data)
    assert sld_offset(K, gamma) == pytest.approx(-expectation.real)
