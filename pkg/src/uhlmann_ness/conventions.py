"""Jordan-Wigner and Majorana sign conventions.

This file is the single source of sign truth for both the quadratic builders
in `models` and the dense operators in `oracle`.

Site basis: index 0 is spin up, index 1 is spin down. ``σ⁺ = |↑⟩⟨↓|``.

Fermions: ``c_k = Z_1 ⋯ Z_{k-1} σ⁻_k`` so spin up is an occupied mode and
``σ⁺_k = Z_{<k} c_k†``. Majoranas (1-based, as in the formulas):

    ω_{2k-1} = c_k + c_k†     = Z_{<k} X_k
    ω_{2k}   = i (c_k - c_k†) = Z_{<k} Y_k

Consequences used by the builders (j and j+1 neighbouring sites):

    Z_j             = -i ω_{2j-1} ω_{2j}
    X_j X_{j+1}     = -i ω_{2j}   ω_{2j+1}
    Y_j Y_{j+1}     =  i ω_{2j-1} ω_{2j+2}
    X_j Y_{j+1}     = -i ω_{2j}   ω_{2j+2}
    Y_j X_{j+1}     =  i ω_{2j-1} ω_{2j+1}
    σ±_j            =  Z_{<j} (ω_{2j-1} ± i ω_{2j}) / 2

The string ``Z_{<j}`` in front of an on-site ladder operator is dropped by the
builders: dissipators are invariant under it on the parity-even sector where
the NESS lives. The oracle checks this against the spin-language Lindbladian.

A quadratic form ``𝓗 = ωᵀ H ω`` with imaginary antisymmetric ``H`` contains
``2 H_ab ω_a ω_b`` for every ``a < b``; `add_bilinear` keeps that bookkeeping.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_MINUS = SIGMA_PLUS.T.copy()

# local Majorana vectors l with Λ = lᵀ ω_site
RAISING = np.array([0.5, 0.5j])
LOWERING = np.array([0.5, -0.5j])


def add_bilinear(H: np.ndarray, a: int, b: int, coeff: complex) -> None:
    """Accumulate ``coeff * ω_a ω_b`` (0-based, ``a != b``) into ``H`` in place."""
    if a == b:
        raise ValueError("a Majorana bilinear needs two distinct indices")
    H[a, b] += coeff / 2
    H[b, a] -= coeff / 2


def kron_chain(ops: list[np.ndarray]) -> np.ndarray:
    out = ops[0]
    for op in ops[1:]:
        out = np.kron(out, op)
    return out


def site_operator(op: np.ndarray, site: int, n: int, string: bool = False) -> np.ndarray:
    """Embed a single-site operator (0-based ``site``), optionally with its Z string."""
    factors = [PAULI_Z if (string and j < site) else PAULI_I for j in range(n)]
    factors[site] = op
    return kron_chain(factors)


@lru_cache(maxsize=8)
def majorana_operators(n: int) -> tuple[np.ndarray, ...]:
    """Dense Majorana operators ``ω_1 … ω_{2n}`` on ``(C²)^{⊗n}``."""
    ops: list[np.ndarray] = []
    for site in range(n):
        ops.append(site_operator(PAULI_X, site, n, string=True))
        ops.append(site_operator(PAULI_Y, site, n, string=True))
    for op in ops:
        op.setflags(write=False)
    return tuple(ops)


def quadratic_operator(H: np.ndarray) -> np.ndarray:
    """Dense operator ``ωᵀ H ω`` for a 2n×2n coefficient matrix."""
    n = H.shape[0] // 2
    omegas = majorana_operators(n)
    dim = 2**n
    out = np.zeros((dim, dim), dtype=complex)
    for a in range(2 * n):
        for b in range(2 * n):
            if H[a, b] != 0:
                out += H[a, b] * omegas[a] @ omegas[b]
    return out


def linear_operator(vector: np.ndarray) -> np.ndarray:
    """Dense operator ``lᵀ ω``."""
    n = vector.shape[0] // 2
    omegas = majorana_operators(n)
    dim = 2**n
    out = np.zeros((dim, dim), dtype=complex)
    for a, coeff in enumerate(vector):
        if coeff != 0:
            out += coeff * omegas[a]
    return out
