"""Laurent polynomials in ``z`` and small matrices of them.

Coefficients are complex and stored in ascending order starting at the power
``low``, so ``p(z) = z^low · Σ_k coeffs[k] z^k``. Nothing is trimmed
implicitly: two polynomials built from stencils with the same support keep the
same coefficient layout, which makes coefficient-wise finite differences in a
model parameter well defined.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from numpy.polynomial import polynomial as P

from uhlmann_ness.errors import RootFindingFailure

Scalar = Union[int, float, complex]


@dataclass(frozen=True, eq=False)
class LaurentPolynomial:
    coeffs: np.ndarray
    low: int = 0

    def __post_init__(self) -> None:
        coeffs = np.atleast_1d(np.asarray(self.coeffs, dtype=complex))
        if coeffs.ndim != 1 or coeffs.size == 0:
            raise ValueError("coefficients must be a non-empty 1-d array")
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def constant(cls, value: Scalar) -> LaurentPolynomial:
        return cls(np.array([value], dtype=complex), 0)

    @classmethod
    def monomial(cls, power: int, value: Scalar = 1.0) -> LaurentPolynomial:
        return cls(np.array([value], dtype=complex), power)

    @classmethod
    def from_terms(cls, terms: dict[int, Scalar]) -> LaurentPolynomial:
        """Build from a ``{power: coefficient}`` mapping."""
        if not terms:
            return cls.constant(0.0)
        low, high = min(terms), max(terms)
        coeffs = np.zeros(high - low + 1, dtype=complex)
        for power, value in terms.items():
            coeffs[power - low] += value
        return cls(coeffs, low)

    @property
    def high(self) -> int:
        return self.low + self.coeffs.size - 1

    def __call__(self, z: Union[Scalar, np.ndarray]) -> Union[complex, np.ndarray]:
        z = np.asarray(z, dtype=complex)
        return z**self.low * P.polyval(z, self.coeffs)

    def _aligned(self, other: LaurentPolynomial) -> tuple[np.ndarray, np.ndarray, int]:
        low = min(self.low, other.low)
        high = max(self.high, other.high)
        a = np.zeros(high - low + 1, dtype=complex)
        b = np.zeros_like(a)
        a[self.low - low : self.high - low + 1] = self.coeffs
        b[other.low - low : other.high - low + 1] = other.coeffs
        return a, b, low

    def __add__(self, other: Union[LaurentPolynomial, Scalar]) -> LaurentPolynomial:
        other = _lift(other)
        a, b, low = self._aligned(other)
        return LaurentPolynomial(a + b, low)

    __radd__ = __add__

    def __neg__(self) -> LaurentPolynomial:
        return LaurentPolynomial(-self.coeffs, self.low)

    def __sub__(self, other: Union[LaurentPolynomial, Scalar]) -> LaurentPolynomial:
        return self + (-_lift(other))

    def __rsub__(self, other: Union[LaurentPolynomial, Scalar]) -> LaurentPolynomial:
        return _lift(other) - self

    def __mul__(self, other: Union[LaurentPolynomial, Scalar]) -> LaurentPolynomial:
        if isinstance(other, LaurentPolynomial):
            return LaurentPolynomial(np.convolve(self.coeffs, other.coeffs), self.low + other.low)
        return LaurentPolynomial(self.coeffs * other, self.low)

    __rmul__ = __mul__

    def reflect(self) -> LaurentPolynomial:
        """``p(1/z)``."""
        return LaurentPolynomial(self.coeffs[::-1].copy(), -self.high)

    def scale(self) -> float:
        return float(np.max(np.abs(self.coeffs)))

    def is_zero(self, atol: float = 0.0) -> bool:
        return self.scale() <= atol

    def trim(self, rtol: float = 0.0) -> LaurentPolynomial:
        """Drop end coefficients with modulus ``≤ rtol·max|c|``."""
        size = self.scale()
        keep = np.nonzero(np.abs(self.coeffs) > rtol * size)[0]
        if size == 0.0 or keep.size == 0:
            return LaurentPolynomial.constant(0.0)
        first, last = keep[0], keep[-1]
        return LaurentPolynomial(self.coeffs[first : last + 1].copy(), self.low + int(first))

    def roots(self, rtol: float = 1e-13) -> np.ndarray:
        """Non-zero roots, from the eigenvalues of the companion matrix.

        Raises:
            RootFindingFailure: the polynomial vanishes identically or the
                eigenvalue solver returns non-finite roots.
        """
        trimmed = self.trim(rtol)
        if trimmed.is_zero():
            raise RootFindingFailure("polynomial vanishes identically")
        if trimmed.coeffs.size == 1:
            return np.zeros(0, dtype=complex)
        try:
            roots = P.polyroots(trimmed.coeffs)
        except np.linalg.LinAlgError as exc:
            raise RootFindingFailure(f"companion eigenvalues failed: {exc}") from exc
        if not np.all(np.isfinite(roots)):
            raise RootFindingFailure("companion matrix produced non-finite roots")
        return roots.astype(complex)


def _lift(value: Union[LaurentPolynomial, Scalar]) -> LaurentPolynomial:
    if isinstance(value, LaurentPolynomial):
        return value
    return LaurentPolynomial.constant(value)


ZERO = LaurentPolynomial.constant(0.0)
ONE = LaurentPolynomial.constant(1.0)


@dataclass(frozen=True, eq=False)
class LaurentMatrix:
    """A small dense matrix whose entries are Laurent polynomials."""

    entries: tuple[tuple[LaurentPolynomial, ...], ...]

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[LaurentPolynomial]]) -> LaurentMatrix:
        return cls(tuple(tuple(_lift(e) for e in row) for row in rows))

    @classmethod
    def from_stencil(cls, stencil: dict[int, np.ndarray], sign: int = -1) -> LaurentMatrix:
        """``Σ_r a(r) z^{sign·r}`` for a stencil of constant matrices."""
        if not stencil:
            return cls.zeros(2, 2)
        shape = next(iter(stencil.values())).shape
        rows, cols = shape if len(shape) == 2 else (shape[0], 1)
        out = []
        for i in range(rows):
            row = []
            for j in range(cols):
                terms: dict[int, complex] = {}
                for r, a in stencil.items():
                    value = a[i, j] if len(shape) == 2 else a[i]
                    terms[sign * r] = terms.get(sign * r, 0) + value
                row.append(LaurentPolynomial.from_terms(terms))
            out.append(row)
        return cls.from_rows(out)

    @classmethod
    def zeros(cls, rows: int, cols: int) -> LaurentMatrix:
        return cls(tuple(tuple(ZERO for _ in range(cols)) for _ in range(rows)))

    @classmethod
    def identity(cls, size: int) -> LaurentMatrix:
        return cls(tuple(tuple(ONE if i == j else ZERO for j in range(size)) for i in range(size)))

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.entries), len(self.entries[0])

    def __getitem__(self, index: tuple[int, int]) -> LaurentPolynomial:
        i, j = index
        return self.entries[i][j]

    def __call__(self, z: Union[Scalar, np.ndarray]) -> np.ndarray:
        """Evaluate at ``z``; an array of points gives shape ``z.shape + (rows, cols)``."""
        z = np.asarray(z, dtype=complex)
        rows, cols = self.shape
        out = np.empty(z.shape + (rows, cols), dtype=complex)
        for i in range(rows):
            for j in range(cols):
                out[..., i, j] = self.entries[i][j](z)
        return out

    def _map(self, fn) -> LaurentMatrix:  # type: ignore[no-untyped-def]
        return LaurentMatrix(tuple(tuple(fn(e) for e in row) for row in self.entries))

    def __add__(self, other: LaurentMatrix) -> LaurentMatrix:
        return LaurentMatrix(
            tuple(
                tuple(a + b for a, b in zip(ra, rb))
                for ra, rb in zip(self.entries, other.entries)
            )
        )

    def __neg__(self) -> LaurentMatrix:
        return self._map(lambda e: -e)

    def __sub__(self, other: LaurentMatrix) -> LaurentMatrix:
        return self + (-other)

    def __mul__(self, value: Union[LaurentPolynomial, Scalar]) -> LaurentMatrix:
        return self._map(lambda e: e * value)

    __rmul__ = __mul__

    def __matmul__(self, other: LaurentMatrix) -> LaurentMatrix:
        rows, inner = self.shape
        _, cols = other.shape
        out = []
        for i in range(rows):
            row = []
            for j in range(cols):
                acc = ZERO
                for k in range(inner):
                    acc = acc + self.entries[i][k] * other.entries[k][j]
                row.append(acc)
            out.append(row)
        return LaurentMatrix.from_rows(out)

    @property
    def T(self) -> LaurentMatrix:
        rows, cols = self.shape
        return LaurentMatrix(tuple(tuple(self.entries[i][j] for i in range(rows)) for j in range(cols)))

    def reflect(self) -> LaurentMatrix:
        """Entry-wise ``z → 1/z``."""
        return self._map(lambda e: e.reflect())

    def kron(self, other: LaurentMatrix) -> LaurentMatrix:
        r1, c1 = self.shape
        r2, c2 = other.shape
        out = [[ZERO] * (c1 * c2) for _ in range(r1 * r2)]
        for i in range(r1):
            for j in range(c1):
                for k in range(r2):
                    for m in range(c2):
                        out[i * r2 + k][j * c2 + m] = self.entries[i][j] * other.entries[k][m]
        return LaurentMatrix.from_rows(out)

    def trace(self) -> LaurentPolynomial:
        acc = ZERO
        for i in range(min(self.shape)):
            acc = acc + self.entries[i][i]
        return acc

    def scale(self) -> float:
        return max(e.scale() for row in self.entries for e in row)


def determinant(matrix: LaurentMatrix) -> LaurentPolynomial:
    """Determinant by cofactor expansion along the first row."""
    size, cols = matrix.shape
    if size != cols:
        raise ValueError("determinant of a non-square matrix")
    if size == 1:
        return matrix[0, 0]
    if size == 2:
        return matrix[0, 0] * matrix[1, 1] - matrix[0, 1] * matrix[1, 0]
    acc = ZERO
    for j in range(size):
        term = matrix[0, j] * determinant(_minor(matrix, 0, j))
        acc = acc + term if j % 2 == 0 else acc - term
    return acc


def adjugate(matrix: LaurentMatrix) -> LaurentMatrix:
    """Transposed cofactor matrix, so ``A·adj(A) = det(A)·1``."""
    size = matrix.shape[0]
    if size == 1:
        return LaurentMatrix.identity(1)
    out = [[ZERO] * size for _ in range(size)]
    for i in range(size):
        for j in range(size):
            cofactor = determinant(_minor(matrix, i, j))
            out[j][i] = cofactor if (i + j) % 2 == 0 else -cofactor
    return LaurentMatrix.from_rows(out)


def _minor(matrix: LaurentMatrix, row: int, col: int) -> LaurentMatrix:
    return LaurentMatrix(
        tuple(
            tuple(e for j, e in enumerate(r) if j != col)
            for i, r in enumerate(matrix.entries)
            if i != row
        )
    )


def _replace_column(matrix: LaurentMatrix, col: int, other: LaurentMatrix) -> LaurentMatrix:
    return LaurentMatrix(
        tuple(
            tuple(other.entries[i][j] if j == col else e for j, e in enumerate(row))
            for i, row in enumerate(matrix.entries)
        )
    )


def determinant_derivative(matrix: LaurentMatrix, d_matrix: LaurentMatrix) -> LaurentPolynomial:
    """Directional derivative of ``det A`` along ``dA``.

    The determinant is linear in each column, so the derivative is the sum
    of the determinants with one column of ``A`` replaced by that of ``dA``.
    """
    size, cols = matrix.shape
    if size != cols:
        raise ValueError("determinant of a non-square matrix")
    acc = ZERO
    for j in range(size):
        acc = acc + determinant(_replace_column(matrix, j, d_matrix))
    return acc


def adjugate_derivative(matrix: LaurentMatrix, d_matrix: LaurentMatrix) -> LaurentMatrix:
    """Directional derivative of `adjugate` along ``dA``, cofactor by cofactor."""
    size = matrix.shape[0]
    if size == 1:
        return LaurentMatrix.zeros(1, 1)
    out = [[ZERO] * size for _ in range(size)]
    for i in range(size):
        for j in range(size):
            cofactor = determinant_derivative(_minor(matrix, i, j), _minor(d_matrix, i, j))
            out[j][i] = cofactor if (i + j) % 2 == 0 else -cofactor
    return LaurentMatrix.from_rows(out)


def _series_divide(num: np.ndarray, den: np.ndarray, count: int) -> np.ndarray:
    """First ``count`` coefficients of the power series ``num/den`` (``den[0] ≠ 0``)."""
    pn = np.zeros(count, dtype=complex)
    pn[: min(count, num.size)] = num[:count]
    pd = np.zeros(count, dtype=complex)
    pd[: min(count, den.size)] = den[:count]
    series = np.zeros(count, dtype=complex)
    for j in range(count):
        series[j] = (pn[j] - np.dot(pd[1 : j + 1], series[j - 1 :: -1][:j])) / pd[0]
    return series


def series_residue(
    numerator: LaurentPolynomial, denominator: LaurentPolynomial, rtol: float = 1e-13
) -> complex:
    """Residue at ``z = 0`` of ``numerator(z) / (z · denominator(z))``.

    Both sides are reduced to ``z^k · P(z)`` with ``P(0) ≠ 0`` for the
    denominator, and the needed coefficient of ``Pn/Pd`` comes from power
    series division.
    """
    den = denominator.trim(rtol)
    if den.is_zero():
        raise RootFindingFailure("denominator vanishes identically")
    num = numerator.trim(0.0)
    if num.is_zero():
        return 0.0j
    order = den.low - num.low
    if order < 0:
        return 0.0j
    return complex(_series_divide(num.coeffs, den.coeffs, order + 1)[order])


def _taylor_shift(coeffs: np.ndarray, z0: complex) -> np.ndarray:
    """Coefficients of ``P(z0 + t)`` in ascending powers of ``t``, by repeated synthetic division."""
    work = np.array(coeffs[::-1], dtype=complex)
    size = work.size
    out = np.empty(size, dtype=complex)
    for k in range(size):
        for i in range(1, size - k):
            work[i] += z0 * work[i - 1]
        out[k] = work[size - k - 1]
    return out


def _binomial_series(exponent: int, z0: complex, count: int) -> np.ndarray:
    """``(z0 + t)^exponent`` to order ``count`` in ``t``."""
    out = np.empty(count, dtype=complex)
    coeff = complex(z0) ** exponent
    for j in range(count):
        out[j] = coeff
        coeff *= (exponent - j) / ((j + 1) * z0)
    return out


def _padded_shift(coeffs: np.ndarray, z0: complex, count: int) -> np.ndarray:
    out = np.zeros(count, dtype=complex)
    full = _taylor_shift(coeffs, z0)
    out[: min(count, full.size)] = full[:count]
    return out


def taylor_coefficients(poly: LaurentPolynomial, z0: complex, count: int) -> np.ndarray:
    """First ``count`` Taylor coefficients of ``poly`` at ``z0 ≠ 0``."""
    shifted = _padded_shift(poly.coeffs, z0, count)
    return np.convolve(_binomial_series(poly.low, z0, count), shifted)[:count]


def pole_residue(
    numerator: LaurentPolynomial,
    factor: LaurentPolynomial,
    z0: complex,
    multiplicity: int,
    power: int = 2,
    rtol: float = 1e-12,
) -> complex:
    """Residue at ``z0 ≠ 0`` of ``numerator(z) / (z · factor(z)^power)``.

    ``z0`` is a root of ``factor`` of the given multiplicity, so the lowest
    ``multiplicity`` Taylor coefficients of ``factor`` there vanish up to
    rounding and are dropped. What remains is a pole of order
    ``power·multiplicity`` whose residue is read off the Laurent expansion by
    power-series division.

    Leading Taylor coefficients of the numerator below ``rtol`` times their
    rounding bound are common zeros with ``factor`` and are set to zero; a
    numerator vanishing to the full pole order gives a zero residue.
    """
    order = power * multiplicity
    num = taylor_coefficients(numerator, z0, order)
    bound = np.abs(
        np.convolve(
            np.abs(_binomial_series(numerator.low, abs(z0), order)),
            _padded_shift(np.abs(numerator.coeffs), abs(z0), order),
        )[:order]
    )
    for j in range(order):
        if abs(num[j]) > rtol * bound[j]:
            break
        num[j] = 0.0
    else:
        return 0.0j
    head = np.convolve(num, _binomial_series(-1, z0, order))[:order]
    tail = taylor_coefficients(factor, z0, multiplicity + order)[multiplicity:]
    den = np.ones(1, dtype=complex)
    for _ in range(power):
        den = np.convolve(den, tail)[:order]
    return complex(_series_divide(head, den, order)[order - 1])
