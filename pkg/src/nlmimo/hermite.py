"""Complex Ito-Hermite polynomial algebra on circularly symmetric Gaussians.

The odd-degree polynomials ``H_1, H_3, H_5, ...`` form an orthogonal basis
for bandpass nonlinearities ``x |x|^(d-1)`` under the unit circularly
symmetric complex Gaussian measure.  This module provides their evaluation,
the triangular change of basis to and from plain monomials, and the closed
forms for how Gaussian auto- and cross-correlations transform through a
polynomial nonlinearity expressed in this basis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

__all__ = [
    "DEGREE_CAP_DEFAULT",
    "MAX_ITO_ORDER",
    "OddHermiteSeries",
    "BasisChangeTable",
    "eval_ito_hermite",
    "eval_odd_hermite",
    "basis_change",
    "degree_weight",
    "gaussian_autocorrelation_transform",
    "gaussian_crosscorrelation_transform",
]

DEGREE_CAP_DEFAULT = 9
# Factorials stay exact in double precision up to 20!, so cap the two-index
# orders well below that.
MAX_ITO_ORDER = 32

# Tolerance used when rejecting normalized correlations with |r| > 1.
# Absorbs floating-point drift from FFT-based correlation estimates.
CORRELATION_TOL = 1e-9


def eval_ito_hermite(m: int, n: int, x) -> complex | np.ndarray:
    """Evaluate the two-index complex Hermite polynomial ``H_{m,n}(x, x*)``.

    Parameters
    ----------
    m, n : int
        Non-negative polynomial orders, each at most ``MAX_ITO_ORDER``.
    x : complex or array_like
        Evaluation point(s).

    Returns
    -------
    complex or ndarray
        ``m! n! sum_i (-1)^i / i! * x^(m-i) conj(x)^(n-i) / ((m-i)!(n-i)!)``.
    """
    if m < 0 or n < 0:
        raise ValueError("polynomial orders must be non-negative")
    if m > MAX_ITO_ORDER or n > MAX_ITO_ORDER:
        raise ValueError(f"polynomial order above cap {MAX_ITO_ORDER}")
    xa = np.asarray(x, dtype=complex)
    xc = np.conj(xa)
    acc = np.zeros_like(xa)
    for i in range(min(m, n) + 1):
        coeff = (-1) ** i * math.factorial(m) * math.factorial(n) / (
            math.factorial(i) * math.factorial(m - i) * math.factorial(n - i)
        )
        acc = acc + coeff * xa ** (m - i) * xc ** (n - i)
    if np.isscalar(x) or np.ndim(x) == 0:
        return complex(acc)
    return acc


def eval_odd_hermite(degree: int, x) -> complex | np.ndarray:
    """Evaluate the odd-subset basis polynomial of the given odd degree.

    Degree ``d`` maps to the two-index polynomial of orders
    ``((d+1)/2, (d-1)/2)``; only these appear in baseband models of
    bandpass nonlinearities.
    """
    if degree < 1 or degree % 2 == 0:
        raise ValueError("degree must be a positive odd integer")
    return eval_ito_hermite((degree + 1) // 2, (degree - 1) // 2, x)


def degree_weight(degree: int) -> float:
    """Orthogonality weight ``((d+1)/2)! ((d-1)/2)!`` of the odd basis."""
    if degree < 1 or degree % 2 == 0:
        raise ValueError("degree must be a positive odd integer")
    return float(math.factorial((degree + 1) // 2) * math.factorial((degree - 1) // 2))


def _validate_odd_coeffs(coeffs: Mapping[int, complex], cap: int) -> dict[int, complex]:
    out: dict[int, complex] = {}
    for deg, c in coeffs.items():
        d = int(deg)
        if d < 1 or d % 2 == 0:
            raise ValueError(f"only odd degrees allowed, got {deg}")
        if d > cap:
            raise ValueError(f"degree {d} above cap {cap}")
        c = complex(c)
        if not (np.isfinite(c.real) and np.isfinite(c.imag)):
            raise ValueError(f"non-finite coefficient at degree {d}")
        out[d] = c
    return dict(sorted(out.items()))


@dataclass(frozen=True)
class OddHermiteSeries:
    """Odd-degree series ``y = sum_d a_d H_d(x)`` with complex coefficients."""

    coeffs: Mapping[int, complex]
    degree_cap: int = DEGREE_CAP_DEFAULT

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _validate_odd_coeffs(self.coeffs, self.degree_cap))

    @property
    def max_degree(self) -> int:
        return max(self.coeffs, default=1)

    @property
    def degrees(self) -> tuple[int, ...]:
        return tuple(self.coeffs)

    def __call__(self, x):
        acc = np.zeros_like(np.asarray(x, dtype=complex))
        for d, a in self.coeffs.items():
            acc = acc + a * eval_odd_hermite(d, x)
        return complex(acc) if np.ndim(x) == 0 else acc


@dataclass(frozen=True)
class BasisChangeTable:
    """Triangular change of basis between ``x |x|^(d-1)`` and ``H_d(x)``.

    Rows and columns are indexed by odd degree in increasing order.  Row d of
    ``monomial_to_hermite`` expands ``x |x|^(d-1)`` in the basis polynomials;
    ``hermite_to_monomial`` is its exact integer inverse.
    """

    degrees: tuple[int, ...]
    monomial_to_hermite: np.ndarray = field(repr=False)
    hermite_to_monomial: np.ndarray = field(repr=False)

    def index(self, degree: int) -> int:
        return self.degrees.index(degree)


def _hermite_to_monomial_int(degrees: tuple[int, ...]) -> list[list[int]]:
    # H_d(x) = sum_n (-1)^n n! C((d+1)/2, n) C((d-1)/2, n) x |x|^(d-1-2n)
    size = len(degrees)
    rows = [[0] * size for _ in range(size)]
    for i, d in enumerate(degrees):
        mm, nn = (d + 1) // 2, (d - 1) // 2
        for n in range(nn + 1):
            target = d - 2 * n
            j = degrees.index(target)
            rows[i][j] = (-1) ** n * math.factorial(n) * math.comb(mm, n) * math.comb(nn, n)
    return rows


def _invert_unit_lower(rows: list[list[int]]) -> list[list[int]]:
    # Exact integer inverse of a unit lower-triangular matrix by forward
    # substitution.
    size = len(rows)
    inv = [[1 if i == j else 0 for j in range(size)] for i in range(size)]
    for i in range(size):
        for j in range(i):
            s = sum(rows[i][k] * inv[k][j] for k in range(j, i))
            inv[i][j] = -s
    return inv


def basis_change(max_degree: int = DEGREE_CAP_DEFAULT) -> BasisChangeTable:
    """Build the basis-change table for odd degrees ``1, 3, ..., max_degree``."""
    if max_degree < 1 or max_degree % 2 == 0:
        raise ValueError("max_degree must be a positive odd integer")
    if max_degree > 2 * MAX_ITO_ORDER - 1:
        raise ValueError(f"max_degree above cap {2 * MAX_ITO_ORDER - 1}")
    degrees = tuple(range(1, max_degree + 1, 2))
    h2m = _hermite_to_monomial_int(degrees)
    m2h = _invert_unit_lower(h2m)
    return BasisChangeTable(
        degrees=degrees,
        monomial_to_hermite=np.array(m2h, dtype=float),
        hermite_to_monomial=np.array(h2m, dtype=float),
    )


def _check_correlation(r: complex) -> complex:
    r = complex(r)
    if abs(r) > 1.0 + CORRELATION_TOL:
        raise ValueError(f"|r| = {abs(r):.6g} exceeds 1; not a normalized correlation")
    return r


def gaussian_autocorrelation_transform(series: OddHermiteSeries, r_x) -> complex:
    """Output autocorrelation of a nonlinearity driven by unit-power Gaussians.

    For input correlation ``r_x`` (normalized so that ``r_x(0) = 1``) the
    output correlation is ``sum_d |a_d|^2 w_d r_x |r_x|^(d-1)`` with ``w_d``
    the orthogonality weight of degree ``d``.
    """
    r = _check_correlation(r_x)
    return sum(
        abs(a) ** 2 * degree_weight(d) * r * abs(r) ** (d - 1)
        for d, a in series.coeffs.items()
    )


def gaussian_crosscorrelation_transform(
    series_a: OddHermiteSeries, series_b: OddHermiteSeries, r
) -> complex:
    """Cross-correlation of two nonlinearity outputs sharing Gaussian inputs.

    Same diagonal form as the autocorrelation transform with
    ``a_d conj(b_d)`` in place of ``|a_d|^2``; degrees present in only one
    series contribute nothing.
    """
    r = _check_correlation(r)
    common = set(series_a.coeffs) & set(series_b.coeffs)
    return sum(
        series_a.coeffs[d] * np.conj(series_b.coeffs[d]) * degree_weight(d) * r * abs(r) ** (d - 1)
        for d in common
    )
