"""Haar-averaged correlator moments and the NM / CV / S benchmark statistics.

Each moment is a rational function of (n, m). Numerators are evaluated as
exact integer polynomials and denominators as products of integer factors,
so the double-precision result is the correctly rounded value of the exact
rational; ``exact=True`` returns the :class:`fractions.Fraction` itself.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import NamedTuple

from .correlators import Species, parse_species
from .errors import DomainError, UndefinedStatisticError


class MomentTriple(NamedTuple):
    """Raw moments E[C], E[C^2], E[C^3]."""

    m1: float
    m2: float
    m3: float


class BenchmarkStatistics(NamedTuple):
    nm: float
    cv: float
    s: float


def _prod(*factors: int) -> int:
    return math.prod(factors)


def _boson(n: int, m: int):
    d1 = _prod(m, m * m - 1)
    d2 = _prod(m * m, m + 2, m + 3, m * m - 1)
    d3 = _prod(m * m, m + 1, m + 2, m + 3, m + 4, m + 5, m * m - 1)
    n1 = n * (-m - n + 2)
    n2 = 2 * n * (m**2 * n + m**2 + 9 * m * n - 11 * m + n**3 - 2 * n**2 + 5 * n - 4)
    n3 = -2 * n * (
        m**3 * n**2 + 15 * m**3 * n + 2 * m**3 + 3 * m**2 * n**3 + 6 * m**2 * n**2
        + 213 * m**2 * n - 222 * m**2 - 3 * m * n**4
        + 45 * m * n**3 + 32 * m * n**2 + 372 * m * n - 464 * m + 3 * n**5 - 6 * n**4
        + 45 * n**3 + 78 * n**2 + 168 * n - 288
    )
    return (n1, d1), (n2, d2), (n3, d3)


def _fermion(n: int, m: int):
    d1 = _prod(m, m * m - 1)
    d2 = _prod(m * m, m + 2, m + 3, m * m - 1)
    d3 = _prod(m * m, m + 1, m + 2, m + 3, m + 4, m + 5, m * m - 1)
    n1 = n * (n - m)
    n2 = 2 * n * (n + 1) * (m - n) * (m - n + 1)
    n3 = -6 * n * (n + 1) * (n + 2) * (m - n) * (m - n + 1) * (m - n + 2)
    return (n1, d1), (n2, d2), (n3, d3)


def _distinguishable(n: int, m: int):
    d1 = _prod(m, m + 1)
    d2 = _prod(m * m, m + 2, m + 3, m * m - 1)
    d3 = _prod(m * m, m + 2, m + 3, m + 4, m + 5, m * m - 1)
    n1 = -n
    n2 = n * (m**2 * n + 3 * m**2 + m * n - 5 * m + 2 * n - 2)
    n3 = -n * (
        m**2 * n**2 + 9 * m**2 * n + 26 * m**2 + 5 * m * n**2 + 21 * m * n - 62 * m
        + 12 * n**2 + 60 * n - 72
    )
    return (n1, d1), (n2, d2), (n3, d3)


def _simulated(n: int, m: int):
    d1 = _prod(m, m * m - 1)
    d2 = _prod(m * m, m + 2, m + 3, m * m - 1, n)
    d3 = _prod(m - 1, m * m, (m + 1) ** 2, m + 2, m + 3, m + 4, m + 5, n * n)
    n1 = -n * (m + n - 2)
    n2 = (
        4 * m * n - m - 14 * n**2 + 8 * n - 2
        + 2 * m**2 * n**3 - m**2 * n**2 + 4 * m**2 * n - m**2 + 18 * m * n**3
        - 25 * m * n**2 + 2 * n**5 - 4 * n**4 + 10 * n**3
    )
    n3 = (
        -2 * m**3 * n**5 - 21 * m**3 * n**4 + 30 * m**3 * n**3 - 41 * m**3 * n**2
        - 10 * m**3 * n + 8 * m**3 - 6 * m**2 * n**6 - 3 * m**2 * n**5
        - 285 * m**2 * n**4 + 261 * m**2 * n**3 + 75 * m**2 * n**2 - 66 * m**2 * n
        + 24 * m**2 + 6 * m * n**7 - 90 * m * n**6 - 55 * m * n**5
        - 360 * m * n**4 + 591 * m * n**3 + 8 * m * n**2 - 128 * m * n + 64 * m
        - 6 * n**8 + 12 * n**7 - 90 * n**6 - 120 * n**5 - 24 * n**4 + 396 * n**3
        - 168 * n**2 - 48 * (n - 1)
    )
    return (n1, d1), (n2, d2), (n3, d3)


_FORMULAS = {
    Species.BOSON: _boson,
    Species.FERMION: _fermion,
    Species.DISTINGUISHABLE: _distinguishable,
    Species.SIMULATED: _simulated,
}


def _check_domain(n, m) -> tuple[int, int]:
    if int(n) != n or int(m) != m:
        raise DomainError(f"n and m must be integers, got n={n}, m={m}")
    n, m = int(n), int(m)
    if n < 1:
        raise DomainError(f"need at least one particle, got n={n}")
    if n >= m:
        raise DomainError(f"formulas require m > n, got n={n}, m={m}")
    return n, m


def rmt_moments(species, n: int, m: int, exact: bool = False) -> MomentTriple:
    """E_U[C], E_U[C^2], E_U[C^3] for a fixed off-diagonal pair."""
    n, m = _check_domain(n, m)
    parts = _FORMULAS[parse_species(species)](n, m)
    if exact:
        return MomentTriple(*(Fraction(a, b) for a, b in parts))
    # int / int is correctly rounded in Python
    return MomentTriple(*(a / b for a, b in parts))


def statistics_from_moments(m1, m2, m3, n, m) -> BenchmarkStatistics:
    """NM, signed CV and skewness from raw moments.

    Central moments are formed before any rounding when the inputs are
    exact (``Fraction``/int), which keeps the variance free of cancellation.
    """
    var = m2 - m1 * m1
    mu3 = m3 - 3 * m1 * m2 + 2 * m1**3
    nm = float(m1 * m**2 / n) if n else math.nan
    if m1 == 0:
        raise UndefinedStatisticError("mean is zero: coefficient of variation undefined")
    if var <= 0:
        raise UndefinedStatisticError("variance is zero: skewness undefined")
    sd = math.sqrt(var)
    return BenchmarkStatistics(nm, float(sd / m1), float(mu3) / float(var) ** 1.5)


def rmt_statistics(species, n: int, m: int) -> BenchmarkStatistics:
    """RMT prediction of (NM, CV, S); CV keeps the sign of the mean."""
    t = rmt_moments(species, n, m, exact=True)
    return statistics_from_moments(t.m1, t.m2, t.m3, n, m)
