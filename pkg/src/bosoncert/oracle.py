"""Brute-force ground truth at small scale.

Exact output distributions are enumerated configuration by configuration
(permanents for bosons and distinguishable particles, determinants for
fermions, phase-sampled multinomials for the mean-field sampler), and
correlators are read back off those distributions as plain covariances.
Nothing here reuses the closed forms in :mod:`bosoncert.correlators`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .correlators import Species, correlator, parse_species
from .errors import DimensionError, NumericalError, SelectionError, SizeError
from .rmt import MomentTriple
from .unitary import RngSeed, SeedLike, as_generator, haar_unitary

PERMANENT_CAP = 16
BOSON_CAPS = (5, 12)
FERMION_CAPS = (10, 16)
NORM_TOL = 1e-10
NEGATIVE_TOL = 1e-14
DEFAULT_PHASE_SAMPLES = 100_000


def permanent(a) -> complex:
    """Permanent by Ryser's formula with Gray-code subset order.

    perm(A) = (-1)^n * sum_S (-1)^|S| * prod_i sum_{j in S} a_ij.
    Consecutive Gray codes differ by one column, so the row sums are
    updated in O(n) per subset.
    """
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"permanent needs a square matrix, got shape {a.shape}")
    n = a.shape[0]
    if n > PERMANENT_CAP:
        raise SizeError(f"permanent capped at n={PERMANENT_CAP}, got {n}")
    if n == 0:
        return 1.0 + 0j
    a = a.astype(complex)
    row_sums = np.zeros(n, dtype=complex)
    total = 0j
    gray = 0
    for k in range(1, 1 << n):
        bit = (k & -k).bit_length() - 1
        gray ^= 1 << bit
        if gray >> bit & 1:
            row_sums += a[:, bit]
        else:
            row_sums -= a[:, bit]
        term = np.prod(row_sums)
        total += -term if bin(gray).count("1") & 1 else term
    return complex(total * (-1) ** n)


def configurations(n: int, m: int, binary: bool = False) -> list[tuple[int, ...]]:
    """All occupation vectors with sum n, in colex order."""
    if binary:
        configs = []
        for occ in itertools.combinations(range(m), n):
            y = [0] * m
            for i in occ:
                y[i] = 1
            configs.append(tuple(y))
    else:
        configs = []
        for cols in itertools.combinations_with_replacement(range(m), n):
            y = [0] * m
            for i in cols:
                y[i] += 1
            configs.append(tuple(y))
    return sorted(configs, key=lambda y: y[::-1])


def _columns(y) -> list[int]:
    return [i for i, c in enumerate(y) for _ in range(c)]


def _multiplicity(y) -> int:
    return math.prod(math.factorial(c) for c in y)


@dataclass
class OutputDistribution:
    species: Species
    n: int
    m: int
    entries: dict[tuple[int, ...], float]
    # per-sample single-particle probabilities (simulated bosons only)
    phase_probs: np.ndarray | None = field(default=None, repr=False)

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        ys = np.array(list(self.entries.keys()), dtype=float).reshape(-1, self.m)
        ps = np.array(list(self.entries.values()), dtype=float)
        return ys, ps

    def covariance_matrix(self) -> np.ndarray:
        ys, ps = self.arrays()
        mean = ps @ ys
        dev = ys - mean
        return (dev * ps[:, None]).T @ dev

    def to_json(self) -> dict:
        return {
            "species": self.species.value,
            "n": self.n,
            "m": self.m,
            "entries": [{"y": list(y), "p": float(p)} for y, p in self.entries.items()],
        }


def _finalize(species, n, m, configs, probs, phase_probs=None) -> OutputDistribution:
    probs = np.asarray(probs, dtype=float)
    if probs.size and probs.min() < -NEGATIVE_TOL:
        raise NumericalError(f"negative probability {probs.min():.3e}")
    probs = np.clip(probs, 0.0, 1.0)
    total = math.fsum(probs.tolist())
    if abs(total - 1.0) > NORM_TOL:
        raise NumericalError(f"probabilities sum to {total!r}, not 1")
    entries = {y: float(p) for y, p in zip(configs, probs)}
    return OutputDistribution(species, n, m, entries, phase_probs)


def _check_caps(sub, caps, label) -> np.ndarray:
    sub = np.asarray(sub, dtype=complex)
    if sub.ndim != 2:
        raise DimensionError(f"submatrix must be 2-D, got shape {sub.shape}")
    n, m = sub.shape
    if n < 1 or n > m:
        raise DimensionError(f"need 1 <= n <= m, got n={n}, m={m}")
    if n > caps[0] or m > caps[1]:
        raise SizeError(f"{label} oracle capped at n<={caps[0]}, m<={caps[1]}; got n={n}, m={m}")
    return sub


def boson_distribution(sub) -> OutputDistribution:
    """p(y) = |perm(U_sub[:, cols(y)])|^2 / prod(y_i!)."""
    sub = _check_caps(sub, BOSON_CAPS, "boson")
    n, m = sub.shape
    configs = configurations(n, m)
    probs = [abs(permanent(sub[:, _columns(y)])) ** 2 / _multiplicity(y) for y in configs]
    return _finalize(Species.BOSON, n, m, configs, probs)


def fermion_distribution(sub) -> OutputDistribution:
    """p(y) = |det(U_sub[:, cols(y)])|^2 over binary occupations."""
    sub = _check_caps(sub, FERMION_CAPS, "fermion")
    n, m = sub.shape
    configs = configurations(n, m, binary=True)
    probs = [abs(np.linalg.det(sub[:, _columns(y)])) ** 2 for y in configs]
    return _finalize(Species.FERMION, n, m, configs, probs)


def distinguishable_distribution(sub) -> OutputDistribution:
    """p(y) = perm(P[:, cols(y)]) / prod(y_i!) with P = |U_sub|^2."""
    sub = _check_caps(sub, BOSON_CAPS, "distinguishable")
    n, m = sub.shape
    p = np.abs(sub) ** 2
    configs = configurations(n, m)
    probs = [permanent(p[:, _columns(y)]).real / _multiplicity(y) for y in configs]
    return _finalize(Species.DISTINGUISHABLE, n, m, configs, probs)


def simulated_distribution(sub, phase_samples: int = DEFAULT_PHASE_SAMPLES,
                           seed: SeedLike = 0) -> OutputDistribution:
    """Mean-field sampler output, averaged over random input phases.

    For each phase vector the n particles are independent, each landing in
    mode i with probability ``|sum_r exp(i theta_r) U[r, i]|^2 / n``; the
    returned distribution is the average of those multinomials over
    ``phase_samples`` uniform draws.
    """
    sub = _check_caps(sub, BOSON_CAPS, "simulated-boson")
    if phase_samples < 1:
        raise ValueError("phase_samples must be >= 1")
    n, m = sub.shape
    rng = as_generator(seed if not isinstance(seed, int) else RngSeed(seed, "phases"))
    theta = rng.uniform(0.0, 2 * np.pi, size=(phase_samples, n))
    amp = np.exp(1j * theta) @ sub
    single = np.abs(amp) ** 2 / n
    configs = configurations(n, m)
    cols = np.array([_columns(y) for y in configs])  # (K, n)
    coef = np.array([math.factorial(n) / _multiplicity(y) for y in configs])
    acc = np.zeros(len(configs))
    block = max(1, 2_000_000 // max(1, len(configs) * n))
    for start in range(0, phase_samples, block):
        ps = single[start:start + block]
        acc += np.prod(ps[:, cols], axis=2).sum(axis=0)
    probs = coef * acc / phase_samples
    return _finalize(Species.SIMULATED, n, m, configs, probs, phase_probs=single)


def exact_distribution(sub, species, phase_samples: int = DEFAULT_PHASE_SAMPLES,
                       seed: SeedLike = 0) -> OutputDistribution:
    species = parse_species(species)
    if species is Species.BOSON:
        return boson_distribution(sub)
    if species is Species.FERMION:
        return fermion_distribution(sub)
    if species is Species.DISTINGUISHABLE:
        return distinguishable_distribution(sub)
    return simulated_distribution(sub, phase_samples, seed)


def _check_mode(dist, i):
    if not 1 <= i <= dist.m:
        raise SelectionError(f"mode {i} out of range 1..{dist.m}")


def oracle_correlator(dist: OutputDistribution, i: int, j: int) -> float:
    """Covariance of the occupations of modes i and j (1-based).

    ``i == j`` gives the variance of n_i.
    """
    _check_mode(dist, i)
    _check_mode(dist, j)
    ys, ps = dist.arrays()
    yi, yj = ys[:, i - 1], ys[:, j - 1]
    mi = math.fsum((ps * yi).tolist())
    mj = math.fsum((ps * yj).tolist())
    return math.fsum((ps * yi * yj).tolist()) - mi * mj


def simulated_stderr_matrix(dist: OutputDistribution) -> np.ndarray:
    """Monte Carlo standard errors of the phase-averaged covariance matrix.

    The estimate of C_ij is ``mean(a) - mean(b) * mean(c)`` with per-sample
    ``a = n(n-1) p_i p_j`` (plus ``n p_i`` on the diagonal), ``b = n p_i``
    and ``c = n p_j``; the error bar is the delta-method linearisation.
    Exact distributions carry no phase samples and get zeros.
    """
    if dist.phase_probs is None:
        return np.zeros((dist.m, dist.m))
    n, c = dist.n, dist.n * (dist.n - 1)
    p = dist.phase_probs
    s = p.shape[0]
    if s < 2:
        return np.full((dist.m, dist.m), np.inf)
    pbar = p.mean(axis=0)
    beta = n * pbar
    p2 = p * p
    # second moments of the linearised estimator from Gram matrices
    g11 = p.T @ p / s
    g22 = p2.T @ p2 / s
    g21 = p2.T @ p / s  # E[p_i^2 p_j]
    e2 = np.diag(g11)
    mean_lin = c * g11 - n * np.outer(pbar, beta) - n * np.outer(beta, pbar)
    sq_lin = (
        c * c * g22
        + n * n * np.outer(e2, beta**2) + n * n * np.outer(beta**2, e2)
        - 2 * c * n * g21 * beta[None, :] - 2 * c * n * g21.T * beta[:, None]
        + 2 * n * n * np.outer(beta, beta) * g11
    )
    var = np.maximum(sq_lin - mean_lin**2, 0.0) * s / (s - 1)
    # diagonal (variance of n_i) has an extra linear term; do it directly
    lin_diag = c * p2 - 2 * n * p * beta[None, :] + n * p
    var[np.diag_indices(dist.m)] = lin_diag.var(axis=0, ddof=1)
    return np.sqrt(var / s)


def simulated_correlator_stderr(dist: OutputDistribution, i: int, j: int) -> float:
    _check_mode(dist, i)
    _check_mode(dist, j)
    return float(simulated_stderr_matrix(dist)[i - 1, j - 1])


@dataclass
class SampledCorrelators:
    """Plug-in covariance estimates from finite shots."""

    shots: int
    covariance: np.ndarray
    stderr: np.ndarray
    low_confidence: bool

    def correlator(self, i: int, j: int) -> float:
        return float(self.covariance[i - 1, j - 1])

    def correlator_stderr(self, i: int, j: int) -> float:
        return float(self.stderr[i - 1, j - 1])


def sampled_counts(dist: OutputDistribution, shots: int, seed: SeedLike = 0) -> SampledCorrelators:
    """Draw ``shots`` i.i.d. configurations and estimate all C_ij."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    rng = as_generator(seed if not isinstance(seed, int) else RngSeed(seed, "shots"))
    ys, ps = dist.arrays()
    ps = ps / ps.sum()
    counts = rng.multinomial(shots, ps).astype(float)
    w = counts / shots
    mean = w @ ys
    dev = ys - mean
    cov = (dev * w[:, None]).T @ dev
    # per-shot products z = dev_i * dev_j; their spread gives the error bar
    z2 = ((dev**2) * w[:, None]).T @ (dev**2)
    var_z = np.maximum(z2 - cov**2, 0.0)
    if shots > 1:
        stderr = np.sqrt(var_z * shots / (shots - 1) / shots)
    else:
        stderr = np.full_like(cov, np.nan)
    return SampledCorrelators(shots, cov, stderr, low_confidence=shots < 2)


class MCMoments(NamedTuple):
    estimate: MomentTriple
    stderr: MomentTriple
    trials: int


def mc_correlator_samples(species_list, n: int, m: int, trials: int,
                          seed: SeedLike = 0, pair=(1, 2)) -> dict[Species, np.ndarray]:
    """C_pair on ``trials`` independent Haar draws, first n rows as inputs."""
    base = seed if isinstance(seed, RngSeed) else RngSeed(int(seed))
    base = base.child("mc-haar")
    species_list = [parse_species(s) for s in species_list]
    out = {s: np.empty(trials) for s in species_list}
    for t in range(trials):
        sub = haar_unitary(m, base, trial=t)[:n]
        for s in species_list:
            out[s][t] = correlator(sub, pair[0], pair[1], s)
    return out


def moments_with_stderr(samples) -> MCMoments:
    c = np.asarray(samples, dtype=float)
    t = c.size
    est, err = [], []
    for p in (1, 2, 3):
        v = c**p
        est.append(math.fsum(v.tolist()) / t)
        err.append(float(np.std(v, ddof=1) / math.sqrt(t)))
    return MCMoments(MomentTriple(*est), MomentTriple(*err), t)


def mc_haar_moments(species, n: int, m: int, trials: int, seed: SeedLike = 0) -> MCMoments:
    """Monte Carlo estimate of E_U[C_12^p], p = 1, 2, 3, with standard errors."""
    if trials < 100:
        raise ValueError(f"need at least 100 trials, got {trials}")
    species = parse_species(species)
    samples = mc_correlator_samples([species], n, m, trials, seed)[species]
    return moments_with_stderr(samples)
