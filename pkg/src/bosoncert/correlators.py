"""Two-point mode correlators C_ij = <n_i n_j> - <n_i><n_j> for each species.

All formulas take the ``n x m`` submatrix whose rows are the occupied input
modes. For a pair (i, j) write ``w_k = U[k, i] * conj(U[k, j])``. Then

* direct term     ``sum_k |w_k|^2``
* exchange term   ``sum_{k != l} w_k * conj(w_l)``

and the species correlators are

* boson           ``-direct + exchange``
* fermion         ``-direct - exchange``
* distinguishable ``-direct``
* simulated boson ``(1 - 1/n) * exchange - (1/n) * colsum_i * colsum_j``

with ``colsum_i = sum_k |U[k, i]|^2``. The last one is the phase-averaged
mean-field sampler correlator; no numerical phase averaging happens here.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, NumericalError, SelectionError

IMAG_TOL = 1e-12


class Species(str, enum.Enum):
    BOSON = "boson"
    FERMION = "fermion"
    DISTINGUISHABLE = "dist"
    SIMULATED = "simboson"

    def __str__(self):
        return self.value


ALL_SPECIES = tuple(Species)

_ALIASES = {
    "b": Species.BOSON, "boson": Species.BOSON, "bosons": Species.BOSON,
    "f": Species.FERMION, "fermion": Species.FERMION, "fermions": Species.FERMION,
    "d": Species.DISTINGUISHABLE, "dist": Species.DISTINGUISHABLE,
    "distinguishable": Species.DISTINGUISHABLE,
    "s": Species.SIMULATED, "simboson": Species.SIMULATED, "simulated": Species.SIMULATED,
    "simulated_boson": Species.SIMULATED, "simulated-boson": Species.SIMULATED,
}


def parse_species(name) -> Species:
    if isinstance(name, Species):
        return name
    try:
        return _ALIASES[str(name).strip().lower()]
    except KeyError:
        raise ValueError(f"unknown species {name!r}") from None


def pair_indices(m: int) -> tuple[np.ndarray, np.ndarray]:
    """0-based (i, j) arrays for all i < j, lexicographic."""
    i, j = np.triu_indices(m, k=1)
    return i, j


def _check_sub(sub) -> np.ndarray:
    sub = np.asarray(sub, dtype=complex)
    if sub.ndim != 2:
        raise DimensionError(f"submatrix must be 2-D, got shape {sub.shape}")
    n, m = sub.shape
    # n == m is allowed so that the two-mode beamsplitter can be evaluated
    if n < 1 or n > m:
        raise DimensionError(f"need 1 <= n <= m, got n={n}, m={m}")
    return sub


def _pair_terms(sub: np.ndarray, i: np.ndarray, j: np.ndarray, need_exchange: bool = True):
    w = sub[:, i] * sub[:, j].conj()  # (n, P)
    direct = np.sum(w.real**2 + w.imag**2, axis=0)
    if not need_exchange:
        return direct, None
    # O(n^2) per pair; the k == l terms are removed explicitly
    exchange = np.einsum("kp,lp->p", w, w.conj()) - direct
    residue = np.max(np.abs(exchange.imag), initial=0.0)
    if residue > IMAG_TOL:
        raise NumericalError(f"imaginary residue {residue:.3e} exceeds {IMAG_TOL:g}")
    return direct, exchange.real


def _combine(species: Species, sub, i, j, direct, exchange) -> np.ndarray:
    if species is Species.DISTINGUISHABLE:
        return -direct
    if species is Species.BOSON:
        return exchange - direct
    if species is Species.FERMION:
        return -exchange - direct
    n = sub.shape[0]
    colsum = np.sum(sub.real**2 + sub.imag**2, axis=0)
    return (1.0 - 1.0 / n) * exchange - colsum[i] * colsum[j] / n


def _species_values(sub: np.ndarray, i: np.ndarray, j: np.ndarray, species: Species) -> np.ndarray:
    direct, exchange = _pair_terms(sub, i, j, species is not Species.DISTINGUISHABLE)
    return _combine(species, sub, i, j, direct, exchange)


def correlator(sub, i: int, j: int, species) -> float:
    """C_ij for one pair of output modes (1-based, ``i != j``)."""
    sub = _check_sub(sub)
    species = parse_species(species)
    m = sub.shape[1]
    if i == j:
        raise SelectionError("diagonal correlator C_ii is not defined")
    if not (1 <= i <= m and 1 <= j <= m):
        raise SelectionError(f"mode pair ({i}, {j}) out of range 1..{m}")
    ii = np.array([i - 1])
    jj = np.array([j - 1])
    return float(_species_values(sub, ii, jj, species)[0])


@dataclass
class CDataset:
    species: Species
    n: int
    m: int
    values: np.ndarray
    source_seed: int | None = field(default=None)

    def __post_init__(self):
        self.species = parse_species(self.species)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.m * (self.m - 1) // 2,):
            raise DimensionError(
                f"C-dataset for m={self.m} needs {self.m * (self.m - 1) // 2} values, "
                f"got shape {self.values.shape}"
            )

    def __len__(self):
        return len(self.values)

    def pairs(self):
        i, j = pair_indices(self.m)
        return i + 1, j + 1

    def to_csv(self, header_lines=()) -> str:
        buf = io.StringIO()
        for line in header_lines:
            buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["i", "j", "value"])
        for a, b, v in zip(*self.pairs(), self.values):
            w.writerow([int(a), int(b), format(float(v), ".17g")])
        return buf.getvalue()

    def metadata(self) -> dict:
        return {"species": self.species.value, "n": self.n, "m": self.m,
                "source_seed": self.source_seed}


def c_dataset(sub, species, source_seed: int | None = None) -> CDataset:
    """All C_ij with i < j, lexicographic, for one submatrix and species."""
    sub = _check_sub(sub)
    species = parse_species(species)
    n, m = sub.shape
    i, j = pair_indices(m)
    values = _species_values(sub, i, j, species)
    return CDataset(species, n, m, values, source_seed)


def c_datasets(sub, species_list, source_seed: int | None = None) -> dict[Species, CDataset]:
    """Like :func:`c_dataset` for several species, sharing the per-pair sums."""
    sub = _check_sub(sub)
    species_list = [parse_species(s) for s in species_list]
    n, m = sub.shape
    i, j = pair_indices(m)
    need = any(s is not Species.DISTINGUISHABLE for s in species_list)
    direct, exchange = _pair_terms(sub, i, j, need)
    return {s: CDataset(s, n, m, _combine(s, sub, i, j, direct, exchange), source_seed)
            for s in species_list}


def read_cdataset_csv(text: str, species, n: int, m: int) -> CDataset:
    rows = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    reader = csv.DictReader(rows)
    values = [float(r["value"]) for r in reader]
    return CDataset(parse_species(species), n, m, np.array(values))
