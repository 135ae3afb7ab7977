"""Haar-random unitaries, input-mode submatrices and unitarity checks.

Mode indices are 1-based at every public entry point; arrays are 0-based.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import DimensionError, SelectionError

UNITARITY_TOL = 1e-10


@dataclass(frozen=True)
class RngSeed:
    """A 64-bit seed plus a stream label.

    Streams are derived with :class:`numpy.random.SeedSequence` spawn keys,
    so ``(seed, stream, trial)`` always maps to the same generator no matter
    in which order or in which process trials are executed.
    """

    seed: int
    stream: str = "default"

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    def _stream_key(self) -> int:
        digest = hashlib.blake2b(self.stream.encode(), digest_size=8).digest()
        return int.from_bytes(digest, "little")

    def generator(self, trial: int | None = None) -> np.random.Generator:
        key = (self._stream_key(),) if trial is None else (self._stream_key(), int(trial))
        ss = np.random.SeedSequence(int(self.seed), spawn_key=key)
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, label: str) -> "RngSeed":
        return RngSeed(self.seed, f"{self.stream}/{label}")


SeedLike = Union[RngSeed, int, np.random.Generator]


def as_generator(seed: SeedLike, trial: int | None = None) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, RngSeed):
        return seed.generator(trial)
    return RngSeed(int(seed)).generator(trial)


def haar_unitary(m: int, seed: SeedLike = 0, trial: int | None = None) -> np.ndarray:
    """Draw an ``m x m`` unitary from the Haar measure.

    QR of a complex Ginibre matrix, with each column of Q rotated by the
    phase of the matching diagonal entry of R (Mezzadri's construction).
    """
    if int(m) != m or m < 1:
        raise DimensionError(f"mode count must be a positive integer, got {m}")
    rng = as_generator(seed, trial)
    z = (rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def unitarity_residual(u) -> float:
    """Max-norm of ``U^dagger U - I``."""
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {u.shape}")
    g = u.conj().T @ u
    return float(np.max(np.abs(g - np.eye(u.shape[0]))))


def validate_selection(sel: Sequence[int], m: int) -> tuple[int, ...]:
    """Check a 1-based input selection against ``m`` modes."""
    sel = tuple(int(q) for q in sel)
    if not sel:
        raise SelectionError("input selection is empty")
    if any(q < 1 or q > m for q in sel):
        raise SelectionError(f"input modes {sel} out of range 1..{m}")
    if any(b <= a for a, b in zip(sel, sel[1:])):
        raise SelectionError(f"input modes must be strictly increasing, got {sel}")
    if len(sel) >= m:
        raise DimensionError(f"need fewer particles than modes, got n={len(sel)}, m={m}")
    return sel


def extract_submatrix(u, sel: Sequence[int]) -> np.ndarray:
    """Rows ``q_1..q_n`` of ``u`` as an ``n x m`` array (1-based ``sel``)."""
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {u.shape}")
    sel = validate_selection(sel, u.shape[0])
    return u[[q - 1 for q in sel], :].copy()


def first_modes(n: int) -> tuple[int, ...]:
    return tuple(range(1, n + 1))


def random_selection(n: int, m: int, rng: np.random.Generator) -> tuple[int, ...]:
    picked = rng.choice(m, size=n, replace=False)
    return tuple(int(q) + 1 for q in np.sort(picked))


def matrix_to_json(u, n: int | None = None) -> dict:
    u = np.asarray(u, dtype=complex)
    doc = {"m": int(u.shape[1])}
    if n is not None:
        doc["n"] = int(n)
    doc["entries"] = [[[float(z.real), float(z.imag)] for z in row] for row in u]
    return doc


def matrix_from_json(doc: dict) -> np.ndarray:
    u = np.array([[complex(re, im) for re, im in row] for row in doc["entries"]])
    rows = doc.get("n", doc["m"])
    if u.shape != (rows, doc["m"]):
        raise DimensionError(f"entries shape {u.shape} does not match header ({rows}, {doc['m']})")
    return u
