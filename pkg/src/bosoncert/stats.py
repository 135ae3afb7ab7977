"""Empirical statistics of C-datasets and the standard-error ellipse test."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .correlators import CDataset, Species, parse_species
from .errors import BenchError, InsufficientSamplesError, UndefinedStatisticError
from .rmt import BenchmarkStatistics, MomentTriple

REGULARIZATION_EPS = 1e-12
DEFAULT_K = 4.0
# Clouds smaller than this are flagged; below ~10 points the 2x2 covariance
# estimate is too noisy for the ellipse to mean much.
LOW_CONFIDENCE_T = 10


def _fmean(x) -> float:
    x = np.asarray(x, dtype=float).ravel()
    return math.fsum(x.tolist()) / x.size


def dataset_moments(ds) -> MomentTriple:
    """Raw population moments of the dataset values (no bias correction)."""
    values = np.asarray(ds.values if isinstance(ds, CDataset) else ds, dtype=float)
    if values.size == 0:
        raise BenchError("empty dataset")
    sq = values * values
    return MomentTriple(_fmean(values), _fmean(sq), _fmean(sq * values))


def values_statistics(values, n: int, m: int) -> BenchmarkStatistics:
    """NM / CV / S of a value array; central moments by two-pass summation."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise BenchError("empty dataset")
    mean = _fmean(values)
    dev = values - mean
    dev2 = dev * dev
    var = _fmean(dev2)
    mu3 = _fmean(dev2 * dev)
    nm = mean * m**2 / n
    if mean == 0:
        raise UndefinedStatisticError("mean is zero: coefficient of variation undefined")
    if var <= 0:
        raise UndefinedStatisticError("variance is zero: skewness undefined")
    return BenchmarkStatistics(nm, math.sqrt(var) / mean, mu3 / var**1.5)


def dataset_statistics(ds: CDataset) -> BenchmarkStatistics:
    return values_statistics(ds.values, ds.n, ds.m)


@dataclass(frozen=True)
class CloudSummary:
    t: int
    mean: np.ndarray
    covariance: np.ndarray
    standard_error_cov: np.ndarray

    @property
    def std(self) -> np.ndarray:
        """Per-axis spread of the cloud (standard deviation)."""
        return np.sqrt(np.diag(self.covariance))

    @property
    def standard_error(self) -> np.ndarray:
        """Per-axis standard error of the cloud mean."""
        return np.sqrt(np.diag(self.standard_error_cov))

    def to_json(self) -> dict:
        return {
            "t": self.t,
            "mean": [float(v) for v in self.mean],
            "covariance": [[float(v) for v in row] for row in self.covariance],
            "standard_error_cov": [[float(v) for v in row] for row in self.standard_error_cov],
        }


def cloud_summary(points) -> CloudSummary:
    """Mean and (t-1)-normalised covariance of a cloud of (CV, S) points."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError(f"expected (t, 2) points, got shape {pts.shape}")
    t = pts.shape[0]
    if t < 2:
        raise InsufficientSamplesError(f"need at least 2 points for a covariance, got {t}")
    mean = np.array([_fmean(pts[:, 0]), _fmean(pts[:, 1])])
    dev = pts - mean
    cov = np.empty((2, 2))
    for a in range(2):
        for b in range(a, 2):
            cov[a, b] = cov[b, a] = math.fsum((dev[:, a] * dev[:, b]).tolist()) / (t - 1)
    return CloudSummary(t, mean, cov, cov / t)


@dataclass
class CertificationVerdict:
    k: float
    distances: dict[Species, float]
    accepted: list[Species]
    inconclusive: bool = False
    low_confidence: bool = False
    diagnostics: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        doc = {
            "k": float(self.k),
            "distances": {s.value: float(d) for s, d in self.distances.items()},
            "accepted": [s.value for s in self.accepted],
        }
        if self.inconclusive:
            doc["inconclusive"] = True
        if self.low_confidence:
            doc["low_confidence"] = True
        if self.diagnostics:
            doc["diagnostics"] = list(self.diagnostics)
        return doc


def _inverse_cov(cov: np.ndarray, diagnostics: list[str]) -> np.ndarray | None:
    cov = 0.5 * (cov + cov.T)
    eig = np.linalg.eigvalsh(cov)
    trace = float(np.trace(cov))
    if not np.all(np.isfinite(cov)) or eig[-1] <= 0.0 or trace <= 0.0:
        diagnostics.append("standard-error covariance is degenerate (zero spread)")
        return None
    if eig[0] <= REGULARIZATION_EPS * eig[-1]:
        cov = cov + REGULARIZATION_EPS * trace / 2 * np.eye(2)
        diagnostics.append("singular standard-error covariance regularized")
        eig = np.linalg.eigvalsh(cov)
        if eig[0] <= 0.0:
            diagnostics.append("covariance still singular after regularization")
            return None
    return np.linalg.inv(cov)


def mahalanobis(x, mean, inv_cov) -> float:
    d = np.asarray(x, dtype=float) - np.asarray(mean, dtype=float)
    return float(math.sqrt(max(float(d @ inv_cov @ d), 0.0)))


def certify(cloud: CloudSummary, predictions: Mapping, k: float = DEFAULT_K) -> CertificationVerdict:
    """Accept every species whose predicted (CV, S) lies within ``k`` standard errors.

    Distance is the full-covariance Mahalanobis distance of the prediction
    from the cloud mean under the standard-error covariance.
    """
    if k <= 0:
        raise ValueError(f"k must be positive, got {k}")
    diagnostics: list[str] = []
    inv = _inverse_cov(np.asarray(cloud.standard_error_cov, dtype=float), diagnostics)
    low = cloud.t < LOW_CONFIDENCE_T
    if low:
        diagnostics.append(f"only {cloud.t} samples in cloud")
    if inv is None:
        return CertificationVerdict(k, {}, [], inconclusive=True, low_confidence=low,
                                    diagnostics=diagnostics)
    distances = {}
    for sp, pred in predictions.items():
        sp = parse_species(sp)
        point = (pred.cv, pred.s) if hasattr(pred, "cv") else tuple(pred)
        distances[sp] = mahalanobis(point, cloud.mean, inv)
    accepted = [sp for sp, d in distances.items() if d <= k]
    return CertificationVerdict(k, distances, accepted, low_confidence=low,
                                diagnostics=diagnostics)


def pooled_separation(a: CloudSummary, b: CloudSummary) -> float:
    """Mahalanobis distance between two cloud means under SE_a + SE_b."""
    inv = _inverse_cov(a.standard_error_cov + b.standard_error_cov, [])
    if inv is None:
        return math.inf if not np.allclose(a.mean, b.mean) else 0.0
    return mahalanobis(a.mean, b.mean, inv)
