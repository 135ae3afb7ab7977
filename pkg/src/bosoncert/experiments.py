"""Experiment drivers: single-circuit histograms, m-sweeps, (CV, S) clouds,
and the oracle equivalence suite.

Every trial draws from its own ``(seed, stream, trial)`` generator, so the
numbers do not depend on how trials are spread over worker processes.
BLAS is pinned to one thread everywhere trials run, for the same reason.
"""

from __future__ import annotations

import functools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from threadpoolctl import threadpool_limits

from .correlators import ALL_SPECIES, CDataset, Species, c_dataset, c_datasets, correlator, parse_species
from .errors import ConfigError, DomainError, UndefinedStatisticError
from .oracle import (
    DEFAULT_PHASE_SAMPLES,
    exact_distribution,
    simulated_stderr_matrix,
)
from .rmt import BenchmarkStatistics, rmt_statistics
from .stats import (
    DEFAULT_K,
    CertificationVerdict,
    CloudSummary,
    certify,
    cloud_summary,
    pooled_separation,
    values_statistics,
)
from .unitary import RngSeed, extract_submatrix, first_modes, haar_unitary, random_selection


@dataclass(frozen=True)
class ExperimentConfig:
    n: int = 6
    m_values: tuple[int, ...] = (120,)
    trials: int = 500
    species: tuple[Species, ...] = ALL_SPECIES
    seed: int = 0
    k: float = DEFAULT_K
    reuse_circuit: bool = False
    repetitions: int = 1
    bins: int | str = "fd"

    def __post_init__(self):
        object.__setattr__(self, "species", tuple(parse_species(s) for s in self.species))
        object.__setattr__(self, "m_values", tuple(int(m) for m in self.m_values))
        if not self.m_values:
            raise ConfigError("no mode counts given")
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if self.repetitions < 1:
            raise ConfigError(f"repetitions must be >= 1, got {self.repetitions}")
        if self.k <= 0:
            raise ConfigError(f"k must be positive, got {self.k}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if not self.species:
            raise ConfigError("no species selected")
        if self.n < 1 or self.n >= min(self.m_values):
            raise DomainError(f"need 1 <= n < m, got n={self.n}, m={min(self.m_values)}")

    def echo(self) -> dict:
        return {
            "n": self.n,
            "m": list(self.m_values),
            "trials": self.trials,
            "species": [s.value for s in self.species],
            "seed": self.seed,
            "k": self.k,
            "reuse_circuit": self.reuse_circuit,
            "repetitions": self.repetitions,
            "bins": self.bins,
        }


def parse_modes(text: str) -> tuple[int, ...]:
    """``"120"`` or ``"start:stop:step"`` (stop inclusive) to a tuple of m."""
    parts = str(text).split(":")
    try:
        if len(parts) == 1:
            return (int(parts[0]),)
        if len(parts) == 3:
            start, stop, step = (int(p) for p in parts)
            if step <= 0:
                raise ConfigError(f"step must be positive in {text!r}")
            values = tuple(range(start, stop + 1, step))
            if not values:
                raise ConfigError(f"empty mode range {text!r}")
            return values
    except ValueError:
        pass
    raise ConfigError(f"cannot parse mode count {text!r}; use M or START:STOP:STEP")


# ---------------------------------------------------------------- trials

@functools.lru_cache(maxsize=8)
def _shared_circuit(m: int, seed: int, rep: int) -> np.ndarray:
    return haar_unitary(m, RngSeed(seed, f"circuit/m={m}/rep={rep}"))


def trial_submatrix(n: int, m: int, seed: int, trial: int, reuse_circuit: bool = False,
                    rep: int = 0) -> np.ndarray:
    """Submatrix for one trial.

    Default: a fresh Haar U per trial with inputs in modes 1..n. With
    ``reuse_circuit`` one U per (m, rep) is kept and the input modes are
    redrawn each trial.
    """
    if reuse_circuit:
        u = _shared_circuit(m, seed, rep)
        sel = random_selection(n, m, RngSeed(seed, f"selection/m={m}/rep={rep}").generator(trial))
    else:
        u = haar_unitary(m, RngSeed(seed, f"circuit/m={m}/rep={rep}"), trial=trial)
        sel = first_modes(n)
    return extract_submatrix(u, sel)


def _trial_statistics(task) -> np.ndarray:
    n, m, species, seed, trial, reuse, rep = task
    sub = trial_submatrix(n, m, seed, trial, reuse, rep)
    out = np.full((len(species), 3), np.nan)
    for row, ds in enumerate(c_datasets(sub, species).values()):
        try:
            out[row] = values_statistics(ds.values, n, m)
        except UndefinedStatisticError:
            pass
    return out


def _init_worker():
    threadpool_limits(1)


def run_tasks(fn, tasks, workers: int = 1) -> list:
    """Map ``fn`` over ``tasks`` preserving order, optionally in a process pool."""
    tasks = list(tasks)
    if workers <= 1 or len(tasks) <= 1:
        with threadpool_limits(1):
            return [fn(t) for t in tasks]
    chunk = max(1, len(tasks) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker) as pool:
        return list(pool.map(fn, tasks, chunksize=chunk))


def trial_statistics(config: ExperimentConfig, m: int, workers: int = 1, rep: int = 0) -> np.ndarray:
    """(trials, species, 3) array of per-dataset NM, CV, S."""
    tasks = [(config.n, m, config.species, config.seed, t, config.reuse_circuit, rep)
             for t in range(config.trials)]
    return np.stack(run_tasks(_trial_statistics, tasks, workers))


def _fsum_mean(x) -> float:
    x = np.asarray(x, dtype=float)
    return math.fsum(x.tolist()) / x.size if x.size else math.nan


def _fsum_std(x) -> float:
    x = np.asarray(x, dtype=float)
    if x.size < 2:
        return math.nan
    mu = _fsum_mean(x)
    return math.sqrt(math.fsum(((x - mu) ** 2).tolist()) / (x.size - 1))


# ---------------------------------------------------------------- histogram

@dataclass
class HistogramResult:
    config: ExperimentConfig
    m: int
    selection: tuple[int, ...]
    datasets: dict[Species, CDataset]
    histograms: dict[Species, tuple[np.ndarray, np.ndarray]]  # (density, edges)
    statistics: dict[Species, BenchmarkStatistics | None]


def run_histogram(config: ExperimentConfig) -> HistogramResult:
    """One circuit, one input selection, every species (single U_sub)."""
    if len(config.m_values) != 1:
        raise ConfigError("histogram needs a single mode count")
    m, n = config.m_values[0], config.n
    if config.reuse_circuit:
        sel = random_selection(n, m, RngSeed(config.seed, f"histogram-selection/m={m}").generator())
    else:
        sel = first_modes(n)
    with threadpool_limits(1):
        u = haar_unitary(m, RngSeed(config.seed, f"histogram/m={m}"))
        sub = extract_submatrix(u, sel)
        datasets = c_datasets(sub, config.species, source_seed=config.seed)
    histograms, stats = {}, {}
    for s, ds in datasets.items():
        histograms[s] = np.histogram(ds.values, bins=config.bins, density=True)
        try:
            stats[s] = values_statistics(ds.values, n, m)
        except UndefinedStatisticError:
            stats[s] = None
    return HistogramResult(config, m, sel, datasets, histograms, stats)


# ---------------------------------------------------------------- sweep

SWEEP_COLUMNS = (
    "m", "species", "trials",
    "nm_mean", "nm_std", "nm_se", "cv_mean", "cv_std", "cv_se", "s_mean", "s_std", "s_se",
    "nm_rmt", "cv_rmt", "s_rmt",
)


@dataclass
class SweepResult:
    config: ExperimentConfig
    rows: list[dict]
    raw: dict[int, np.ndarray] = field(repr=False, default_factory=dict)


def run_sweep(config: ExperimentConfig, workers: int = 1) -> SweepResult:
    """Per-m cloud mean, standard deviation and standard error of NM, CV, S."""
    rows, raw = [], {}
    for m in config.m_values:
        data = trial_statistics(config, m, workers)
        raw[m] = data
        for col, s in enumerate(config.species):
            pred = rmt_statistics(s, config.n, m)
            row = {"m": m, "species": s.value}
            good = data[:, col, :]
            good = good[np.all(np.isfinite(good), axis=1)]
            row["trials"] = int(good.shape[0])
            for k, name in enumerate(("nm", "cv", "s")):
                std = _fsum_std(good[:, k])
                row[f"{name}_mean"] = _fsum_mean(good[:, k])
                row[f"{name}_std"] = std
                row[f"{name}_se"] = std / math.sqrt(good.shape[0]) if good.shape[0] > 1 else math.nan
            row["nm_rmt"], row["cv_rmt"], row["s_rmt"] = pred
            rows.append(row)
    return SweepResult(config, rows, raw)


# ---------------------------------------------------------------- scatter

@dataclass
class ScatterRepetition:
    rep: int
    points: dict[Species, np.ndarray]  # (t, 2) of (CV, S)
    trial_ids: dict[Species, np.ndarray]
    clouds: dict[Species, CloudSummary | None]
    verdicts: dict[Species, dict[float, CertificationVerdict]]
    separations: dict[tuple[Species, Species], float]


@dataclass
class ScatterResult:
    config: ExperimentConfig
    m: int
    predictions: dict[Species, BenchmarkStatistics]
    repetitions: list[ScatterRepetition]

    @property
    def low_confidence(self) -> bool:
        return any(v.low_confidence or v.inconclusive
                   for r in self.repetitions for d in r.verdicts.values() for v in d.values())


def verdict_thresholds(k: float) -> tuple[float, ...]:
    return tuple(sorted({2.0, 4.0, float(k)}))


def run_scatter(config: ExperimentConfig, workers: int = 1) -> ScatterResult:
    """(CV, S) clouds per species, their summaries, and ellipse verdicts."""
    if len(config.m_values) != 1:
        raise ConfigError("scatter needs a single mode count")
    m, n = config.m_values[0], config.n
    predictions = {s: rmt_statistics(s, n, m) for s in ALL_SPECIES}
    reps = []
    for rep in range(config.repetitions):
        tasks = [(n, m, config.species, config.seed, t, config.reuse_circuit, rep)
                 for t in range(config.trials)]
        data = np.stack(run_tasks(_trial_statistics, tasks, workers))
        points, trial_ids, clouds, verdicts = {}, {}, {}, {}
        for col, s in enumerate(config.species):
            pts = data[:, col, 1:]
            keep = np.all(np.isfinite(pts), axis=1)
            pts = pts[keep]
            points[s] = pts
            trial_ids[s] = np.nonzero(keep)[0]
            clouds[s] = cloud_summary(pts) if pts.shape[0] >= 2 else None
            if clouds[s] is None:
                verdicts[s] = {k: CertificationVerdict(k, {}, [], inconclusive=True,
                                                       low_confidence=True,
                                                       diagnostics=["fewer than 2 points"])
                               for k in verdict_thresholds(config.k)}
            else:
                verdicts[s] = {k: certify(clouds[s], predictions, k)
                               for k in verdict_thresholds(config.k)}
        separations = {}
        for a_idx, a in enumerate(config.species):
            for b in config.species[a_idx + 1:]:
                if clouds[a] is not None and clouds[b] is not None:
                    separations[(a, b)] = pooled_separation(clouds[a], clouds[b])
        reps.append(ScatterRepetition(rep, points, trial_ids, clouds, verdicts, separations))
    return ScatterResult(config, m, predictions, reps)


# ---------------------------------------------------------------- oracle check

@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def run_oracle_check(n_max: int = 3, m_max: int = 6, draws: int = 50,
                     phase_samples: int = DEFAULT_PHASE_SAMPLES, seed: int = 0,
                     perturb: float = 0.0, tol: float = 1e-10,
                     n_sigma: float = 5.0) -> list[CheckResult]:
    """Closed-form correlators against distribution covariances, plus sum rules.

    ``perturb`` adds a bias to the first closed-form value compared; it exists
    only to prove that the harness can fail.
    """
    results: list[CheckResult] = []
    worst = {s: 0.0 for s in ALL_SPECIES}
    sum_rule = {s: 0.0 for s in ALL_SPECIES}
    failures: dict[Species, str] = {}
    pending = perturb
    with threadpool_limits(1):
        for n in range(1, n_max + 1):
            for m in range(n + 1, m_max + 1):
                stream = RngSeed(seed, f"oracle/n={n}/m={m}")
                for d in range(draws):
                    sub = haar_unitary(m, stream, trial=d)[:n]
                    for s in ALL_SPECIES:
                        dist = exact_distribution(sub, s, phase_samples,
                                                  stream.child(f"phases/{d}"))
                        cov = dist.covariance_matrix()
                        sum_rule[s] = max(sum_rule[s], abs(math.fsum(cov.ravel().tolist())))
                        ds = c_dataset(sub, s)
                        closed = ds.values.copy()
                        if pending:
                            closed[0] += pending
                            pending = 0.0
                        iu, ju = np.triu_indices(m, 1)
                        diff = np.abs(closed - cov[iu, ju])
                        if s is Species.SIMULATED:
                            se = simulated_stderr_matrix(dist)[iu, ju]
                            ratio = diff / (n_sigma * se + tol)
                            bad = np.max(ratio) > 1.0
                            worst[s] = max(worst[s], float(np.max(ratio)))
                        else:
                            bad = np.max(diff) > tol
                            worst[s] = max(worst[s], float(np.max(diff)))
                        if bad and s not in failures:
                            failures[s] = f"n={n} m={m} draw={d}"
    for s in ALL_SPECIES:
        if s is Species.SIMULATED:
            detail = f"max |diff| / ({n_sigma:g} SE + {tol:g}) = {worst[s]:.3g}"
        else:
            detail = f"max |diff| = {worst[s]:.3g} (tol {tol:g})"
        if s in failures:
            detail += f"; first failure at {failures[s]}"
        results.append(CheckResult(f"equivalence[{s.value}]", s not in failures, detail))
    for s in ALL_SPECIES:
        results.append(CheckResult(f"sum-rule[{s.value}]", sum_rule[s] <= tol,
                                   f"max residual {sum_rule[s]:.3g}"))
    results.extend(_hom_checks())
    return results


def _hom_checks() -> list[CheckResult]:
    hom = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
    expected = {Species.BOSON: -1.0, Species.FERMION: 0.0,
                Species.DISTINGUISHABLE: -0.5, Species.SIMULATED: -0.75}
    out = []
    for s, want in expected.items():
        got = correlator(hom, 1, 2, s)
        out.append(CheckResult(f"hom[{s.value}]", abs(got - want) <= 1e-12,
                               f"C12 = {got:.17g}, expected {want:g}"))
    p11 = exact_distribution(hom, Species.BOSON).entries[(1, 1)]
    out.append(CheckResult("hom-suppression", p11 <= 1e-14, f"p(1,1) = {p11:.3g}"))
    return out
