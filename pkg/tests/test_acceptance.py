"""One test per acceptance criterion, each at its stated tolerance."""

import filecmp
import itertools
import math
import time

import numpy as np
import pytest

from bosoncert import Species, c_datasets, correlator, haar_unitary, rmt_moments
from bosoncert.correlators import ALL_SPECIES
from bosoncert.cli import main
from bosoncert.experiments import ExperimentConfig, run_oracle_check, run_scatter, run_sweep
from bosoncert.oracle import mc_correlator_samples, moments_with_stderr
from bosoncert.unitary import RngSeed


@pytest.fixture(scope="module")
def oracle_run():
    start = time.perf_counter()
    results = run_oracle_check(n_max=3, m_max=6, draws=50, phase_samples=100_000, seed=0)
    return results, time.perf_counter() - start


def test_01_formula_oracle_equivalence(oracle_run, record):
    results, elapsed = oracle_run
    eq = [r for r in results if r.name.startswith("equivalence")]
    ok = all(r.passed for r in eq) and len(eq) == 4 and elapsed < 60
    record("1 formula-oracle equivalence", ok,
           f"{elapsed:.1f}s; " + "; ".join(f"{r.name}: {r.detail}" for r in eq))
    assert ok


def test_02_hom_triple(hom, record):
    want = {"boson": -1.0, "fermion": 0.0, "dist": -0.5, "simboson": -0.75}
    got = {s: correlator(hom, 1, 2, s) for s in want}
    err = max(abs(got[s] - want[s]) for s in want)
    ok = err <= 1e-12
    record("2 HOM triple", ok, f"max error {err:.2e}")
    assert ok


def _imag_residue(sub):
    # explicit complex sum over k != l of w_k conj(w_l) for every pair
    m = sub.shape[1]
    i, j = np.triu_indices(m, 1)
    w = sub[:, i] * sub[:, j].conj()
    terms = w[:, None, :] * w.conj()[None, :, :]
    off = ~np.eye(sub.shape[0], dtype=bool)
    return float(np.max(np.abs(terms[off].sum(axis=0).imag), initial=0.0))


def test_03_algebraic_identities(record):
    rng = np.random.default_rng(RngSeed(0, "acceptance/identities").generator())
    ident = residue = collapse = 0.0
    sign = -math.inf
    for _ in range(1000):
        n = int(rng.integers(1, 9))
        m = int(rng.integers(n + 1, 65))
        sub = haar_unitary(m, int(rng.integers(2**63)))[:n]
        ds = c_datasets(sub, ALL_SPECIES)
        b, f, d = (ds[s].values for s in (Species.BOSON, Species.FERMION, Species.DISTINGUISHABLE))
        ident = max(ident, float(np.max(np.abs(b + f - 2 * d))))
        sign = max(sign, float(np.max(d)))
        residue = max(residue, _imag_residue(sub))
        one = c_datasets(sub[:1], ALL_SPECIES)
        ref = one[Species.DISTINGUISHABLE].values
        scale = np.maximum(np.abs(ref), np.finfo(float).tiny)
        for s in ALL_SPECIES:
            collapse = max(collapse, float(np.max(np.abs(one[s].values - ref) / scale)))
    ok = ident <= 1e-12 and sign <= 0 and residue <= 1e-12 and collapse <= 1e-14
    record("3 algebraic identities", ok,
           f"|B+F-2D| {ident:.1e}, max D {sign:.1e}, imag {residue:.1e}, n=1 rel {collapse:.1e}")
    assert ok


def test_04_sum_rule(oracle_run, record):
    results, _ = oracle_run
    rules = [r for r in results if r.name.startswith("sum-rule")]
    ok = len(rules) == 4 and all(r.passed for r in rules)
    record("4 sum rule", ok, "; ".join(f"{r.name}: {r.detail}" for r in rules))
    assert ok


def test_05_rmt_formula_validation(record):
    start = time.perf_counter()
    samples = mc_correlator_samples(ALL_SPECIES, 3, 12, 10_000, seed=0)
    worst = 0.0
    for s in ALL_SPECIES:
        mc = moments_with_stderr(samples[s])
        exact = rmt_moments(s, 3, 12)
        for est, se, want in zip(mc.estimate, mc.stderr, exact):
            worst = max(worst, abs(est - want) / se)
    collapse = 0.0
    for m in range(2, 1001):
        triples = [rmt_moments(s, 1, m) for s in ALL_SPECIES]
        for t in triples[1:]:
            for a, b in zip(t, triples[0]):
                collapse = max(collapse, abs(a - b) / abs(b))
    elapsed = time.perf_counter() - start
    ok = worst <= 5 and collapse <= 1e-14 and elapsed < 120
    record("5 RMT formula validation", ok,
           f"worst |z| {worst:.2f} over 12 moments, n=1 rel {collapse:.1e}, {elapsed:.1f}s")
    assert ok


@pytest.mark.slow
def test_06_statistics_sweep(record):
    res = run_sweep(ExperimentConfig(n=6, m_values=tuple(range(20, 301, 20)), trials=500, seed=0))
    worst = 0.0
    for r in res.rows:
        for q in ("nm", "cv", "s"):
            worst = max(worst, abs(r[f"{q}_mean"] - r[f"{q}_rmt"]) / r[f"{q}_std"])
    order = True
    for m in range(20, 301, 20):
        nm = {r["species"]: r for r in res.rows if r["m"] == m}
        rmt_ok = (nm["fermion"]["nm_rmt"] > nm["dist"]["nm_rmt"] > nm["boson"]["nm_rmt"]
                  and nm["boson"]["nm_rmt"] == nm["simboson"]["nm_rmt"])
        emp_ok = nm["fermion"]["nm_mean"] > nm["dist"]["nm_mean"] > max(
            nm["boson"]["nm_mean"], nm["simboson"]["nm_mean"])
        order = order and rmt_ok and emp_ok
    ok = worst <= 3 and order
    record("6 NM/CV/S sweep", ok, f"worst |mean-RMT|/SD {worst:.3f}, ordering {order}")
    assert ok


@pytest.mark.slow
def test_07_four_clouds(record):
    res = run_scatter(ExperimentConfig(n=6, m_values=(120,), trials=500, seed=0))
    rep = res.repetitions[0]
    sep = min(rep.separations.values())
    own = {s.value: rep.verdicts[s][4.0].distances[s] for s in ALL_SPECIES}
    ok = sep > 10 and len(rep.separations) == 6 and max(own.values()) <= 4
    record("7 four (CV,S) clouds", ok,
           f"min pooled separation {sep:.1f}; own-prediction distances "
           + ", ".join(f"{k} {v:.2f}" for k, v in own.items()))
    assert ok


@pytest.mark.slow
def test_08_small_cloud_certification(record):
    res = run_scatter(ExperimentConfig(n=6, m_values=(20,), trials=20, repetitions=4, seed=0))
    accepted = sum(Species.BOSON in r.verdicts[Species.BOSON][4.0].accepted for r in res.repetitions)
    rejected = sum(Species.SIMULATED not in r.verdicts[Species.BOSON][4.0].accepted
                   for r in res.repetitions)
    ok = accepted >= 3 and rejected == 4
    record("8 small-cloud certification", ok,
           f"boson accepted {accepted}/4, simulated boson rejected {rejected}/4")
    assert ok


def _same_tree(a, b):
    cmp = filecmp.dircmp(a, b)
    files = sorted(p.name for p in a.iterdir())
    return (not cmp.left_only and not cmp.right_only and files
            and all(filecmp.cmp(a / f, b / f, shallow=False) for f in files))


def test_09_determinism(tmp_path, record):
    runs = {
        "sweep": ["sweep", "-n", "4", "-m", "10:30:10", "--trials", "40"],
        "scatter": ["scatter", "-n", "4", "-m", "20", "--trials", "40", "--repetitions", "2"],
        "scatter-reuse": ["scatter", "-n", "3", "-m", "12", "--trials", "24", "--reuse-circuit"],
    }
    bad = []
    for name, args in runs.items():
        outs = []
        for w in (1, 4, 16):
            out = tmp_path / f"{name}-{w}"
            assert main(args + ["--seed", "11", "--workers", str(w), "--out", str(out)]) == 0
            outs.append(out)
        if not all(_same_tree(outs[0], o) for o in outs[1:]):
            bad.append(name)
    hist = []
    for rerun in range(2):
        out = tmp_path / f"histogram-{rerun}"
        assert main(["histogram", "-n", "6", "-m", "120", "--seed", "11", "--out", str(out)]) == 0
        hist.append(out)
    if not _same_tree(*hist):
        bad.append("histogram")
    ok = not bad
    record("9 determinism", ok, "byte-identical under 1/4/16 workers" if ok else f"differs: {bad}")
    assert ok
