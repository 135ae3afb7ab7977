import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bosoncert import (
    Species,
    boson_distribution,
    correlator,
    distinguishable_distribution,
    extract_submatrix,
    fermion_distribution,
    haar_unitary,
    mc_haar_moments,
    oracle_correlator,
    permanent,
    sampled_counts,
    simulated_distribution,
)
from bosoncert.errors import DimensionError, SizeError
from bosoncert.oracle import (
    configurations,
    exact_distribution,
    simulated_correlator_stderr,
)


def naive_permanent(a):
    n = a.shape[0]
    return sum(math.prod(a[i, p[i]] for i in range(n)) for p in itertools.permutations(range(n)))


def test_permanent_examples(hom):
    assert permanent(np.eye(3)) == 1
    assert permanent(np.ones((3, 3))) == 6
    assert abs(permanent(hom)) <= 1e-15


def test_permanent_errors():
    with pytest.raises(DimensionError):
        permanent(np.ones((2, 3)))
    with pytest.raises(SizeError):
        permanent(np.ones((17, 17)))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32), n=st.integers(1, 6))
def test_permanent_matches_naive(seed, n):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    ref = naive_permanent(a)
    assert abs(permanent(a) - ref) <= 1e-12 * max(1.0, abs(ref))


def test_permanent_of_ones_is_factorial():
    for n in range(1, 9):
        assert permanent(np.ones((n, n))).real == pytest.approx(math.factorial(n), rel=1e-12)


def test_colex_order():
    assert configurations(2, 2) == [(2, 0), (1, 1), (0, 2)]
    assert configurations(2, 3, binary=True) == [(1, 1, 0), (1, 0, 1), (0, 1, 1)]
    assert len(configurations(3, 6)) == math.comb(8, 3)


def test_hom_distributions(hom):
    b = boson_distribution(hom).entries
    assert b[(2, 0)] == pytest.approx(0.5, abs=1e-15)
    assert b[(0, 2)] == pytest.approx(0.5, abs=1e-15)
    assert b[(1, 1)] <= 1e-14
    f = fermion_distribution(hom).entries
    assert f == {(1, 1): pytest.approx(1.0, abs=1e-15)}
    d = distinguishable_distribution(hom).entries
    assert d[(2, 0)] == pytest.approx(0.25) and d[(1, 1)] == pytest.approx(0.5)
    assert d[(0, 2)] == pytest.approx(0.25)


def test_hom_oracle_correlators(hom):
    assert oracle_correlator(boson_distribution(hom), 1, 2) == pytest.approx(-1, abs=1e-12)
    assert oracle_correlator(fermion_distribution(hom), 1, 2) == pytest.approx(0, abs=1e-12)
    assert oracle_correlator(distinguishable_distribution(hom), 1, 2) == pytest.approx(-0.5, abs=1e-12)


def test_hom_simulated_converges(hom):
    dist = simulated_distribution(hom, 1_000_000, seed=4)
    c = oracle_correlator(dist, 1, 2)
    se = simulated_correlator_stderr(dist, 1, 2)
    assert 0 < se < 1e-3
    assert abs(c + 0.75) <= 3 * se


@pytest.mark.parametrize("species", [Species.BOSON, Species.FERMION, Species.DISTINGUISHABLE])
def test_identity_passthrough(species):
    sub = extract_submatrix(np.eye(5, dtype=complex), [1, 2])
    dist = exact_distribution(sub, species, phase_samples=50)
    p = dist.entries[(1, 1, 0, 0, 0)]
    assert p == pytest.approx(1.0, abs=1e-12)
    cov = dist.covariance_matrix()
    assert np.max(np.abs(cov)) <= 1e-12


def test_identity_simulated_spreads_over_inputs():
    # every particle is in the equal superposition of the two inputs
    sub = extract_submatrix(np.eye(4, dtype=complex), [1, 2])
    dist = simulated_distribution(sub, 10)
    assert dist.entries[(1, 1, 0, 0)] == pytest.approx(0.5, abs=1e-12)
    assert dist.entries[(2, 0, 0, 0)] == pytest.approx(0.25, abs=1e-12)


def test_single_particle_simulated_equals_distinguishable():
    sub = haar_unitary(6, 9)[:1]
    s = simulated_distribution(sub, 200, seed=1).entries
    d = distinguishable_distribution(sub).entries
    assert s.keys() == d.keys()
    for y in d:
        assert s[y] == pytest.approx(d[y], abs=1e-14)


@pytest.mark.parametrize("species", list(Species))
def test_normalisation_and_sum_rule(species):
    sub = haar_unitary(6, 31)[:3]
    dist = exact_distribution(sub, species, phase_samples=2000, seed=2)
    assert math.fsum(dist.entries.values()) == pytest.approx(1, abs=1e-10)
    assert min(dist.entries.values()) >= 0
    cov = dist.covariance_matrix()
    total = sum(oracle_correlator(dist, i, i) for i in range(1, 7))
    total += 2 * sum(oracle_correlator(dist, i, j) for i, j in itertools.combinations(range(1, 7), 2))
    assert abs(total) <= 1e-10
    assert abs(cov.sum()) <= 1e-10


def test_fermion_sum_rule_n2_m4():
    dist = fermion_distribution(haar_unitary(4, 77)[:2])
    assert abs(dist.covariance_matrix().sum()) <= 1e-10
    assert all(max(y) <= 1 for y in dist.entries)


def test_fermions_never_share_a_mode():
    dist = fermion_distribution(haar_unitary(7, 8)[:3])
    boson_support = boson_distribution(haar_unitary(7, 8)[:3]).entries
    for y in boson_support:
        if max(y) >= 2:
            assert dist.entries.get(y, 0.0) <= 1e-14


@pytest.mark.parametrize("species", [Species.BOSON, Species.FERMION, Species.DISTINGUISHABLE])
def test_closed_form_matches_distribution(species):
    for n in (1, 2, 3):
        for m in range(n + 1, 7):
            sub = haar_unitary(m, 1000 * n + m)[:n]
            dist = exact_distribution(sub, species)
            for i, j in itertools.combinations(range(1, m + 1), 2):
                assert correlator(sub, i, j, species) == pytest.approx(
                    oracle_correlator(dist, i, j), abs=1e-10)


def test_closed_form_simulated_within_monte_carlo_error():
    sub = haar_unitary(5, 55)[:3]
    dist = simulated_distribution(sub, 100_000, seed=8)
    for i, j in itertools.combinations(range(1, 6), 2):
        se = simulated_correlator_stderr(dist, i, j)
        assert abs(correlator(sub, i, j, "simboson") - oracle_correlator(dist, i, j)) <= 5 * se


def test_caps():
    with pytest.raises(SizeError):
        boson_distribution(haar_unitary(13, 1)[:2])
    with pytest.raises(SizeError):
        boson_distribution(haar_unitary(8, 1)[:6])
    with pytest.raises(SizeError):
        fermion_distribution(haar_unitary(17, 1)[:2])
    fermion_distribution(haar_unitary(16, 1)[:2])


def test_distribution_json_sorted_colex(hom):
    doc = boson_distribution(hom).to_json()
    assert doc["species"] == "boson" and doc["n"] == 2 and doc["m"] == 2
    assert [e["y"] for e in doc["entries"]] == [[2, 0], [1, 1], [0, 2]]


def test_sampled_counts_boson_hom(hom):
    est = sampled_counts(boson_distribution(hom), 1_000_000, seed=6)
    se = est.correlator_stderr(1, 2)
    assert se > 0
    assert abs(est.correlator(1, 2) + 1) <= 5 * se
    assert not est.low_confidence


def test_sampled_counts_single_shot_flagged(hom):
    est = sampled_counts(boson_distribution(hom), 1, seed=6)
    assert est.low_confidence
    assert est.correlator(1, 2) == 0.0
    assert math.isnan(est.correlator_stderr(1, 2))


def test_sampled_counts_deterministic_distribution():
    dist = boson_distribution(extract_submatrix(np.eye(4, dtype=complex), [2, 3]))
    est = sampled_counts(dist, 1000, seed=1)
    assert np.all(est.covariance == 0)


def test_mc_moments_single_particle_two_modes():
    res = mc_haar_moments("dist", 1, 2, 100_000, seed=3)
    assert abs(res.estimate.m1 + 1 / 6) <= 5 * res.stderr.m1


def test_mc_moments_boson_fermion_identical_at_one_particle():
    b = mc_haar_moments("boson", 1, 5, 200, seed=9)
    f = mc_haar_moments("fermion", 1, 5, 200, seed=9)
    assert b.estimate == f.estimate


def test_mc_needs_enough_trials():
    with pytest.raises(ValueError):
        mc_haar_moments("boson", 1, 3, 10)
