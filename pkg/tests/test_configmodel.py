import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from supergw import walk
from supergw.configmodel import (DegreeModel, PrefixTooShort, cm4_pgf_iteration, component_summaries, explore,
                                 ifloor, measure_change_lower_bound, measure_change_lower_bound_exact,
                                 percolation_probability, phi_exact_mc, sample_degrees, size_biased_order)
from supergw.harness import surplus_distribution_bruteforce
from supergw.laws import InvalidWindow, PowerLaw
from supergw.rng import stream

BASE = PowerLaw(1.5, 2)
MODEL = DegreeModel(BASE, 0.0, 10**4)


def test_ifloor_forgives_rounding():
    assert ifloor(1e5 ** 0.6) == 1000
    assert ifloor(2.999) == 2
    assert ifloor(10 ** 2.4) == 251


def test_model_checks():
    assert MODEL.rho > 2 * MODEL.mu
    assert 0 < MODEL.p <= 1
    assert percolation_probability(MODEL) == pytest.approx(1 / (BASE.second_moment / BASE.mean - 1))
    with pytest.raises(InvalidWindow):
        DegreeModel(BASE, -1e4, 100)
    # the zeta law started at k = 1 fails rho > 2 mu
    with pytest.raises(ValueError):
        DegreeModel(PowerLaw(1.5, 1), 0.0, 100)


def test_limit_constants():
    m = MODEL.at(lambda_window=0.0)
    assert m.c_n == pytest.approx(m.limit_c)
    assert m.at(lambda_window=1.0).c_n > m.limit_c
    assert m.limit_c == pytest.approx(m.tail_c * m.p_critical ** (m.alpha + 1))


def test_degree_sequence_parity_and_size():
    d = sample_degrees(MODEL, 3)
    assert d.size == MODEL.n and d.sum() % 2 == 0 and d.min() >= 0


def test_window_second_moment_ratio():
    # E[B^2]/E[B] = 2 + lambda n^{-eps} for the percolated degree
    model = DegreeModel(BASE, 1.0, 10**4)
    law = model.law
    b = law.sample(stream(5, "ratio"), 10**6).astype(np.float64)
    ratio = (b * b).mean() / b.mean()
    target = 2 + 1.0 * model.n ** -model.epsilon
    # delta method for a ratio of means
    g = b * b - ratio * b
    se = g.std() / b.mean() / math.sqrt(b.size)
    assert abs(ratio - target) <= 3 * se


@pytest.mark.parametrize("degrees, first, prob", [((1, 1), 0, 0.5), ((2, 1), 0, 2 / 3)])
def test_size_biased_order_small(degrees, first, prob):
    R = 20_000
    hits = sum(size_biased_order(degrees, stream(1, "sbo", degrees, r))[0] == first for r in range(R))
    assert abs(hits / R - prob) <= 3 * math.sqrt(prob * (1 - prob) / R)


@given(st.lists(st.integers(min_value=0, max_value=6), min_size=1, max_size=30), st.integers(0, 2**31))
def test_size_biased_order_is_permutation(degrees, seed):
    perm = size_biased_order(degrees, seed)
    assert sorted(perm.tolist()) == list(range(len(degrees)))
    d = np.asarray(degrees)[perm]
    # zero-degree vertices come last
    if (d == 0).any():
        assert (d[np.argmax(d == 0):] == 0).all()


@given(st.lists(st.integers(min_value=0, max_value=5), min_size=1, max_size=60), st.integers(0, 2**31))
def test_exploration_preserves_degrees(degrees, seed):
    if sum(degrees) % 2:
        degrees = degrees + [1]
    rec = explore(degrees, seed)
    assert sorted(rec.ordered_degrees.tolist()) == sorted(degrees)
    assert sorted(rec.ordered_vertices.tolist()) == list(range(len(degrees)))
    assert rec.half_edges_paired == sum(degrees)
    spans = rec.component_spans
    assert int((spans[:, 1] - spans[:, 0]).sum()) == len(degrees)
    assert (rec.surplus_counts >= 0).all()
    # each component is a connected multigraph: half-edges = 2 (size - 1 + surplus)
    for (a, b), sur in zip(spans, rec.surplus_counts):
        hsum = int(rec.ordered_degrees[a:b].sum())
        assert hsum == 2 * (b - a - 1 + sur) or (b - a == 1 and hsum == 0)
    # component roots sit at depth 0 and depths grow by at most 1
    assert (rec.depths[spans[:, 0]] == 0).all()


def test_all_isolated():
    rec = explore([0, 0, 0], 1)
    assert component_summaries(rec) == [(1, 0, 0)] * 3
    assert rec.path.tolist() == [0]


def test_two_leaves():
    assert component_summaries(explore([1, 1], 2)) == [(2, 0, 1)]


def test_two_vertex_surplus_enumeration():
    dist = surplus_distribution_bruteforce([2, 2])
    assert dist == pytest.approx({1: 2 / 3, 2: 1 / 3})
    R = 30_000
    counts = {}
    comps = 0
    for r in range(R):
        rec = explore([2, 2], stream(3, "pair", r))
        s = int(rec.surplus_counts.sum())
        counts[s] = counts.get(s, 0) + 1
        comps += rec.component_spans.shape[0] == 2
    for s, p in dist.items():
        assert abs(counts.get(s, 0) / R - p) <= 3 * math.sqrt(p * (1 - p) / R)
    # two self-loops: one matching in three leaves the vertices apart
    assert abs(comps / R - 1 / 3) <= 3 * math.sqrt(2 / 9 / R)


def test_explore_rejects_odd_sum():
    with pytest.raises(ValueError):
        explore([1, 2], 0)


def test_lower_bound_trivial_and_flat():
    assert measure_change_lower_bound([0], MODEL, 0.0) == 1.0
    m = ifloor(0.5 * MODEL.time_scale)
    flat = np.zeros(m + 1)
    a = MODEL.alpha
    expect = math.exp(-MODEL.c_alpha_n() * 0.5 ** (a + 1) / ((a + 1) * MODEL.limit_mu ** (a + 1)))
    assert measure_change_lower_bound(flat, MODEL, 0.5) == pytest.approx(expect)
    with pytest.raises(PrefixTooShort):
        measure_change_lower_bound(flat[:-1], MODEL, 0.5)


def test_phi_empty_prefix():
    assert phi_exact_mc([], MODEL, 10, 0) == (1.0, 0.0)
    assert measure_change_lower_bound_exact([], MODEL) == 1.0


def test_phi_single_vertex_exact():
    # m = 1: phi = n mu_n E[1/(k + Xi_{n-1})], checked by direct summation over Xi
    model = DegreeModel(BASE, 0.0, 30)
    k = 3
    est, se = phi_exact_mc([k], model, 20_000, 5)
    law = model.law
    kmax = 400
    pmf1 = law.pmf(np.arange(kmax))
    conv = np.array([1.0])
    for _ in range(model.n - 1):
        conv = np.convolve(conv, pmf1)[:kmax]
    exact = model.n * model.mu_n * float(np.sum(conv / (k + np.arange(kmax))))
    assert abs(est - exact) <= 4 * se + 1e-3 * exact


def test_phi_importance_sampling_agrees():
    model = DegreeModel(BASE, 0.0, 2000)
    prefix = model.child.sample_size_biased_degree(stream(1, "prefix"), 40)
    a, sa = phi_exact_mc(prefix, model, 4000, 2, importance=True)
    b, sb = phi_exact_mc(prefix, model, 4000, 3, importance=False)
    assert abs(a - b) <= 4 * math.hypot(sa, sb)
    assert sa < sb


def test_exact_bound_below_estimate():
    model = DegreeModel(BASE, 0.0, 5000)
    prefix = model.child.sample_size_biased_degree(stream(4, "prefix"), 60)
    est, se = phi_exact_mc(prefix, model, 2000, 6)
    assert measure_change_lower_bound_exact(prefix, model) <= est + 3 * se


def test_cm4():
    rows = cm4_pgf_iteration(MODEL, 0.0, [1000])
    assert rows[0]["value"] == 0.0
    rows = cm4_pgf_iteration(MODEL, 1.0, [1000, 10000])
    assert all(0 < r["value"] <= 1 for r in rows)


def test_path_over_positive_vertices():
    rec = explore([0, 2, 1, 1, 0], 9)
    assert rec.positive_vertices == 3
    assert np.array_equal(rec.path, walk.path_from_steps(rec.ordered_degrees[:3] - 2))
    assert rec.path_csv().splitlines()[0] == "index,S,H"


def test_perm_product_formula_table():
    deg = (3, 2, 1)
    total = 0.0
    for perm in itertools.permutations(range(3)):
        rem, pr = 6.0, 1.0
        for v in perm:
            pr *= deg[v] / rem
            rem -= deg[v]
        total += pr
    assert total == pytest.approx(1.0)
