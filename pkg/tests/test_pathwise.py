import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from supergw import walk
from supergw.harness import ks_two_sample
from supergw.laws import TiltRoot, binary, dirac, find_xi, geometric
from supergw.pathwise import (HorizonOverflow, PathwiseSampler, SpinePair, build_pathwise,
                              sample_direct, sample_geometric_tree_count, sample_spine_pair, spine_pair_pmf)
from supergw.rng import stream

BINARY = binary(0.25)
SAMPLER = PathwiseSampler(BINARY)


def test_spine_pair_support():
    with pytest.raises(ValueError):
        SpinePair(2, 2)
    SpinePair(0, 1)


def test_spine_pair_pmf_binary():
    root = find_xi(BINARY)
    assert spine_pair_pmf(BINARY, root, 0, 2) == pytest.approx(0.75)
    assert spine_pair_pmf(BINARY, root, 1, 2) == pytest.approx(0.25)
    assert spine_pair_pmf(BINARY, root, 2, 2) == 0.0


def test_spine_pair_sampling_frequencies():
    b, n = sample_spine_pair(BINARY, find_xi(BINARY), stream(0, "sp"), size=100_000)
    assert (n == 2).all()
    p1 = np.mean(b == 1)
    assert abs(p1 - 0.25) <= 3 * math.sqrt(0.25 * 0.75 / b.size)
    assert isinstance(sample_spine_pair(BINARY, find_xi(BINARY), 3), SpinePair)


def test_geometric_count_large_root():
    g = sample_geometric_tree_count(TiltRoot(40.0), 1, size=1000)
    assert (g == 0).all()


def test_geometric_count_mean():
    root = find_xi(BINARY)
    g = sample_geometric_tree_count(root, 2, size=100_000)
    q = root.q
    mean, sd = q / (1 - q), math.sqrt(q) / (1 - q)
    assert abs(g.mean() - mean) <= 3 * sd / math.sqrt(g.size)


def test_bundle_shapes_and_invariants():
    bd = build_pathwise(geometric(2), 300, seed=5)
    assert bd.s.size == 302 and bd.h.size == 301 and bd.s_minus_ffinf.size == 302
    assert np.array_equal(bd.h, walk.height_process(bd.s))
    assert bd.s_minus_ffinf.min() >= 0
    assert (np.diff(bd.f) >= 0).all()
    k = np.arange(bd.f.size)
    assert (np.diff(k - bd.f) >= 0).all()
    assert (bd.q[1:] - bd.d[1:] >= np.arange(1, bd.q.size)).all()
    assert all(0 <= p.b < p.n_children for p in bd.pairs)


@given(st.integers(min_value=0, max_value=2**32), st.integers(min_value=1, max_value=150))
def test_bundle_heights_match(seed, horizon):
    bd = SAMPLER.build(horizon, seed)
    assert np.array_equal(bd.h, walk.height_process(bd.s))
    assert bd.s_minus_ffinf.min() >= 0
    # a finite window sees a higher future infimum than the whole path
    fi = walk.future_infimum_transform(bd.s)
    assert np.array_equal(walk.height_process(bd.s_minus_ffinf), bd.h)
    assert (fi <= bd.s_minus_ffinf).all()


def test_build_is_deterministic():
    a = SAMPLER.build(100, 11, 3)
    b = SAMPLER.build(100, 11, 3)
    c = SAMPLER.build(100, 11, 4)
    assert np.array_equal(a.s, b.s) and np.array_equal(a.h, b.h)
    assert not np.array_equal(a.s, c.s)


def test_horizon_guards():
    with pytest.raises(ValueError):
        SAMPLER.build(0, 1)
    with pytest.raises(HorizonOverflow):
        PathwiseSampler(BINARY, max_horizon=10).build(11, 1)


def test_direct_unary_spine():
    s, h = sample_direct(dirac(2), 50, 0)
    assert s.tolist() == list(range(52))
    assert h.tolist() == list(range(51))


def test_direct_law_of_large_numbers():
    law = geometric(2)
    k = 200
    ends = np.array([sample_direct(law, k, 9, r)[0][k] for r in range(2000)]) / k
    var = law.second_moment - law.mean ** 2
    assert abs(ends.mean() - (law.mean - 1)) <= 3 * math.sqrt(var / k / ends.size)


def test_pathwise_matches_direct_small():
    k = 60
    built = np.array([SAMPLER.build(k, 21, r).h[k] for r in range(3000)])
    direct = np.array([sample_direct(BINARY, k, 21, r)[1][k] for r in range(3000)])
    assert ks_two_sample(built, direct)[1] > 1e-3


def test_csv_header():
    text = SAMPLER.build(5, 0).to_csv()
    assert text.splitlines()[0] == "k,S,S_minus_ffinf,H,F"
    assert len(text.splitlines()) == 1 + 7
