import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from supergw import walk

steps_strategy = st.lists(st.integers(min_value=-1, max_value=3), min_size=0, max_size=120)


@pytest.mark.parametrize("degrees, expected", [
    ((0,), (0, -1)),
    ((2, 1, 0, 0), (0, 1, 1, 0, -1)),
    ((0, 0), (0, -1, -2)),
    ((), (0,)),
])
def test_lukasiewicz_examples(degrees, expected):
    assert walk.lukasiewicz_from_degrees(degrees).tolist() == list(expected)


@pytest.mark.parametrize("path, expected", [
    ((0, -1), (0,)),
    ((0, 1, 1, 0, -1), (0, 1, 2, 1)),
    ((0, -1, -2), (0, 0)),
])
def test_height_examples(path, expected):
    assert walk.height_process(path).tolist() == list(expected)
    assert walk.height_process_naive(path).tolist() == list(expected)


@pytest.mark.parametrize("path, expected", [
    ((0, 1, 2, 3), (0, 0, 0, 0)),
    ((0, 1, 0, 1, 2), (0, 1, 0, 0, 0)),
    ((0, -1, -2), (2, 1, 0)),
])
def test_future_infimum_examples(path, expected):
    assert walk.future_infimum_transform(path).tolist() == list(expected)


def test_rejects_bad_paths():
    with pytest.raises(ValueError):
        walk.path_from_steps([0, -2])
    with pytest.raises(ValueError):
        walk.lukasiewicz_from_degrees([-1])
    with pytest.raises(ValueError):
        walk.validate_path([1, 0])
    with pytest.raises(ValueError):
        walk.height_process([])


def test_overflow_guard():
    with pytest.raises(OverflowError):
        walk.path_from_steps([2**62, 2**62])


@given(steps_strategy)
def test_height_matches_formula(steps):
    s = walk.path_from_steps(steps)
    assert np.array_equal(walk.height_process(s), walk.height_process_naive(s))


@given(steps_strategy)
def test_future_infimum_keeps_heights(steps):
    s = walk.path_from_steps(steps)
    y = walk.future_infimum_transform(s)
    assert y.min() >= 0 and y[-1] == 0
    assert np.array_equal(walk.height_process(y), walk.height_process(s))


@given(st.lists(st.integers(min_value=0, max_value=5), max_size=100))
def test_degree_round_trip(degrees):
    s = walk.lukasiewicz_from_degrees(degrees)
    assert s[0] == 0 and (np.diff(s) >= -1).all()
    assert walk.degrees_of(s).tolist() == list(degrees)


@given(steps_strategy)
def test_height_invariants(steps):
    s = walk.path_from_steps(steps)
    h = walk.height_process(s)
    assert (h >= 0).all()
    starts = walk.tree_starts(s)
    assert (h[starts[starts < h.size]] == 0).all()
    # h(i+1) <= h(i) + 1
    assert (np.diff(h) <= 1).all()


def test_path_csv_has_header_and_rows():
    text = walk.path_to_csv(walk.lukasiewicz_from_degrees([2, 1, 0, 0]))
    lines = text.strip().splitlines()
    assert lines[0] == "index,S,H"
    assert lines[2] == "1,1,1"
    assert lines[-1] == "4,-1,"
