import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pmlhist.rng import RandomStream, draw_u64, mix64, mix64_array, u64_to_open_unit


def test_same_address_same_draws():
    a = RandomStream(42, (3, 7))
    b = RandomStream(42, (3, 7))
    assert a.key == b.key
    np.testing.assert_array_equal(a.uniforms(100), b.uniforms(100))


def test_child_is_path_extension():
    s = RandomStream(5, ("cell",))
    assert s.child(1, 2).key == RandomStream(5, ("cell", 1, 2)).key


def test_distinct_paths_differ():
    keys = {RandomStream(1, (i, j)).key for i in range(30) for j in range(30)}
    assert len(keys) == 900
    assert RandomStream(1, (0,)).key != RandomStream(2, (0,)).key
    assert RandomStream(1, ("a",)).key != RandomStream(1, ("b",)).key


def test_scalar_and_vector_draws_agree():
    s = RandomStream(9, (4,))
    v = s.uniforms(10)
    for i in range(10):
        assert s.uniform(i) == v[i]
    np.testing.assert_array_equal(s.uniforms(4, start=3), v[3:7])


def test_mix64_vector_matches_scalar():
    xs = [0, 1, 2**63, 2**64 - 1, 123456789]
    vec = mix64_array(np.array(xs, dtype=np.uint64))
    assert [int(v) for v in vec] == [mix64(x) for x in xs]


def test_open_unit_interval():
    assert u64_to_open_unit(0) > 0
    assert u64_to_open_unit(2**64 - 1) < 1
    u = RandomStream(0).uniforms(100_000)
    assert u.min() > 0 and u.max() < 1


def test_uniformity_chi_square():
    u = RandomStream(2024, ("chi",)).uniforms(200_000)
    counts = np.bincount((u * 100).astype(int), minlength=100)
    expected = u.size / 100
    stat = ((counts - expected) ** 2 / expected).sum()
    # df = 99; mean 99, sd 14; six sd margin
    assert stat < 99 + 6 * np.sqrt(2 * 99)


def test_draw_index_is_counter():
    s = RandomStream(3)
    assert s.uniform(5) == u64_to_open_unit(draw_u64(s.key, 5))


@pytest.mark.parametrize("bad", [-1, 2**64])
def test_seed_range(bad):
    with pytest.raises(ValueError):
        RandomStream(bad)


def test_bad_labels():
    with pytest.raises(ValueError):
        RandomStream(0, (-1,))
    with pytest.raises(TypeError):
        RandomStream(0, (1.5,))


@given(st.integers(0, 2**64 - 1), st.lists(st.integers(0, 2**32), max_size=4))
def test_determinism_property(seed, path):
    assert RandomStream(seed, tuple(path)).uniform(0) == RandomStream(seed, tuple(path)).uniform(0)
