import numpy as np
import pytest

from core.rng import UINT64_MAX, as_generator, derive_seed, philox_key, substream


def test_substream_is_deterministic():
    a = substream(42, 7).standard_normal(5)
    b = substream(42, 7).standard_normal(5)
    np.testing.assert_array_equal(a, b)


def test_substreams_differ_by_index_and_seed():
    base = substream(42, 7).random(4)
    assert not np.array_equal(base, substream(42, 8).random(4))
    assert not np.array_equal(base, substream(43, 7).random(4))


def test_shared_key_gives_same_stream():
    key = philox_key(99)
    np.testing.assert_array_equal(substream(99, 3, key).random(3), substream(99, 3).random(3))


@pytest.mark.parametrize("seed", [-1, UINT64_MAX + 1])
def test_philox_key_rejects_out_of_range(seed):
    with pytest.raises(ValueError):
        philox_key(seed)


def test_philox_key_accepts_extremes():
    assert philox_key(0).shape == (2,)
    assert philox_key(UINT64_MAX).dtype == np.uint64


def test_derive_seed():
    assert derive_seed(1, 2, 3) == derive_seed(1, 2, 3)
    assert derive_seed(1, 0) != derive_seed(1, 1)
    assert derive_seed(1, 2, 3) != derive_seed(1, 3, 2)
    assert 0 <= derive_seed(UINT64_MAX, 5) <= UINT64_MAX


def test_as_generator():
    rng = np.random.default_rng(0)
    assert as_generator(rng) is rng
    np.testing.assert_array_equal(as_generator(5).random(3), substream(5, 0).random(3))
    assert isinstance(as_generator(None), np.random.Generator)
