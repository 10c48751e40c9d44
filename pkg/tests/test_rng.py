import numpy as np
import pytest

from ppok.rng import RngStream, as_generator, as_stream, replicate


def test_same_stream_same_variates():
    a = RngStream(7, 3).generator().random(5)
    b = RngStream(7, 3).generator().random(5)
    np.testing.assert_array_equal(a, b)


def test_distinct_streams_differ():
    a = RngStream(7, 3).generator().random(5)
    b = RngStream(7, 4).generator().random(5)
    c = RngStream(7, 3).child(0).generator().random(5)
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_child_streams_uncorrelated():
    s = RngStream(11)
    x = s.child(0).generator().standard_normal(50_000)
    y = s.child(1).generator().standard_normal(50_000)
    assert abs(np.corrcoef(x, y)[0, 1]) < 4 / np.sqrt(50_000)


@pytest.mark.parametrize("workers", [1, 3, 8])
def test_replicate_independent_of_workers(workers):
    fn = lambda n, g: g.standard_normal(n)
    ref = replicate(fn, 10_000, RngStream(5), workers=1, chunk=1000)
    out = replicate(fn, 10_000, RngStream(5), workers=workers, chunk=1000)
    np.testing.assert_array_equal(ref, out)
    assert out.shape == (10_000,)


def test_replicate_uneven_last_chunk():
    out = replicate(lambda n, g: np.full(n, n), 2500, 1, chunk=1000)
    assert out.size == 2500 and out[-1] == 500


def test_coercions():
    assert isinstance(as_generator(3), np.random.Generator)
    assert as_stream(None) == RngStream(0)
    g = np.random.default_rng(0)
    assert as_generator(g) is g
