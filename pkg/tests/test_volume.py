import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from hybridseg.exceptions import NonFiniteInput
from hybridseg.volume import IntensityNormalizer, neighbors, normalize, percentile


def test_percentile_median_of_range():
    vol = np.arange(100, dtype=float).reshape(4, 5, 5)
    # sorted index floor(0.5 * 99) = 49
    assert percentile(vol, 50) == 49.0


def test_percentile_constant_and_minimum():
    assert percentile(np.full((2, 3, 4), 3.0), 37.5) == 3.0
    assert percentile(np.array([0.0, 10.0]).reshape(2, 1, 1), 0) == 0.0


def test_percentile_rejects_out_of_range():
    with pytest.raises(ValueError):
        percentile(np.zeros((2, 2, 2)), 101)


def test_normalize_uniform_ramp():
    raw = np.arange(1000, dtype=float)
    vol = raw[::-1].reshape(10, 10, 10).copy()
    ordered = sorted(raw)
    lo, hi = ordered[int(0.02 * 999)], ordered[int(0.98 * 999)]
    assert (lo, hi) == (19.0, 979.0)
    out = normalize(vol)
    flat_in, flat_out = vol.ravel(), out.ravel()
    assert flat_out[flat_in == lo][0] == 0.0
    assert flat_out[flat_in == hi][0] == 1.0
    assert flat_out[flat_in == (lo + hi) / 2][0] == pytest.approx(0.5)
    assert out.min() == 0.0 and out.max() == 1.0


def test_normalize_flat_volume_is_zero():
    assert np.all(normalize(np.full((3, 3, 3), 7.0)) == 0.0)


def test_normalize_binary_unchanged():
    vol = np.zeros((10, 10, 10))
    vol[5:] = 1.0
    assert np.array_equal(normalize(vol), vol)


def test_normalize_rejects_nan():
    vol = np.zeros((2, 2, 2))
    vol[1, 1, 1] = np.nan
    with pytest.raises(NonFiniteInput):
        normalize(vol)


volumes = arrays(np.float64, st.tuples(st.integers(1, 5), st.integers(1, 5), st.integers(1, 5)),
                 elements=st.floats(-1e3, 1e3, allow_nan=False))


@settings(max_examples=60, deadline=None)
@given(volumes)
def test_normalize_is_monotone_and_bounded(vol):
    out = normalize(vol)
    assert out.min() >= 0.0 and out.max() <= 1.0
    order = np.argsort(vol, axis=None, kind="stable")
    assert np.all(np.diff(out.ravel()[order]) >= 0)


@settings(max_examples=60, deadline=None)
@given(volumes)
def test_percentile_extremes(vol):
    assert percentile(vol, 0) == vol.min()
    assert percentile(vol, 100) == vol.max()


def test_normalize_idempotent_when_window_is_unit():
    vol = np.linspace(0, 1, 1000).reshape(10, 10, 10)
    vol.ravel()[:50] = 0.0
    vol.ravel()[-50:] = 1.0
    once = normalize(vol)
    assert np.allclose(normalize(once), once)


def test_neighbor_counts():
    assert len(neighbors((0, 0, 0), 6, (4, 4, 4))) == 3
    assert len(neighbors((1, 2, 1), 6, (4, 4, 4))) == 6
    assert len(neighbors((1, 2, 1), 26, (4, 4, 4))) == 26
    assert len(neighbors((0, 0, 0), 26, (4, 4, 4))) == 7


def test_neighbor_order():
    assert neighbors((1, 1, 1), 6, (3, 3, 3)) == [
        (0, 1, 1), (2, 1, 1), (1, 0, 1), (1, 2, 1), (1, 1, 0), (1, 1, 2)
    ]
    rest = neighbors((1, 1, 1), 26, (3, 3, 3))[6:]
    assert rest == sorted(rest)


@pytest.mark.parametrize("conn", [6, 26])
def test_neighbors_symmetric(conn):
    shape = (3, 4, 3)
    for a in np.ndindex(shape):
        for b in neighbors(a, conn, shape):
            assert a in neighbors(b, conn, shape)


def test_intensity_normalizer_matches_function():
    rng = np.random.default_rng(0)
    vol = rng.normal(size=(8, 9, 10))
    est = IntensityNormalizer().fit(vol)
    assert np.array_equal(est.transform(vol), normalize(vol))
    assert est.lower_ == percentile(vol, 2) and est.upper_ == percentile(vol, 98)
    assert est.get_params() == {"low": 2.0, "high": 98.0}
