"""SL(2,Z) enumeration and the divergent partial Calderon sums."""

import numpy as np
import pytest

from calwave.sl2z import (
    S,
    T,
    Sl2zModel,
    bfs_elements,
    elements_by_entry_bound,
    partial_sums,
    word_length,
)


def test_word_length_canonical_values():
    eye = np.eye(2, dtype=np.int64)
    assert word_length(eye) == 0
    assert word_length(S) == 1
    assert word_length(-eye) == 2  # -I = S^2
    for k in (-5, -1, 1, 7):
        assert word_length(np.linalg.matrix_power(T, k) if k >= 0
                           else np.linalg.matrix_power(
                               np.array([[1, -1], [0, 1]], dtype=np.int64), -k
                           )) == abs(k)
    assert word_length(S @ np.linalg.matrix_power(T, 3)) == 4


def test_word_length_rejects_non_sl2z():
    with pytest.raises(ValueError):
        word_length(np.array([[2, 0], [0, 1]], dtype=np.int64))


def test_word_length_upper_bounds_bfs_geodesic():
    # the continued-fraction word realizes the matrix, so its length bounds
    # the geodesic length from below by construction: bfs <= word_length
    seen = bfs_elements(8)
    mats, lengths = elements_by_entry_bound(20)
    checked = 0
    for m, L in zip(mats, lengths):
        key = tuple(m.ravel())
        if key in seen:
            assert seen[key] <= L
            checked += 1
    assert checked > 100


def test_enumeration_is_in_group_and_symmetric():
    mats, lengths = elements_by_entry_bound(12)
    dets = mats[:, 0, 0] * mats[:, 1, 1] - mats[:, 0, 1] * mats[:, 1, 0]
    assert np.all(dets == 1)
    keys = {tuple(m.ravel()) for m in mats}
    assert all(tuple((-m).ravel()) in keys for m in mats)
    assert np.all(lengths >= 0)
    assert len(keys) == len(mats)


def test_model_filters_by_word_length():
    model = Sl2zModel(entry_bound=12)
    mats, lengths = model.elements(4)
    assert np.all(lengths <= 4)
    assert len(mats) > 1


def test_partial_sums_monotone_and_growing():
    rng = np.random.default_rng(0)
    r = np.sqrt(rng.uniform(1.0, 4.0, 20))
    th = rng.uniform(0, 2 * np.pi, 20)
    xis = np.stack([r * np.cos(th), r * np.sin(th)], axis=-1)
    Ns = np.array([5, 10, 20, 30])
    sums = partial_sums(
        lambda pts: np.exp(-np.sum(np.atleast_2d(pts) ** 2, axis=1)),
        xis, Ns, entry_bound=64,
    )
    assert sums.shape == (4, 20)
    assert np.all(np.diff(sums, axis=0) >= -1e-12)
    assert np.all(sums[-1] > sums[0])
