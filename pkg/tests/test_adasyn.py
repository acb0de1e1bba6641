import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lyingev.adasyn import AdasynParams, balance, balance_dataset, imbalance_ratio


def test_imbalance_ratio():
    assert imbalance_ratio(12864, 51456) == 0.25
    assert imbalance_ratio(7, 7) == 1.0
    with pytest.raises(ValueError):
        imbalance_ratio(0, 5)
    with pytest.raises(ValueError):
        imbalance_ratio(6, 5)


def clouds(rng, n_min, n_maj, dim=4, shift=1.0):
    return rng.normal(size=(n_min, dim)), rng.normal(shift, 1.0, size=(n_maj, dim))


def oracle_r(xmin, xmaj, k):
    """r_i by explicit loops over the pooled set, ties resolved by index."""
    pool = list(xmin) + list(xmaj)
    r = []
    for i, x in enumerate(xmin):
        d = [(float(np.sum((x - y) ** 2)), j) for j, y in enumerate(pool) if j != i]
        nearest = sorted(d)[:k]
        r.append(sum(1 for _, j in nearest if j >= len(xmin)) / k)
    return np.array(r)


def test_r_matches_brute_force(rng):
    xmin, xmaj = clouds(rng, 12, 40)
    rep = balance(xmin, xmaj, AdasynParams(k=5, seed=1))
    np.testing.assert_allclose(rep.r, oracle_r(xmin, xmaj, 5))
    assert rep.G == 28
    np.testing.assert_allclose(rep.r_hat, rep.r / rep.r.sum())
    np.testing.assert_array_equal(rep.g, np.floor(rep.r_hat * 28 + 0.5))


def test_full_scale_G():
    assert (51456 - 12864) * 1.0 == 38592


def test_lambda_zero_copies_parent(rng):
    xmin, xmaj = clouds(rng, 10, 30)
    rep = balance(xmin, xmaj, AdasynParams(fixed_lambda=0.0))
    np.testing.assert_array_equal(rep.synthetic, xmin[rep.parents[:, 0]])


def test_midpoint_example():
    xmin = np.array([np.zeros(48), np.ones(48)])
    xmaj = np.full((6, 48), 5.0)
    rep = balance(xmin, xmaj, AdasynParams(k=1, fixed_lambda=0.5))
    assert len(rep.synthetic) > 0
    np.testing.assert_allclose(rep.synthetic, 0.5)


def test_no_op_above_threshold(rng):
    xmin, xmaj = clouds(rng, 8, 10)
    rep = balance(xmin, xmaj)
    assert len(rep.synthetic) == 0 and not rep.balanced


def test_too_few_minority_rows(rng):
    xmin, xmaj = clouds(rng, 3, 30)
    with pytest.raises(ValueError):
        balance(xmin, xmaj, AdasynParams(k=5))


def test_degenerate_uniform(rng):
    xmin = rng.normal(size=(10, 3))
    xmaj = rng.normal(1000.0, 1.0, size=(40, 3))
    rep = balance(xmin, xmaj, AdasynParams(k=3))
    assert rep.degenerate
    np.testing.assert_allclose(rep.r_hat, 0.1)
    assert rep.g.sum() == 30


@given(st.integers(6, 20), st.integers(30, 80), st.integers(1, 5), st.floats(0.1, 1.0),
       st.integers(0, 1000))
@settings(max_examples=40, deadline=None)
def test_properties(n_min, n_maj, k, xi, seed):
    rng = np.random.default_rng(seed)
    xmin, xmaj = clouds(rng, n_min, n_maj, shift=0.5)
    rep = balance(xmin, xmaj, AdasynParams(k=k, xi=xi, seed=seed))
    assert rep.G == pytest.approx((n_maj - n_min) * xi)
    assert rep.r_hat.sum() == pytest.approx(1.0, abs=1e-9)
    assert rep.g_raw.sum() == pytest.approx(rep.G, abs=1e-6)
    assert abs(rep.g.sum() - rep.G) <= n_min / 2
    assert len(rep.synthetic) == rep.g.sum()
    a, b = xmin[rep.parents[:, 0]], xmin[rep.parents[:, 1]]
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    assert np.all(rep.synthetic >= lo - 1e-12) and np.all(rep.synthetic <= hi + 1e-12)
    order = np.argsort(rep.r_hat)
    assert np.all(np.diff(rep.g[order]) >= 0)
    again = balance(xmin, xmaj, AdasynParams(k=k, xi=xi, seed=seed))
    np.testing.assert_array_equal(again.synthetic, rep.synthetic)


def test_neighbour_is_a_minority_knn(rng):
    xmin, xmaj = clouds(rng, 15, 50)
    rep = balance(xmin, xmaj, AdasynParams(k=3))
    for i, j in rep.parents:
        d = np.sum((xmin - xmin[i]) ** 2, axis=1)
        d[i] = np.inf
        assert d[j] <= np.sort(d)[2]


def test_balance_dataset_ratio(small_full):
    balanced, rep = balance_dataset(small_full, AdasynParams(seed=2))
    honest = (~balanced.is_lying).sum()
    lying = balanced.is_lying.sum()
    assert min(honest, lying) / max(honest, lying) >= 0.95
    assert honest == (~small_full.is_lying).sum() + rep.g.sum()
    synth = balanced.subset(range(len(small_full), len(balanced)))
    assert all(str(e).startswith("adasyn") for e in synth.ev_id)
    assert np.all(synth.attack == 0) and np.all(synth.day == -1)
    assert balanced.provenance["adasyn_seed"] == 2
    assert not math.isnan(rep.ratio)
