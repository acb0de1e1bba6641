import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import synthetic_traces
from lyingev.dataset import (
    CSV_HEADER,
    DatasetFormatError,
    LabeledDataset,
    LabeledRow,
    autocorrelation,
    build_honest,
    build_malicious,
    read_csv,
    split,
    write_csv,
)


def test_honest_counts(small_honest):
    assert len(small_honest) == 24
    assert small_honest.features.shape == (24, 48)
    assert not small_honest.is_lying.any()
    assert np.all((small_honest.features >= 0) & (small_honest.features <= 1))


def test_one_ev_one_day():
    ds = build_honest(synthetic_traces(1, 1), 1)
    assert len(ds) == 1 and ds.features.shape == (1, 48)
    assert ds.labels == ["honest"]


def test_empty_traces_rejected():
    with pytest.raises(ValueError):
        build_honest([], 3)


def test_malicious_counts_and_layout(small_honest):
    mal = build_malicious(small_honest, seed=1)
    assert len(mal) == 4 * len(small_honest)
    assert mal.is_lying.all()
    np.testing.assert_array_equal(mal.attack, np.tile([1, 2, 3, 4], len(small_honest)))
    np.testing.assert_array_equal(mal.ev_id, np.repeat(small_honest.ev_id, 4))


def test_malicious_rejects_bad_input(small_honest, small_full):
    with pytest.raises(ValueError):
        build_malicious(small_full)
    with pytest.raises(ValueError):
        build_malicious(small_honest.subset([]))


def test_malicious_rows_reproducible_individually(small_honest):
    a = build_malicious(small_honest, seed=3)
    b = build_malicious(small_honest.subset(range(5)), seed=3)
    # row i of the honest set is attacked identically as long as its index is kept
    np.testing.assert_array_equal(a.features[:20], b.features)


def test_split_sizes_and_stratification(small_full):
    tr, te = split(small_full, 0.7, seed=2)
    n = len(small_full)
    assert len(tr) == int(np.floor(0.7 * n + 0.5))
    assert len(tr) + len(te) == n
    ratio = small_full.is_lying.mean()
    for part in (tr, te):
        lying = part.is_lying.sum()
        assert abs(lying - ratio * len(part)) <= 1.0
    keys = {(e, d, a) for e, d, a in zip(small_full.ev_id, small_full.day, small_full.attack)}
    got = {(e, d, a) for part in (tr, te) for e, d, a in zip(part.ev_id, part.day, part.attack)}
    assert keys == got


def test_split_full_scale_arithmetic():
    n_train = int(np.floor(0.7 * 64320 + 0.5))
    assert (n_train, 64320 - n_train) == (45024, 19296)


def test_split_two_rows():
    ds = LabeledDataset(["a", "b"], [0, 0], np.full((2, 48), 0.5), [0, 1])
    tr, te = split(ds, 0.5, seed=0)
    assert len(tr) == len(te) == 1
    assert tr.is_lying[0] != te.is_lying[0]


def test_split_deterministic_and_validated(small_full):
    a, _ = split(small_full, 0.7, seed=9)
    b, _ = split(small_full, 0.7, seed=9)
    np.testing.assert_array_equal(a.features, b.features)
    for f in (0.0, 1.0, 1.5):
        with pytest.raises(ValueError):
            split(small_full, f)


@given(st.integers(2, 60), st.integers(1, 59), st.floats(0.05, 0.95), st.integers(0, 100))
@settings(max_examples=60, deadline=None)
def test_split_property(n, n_lying, frac, seed):
    n_lying = min(n_lying, n - 1)
    attack = np.r_[np.zeros(n - n_lying, int), np.ones(n_lying, int)]
    ds = LabeledDataset([f"e{i}" for i in range(n)], range(n), np.zeros((n, 48)), attack)
    tr, te = split(ds, frac, seed=seed)
    assert len(tr) == int(np.floor(frac * n + 0.5))
    assert abs(tr.is_lying.sum() - frac * n_lying) <= 1.0
    assert abs((~tr.is_lying).sum() - frac * (n - n_lying)) <= 1.0


def test_csv_round_trip(tmp_path, small_full):
    path = tmp_path / "d.csv"
    write_csv(small_full, path)
    back = read_csv(path)
    np.testing.assert_allclose(back.features, small_full.features, atol=1e-6)
    np.testing.assert_array_equal(back.attack, small_full.attack)
    assert list(back.ev_id) == list(small_full.ev_id)
    assert path.read_text().splitlines()[0] == ",".join(CSV_HEADER)


def _write(path, header, rows):
    path.write_text("\n".join([header] + rows) + "\n")


def test_csv_errors(tmp_path):
    good_header = ",".join(CSV_HEADER)
    vals = ",".join(["0.5"] * 48)
    p = tmp_path / "x.csv"
    _write(p, ",".join(CSV_HEADER[:-1]), [])
    with pytest.raises(DatasetFormatError, match="header"):
        read_csv(p)
    _write(p, good_header, [f"e,0,honest,0,{vals}", f"e,1,honest,3,{vals}"])
    with pytest.raises(DatasetFormatError, match="row 3"):
        read_csv(p)
    _write(p, good_header, [f"e,0,honest,0,{vals},0.1"])
    with pytest.raises(DatasetFormatError, match="row 2"):
        read_csv(p)
    _write(p, good_header, [f"e,0,lying,1,{vals[:-3]}1.5"])
    with pytest.raises(DatasetFormatError, match="outside"):
        read_csv(p)


def test_labeled_row_invariants():
    LabeledRow("e", 0, np.zeros(48), "lying", 2)
    with pytest.raises(ValueError):
        LabeledRow("e", 0, np.zeros(48), "honest", 3)
    with pytest.raises(ValueError):
        LabeledRow("e", 0, np.zeros(47), "honest", 0)


def test_rows_view(small_honest):
    rows = list(small_honest.rows())
    assert len(rows) == len(small_honest)
    assert rows[0].label == "honest" and rows[0].attack_id == 0


def test_autocorrelation_basics():
    x = np.random.default_rng(0).normal(size=100)
    assert autocorrelation(x, 5)[0] == pytest.approx(1.0)
    with pytest.raises(ValueError):
        autocorrelation(np.full(20, 0.3), 3)
    with pytest.raises(ValueError):
        autocorrelation(x[:3], 3)


def test_autocorrelation_sawtooth():
    saw = np.tile(np.arange(8, dtype=float), 60)
    assert autocorrelation(saw, 8)[8] >= 0.95
    # hand value at lag 1 for this sawtooth: 1 - n/(n-?) checked against a direct sum
    d = saw - saw.mean()
    assert autocorrelation(saw, 1)[1] == pytest.approx(float(d[:-1] @ d[1:]) / float(d @ d))


def test_honest_rows_positively_autocorrelated(small_honest):
    acfs = []
    for row in small_honest.features:
        if np.ptp(row) > 1e-9:
            acfs.append(autocorrelation(row, 4)[1:])
    assert np.mean(acfs) > 0
