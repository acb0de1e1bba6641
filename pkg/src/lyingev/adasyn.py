"""ADASYN oversampling of the minority class.

Neighbour search is brute force over Euclidean distance, which is plenty for
a few thousand 48-dimensional rows.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import LabeledDataset


@dataclass(frozen=True)
class AdasynParams:
    k: int = 5
    xi: float = 1.0
    ratio_threshold: float = 0.75
    seed: int = 0
    # pins the interpolation weight; None draws it uniformly from [0, 1]
    fixed_lambda: float | None = None

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not 0.0 <= self.xi <= 1.0:
            raise ValueError("xi must lie in [0, 1]")
        if not 0.0 < self.ratio_threshold <= 1.0:
            raise ValueError("ratio_threshold must lie in (0, 1]")
        if self.fixed_lambda is not None and not 0.0 <= self.fixed_lambda <= 1.0:
            raise ValueError("fixed_lambda must lie in [0, 1]")


@dataclass
class AdasynReport:
    ratio: float
    G: float
    r: np.ndarray = field(default_factory=lambda: np.empty(0))
    r_hat: np.ndarray = field(default_factory=lambda: np.empty(0))
    g_raw: np.ndarray = field(default_factory=lambda: np.empty(0))
    g: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    synthetic: np.ndarray = field(default_factory=lambda: np.empty((0, 0)))
    # index of the minority row x_i and neighbour x_j behind each synthetic row
    parents: np.ndarray = field(default_factory=lambda: np.empty((0, 2), dtype=np.int64))
    degenerate: bool = False

    @property
    def balanced(self) -> bool:
        return len(self.synthetic) > 0


def imbalance_ratio(m_min: int, m_max: int) -> float:
    if m_min < 1 or m_max < 1:
        raise ValueError("class counts must be >= 1")
    if m_min > m_max:
        raise ValueError(f"minority count {m_min} exceeds majority count {m_max}")
    return m_min / m_max


def _sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = (a * a).sum(1)[:, None] + (b * b).sum(1)[None, :] - 2.0 * a @ b.T
    return np.maximum(d, 0.0)


def _k_nearest(d: np.ndarray, k: int) -> np.ndarray:
    # stable sort keeps ties in index order
    return np.argsort(d, axis=1, kind="stable")[:, :k]


def balance(minority: np.ndarray, majority: np.ndarray, params: AdasynParams = AdasynParams()) -> AdasynReport:
    xmin = np.asarray(minority, dtype=float)
    xmaj = np.asarray(majority, dtype=float)
    m_min, m_max = len(xmin), len(xmaj)
    ratio = imbalance_ratio(m_min, m_max)
    G = (m_max - m_min) * params.xi
    if ratio >= params.ratio_threshold:
        return AdasynReport(ratio, G, synthetic=np.empty((0, xmin.shape[1])))
    if m_min < params.k + 1:
        raise ValueError(f"need at least k+1={params.k + 1} minority rows, got {m_min}")

    k = params.k
    full = np.vstack([xmin, xmaj])
    d_full = _sq_dists(xmin, full)
    d_full[np.arange(m_min), np.arange(m_min)] = np.inf  # exclude self
    nn_full = _k_nearest(d_full, k)
    r = (nn_full >= m_min).sum(1) / k

    degenerate = r.sum() == 0
    r_hat = np.full(m_min, 1.0 / m_min) if degenerate else r / r.sum()
    g_raw = r_hat * G
    g = np.floor(g_raw + 0.5).astype(np.int64)

    d_min = d_full[:, :m_min]
    nn_min = _k_nearest(d_min, k)

    synth, parents = [], []
    for i in np.flatnonzero(g):
        rng = np.random.default_rng([params.seed, int(i)])
        picks = nn_min[i, rng.integers(0, k, size=g[i])]
        if params.fixed_lambda is None:
            lam = rng.random(g[i])
        else:
            lam = np.full(g[i], params.fixed_lambda)
        synth.append(xmin[i] + (xmin[picks] - xmin[i]) * lam[:, None])
        parents.append(np.column_stack([np.full(g[i], i), picks]))
    if synth:
        synthetic, par = np.vstack(synth), np.vstack(parents)
    else:
        synthetic, par = np.empty((0, xmin.shape[1])), np.empty((0, 2), dtype=np.int64)
    return AdasynReport(ratio, G, r, r_hat, g_raw, g, synthetic, par, bool(degenerate))


def balance_dataset(dataset: LabeledDataset, params: AdasynParams = AdasynParams()):
    """Append ADASYN rows for whichever class is smaller.

    Synthetic honest rows get ev_id ``adasyn<j>``, day -1 and attack 0;
    synthetic lying rows (only if lying is the minority) use attack 1.
    """
    lying = dataset.is_lying
    minority_is_lying = lying.sum() < (~lying).sum()
    mask = lying if minority_is_lying else ~lying
    report = balance(dataset.features[mask], dataset.features[~mask], params)
    n = len(report.synthetic)
    synth = LabeledDataset(
        [f"adasyn{j}" for j in range(n)],
        np.full(n, -1),
        report.synthetic,
        np.full(n, 1 if minority_is_lying else 0),
    )
    prov = dict(dataset.provenance, adasyn_seed=params.seed, adasyn_k=params.k,
                adasyn_xi=params.xi, adasyn_synthetic=n)
    return LabeledDataset.concat([dataset, synth], prov), report
