"""Count-derived input features describing a context to the weighting network.

For each order n = 1..N (lowest first) the feature block is:

    [observed in {0,1},  log c(context_n),  log u(context_n)]

plus, for discounted (Kneser-Ney) configurations, the log of the total count
mass surviving discounting (using continuation counts at the orders where the
column does).  Blocks for unobserved contexts are all zero.  Features are
centered by subtracting the training-set mean, which is stored with the
model so evaluation matches training exactly.
"""

from __future__ import annotations

import numpy as np

from ..counts import CountView
from ..smoothing import SmoothingSpec

_BLOCK_NAMES = ("observed", "log_count", "log_unique", "log_discounted_sum")


def feature_width(spec: SmoothingSpec) -> int:
    """Length of the count-feature vector for a full-length context."""
    per_block = 4 if spec.family == "kn" else 3
    return spec.order * per_block


def context_features(store, context, spec: SmoothingSpec) -> np.ndarray:
    """Feature vector for one context (orders 1..len(context)+1 concatenated)."""
    view = store.view() if not isinstance(store, CountView) else store
    context = tuple(int(c) for c in context)
    per_block = 4 if spec.family == "kn" else 3
    chain = view.rank_chain(context)
    out = np.zeros((len(context) + 1) * per_block)
    for n in range(1, len(context) + 2):
        rank = int(chain[n - 1])
        if rank < 0:
            continue
        s = view.stats(n, rank)
        if s.total <= 0:
            continue
        at = (n - 1) * per_block
        out[at] = 1.0
        out[at + 1] = np.log(s.total)
        out[at + 2] = np.log(s.unique)
        if spec.family == "kn":
            use = view.cont_stats(n, rank) if spec.uses_continuation(n) else s
            if use.total > 0:
                kept = use.total - spec.discounts[n].mass(use.n1, use.n2, use.n3p)
                if kept > 0:
                    out[at + 3] = np.log(kept)
    return out


def bulk_context_features(view: CountView, spec: SmoothingSpec, ranks: np.ndarray,
                          folds: np.ndarray | None = None) -> np.ndarray:
    """Vectorized ``context_features`` over positions; ranks is (T, order)."""
    T = ranks.shape[0]
    per_block = 4 if spec.family == "kn" else 3
    out = np.zeros((T, spec.order * per_block))
    for n in range(1, spec.order + 1):
        r = ranks[:, n - 1]
        s = view.bulk_stats(n, r, folds=folds)
        ok = (r >= 0) & (s["total"] > 0)
        at = (n - 1) * per_block
        with np.errstate(divide="ignore", invalid="ignore"):
            out[ok, at] = 1.0
            out[ok, at + 1] = np.log(s["total"][ok])
            out[ok, at + 2] = np.log(s["unique"][ok])
            if spec.family == "kn":
                if spec.uses_continuation(n):
                    use = view.bulk_stats(n, r, folds=folds, continuation=True)
                else:
                    use = s
                kept = use["total"] - spec.discounts[n].mass(
                    use["n1"], use["n2"], use["n3p"])
                good = ok & (use["total"] > 0) & (kept > 0)
                out[good, at + 3] = np.log(kept[good])
    return out


def normalize_features(features: np.ndarray, training_mean: np.ndarray) -> np.ndarray:
    """Center features with the mean captured on the training set."""
    return features - training_mean
