"""Per-order word distributions and heuristic interpolation coefficients.

Each n-gram order contributes one probability distribution over the
vocabulary ("column") for a given context.  Maximum-likelihood columns divide
raw counts by the context total.  Discounted columns subtract a count-level
discount from each successor and renormalize; the subtracted mass fraction
(the fallback mass) is what a heuristic interpolation assigns to lower
orders.  Kneser-Ney columns apply the same discounting to continuation
counts (number of distinct left extensions) at every order below the top.

Columns for unobserved contexts are "masked": all-zero, flagged invalid, and
paired with a zero interpolation weight, so they never contribute mass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .counts import CountTable, CountView

# below this surviving mass, a discounted column degenerates to the d->max
# limit (uniform over observed successors) instead of dividing by ~0
_MIN_KEEP = 1e-12


def _as_view(store) -> CountView:
    return store.view() if isinstance(store, CountTable) else store


@dataclass(frozen=True)
class Discounts:
    """Count-level absolute discounts (counts of 1, 2, and 3 or more)."""

    d1: float
    d2: float
    d3p: float

    def applied(self, counts: np.ndarray) -> np.ndarray:
        """Discount subtracted from each count (0 for zero counts)."""
        c = np.asarray(counts)
        return np.select([c >= 3, c == 2, c == 1], [self.d3p, self.d2, self.d1], 0.0)

    def mass(self, n1, n2, n3p) -> float | np.ndarray:
        """Total subtracted mass for a context with the given count-of-counts."""
        return self.d1 * n1 + self.d2 * n2 + self.d3p * n3p

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.d1, self.d2, self.d3p)


def estimate_discounts(store, order: int, continuation: bool = False,
                       modified: bool = True) -> Discounts:
    """Closed-form discount estimates from global count-of-counts.

    Y = n1/(n1+2*n2); the modified variant derives one discount per count
    level (d1 = 1-2Y*n2/n1, d2 = 2-3Y*n3/n2, d3+ = 3-4Y*n4/n3), each clamped
    to [0, level] and falling back to Y when its denominator is empty.  With
    no singletons at all, discounting is disabled.
    """
    table = store.table if isinstance(store, CountView) else store
    n1, n2, n3, n4 = table.count_of_counts(order, continuation=continuation)
    return discounts_from_count_of_counts(n1, n2, n3, n4, modified=modified)


def discounts_from_count_of_counts(n1: int, n2: int, n3: int, n4: int,
                                   modified: bool = True) -> Discounts:
    if n1 == 0:
        return Discounts(0.0, 0.0, 0.0)
    y = n1 / (n1 + 2.0 * n2)
    if not modified:
        return Discounts(y, y, y)

    def level(i: int, num: int, den: int) -> float:
        d = i - (i + 1.0) * y * num / den if den > 0 else y
        return float(min(max(d, 0.0), float(i)))

    return Discounts(level(1, n2, n1), level(2, n3, n2), level(3, n4, n3))


@dataclass
class SparseDistribution:
    """A distribution over word ids with sparse support.

    A masked column (unobserved context) has empty support and total mass 0;
    every other column sums to 1.
    """

    words: np.ndarray
    probs: np.ndarray

    @property
    def support_total(self) -> float:
        return float(self.probs.sum())

    @property
    def masked(self) -> bool:
        return len(self.words) == 0

    def prob_of(self, word: int) -> float:
        i = int(np.searchsorted(self.words, word))
        if i < len(self.words) and self.words[i] == word:
            return float(self.probs[i])
        return 0.0

    def dense(self, size: int) -> np.ndarray:
        out = np.zeros(size)
        out[self.words] = self.probs
        return out


def _masked() -> SparseDistribution:
    return SparseDistribution(np.zeros(0, dtype=np.int64), np.zeros(0))


def ml_distribution(store, context) -> SparseDistribution:
    """Relative-frequency estimate c(context,w)/c(context); masked if unseen."""
    view = _as_view(store)
    rank = int(view.rank_chain(tuple(context))[len(context)])
    if rank < 0:
        return _masked()
    order = len(context) + 1
    total = view.stats(order, rank).total
    if total <= 0:
        return _masked()
    words, counts = view.successors(order, rank)
    return SparseDistribution(words, counts / float(total))


def discounted_distribution(store, context, d, continuation: bool = False):
    """Normalized absolute-discounted distribution and its fallback mass.

    Subtracts a per-count-level discount from every successor count, yielding
    mass (c - d(c))/total per word; the removed fraction beta is returned and
    the kept mass is renormalized to sum to 1.  When discounting removes all
    the mass, the column is the limiting uniform distribution over observed
    successors and beta stays 1.
    """
    view = _as_view(store)
    if not isinstance(d, Discounts):
        d = Discounts(float(d), float(d), float(d))
    rank = int(view.rank_chain(tuple(context))[len(context)])
    if rank < 0:
        return _masked(), 1.0
    order = len(context) + 1
    stats = view.cont_stats(order, rank) if continuation else view.stats(order, rank)
    if stats.total <= 0:
        return _masked(), 1.0
    words, counts = view.successors(order, rank, continuation=continuation)
    kept = counts - d.applied(counts)
    if np.any(kept < 0):
        raise ValueError(f"discount exceeds an observed count at order {order}")
    keep_total = kept.sum() / float(stats.total)
    if keep_total <= _MIN_KEEP:
        return SparseDistribution(words, np.full(len(words), 1.0 / len(words))), 1.0
    beta = min(max(1.0 - keep_total, 0.0), 1.0)
    return SparseDistribution(words, kept / kept.sum()), float(beta)


@dataclass(frozen=True)
class SmoothingSpec:
    """Which column family to build per order, with frozen discounts.

    ``family`` is "ml" (relative frequencies, Witten-Bell fallback) or "kn"
    (discounted counts, continuation counts below the top order).  Discounts
    are stored per order so that estimates never drift between training and
    evaluation.
    """

    family: str
    order: int
    discounts: tuple | None = None  # index by order; [0] unused
    continuation: bool = True

    def __post_init__(self):
        if self.family not in ("ml", "kn"):
            raise ValueError(f"unknown smoothing family {self.family!r}")
        if self.family == "kn" and (self.discounts is None
                                    or len(self.discounts) != self.order + 1):
            raise ValueError("kn smoothing needs one discount entry per order")

    @classmethod
    def ml(cls, order: int) -> "SmoothingSpec":
        return cls("ml", order, None, False)

    @classmethod
    def kn(cls, store, order: int, modified: bool = True,
           fixed_discount: float | None = None,
           continuation: bool = True) -> "SmoothingSpec":
        """Estimate (or fix) per-order discounts against a count table."""
        ds: list = [None]
        for n in range(1, order + 1):
            if fixed_discount is not None:
                ds.append(Discounts(fixed_discount, fixed_discount, fixed_discount))
            else:
                cont = continuation and n < order
                ds.append(estimate_discounts(store, n, continuation=cont,
                                             modified=modified))
        return cls("kn", order, tuple(ds), continuation)

    def uses_continuation(self, order: int) -> bool:
        return self.family == "kn" and self.continuation and order < self.order

    def column(self, store, context) -> SparseDistribution:
        if self.family == "ml":
            return ml_distribution(store, context)
        return kn_distribution(store, context, self)

    def fallback(self, store, context) -> float:
        """Interpolation coefficient toward lower orders for this context."""
        if self.family == "ml":
            return witten_bell_fallback(store, context)
        order = len(context) + 1
        return discounted_distribution(store, context, self.discounts[order],
                                       continuation=self.uses_continuation(order))[1]

    def to_dict(self) -> dict:
        out = {"family": self.family, "order": self.order,
               "continuation": self.continuation}
        if self.discounts is not None:
            out["discounts"] = [None] + [list(d.as_tuple()) for d in self.discounts[1:]]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "SmoothingSpec":
        ds = data.get("discounts")
        if ds is not None:
            ds = tuple([None] + [Discounts(*d) for d in ds[1:]])
        return cls(data["family"], data["order"], ds, data["continuation"])


def kn_distribution(store, context, spec: SmoothingSpec) -> SparseDistribution:
    """Per-order Kneser-Ney column: discounted continuation counts below the
    top order, discounted raw counts at the top."""
    order = len(context) + 1
    if order > spec.order:
        raise ValueError("context longer than the smoothing order supports")
    dist, _ = discounted_distribution(store, context, spec.discounts[order],
                                      continuation=spec.uses_continuation(order))
    return dist


def witten_bell_fallback(store, context) -> float:
    """alpha = u/(c+u): the chance the next word is one not yet seen here."""
    view = _as_view(store)
    rank = int(view.rank_chain(tuple(context))[len(context)])
    if rank < 0:
        return 1.0
    s = view.stats(len(context) + 1, rank)
    if s.total <= 0:
        return 1.0
    return s.unique / float(s.total + s.unique)


def heuristic_lambda(alphas) -> np.ndarray:
    """Turn per-order fallback coefficients into mixture weights.

    ``alphas`` lists the fallback mass at orders N..2 (highest first).  The
    weight of order n is the mass kept at n times the mass passed down by
    every higher order; the unigram keeps whatever reaches it.  Output is
    ordered lowest order first and sums to 1.
    """
    a = np.asarray(alphas, dtype=np.float64)
    if np.any(a < 0) or np.any(a > 1):
        raise ValueError("fallback coefficients must lie in [0, 1]")
    n_orders = len(a) + 1
    lam = np.empty(n_orders)
    passed = 1.0
    for i, alpha in enumerate(a):  # orders N, N-1, ..., 2
        lam[n_orders - 1 - i] = (1.0 - alpha) * passed
        passed *= alpha
    lam[0] = passed  # unigram never falls back
    return lam


# -- vectorized evaluation over corpus positions ---------------------------


def bulk_column_rows(view: CountView, spec: SmoothingSpec, ranks: np.ndarray,
                     words: np.ndarray, folds: np.ndarray | None = None):
    """Per-position probabilities and fallbacks for every order at once.

    For T positions, returns (probs, alphas, valid), each of shape (T, order):
    probs[t, n-1] is column n's probability of the target word at position t,
    alphas[t, n-1] the fallback coefficient of context t at order n, and
    valid[t, n-1] False exactly when that context is unobserved (masked
    column, alpha forced to 1).  Agrees with the scalar builders entrywise.
    """
    T = len(words)
    N = spec.order
    probs = np.zeros((T, N))
    alphas = np.ones((T, N))
    valid = np.zeros((T, N), dtype=bool)
    for n in range(1, N + 1):
        r = ranks[:, n - 1]
        cont = spec.uses_continuation(n)
        stats = view.bulk_stats(n, r, folds=folds, continuation=cont)
        total = stats["total"].astype(np.float64)
        ok = (r >= 0) & (stats["total"] > 0)
        valid[:, n - 1] = ok
        counts = view.bulk_counts(n, r, words, folds=folds, continuation=cont)
        with np.errstate(divide="ignore", invalid="ignore"):
            if spec.family == "ml":
                p = np.where(ok, counts / total, 0.0)
                a = np.where(ok, stats["unique"] / (total + stats["unique"]), 1.0)
            else:
                d = spec.discounts[n]
                kept = counts - d.applied(counts)
                removed = d.mass(stats["n1"], stats["n2"], stats["n3p"])
                keep_total = np.where(ok, 1.0 - removed / np.where(ok, total, 1.0), 0.0)
                degenerate = ok & (keep_total <= _MIN_KEEP)
                p = np.where(ok, kept / (np.where(ok, total, 1.0) * np.maximum(keep_total, _MIN_KEEP)), 0.0)
                if np.any(degenerate):
                    p[degenerate] = ((counts[degenerate] > 0)
                                     / stats["unique"][degenerate].astype(np.float64))
                a = np.where(ok, np.clip(removed / np.where(ok, total, 1.0), 0.0, 1.0), 1.0)
                a[degenerate] = 1.0
        probs[:, n - 1] = p
        alphas[:, n - 1] = a
    return probs, alphas, valid
