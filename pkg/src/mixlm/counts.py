"""N-gram statistics for orders 1..N over an encoded corpus.

Layout
------
Contexts are interned per order into sorted arrays.  A context of order n
(length n-1) is identified by an int64 code ``suffix_rank * B + leftmost``,
where ``suffix_rank`` is the rank of its length-(n-2) suffix among order-(n-1)
contexts and ``B = J + 1`` (the begin-of-sentence symbol is J).  Ranks stay
below the number of distinct contexts, so codes never overflow regardless of
the order.  N-gram types are stored per order as sorted ``rank * B + word``
keys with parallel count arrays, which makes successor enumeration a slice and
(context, word) lookup two binary searches.

Every position is counted with full left bos-padding, so each target has a
well-defined context at every order.  Continuation statistics for order n
(the number of distinct single-symbol left extensions of each n-gram) are
derived from the order-(n+1) type inventory.

Cross-validation views never copy the corpus: fold-tagged per-type counts and
per-(context, fold) stat deltas are accumulated once, and a view serves
``full - fold`` counts exactly, including unique-successor and count-of-count
statistics and continuation counts.
"""

from __future__ import annotations

import hashlib
import io
import struct
from dataclasses import dataclass, field

import numpy as np

from .corpus import BOS, EncodedCorpus, Vocabulary

_BIN_MAGIC = b"MXCT"
_BIN_VERSION = 1


class CountError(ValueError):
    pass


def _vocab_fingerprint(vocab: Vocabulary) -> str:
    h = hashlib.sha256("\n".join(vocab.id_to_word).encode("utf-8")).hexdigest()
    return h[:16]


@dataclass
class _OrderData:
    """Arrays for one n-gram order (contexts of length order-1)."""

    ctx_codes: np.ndarray  # sorted int64 context codes
    ctx_total: np.ndarray
    ctx_unique: np.ndarray
    ctx_n1: np.ndarray
    ctx_n2: np.ndarray
    ctx_n3p: np.ndarray
    type_keys: np.ndarray  # sorted rank * B + word
    type_counts: np.ndarray
    # continuation arrays (absent at the top order)
    cont_type_keys: np.ndarray | None = None
    cont_type_counts: np.ndarray | None = None
    cont_ctx_total: np.ndarray | None = None
    cont_ctx_unique: np.ndarray | None = None
    cont_ctx_n1: np.ndarray | None = None
    cont_ctx_n2: np.ndarray | None = None
    cont_ctx_n3p: np.ndarray | None = None


@dataclass
class _FoldData:
    """Per-order fold-exclusion arrays for one n-gram order."""

    ft_keys: np.ndarray  # type_index * F + fold
    ft_counts: np.ndarray
    cf_keys: np.ndarray  # ctx_rank * F + fold
    cf_total: np.ndarray  # count mass of fold inside context
    cf_du: np.ndarray  # deltas: view_stat = full_stat - delta
    cf_dn1: np.ndarray
    cf_dn2: np.ndarray
    cf_dn3p: np.ndarray
    cft_keys: np.ndarray | None = None  # cont_type_index * F + fold
    cft_excl: np.ndarray | None = None  # left-extension types living only in fold
    ccf_keys: np.ndarray | None = None  # ctx_rank * F + fold (continuation stats)
    ccf_dtotal: np.ndarray | None = None
    ccf_du: np.ndarray | None = None
    ccf_dn1: np.ndarray | None = None
    ccf_dn2: np.ndarray | None = None
    ccf_dn3p: np.ndarray | None = None


class CountTable:
    """Immutable n-gram count store for orders 1..N."""

    def __init__(self, order: int, vocab_size: int, orders: list[_OrderData],
                 token_count: int, vocab_fingerprint: str = ""):
        self.order = order
        self.vocab_size = vocab_size
        self.base = vocab_size + 1
        self.orders = orders  # index 0 unused; orders[n] for order n
        self.token_count = token_count
        self.vocab_fingerprint = vocab_fingerprint

    def view(self) -> "CountView":
        return CountView(self)

    def count_of_counts(self, order: int, continuation: bool = False) -> tuple[int, int, int, int]:
        """Global (n1, n2, n3, n4) over type counts at one order."""
        od = self.orders[order]
        counts = od.cont_type_counts if continuation else od.type_counts
        if counts is None:
            raise CountError(f"no continuation counts at order {order}")
        small = counts[counts <= 4]
        cc = np.bincount(small, minlength=5)
        return int(cc[1]), int(cc[2]), int(cc[3]), int(cc[4])

    # -- serialization ---------------------------------------------------

    def save(self, path: str) -> None:
        with open(path, "wb") as fh:
            self.write_binary(fh)

    @classmethod
    def load(cls, path: str) -> "CountTable":
        with open(path, "rb") as fh:
            return cls.read_binary(fh)

    def write_binary(self, fh: io.BufferedIOBase) -> None:
        n_records = sum(len(self.orders[n].ctx_codes) for n in range(1, self.order + 1))
        fh.write(_BIN_MAGIC)
        fh.write(struct.pack("<IIQQQ", _BIN_VERSION, self.order, self.vocab_size,
                             self.token_count, n_records))
        fp = self.vocab_fingerprint.encode("ascii")
        fh.write(struct.pack("<I", len(fp)))
        fh.write(fp)
        for n in range(1, self.order + 1):
            od = self.orders[n]
            arrays = [od.ctx_codes, od.ctx_total, od.ctx_unique, od.ctx_n1,
                      od.ctx_n2, od.ctx_n3p, od.type_keys, od.type_counts]
            if n < self.order:
                arrays += [od.cont_type_keys, od.cont_type_counts, od.cont_ctx_total,
                           od.cont_ctx_unique, od.cont_ctx_n1, od.cont_ctx_n2, od.cont_ctx_n3p]
            for arr in arrays:
                fh.write(struct.pack("<Q", len(arr)))
                fh.write(np.ascontiguousarray(arr, dtype=np.int64).tobytes())

    @classmethod
    def read_binary(cls, fh: io.BufferedIOBase) -> "CountTable":
        if fh.read(4) != _BIN_MAGIC:
            raise CountError("not a count-table file")
        version, order, vocab_size, token_count, _ = struct.unpack("<IIQQQ", fh.read(32))
        if version != _BIN_VERSION:
            raise CountError(f"unsupported count-table version {version}")
        (fp_len,) = struct.unpack("<I", fh.read(4))
        fingerprint = fh.read(fp_len).decode("ascii")

        def read_arr():
            (size,) = struct.unpack("<Q", fh.read(8))
            return np.frombuffer(fh.read(size * 8), dtype=np.int64).copy()

        orders: list = [None]
        for n in range(1, order + 1):
            od = _OrderData(*[read_arr() for _ in range(8)])
            if n < order:
                (od.cont_type_keys, od.cont_type_counts, od.cont_ctx_total,
                 od.cont_ctx_unique, od.cont_ctx_n1, od.cont_ctx_n2,
                 od.cont_ctx_n3p) = [read_arr() for _ in range(7)]
            orders.append(od)
        return cls(order, int(vocab_size), orders, int(token_count), fingerprint)

    # -- text dump -------------------------------------------------------

    def dump_text(self, vocab: Vocabulary, fh: io.TextIOBase) -> None:
        """One "context TAB word TAB count" line per raw n-gram type, sorted."""
        if vocab.size != self.vocab_size:
            raise CountError("vocabulary size does not match count table")
        lines = []
        for n in range(1, self.order + 1):
            od = self.orders[n]
            ctx_words = self._context_strings(n, vocab)
            ranks = od.type_keys // self.base
            words = od.type_keys % self.base
            for r, w, c in zip(ranks.tolist(), words.tolist(), od.type_counts.tolist()):
                lines.append((n, ctx_words[r], vocab.word_of(w), c))
        lines.sort(key=lambda x: (x[0], x[1], x[2]))
        for _, ctx, word, count in lines:
            fh.write(f"{ctx}\t{word}\t{count}\n")

    def _context_strings(self, order: int, vocab: Vocabulary) -> list[str]:
        """Render every order-n context by walking the suffix chain."""
        if order == 1:
            return [""]
        parent = self._context_strings(order - 1, vocab)
        od = self.orders[order]
        out = []
        for code in od.ctx_codes.tolist():
            left = vocab.word_of(code % self.base) if code % self.base != vocab.bos_id else BOS
            suffix = parent[code // self.base]
            out.append(left if not suffix else f"{left} {suffix}")
        return out

    def context_tuple(self, order: int, rank: int) -> tuple[int, ...]:
        """Recover the id-sequence of a context from its rank."""
        syms = []
        n, r = order, rank
        while n > 1:
            code = int(self.orders[n].ctx_codes[r])
            syms.append(code % self.base)
            r = code // self.base
            n -= 1
        return tuple(syms)


def load_text(fh: io.TextIOBase, vocab: Vocabulary, order: int) -> CountTable:
    """Ingest a text dump of raw n-gram counts (all orders 1..order required).

    Context totals, unique-successor and continuation statistics are derived
    from the listed types, so the result satisfies the same invariants as a
    table accumulated from a corpus.
    """
    per_order: dict[int, list[tuple[tuple[int, ...], int, int]]] = {n: [] for n in range(1, order + 1)}
    for lineno, line in enumerate(fh, 1):
        if not line.strip():
            continue
        parts = line.rstrip("\n").split("\t")
        if len(parts) != 3:
            raise CountError(f"line {lineno}: expected 'context\\tword\\tcount'")
        ctx_str, word, count = parts
        ctx_tokens = ctx_str.split() if ctx_str else []
        n = len(ctx_tokens) + 1
        if n > order:
            raise CountError(f"line {lineno}: order {n} exceeds table order {order}")
        ctx_ids = tuple(vocab.bos_id if t == BOS else vocab.id_of(t) for t in ctx_tokens)
        wid = vocab.id_of(word)
        per_order[n].append((ctx_ids, wid, int(count)))

    base = vocab.size + 1
    rank_maps: list[dict[tuple[int, ...], int]] = [{}, {(): 0}]
    raw: list = [None]
    token_count = 0
    for n in range(1, order + 1):
        entries = per_order[n]
        if not entries:
            raise CountError(f"no order-{n} counts in dump; orders 1..{order} are required")
        if n > 1:
            prev = rank_maps[n - 1]
            codes = set()
            for ctx, _, _ in entries:
                suffix = ctx[1:]
                if suffix not in prev:
                    raise CountError(f"context {ctx} lacks its order-{n - 1} suffix in the dump")
                codes.add(prev[suffix] * base + ctx[0])
            ctx_codes = np.array(sorted(codes), dtype=np.int64)
            code_rank = {c: i for i, c in enumerate(ctx_codes.tolist())}
            rank_maps.append({ctx: code_rank[prev[ctx[1:]] * base + ctx[0]]
                              for ctx, _, _ in entries})
        else:
            ctx_codes = np.zeros(1, dtype=np.int64)
        rm = rank_maps[n]
        agg: dict[int, int] = {}
        for ctx, wid, count in entries:
            key = rm[ctx] * base + wid
            agg[key] = agg.get(key, 0) + count
        keys = np.array(sorted(agg), dtype=np.int64)
        counts = np.array([agg[k] for k in keys.tolist()], dtype=np.int64)
        if n == 1:
            token_count = int(counts.sum())
        raw.append((ctx_codes, keys, counts))

    orders: list = [None]
    for n in range(1, order + 1):
        ctx_codes, keys, counts = raw[n]
        orders.append(_derive_order(ctx_codes, keys, counts, base))
    _attach_continuations(orders, order, base)
    return CountTable(order, vocab.size, orders, token_count, _vocab_fingerprint(vocab))


# -- accumulation ---------------------------------------------------------


def _derive_order(ctx_codes, type_keys, type_counts, base) -> _OrderData:
    n_ctx = len(ctx_codes)
    ranks = type_keys // base
    total = np.bincount(ranks, weights=type_counts, minlength=n_ctx).astype(np.int64)
    unique = np.bincount(ranks, minlength=n_ctx).astype(np.int64)
    n1 = np.bincount(ranks[type_counts == 1], minlength=n_ctx).astype(np.int64)
    n2 = np.bincount(ranks[type_counts == 2], minlength=n_ctx).astype(np.int64)
    n3p = np.bincount(ranks[type_counts >= 3], minlength=n_ctx).astype(np.int64)
    return _OrderData(ctx_codes, total, unique, n1, n2, n3p, type_keys, type_counts)


def _attach_continuations(orders: list, order: int, base: int) -> list[np.ndarray]:
    """Derive order-n continuation arrays from order-(n+1) raw types.

    Returns, per order n, the map from order-(n+1) type index to continuation
    type index (needed for fold-exclusive bookkeeping).
    """
    inverses: list = [None] * (order + 1)
    for n in range(1, order):
        hi = orders[n + 1]
        hi_ranks = hi.type_keys // base
        suffix_rank = hi.ctx_codes[hi_ranks] // base
        words = hi.type_keys % base
        cc_keys, inverse, cc_counts = np.unique(
            suffix_rank * base + words, return_inverse=True, return_counts=True)
        od = orders[n]
        n_ctx = len(od.ctx_codes)
        ranks = cc_keys // base
        od.cont_type_keys = cc_keys
        od.cont_type_counts = cc_counts.astype(np.int64)
        od.cont_ctx_total = np.bincount(ranks, weights=cc_counts, minlength=n_ctx).astype(np.int64)
        od.cont_ctx_unique = np.bincount(ranks, minlength=n_ctx).astype(np.int64)
        od.cont_ctx_n1 = np.bincount(ranks[cc_counts == 1], minlength=n_ctx).astype(np.int64)
        od.cont_ctx_n2 = np.bincount(ranks[cc_counts == 2], minlength=n_ctx).astype(np.int64)
        od.cont_ctx_n3p = np.bincount(ranks[cc_counts >= 3], minlength=n_ctx).astype(np.int64)
        inverses[n] = inverse
    return inverses


def _corpus_stream(corpus: EncodedCorpus, order: int):
    """Concatenate bos-padded sentences; return stream, target indices, sentence ids."""
    pad = order - 1
    bos = corpus.vocab.bos_id
    total = sum(len(s) + pad for s in corpus.sentences)
    stream = np.empty(total, dtype=np.int64)
    n_targets = corpus.token_count
    targets = np.empty(n_targets, dtype=np.int64)
    sent_of = np.empty(n_targets, dtype=np.int64)
    pos = 0
    t = 0
    for si, sent in enumerate(corpus.sentences):
        stream[pos:pos + pad] = bos
        stream[pos + pad:pos + pad + len(sent)] = sent
        targets[t:t + len(sent)] = np.arange(pos + pad, pos + pad + len(sent))
        sent_of[t:t + len(sent)] = si
        pos += pad + len(sent)
        t += len(sent)
    return stream, targets, sent_of


def accumulate(corpus: EncodedCorpus, order: int) -> CountTable:
    """Count all n-grams of orders 1..order with full bos padding."""
    table, _ = _build(corpus, order, folds=None)
    return table


def _build(corpus: EncodedCorpus, order: int, folds: int | None):
    if order < 1:
        raise CountError("order must be >= 1")
    if corpus.token_count == 0:
        raise CountError("empty corpus")
    base = corpus.vocab.size + 1
    stream, targets, sent_of = _corpus_stream(corpus, order)
    words = stream[targets]

    orders: list = [None]
    rank = np.zeros(len(targets), dtype=np.int64)
    ctx_codes = np.zeros(1, dtype=np.int64)
    type_inverse: list = [None]
    for n in range(1, order + 1):
        if n > 1:
            left = stream[targets - (n - 1)]
            ctx_codes, rank = np.unique(rank * base + left, return_inverse=True)
        keys, inverse, counts = np.unique(rank * base + words,
                                          return_inverse=True, return_counts=True)
        orders.append(_derive_order(ctx_codes, keys, counts.astype(np.int64), base))
        type_inverse.append(inverse)
    cont_inverse = _attach_continuations(orders, order, base)
    table = CountTable(order, corpus.vocab.size, orders, corpus.token_count,
                       _vocab_fingerprint(corpus.vocab))
    if folds is None:
        return table, None

    if folds < 2:
        raise CountError("folds must be >= 2")
    if len(corpus.sentences) < folds:
        raise CountError(f"need at least {folds} sentences for {folds}-fold views")
    fold_assignment = np.arange(len(corpus.sentences), dtype=np.int64) % folds
    fold_of_t = fold_assignment[sent_of]

    fold_data: list = [None]
    for n in range(1, order + 1):
        od = orders[n]
        ft_keys, ft_counts = np.unique(type_inverse[n] * folds + fold_of_t, return_counts=True)
        ft_counts = ft_counts.astype(np.int64)
        ti = ft_keys // folds
        f = ft_keys % folds
        c_full = od.type_counts[ti]
        c_view = c_full - ft_counts
        ranks = od.type_keys[ti] // base
        cf_keys, inv = np.unique(ranks * folds + f, return_inverse=True)
        fd = _FoldData(
            ft_keys=ft_keys, ft_counts=ft_counts, cf_keys=cf_keys,
            cf_total=np.bincount(inv, weights=ft_counts).astype(np.int64),
            cf_du=np.bincount(inv, weights=(c_view == 0)).astype(np.int64),
            cf_dn1=np.bincount(inv, weights=(c_full == 1).astype(np.int64)
                               - (c_view == 1)).astype(np.int64),
            cf_dn2=np.bincount(inv, weights=(c_full == 2).astype(np.int64)
                               - (c_view == 2)).astype(np.int64),
            cf_dn3p=np.bincount(inv, weights=(c_full >= 3).astype(np.int64)
                                - (c_view >= 3)).astype(np.int64),
        )
        fold_data.append(fd)

    for n in range(1, order):
        od = orders[n]
        hi_fd = fold_data[n + 1]
        hi = orders[n + 1]
        # types of order n+1 whose occurrences all sit in a single fold
        folds_per_type = np.bincount(hi_fd.ft_keys // folds, minlength=len(hi.type_keys))
        sel = folds_per_type[hi_fd.ft_keys // folds] == 1
        excl_ti = hi_fd.ft_keys[sel] // folds
        excl_fold = hi_fd.ft_keys[sel] % folds
        cc_ti = cont_inverse[n][excl_ti]
        fd = fold_data[n]
        if len(cc_ti) == 0:
            n_keys = np.zeros(0, dtype=np.int64)
            fd.cft_keys, fd.cft_excl = n_keys, n_keys.copy()
            fd.ccf_keys = n_keys.copy()
            fd.ccf_dtotal = fd.ccf_du = fd.ccf_dn1 = fd.ccf_dn2 = fd.ccf_dn3p = n_keys.copy()
            continue
        cft_keys, cft_excl = np.unique(cc_ti * folds + excl_fold, return_counts=True)
        cft_excl = cft_excl.astype(np.int64)
        fd.cft_keys, fd.cft_excl = cft_keys, cft_excl
        cti = cft_keys // folds
        f = cft_keys % folds
        cc_full = od.cont_type_counts[cti]
        cc_view = cc_full - cft_excl
        ranks = od.cont_type_keys[cti] // base
        ccf_keys, inv = np.unique(ranks * folds + f, return_inverse=True)
        fd.ccf_keys = ccf_keys
        fd.ccf_dtotal = np.bincount(inv, weights=cft_excl).astype(np.int64)
        fd.ccf_du = np.bincount(inv, weights=(cc_view == 0)).astype(np.int64)
        fd.ccf_dn1 = np.bincount(inv, weights=(cc_full == 1).astype(np.int64)
                                 - (cc_view == 1)).astype(np.int64)
        fd.ccf_dn2 = np.bincount(inv, weights=(cc_full == 2).astype(np.int64)
                                 - (cc_view == 2)).astype(np.int64)
        fd.ccf_dn3p = np.bincount(inv, weights=(cc_full >= 3).astype(np.int64)
                                  - (cc_view >= 3)).astype(np.int64)

    folded = FoldedCounts(table, folds, fold_assignment, fold_data)
    return table, folded


def cv_fold_counts(corpus: EncodedCorpus, order: int, folds: int = 10) -> "FoldedCounts":
    """Accumulate counts with leave-one-fold-out views (sentence i -> fold i % folds)."""
    _, folded = _build(corpus, order, folds=folds)
    return folded


class FoldedCounts:
    """A count table plus exact leave-one-fold-out views."""

    def __init__(self, table: CountTable, n_folds: int, fold_assignment: np.ndarray,
                 fold_data: list):
        self.table = table
        self.n_folds = n_folds
        self.fold_assignment = fold_assignment
        self.fold_data = fold_data

    def view(self, fold: int | None = None) -> "CountView":
        if fold is not None and not (0 <= fold < self.n_folds):
            raise CountError(f"fold {fold} out of range")
        return CountView(self.table, self, fold)

    @property
    def folds(self) -> list["CountView"]:
        return [self.view(f) for f in range(self.n_folds)]


def _lookup(keys: np.ndarray, values: np.ndarray, query: np.ndarray) -> np.ndarray:
    """values[query] treating (keys, values) as a sorted sparse map, default 0."""
    idx = np.searchsorted(keys, query)
    idx_c = np.minimum(idx, len(keys) - 1) if len(keys) else np.zeros_like(idx)
    hit = (idx < len(keys)) & (keys[idx_c] == query) if len(keys) else np.zeros(len(query), bool)
    out = np.zeros(len(query), dtype=values.dtype if len(values) else np.int64)
    out[hit] = values[idx_c[hit]]
    return out


@dataclass
class ContextStats:
    total: int
    unique: int
    n1: int
    n2: int
    n3p: int


class CountView:
    """Query interface over a table, optionally excluding one fold's sentences."""

    def __init__(self, table: CountTable, folded: FoldedCounts | None = None,
                 fold: int | None = None):
        self.table = table
        self.folded = folded
        self.fold = fold
        self._chain_memo: dict[tuple[int, ...], np.ndarray] = {}

    @property
    def order(self) -> int:
        return self.table.order

    @property
    def vocab_size(self) -> int:
        return self.table.vocab_size

    # -- context resolution ------------------------------------------------

    def rank_chain(self, context: tuple[int, ...]) -> np.ndarray:
        """Ranks of the length-0..len(context) suffixes of ``context``.

        Entry k is the rank of the last k symbols as an order-(k+1) context,
        or -1 when that context never occurs in the full table.
        """
        context = tuple(int(c) for c in context)
        if len(context) >= self.table.order:
            raise CountError("context longer than order - 1")
        cached = self._chain_memo.get(context)
        if cached is not None:
            return cached
        base = self.table.base
        chain = np.full(len(context) + 1, -1, dtype=np.int64)
        chain[0] = 0
        rank = 0
        for k in range(1, len(context) + 1):
            code = rank * base + context[len(context) - k]
            codes = self.table.orders[k + 1].ctx_codes
            i = int(np.searchsorted(codes, code))
            if i >= len(codes) or codes[i] != code:
                break
            rank = i
            chain[k] = i
        self._chain_memo[context] = chain
        return chain

    def _fd(self, order: int) -> _FoldData | None:
        if self.fold is None or self.folded is None:
            return None
        return self.folded.fold_data[order]

    # -- scalar queries ------------------------------------------------------

    def stats(self, order: int, rank: int) -> ContextStats:
        od = self.table.orders[order]
        s = ContextStats(int(od.ctx_total[rank]), int(od.ctx_unique[rank]),
                         int(od.ctx_n1[rank]), int(od.ctx_n2[rank]), int(od.ctx_n3p[rank]))
        fd = self._fd(order)
        if fd is not None:
            key = np.int64(rank) * self.folded.n_folds + self.fold
            i = int(np.searchsorted(fd.cf_keys, key))
            if i < len(fd.cf_keys) and fd.cf_keys[i] == key:
                s.total -= int(fd.cf_total[i])
                s.unique -= int(fd.cf_du[i])
                s.n1 -= int(fd.cf_dn1[i])
                s.n2 -= int(fd.cf_dn2[i])
                s.n3p -= int(fd.cf_dn3p[i])
        return s

    def cont_stats(self, order: int, rank: int) -> ContextStats:
        od = self.table.orders[order]
        if od.cont_type_keys is None:
            raise CountError(f"no continuation counts at order {order}")
        s = ContextStats(int(od.cont_ctx_total[rank]), int(od.cont_ctx_unique[rank]),
                         int(od.cont_ctx_n1[rank]), int(od.cont_ctx_n2[rank]),
                         int(od.cont_ctx_n3p[rank]))
        fd = self._fd(order)
        if fd is not None and fd.ccf_keys is not None and len(fd.ccf_keys):
            key = np.int64(rank) * self.folded.n_folds + self.fold
            i = int(np.searchsorted(fd.ccf_keys, key))
            if i < len(fd.ccf_keys) and fd.ccf_keys[i] == key:
                s.total -= int(fd.ccf_dtotal[i])
                s.unique -= int(fd.ccf_du[i])
                s.n1 -= int(fd.ccf_dn1[i])
                s.n2 -= int(fd.ccf_dn2[i])
                s.n3p -= int(fd.ccf_dn3p[i])
        return s

    def count(self, order: int, rank: int, word: int) -> int:
        od = self.table.orders[order]
        key = np.int64(rank) * self.table.base + word
        i = int(np.searchsorted(od.type_keys, key))
        if i >= len(od.type_keys) or od.type_keys[i] != key:
            return 0
        c = int(od.type_counts[i])
        fd = self._fd(order)
        if fd is not None:
            fkey = np.int64(i) * self.folded.n_folds + self.fold
            j = int(np.searchsorted(fd.ft_keys, fkey))
            if j < len(fd.ft_keys) and fd.ft_keys[j] == fkey:
                c -= int(fd.ft_counts[j])
        return c

    def cont_count(self, order: int, rank: int, word: int) -> int:
        od = self.table.orders[order]
        key = np.int64(rank) * self.table.base + word
        i = int(np.searchsorted(od.cont_type_keys, key))
        if i >= len(od.cont_type_keys) or od.cont_type_keys[i] != key:
            return 0
        c = int(od.cont_type_counts[i])
        fd = self._fd(order)
        if fd is not None and fd.cft_keys is not None and len(fd.cft_keys):
            fkey = np.int64(i) * self.folded.n_folds + self.fold
            j = int(np.searchsorted(fd.cft_keys, fkey))
            if j < len(fd.cft_keys) and fd.cft_keys[j] == fkey:
                c -= int(fd.cft_excl[j])
        return c

    def successors(self, order: int, rank: int, continuation: bool = False):
        """(word ids, view counts) with zero-count entries removed."""
        od = self.table.orders[order]
        keys = od.cont_type_keys if continuation else od.type_keys
        counts = od.cont_type_counts if continuation else od.type_counts
        base = self.table.base
        lo = np.searchsorted(keys, np.int64(rank) * base)
        hi = np.searchsorted(keys, np.int64(rank + 1) * base)
        words = keys[lo:hi] % base
        vals = counts[lo:hi].copy()
        fd = self._fd(order)
        if fd is not None:
            fkeys = fd.cft_keys if continuation else fd.ft_keys
            fvals = fd.cft_excl if continuation else fd.ft_counts
            if fkeys is not None and len(fkeys):
                q = np.arange(lo, hi, dtype=np.int64) * self.folded.n_folds + self.fold
                vals -= _lookup(fkeys, fvals, q)
        keep = vals > 0
        return words[keep], vals[keep]

    # -- bulk queries ----------------------------------------------------

    def bulk_ranks(self, corpus: EncodedCorpus):
        """Per-position context ranks for all orders (PositionIndex arrays).

        Returns (ranks[T, order] int64 with -1 for unseen contexts, words[T],
        sentence index[T]).  Rank columns follow ascending order 1..N.
        """
        table = self.table
        base = table.base
        stream, targets, sent_of = _corpus_stream(corpus, table.order)
        words = stream[targets]
        T = len(targets)
        ranks = np.full((T, table.order), -1, dtype=np.int64)
        ranks[:, 0] = 0
        prev = np.zeros(T, dtype=np.int64)
        alive = np.ones(T, dtype=bool)
        for n in range(2, table.order + 1):
            left = stream[targets - (n - 1)]
            code = prev * base + left
            codes = table.orders[n].ctx_codes
            idx = np.searchsorted(codes, code)
            idx_c = np.minimum(idx, len(codes) - 1)
            hit = alive & (codes[idx_c] == code) & (idx < len(codes))
            ranks[hit, n - 1] = idx_c[hit]
            prev = idx_c
            alive = hit
        return ranks, words, sent_of

    def bulk_counts(self, order: int, ranks: np.ndarray, words: np.ndarray,
                    folds: np.ndarray | None = None, continuation: bool = False) -> np.ndarray:
        """Vectorized (context rank, word) -> view count; rank -1 yields 0."""
        od = self.table.orders[order]
        keys = od.cont_type_keys if continuation else od.type_keys
        counts = od.cont_type_counts if continuation else od.type_counts
        valid = ranks >= 0
        q = np.where(valid, ranks, 0) * self.table.base + words
        idx = np.searchsorted(keys, q)
        idx_c = np.minimum(idx, len(keys) - 1)
        hit = valid & (idx < len(keys)) & (keys[idx_c] == q)
        out = np.zeros(len(ranks), dtype=np.int64)
        out[hit] = counts[idx_c[hit]]
        if folds is None and self.fold is not None:
            folds = np.full(len(ranks), self.fold, dtype=np.int64)
        if folds is not None and self.folded is not None:
            fd = self.folded.fold_data[order]
            fkeys = fd.cft_keys if continuation else fd.ft_keys
            fvals = fd.cft_excl if continuation else fd.ft_counts
            if fkeys is not None and len(fkeys):
                fq = idx_c * self.folded.n_folds + folds
                delta = np.zeros(len(ranks), dtype=np.int64)
                delta[hit] = _lookup(fkeys, fvals, fq[hit])
                out -= delta
        return out

    def bulk_stats(self, order: int, ranks: np.ndarray,
                   folds: np.ndarray | None = None, continuation: bool = False):
        """Vectorized per-context stats -> dict of arrays (total/unique/n1/n2/n3p)."""
        od = self.table.orders[order]
        if continuation:
            src = (od.cont_ctx_total, od.cont_ctx_unique, od.cont_ctx_n1,
                   od.cont_ctx_n2, od.cont_ctx_n3p)
        else:
            src = (od.ctx_total, od.ctx_unique, od.ctx_n1, od.ctx_n2, od.ctx_n3p)
        valid = ranks >= 0
        r = np.where(valid, ranks, 0)
        out = {}
        names = ("total", "unique", "n1", "n2", "n3p")
        for name, arr in zip(names, src):
            vals = arr[r].copy()
            vals[~valid] = 0
            out[name] = vals
        if folds is None and self.fold is not None:
            folds = np.full(len(ranks), self.fold, dtype=np.int64)
        if folds is not None and self.folded is not None:
            fd = self.folded.fold_data[order]
            fkeys = fd.ccf_keys if continuation else fd.cf_keys
            if fkeys is not None and len(fkeys):
                if continuation:
                    deltas = (fd.ccf_dtotal, fd.ccf_du, fd.ccf_dn1, fd.ccf_dn2, fd.ccf_dn3p)
                else:
                    deltas = (fd.cf_total, fd.cf_du, fd.cf_dn1, fd.cf_dn2, fd.cf_dn3p)
                q = r * self.folded.n_folds + folds
                for name, darr in zip(names, deltas):
                    adj = _lookup(fkeys, darr, q)
                    adj[~valid] = 0
                    out[name] -= adj
        return out


def query(view: CountView | CountTable, context: tuple[int, ...], word: int):
    """(count, context total, unique successors) for one (context, word)."""
    if isinstance(view, CountTable):
        view = view.view()
    chain = view.rank_chain(tuple(context))
    order = len(context) + 1
    rank = int(chain[len(context)])
    if rank < 0:
        return 0, 0, 0
    s = view.stats(order, rank)
    if s.total <= 0:
        return 0, 0, 0
    return view.count(order, rank, word), s.total, s.unique
