"""Shared fixtures: toy corpora, synthetic text, and brute-force count oracles.

The oracles here are deliberately slow dict-based reimplementations of the
count semantics (full bos padding, eos predicted, continuation counts from
distinct left extensions).  Tests compare the vectorized store against them
on small random corpora.
"""

from collections import defaultdict

import numpy as np

from mixlm.corpus import EncodedCorpus, build_vocabulary, encode_corpus

# Two-sentence corpus used for hand-checked values throughout the suite.
TOY_LINES = ["a b a", "a c"]


def toy_corpus():
    vocab = build_vocabulary(TOY_LINES)
    return encode_corpus(TOY_LINES, vocab)


def encode(lines, max_size=None):
    vocab = build_vocabulary(lines, max_size=max_size)
    return encode_corpus(lines, vocab)


def synthetic_lines(n_sentences, n_words=30, seed=0, avg_len=8.0):
    """Markov-generated sentences with a skewed unigram marginal.

    Each word gets a sparse successor set with Dirichlet weights, so the
    corpus has realistic n-gram reuse (some contexts frequent, many singleton).
    """
    rng = np.random.default_rng(seed)
    words = [f"w{i}" for i in range(n_words)]
    # Zipf-ish start distribution
    start_p = 1.0 / np.arange(1, n_words + 1)
    start_p /= start_p.sum()
    succ = []
    for i in range(n_words):
        k = int(rng.integers(2, max(3, n_words // 3)))
        ids = rng.choice(n_words, size=min(k, n_words), replace=False)
        p = rng.dirichlet(np.ones(len(ids)))
        succ.append((ids, p))
    lines = []
    stop_p = 1.0 / avg_len
    for _ in range(n_sentences):
        w = int(rng.choice(n_words, p=start_p))
        sent = [words[w]]
        while rng.random() >= stop_p and len(sent) < 40:
            ids, p = succ[w]
            w = int(ids[rng.choice(len(ids), p=p)])
            sent.append(words[w])
        lines.append(" ".join(sent))
    return lines


def brute_ngrams(corpus: EncodedCorpus, order: int):
    """grams[n][(context tuple, word)] = count, for n in 1..order."""
    bos = corpus.vocab.bos_id
    grams = [None] + [defaultdict(int) for _ in range(order)]
    for sent in corpus.sentences:
        padded = [bos] * (order - 1) + [int(x) for x in sent]
        for i in range(order - 1, len(padded)):
            w = padded[i]
            for n in range(1, order + 1):
                ctx = tuple(padded[i - n + 1:i])
                grams[n][(ctx, w)] += 1
    return grams


def brute_continuation(grams, n):
    """cc[(context, word)] = number of distinct single-symbol left extensions."""
    cc = defaultdict(int)
    for (ctx, w) in grams[n + 1]:
        cc[(ctx[1:], w)] += 1
    return cc


def brute_context_stats(gram_n):
    """Per-context (total, unique, n1, n2, n3p) from a {(ctx, w): c} dict."""
    stats = defaultdict(lambda: [0, 0, 0, 0, 0])
    for (ctx, _), c in gram_n.items():
        s = stats[ctx]
        s[0] += c
        s[1] += 1
        if c == 1:
            s[2] += 1
        elif c == 2:
            s[3] += 1
        else:
            s[4] += 1
    return {k: tuple(v) for k, v in stats.items()}


def drop_fold(corpus: EncodedCorpus, fold: int, n_folds: int) -> EncodedCorpus:
    """Corpus without the sentences assigned to one cross-validation fold."""
    kept = [s for i, s in enumerate(corpus.sentences) if i % n_folds != fold]
    return EncodedCorpus(sentences=kept, vocab=corpus.vocab)
