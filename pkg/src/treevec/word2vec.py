"""Skip-gram token embeddings with negative sampling.

Tokens are the preorder streams of each statement subtree; context is a
sliding window inside one stream (statements are the sentence boundary).
Negatives are drawn from the unigram distribution raised to 3/4. The
update is plain SGD with a linearly decaying step size, deterministic
under a fixed seed.
"""

from __future__ import annotations

import numpy as np

from .errors import EmptyCorpus
from .grvu import Vocabulary, subtree_tokens


def corpus_token_streams(corpus) -> list[list[str]]:
    return [subtree_tokens(st) for seq in corpus for st in seq.items]


def pretrain_embeddings(
    corpus,
    vocab: Vocabulary,
    dim: int,
    epochs: int = 3,
    negatives: int = 5,
    window: int = 2,
    lr: float = 0.05,
    seed: int = 0,
) -> np.ndarray:
    """Train a (vocab size, dim) float32 table on subtree token streams."""
    streams = [
        [vocab.lookup(tok) for tok in stream]
        for stream in corpus_token_streams(corpus)
    ]
    streams = [s for s in streams if s]
    if not streams:
        raise EmptyCorpus("no tokens to pretrain on")

    rng = np.random.default_rng(seed)
    v = vocab.size
    w_in = rng.uniform(-0.5 / dim, 0.5 / dim, size=(v, dim))
    w_out = np.zeros((v, dim))

    counts = np.zeros(v)
    for s in streams:
        for t in s:
            counts[t] += 1
    weights = np.power(counts, 0.75)
    if weights.sum() == 0:
        weights = np.ones(v)
    cdf = np.cumsum(weights / weights.sum())

    pairs = []
    for s in streams:
        for i, center in enumerate(s):
            lo = max(0, i - window)
            hi = min(len(s), i + window + 1)
            for j in range(lo, hi):
                if j != i:
                    pairs.append((center, s[j]))
    if not pairs:
        # Single-token streams: nothing co-occurs, return the init table.
        return w_in.astype(np.float32)

    total_steps = epochs * len(pairs)
    step = 0
    labels = np.zeros(negatives + 1)
    labels[0] = 1.0
    for _ in range(epochs):
        for center, context in pairs:
            alpha = lr * max(1.0 - step / total_steps, 1e-4)
            step += 1
            neg = np.searchsorted(cdf, rng.random(negatives))
            targets = np.concatenate(([context], neg))
            vc = w_in[center]
            mat = w_out[targets]  # (negatives + 1, dim)
            scores = 1.0 / (1.0 + np.exp(-np.clip(mat @ vc, -30, 30)))
            err = scores - labels
            w_out[targets] = mat - alpha * err[:, None] * vc
            w_in[center] = vc - alpha * (err @ mat)
    return w_in.astype(np.float32)
