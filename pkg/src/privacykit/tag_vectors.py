"""Bag-of-Tags binary encoding, top-scoring tag selection, and visual+tag fusion."""

import warnings
from collections import Counter

import numpy as np


class TagVocabulary:
    """Ordered unique tag list defining Bag-of-Tags vector positions."""

    def __init__(self, tags):
        self.tags = list(tags)
        self.index_of = {t: i for i, t in enumerate(self.tags)}
        if len(self.index_of) != len(self.tags):
            raise ValueError("duplicate tags in vocabulary")

    def __len__(self):
        return len(self.tags)

    def save(self, path, header=None):
        with open(path, "w", encoding="utf-8") as fh:
            if header:
                fh.write("# %s\n" % header)
            for t in self.tags:
                fh.write(t + "\n")

    @classmethod
    def load(cls, path):
        tags = []
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line and not line.startswith("#"):
                    tags.append(line)
        return cls(tags)


def build_vocab(tag_sets, min_count=1):
    """Vocabulary of tags with frequency >= min_count, ordered by descending
    frequency then ascending lexicographic."""
    counts = Counter()
    for tags in tag_sets:
        counts.update(set(tags))
    kept = [t for t, c in counts.items() if c >= min_count]
    kept.sort(key=lambda t: (-counts[t], t))
    if not kept:
        warnings.warn("empty tag vocabulary")
    return TagVocabulary(kept)


def bot_encode(tags, vocab):
    """Binary presence vector over the vocabulary; unknown tags are ignored."""
    bits = np.zeros(len(vocab), dtype=np.float64)
    for t in tags:
        i = vocab.index_of.get(t)
        if i is not None:
            bits[i] = 1.0
    return bits


def select_top_tags(records, vocab, n, scorer=None, pool="user", k_deep=10):
    """Reduced vocabulary of the n highest-scoring tags, ordered by descending score.

    ``scorer(records, vocab, pool, k_deep)`` returns a tag -> score map;
    the default scores by information gain on the given (train) records.
    Ties follow the vocabulary's deterministic order.
    """
    if n > len(vocab):
        raise ValueError("n=%d exceeds vocabulary size %d" % (n, len(vocab)))
    if scorer is None:
        from . import tag_stats
        scorer = tag_stats.information_gain_scores
    scores = scorer(records, vocab, pool=pool, k_deep=k_deep)
    ranked = sorted(range(len(vocab)), key=lambda i: (-scores.get(vocab.tags[i], 0.0), i))
    return TagVocabulary([vocab.tags[i] for i in ranked[:n]])


def fuse_features(visual, tag_bits):
    """Concatenate visual features with Bag-of-Tags bits, visual first."""
    return np.concatenate([np.asarray(visual, dtype=np.float64),
                           np.asarray(tag_bits, dtype=np.float64)])
