"""Tag analytics: information gain ranking, per-class frequency tables,
co-occurrence graphs, and the weighted private/public ratio."""

import math
from collections import Counter
from dataclasses import dataclass

from .corpus import PRIVATE, PUBLIC, record_tags


@dataclass
class TagClassCounts:
    """Presence/absence counts of one tag against the two classes."""

    n11: int  # tag present, private
    n10: int  # tag present, public
    n01: int  # tag absent, private
    n00: int  # tag absent, public

    @property
    def total(self):
        return self.n11 + self.n10 + self.n01 + self.n00

    @property
    def present(self):
        return self.n11 + self.n10


def _h(probs):
    return -sum(p * math.log2(p) for p in probs if p > 0)


def information_gain(counts):
    """Reduction of label entropy (bits) from conditioning on tag presence."""
    n = counts.total
    if n <= 0:
        raise ValueError("empty counts")
    n_priv = counts.n11 + counts.n01
    n_pres = counts.present
    n_abs = n - n_pres
    h_y = _h([n_priv / n, 1 - n_priv / n])
    h_pres = _h([counts.n11 / n_pres, counts.n10 / n_pres]) if n_pres else 0.0
    h_abs = _h([counts.n01 / n_abs, counts.n00 / n_abs]) if n_abs else 0.0
    return h_y - (n_pres / n) * h_pres - (n_abs / n) * h_abs


def count_tags(records, pool="both", k_deep=10, vocab=None):
    """Per-tag TagClassCounts over the given records.

    Restricts to ``vocab`` tags when given, otherwise counts every observed tag.
    """
    present = Counter()
    present_private = Counter()
    n = 0
    n_private = 0
    allowed = set(vocab.tags) if vocab is not None else None
    for rec in records:
        n += 1
        is_priv = rec.label == PRIVATE
        if is_priv:
            n_private += 1
        for t in set(record_tags(rec, pool=pool, k_deep=k_deep)):
            if allowed is not None and t not in allowed:
                continue
            present[t] += 1
            if is_priv:
                present_private[t] += 1
    out = {}
    for t, cnt in present.items():
        n11 = present_private[t]
        n10 = cnt - n11
        out[t] = TagClassCounts(n11, n10, n_private - n11, (n - n_private) - n10)
    return out


def information_gain_scores(records, vocab=None, pool="both", k_deep=10):
    counts = count_tags(records, pool=pool, k_deep=k_deep, vocab=vocab)
    return {t: information_gain(c) for t, c in counts.items()}


def rank_by_ig(records, vocab=None, pool="both", k_deep=10):
    """Tags with their information gain, descending; ties by frequency then name."""
    counts = count_tags(records, pool=pool, k_deep=k_deep, vocab=vocab)
    scored = [(t, information_gain(c), c.present) for t, c in counts.items()]
    scored.sort(key=lambda item: (-item[1], -item[2], item[0]))
    return [(t, ig) for t, ig, _ in scored]


def frequency_table(records, label, pool="both", k_deep=10, top_n=None):
    """Tag -> count within one class, as a list sorted by count desc then name."""
    counts = Counter()
    for rec in records:
        if rec.label != label:
            continue
        counts.update(set(record_tags(rec, pool=pool, k_deep=k_deep)))
    table = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return table[:top_n] if top_n is not None else table


@dataclass
class CoocGraph:
    nodes: list
    edges: list  # (tag_a, tag_b, weight) with tag_a < tag_b
    label: str


def cooc_graph(records, label, anchor=None, threshold=0.2, pool="both", k_deep=10):
    """Jaccard co-occurrence graph of tags within one class.

    Edge weight = |images with both| / |images with either|; edges below the
    threshold are dropped. With an anchor tag, only edges incident to it are kept.
    """
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    tag_count = Counter()
    pair_count = Counter()
    for rec in sorted(records, key=lambda r: r.id):
        if rec.label != label:
            continue
        tags = sorted(set(record_tags(rec, pool=pool, k_deep=k_deep)))
        tag_count.update(tags)
        for i, a in enumerate(tags):
            for b in tags[i + 1:]:
                pair_count[(a, b)] += 1
    edges = []
    for (a, b), both in pair_count.items():
        if anchor is not None and anchor not in (a, b):
            continue
        union = tag_count[a] + tag_count[b] - both
        w = both / union
        if w >= threshold:
            edges.append((a, b, w))
    edges.sort()
    nodes = sorted({t for a, b, _ in edges for t in (a, b)})
    return CoocGraph(nodes, edges, label)


def private_public_ratio(records, tag, pool="both", k_deep=10, weight=3.0):
    """Weighted private share among images bearing the tag: 3*n11 / (3*n11 + n10)."""
    n11 = n10 = 0
    for rec in records:
        if tag in record_tags(rec, pool=pool, k_deep=k_deep):
            if rec.label == PRIVATE:
                n11 += 1
            else:
                n10 += 1
    if n11 + n10 == 0:
        raise ValueError("tag %r does not occur in the corpus" % tag)
    return (weight * n11) / (weight * n11 + n10)


def write_ranked_tags(ranked, path, delimiter="\t"):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("tag%sinformation_gain\n" % delimiter)
        for t, ig in ranked:
            fh.write("%s%s%.6f\n" % (t, delimiter, ig))


def write_graph(graph, path, delimiter="\t"):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# co-occurrence graph, class=%s\n" % graph.label)
        for a, b, w in graph.edges:
            fh.write("%s%s%s%s%.6f\n" % (a, delimiter, b, delimiter, w))
