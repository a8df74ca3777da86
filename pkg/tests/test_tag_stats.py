import numpy as np
import pytest

import oracles
from privacykit.corpus import ImageRecord
from privacykit.tag_stats import (
    TagClassCounts, cooc_graph, count_tags, frequency_table, information_gain,
    private_public_ratio, rank_by_ig,
)


def _rec(i, label, tags):
    return ImageRecord(str(i), label, tags, {"f": [0.0]})


class TestInformationGain:
    def test_tag_equals_label_one_bit(self):
        assert information_gain(TagClassCounts(5, 0, 0, 5)) == pytest.approx(1.0)

    def test_independent_tag_zero(self):
        assert information_gain(TagClassCounts(2, 2, 2, 2)) == pytest.approx(0.0, abs=1e-12)

    def test_hand_entropy_case(self):
        # H(Y)=1, conditional entropies H(3/4,1/4)=0.8113 on both sides
        ig = information_gain(TagClassCounts(3, 1, 1, 3))
        assert ig == pytest.approx(0.1887, abs=1e-4)

    def test_range_and_independence(self):
        rng = np.random.default_rng(0)
        for _ in range(300):
            n11, n10, n01, n00 = (int(v) for v in rng.integers(0, 20, size=4))
            if n11 + n10 + n01 + n00 == 0:
                continue
            ig = information_gain(TagClassCounts(n11, n10, n01, n00))
            assert -1e-12 <= ig <= 1.0 + 1e-12

    def test_symmetric_under_class_swap(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            n11, n10, n01, n00 = (int(v) for v in rng.integers(0, 15, size=4))
            if n11 + n10 + n01 + n00 == 0:
                continue
            a = information_gain(TagClassCounts(n11, n10, n01, n00))
            b = information_gain(TagClassCounts(n10, n11, n00, n01))
            assert a == pytest.approx(b, abs=1e-12)

    def test_matches_entropy_oracle(self):
        rng = np.random.default_rng(2)
        for _ in range(500):
            q = [int(v) for v in rng.integers(0, 25, size=4)]
            if sum(q) == 0:
                continue
            assert information_gain(TagClassCounts(*q)) == pytest.approx(
                oracles.ig_oracle(*q), abs=1e-12)


class TestRankByIg:
    def test_deterministic_tag_ranks_first(self):
        recs = []
        for i in range(20):
            private = i < 10
            tags = ["shared", "marker" if private else "blank", ["xa", "xb", "xc"][i % 3]]
            recs.append(_rec(i, "private" if private else "public", tags))
        ranked = rank_by_ig(recs, pool="user")
        assert ranked[0][0] in ("marker", "blank")
        assert ranked[0][1] == pytest.approx(1.0)

    def test_all_tags_everywhere_zero(self):
        recs = [_rec(i, "private" if i % 2 else "public", ["a", "b"]) for i in range(10)]
        ranked = rank_by_ig(recs, pool="user")
        assert all(ig == pytest.approx(0.0, abs=1e-12) for _, ig in ranked)

    def test_top_50_shape(self, small_corpus):
        ranked = rank_by_ig(small_corpus, pool="both")[:20]
        assert len(ranked) == 20
        igs = [ig for _, ig in ranked]
        assert igs == sorted(igs, reverse=True)


class TestFrequencyTable:
    def test_single_record(self):
        table = frequency_table([_rec(0, "private", ["a", "b"])], "private", pool="user")
        assert dict(table) == {"a": 1, "b": 1}

    def test_top_zero(self):
        assert frequency_table([_rec(0, "private", ["a"])], "private", top_n=0, pool="user") == []

    def test_counts_match_brute_force(self):
        rng = np.random.default_rng(3)
        tags = ["alpha", "bravo", "carol", "delta", "early", "fresh"]
        recs = [_rec(i, "private" if rng.random() < 0.3 else "public",
                     list(rng.choice(tags, size=3, replace=False))) for i in range(50)]
        table = dict(frequency_table(recs, "public", pool="user"))
        for t in tags:
            brute = sum(1 for r in recs if r.label == "public" and t in r.user_tags)
            assert table.get(t, 0) == brute


class TestCoocGraph:
    def test_always_together_weight_one(self):
        recs = [_rec(i, "private", ["a", "b"]) for i in range(5)]
        g = cooc_graph(recs, "private", threshold=0.0, pool="user")
        assert g.edges == [("a", "b", 1.0)]

    def test_never_cooccurring_no_edge(self):
        recs = [_rec(0, "private", ["a"]), _rec(1, "private", ["b"])]
        g = cooc_graph(recs, "private", threshold=0.0, pool="user")
        assert g.edges == []

    def test_threshold_above_all_weights(self):
        recs = [_rec(i, "private", ["a", "b"]) for i in range(3)]
        g = cooc_graph(recs, "private", threshold=1.5, pool="user")
        assert g.edges == []

    def test_order_invariant(self):
        rng = np.random.default_rng(4)
        tags = ["alpha", "bravo", "carol", "delta", "early"]
        recs = [_rec(i, "private", list(rng.choice(tags, size=3, replace=False)))
                for i in range(20)]
        g1 = cooc_graph(recs, "private", threshold=0.1, pool="user")
        g2 = cooc_graph(list(reversed(recs)), "private", threshold=0.1, pool="user")
        assert g1.edges == g2.edges

    def test_anchor_restricts_edges(self):
        recs = [_rec(i, "private", ["indoor", "a", "b"]) for i in range(4)]
        g = cooc_graph(recs, "private", anchor="indoor", threshold=0.0, pool="user")
        assert g.edges and all("indoor" in (a, b) for a, b, _ in g.edges)


class TestPrivatePublicRatio:
    def test_weighted_formula(self):
        recs = [_rec(i, "private", ["indoor"]) for i in range(2)]
        recs += [_rec(10 + i, "public", ["indoor"]) for i in range(4)]
        assert private_public_ratio(recs, "indoor", pool="user") == pytest.approx(0.6)

    def test_only_private(self):
        recs = [_rec(0, "private", ["a"])]
        assert private_public_ratio(recs, "a", pool="user") == 1.0

    def test_only_public(self):
        recs = [_rec(0, "public", ["a"])]
        assert private_public_ratio(recs, "a", pool="user") == 0.0

    def test_unseen_tag_errors(self):
        with pytest.raises(ValueError):
            private_public_ratio([_rec(0, "public", ["a"])], "zz", pool="user")


class TestCountTags:
    def test_sums_equal_corpus_size(self, small_corpus):
        counts = count_tags(small_corpus, pool="both")
        n = len(small_corpus)
        for c in counts.values():
            assert c.total == n
