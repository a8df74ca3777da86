"""Corpus data model: record ingestion, tag normalization, deep tags, splits and folds."""

import json
import re

import numpy as np

PRIVATE = "private"
PUBLIC = "public"
LABELS = (PRIVATE, PUBLIC)

PROB_SUM_TOL = 1e-4

_NON_ALPHA = re.compile(r"[^a-z]+")


class CorpusError(ValueError):
    pass


class ImageRecord:
    """One image: id, privacy label, normalized user tags, named feature blocks.

    ``prob`` is an optional (names, values) pair holding the softmax
    distribution over object categories; values must be non-negative and sum
    to 1 within PROB_SUM_TOL.
    """

    __slots__ = ("id", "label", "user_tags", "features", "prob_names", "prob_values")

    def __init__(self, id, label, user_tags, features, prob_names=None, prob_values=None):
        if label not in LABELS:
            raise CorpusError("label must be 'private' or 'public', got %r" % (label,))
        self.id = str(id)
        self.label = label
        self.user_tags = list(user_tags)
        self.features = {}
        for name, vec in features.items():
            arr = np.asarray(vec, dtype=np.float64)
            if not np.all(np.isfinite(arr)):
                raise CorpusError("record %s: feature block %r has non-finite entries" % (self.id, name))
            self.features[name] = arr
        if (prob_names is None) != (prob_values is None):
            raise CorpusError("record %s: prob names and values must come together" % self.id)
        if prob_values is not None:
            vals = np.asarray(prob_values, dtype=np.float64)
            if len(prob_names) != len(vals):
                raise CorpusError("record %s: prob names/values length mismatch" % self.id)
            if np.any(vals < 0):
                raise CorpusError("record %s: prob entries must be >= 0" % self.id)
            s = float(vals.sum())
            if abs(s - 1.0) > PROB_SUM_TOL:
                raise CorpusError("record %s: prob sums to %.6f, not 1 within %g" % (self.id, s, PROB_SUM_TOL))
            self.prob_names = list(prob_names)
            self.prob_values = vals
        else:
            self.prob_names = None
            self.prob_values = None

    def to_json_obj(self):
        obj = {
            "id": self.id,
            "label": self.label,
            "user_tags": list(self.user_tags),
            "features": {k: [float(np.float32(v)) for v in vec] for k, vec in self.features.items()},
        }
        if self.prob_values is not None:
            obj["prob"] = {
                "names": list(self.prob_names),
                "values": [float(np.float32(v)) for v in self.prob_values],
            }
        return obj


def parse_record(obj):
    prob = obj.get("prob")
    return ImageRecord(
        obj["id"],
        obj["label"],
        obj.get("user_tags", []),
        obj.get("features", {}),
        prob_names=prob["names"] if prob else None,
        prob_values=prob["values"] if prob else None,
    )


def iter_corpus(path):
    """Stream records from a line-delimited feature file, validating each."""
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                yield parse_record(obj)
            except (json.JSONDecodeError, KeyError, CorpusError) as exc:
                raise CorpusError("%s line %d: %s" % (path, lineno, exc)) from exc


def load_corpus(path):
    return list(iter_corpus(path))


def save_corpus(records, path):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_json_obj(), sort_keys=True))
            fh.write("\n")


def normalize_user_tags(raw):
    """Lowercase, strip non-alphabetic characters, drop empties, dedupe keeping first."""
    out = []
    seen = set()
    for tag in raw:
        clean = _NON_ALPHA.sub("", tag.lower())
        if clean and clean not in seen:
            seen.add(clean)
            out.append(clean)
    return out


def deep_tags_topk(prob, names, k):
    """Top-k category names by descending probability; ties go to the lower index."""
    prob = np.asarray(prob, dtype=np.float64)
    if k > len(prob):
        raise ValueError("k=%d exceeds probability vector length %d" % (k, len(prob)))
    if len(names) != len(prob):
        raise ValueError("names/prob length mismatch")
    order = np.argsort(-prob, kind="stable")
    return [names[i] for i in order[:k]]


def record_deep_tags(rec, k, normalize=True):
    """Deep tags for one record, or [] if it carries no probability block."""
    if rec.prob_values is None:
        return []
    tags = deep_tags_topk(rec.prob_values, rec.prob_names, min(k, len(rec.prob_values)))
    return normalize_user_tags(tags) if normalize else tags


def record_tags(rec, pool="user", k_deep=10):
    """Tag set for a record from pool 'user', 'deep' or 'both'."""
    if pool not in ("user", "deep", "both"):
        raise ValueError("pool must be user, deep or both")
    tags = []
    if pool in ("user", "both"):
        tags.extend(rec.user_tags)
    if pool in ("deep", "both"):
        tags.extend(record_deep_tags(rec, k_deep))
    return normalize_user_tags(tags)


class SplitPlan:
    """Seeded train/test id split with an enforced public:private class ratio."""

    def __init__(self, seed, train_ids, test_ids, class_ratio):
        overlap = set(train_ids) & set(test_ids)
        if overlap:
            raise CorpusError("train/test overlap: %d ids" % len(overlap))
        self.seed = seed
        self.train_ids = list(train_ids)
        self.test_ids = list(test_ids)
        self.class_ratio = class_ratio

    def to_json_obj(self):
        return {
            "seed": self.seed,
            "class_ratio": self.class_ratio,
            "train_ids": self.train_ids,
            "test_ids": self.test_ids,
        }


def _class_counts(total, ratio):
    # ratio = public:private; private share = 1/(1+ratio)
    n_private = int(round(total / (1.0 + ratio)))
    return total - n_private, n_private  # (public, private)


def make_split(records, seed, train_n, test_n, ratio=3.0):
    """Seeded split into disjoint train/test id lists at the given public:private ratio.

    The larger class is downsampled (seeded) so both sides hit the ratio
    within one item per class.
    """
    by_class = {PRIVATE: [], PUBLIC: []}
    for rec in records:
        by_class[rec.label].append(rec.id)
    rng = np.random.default_rng(seed)
    pools = {}
    for label in LABELS:
        ids = sorted(by_class[label])
        rng.shuffle(ids)
        pools[label] = ids

    tr_pub, tr_priv = _class_counts(train_n, ratio)
    te_pub, te_priv = _class_counts(test_n, ratio)
    need = {PUBLIC: tr_pub + te_pub, PRIVATE: tr_priv + te_priv}
    for label in LABELS:
        if need[label] > len(pools[label]):
            raise CorpusError(
                "not enough %s records: need %d, have %d (short by %d)"
                % (label, need[label], len(pools[label]), need[label] - len(pools[label]))
            )
    train_ids = pools[PUBLIC][:tr_pub] + pools[PRIVATE][:tr_priv]
    test_ids = pools[PUBLIC][tr_pub:tr_pub + te_pub] + pools[PRIVATE][tr_priv:tr_priv + te_priv]
    # interleave deterministically so downstream batching is not class-sorted
    rng.shuffle(train_ids)
    rng.shuffle(test_ids)
    return SplitPlan(seed, train_ids, test_ids, ratio)


class FoldAssignment:
    def __init__(self, k, fold_of):
        self.k = k
        self.fold_of = dict(fold_of)

    def fold_ids(self, fold):
        return [i for i, f in self.fold_of.items() if f == fold]


def make_folds(ids, labels, k, seed):
    """Stratified k-fold assignment, deterministic per seed; fold sizes differ by at most 1."""
    if k < 2:
        raise CorpusError("k must be >= 2")
    by_class = {}
    for i, lab in zip(ids, labels):
        by_class.setdefault(lab, []).append(i)
    for lab, members in by_class.items():
        if len(members) < k:
            raise CorpusError("class %r has %d items, fewer than k=%d folds" % (lab, len(members), k))
    rng = np.random.default_rng(seed)
    fold_of = {}
    offset = 0
    for lab in sorted(by_class):
        members = list(by_class[lab])
        rng.shuffle(members)
        for pos, ident in enumerate(members):
            fold_of[ident] = (pos + offset) % k
        # stagger classes so fold-size remainders spread evenly
        offset += len(members) % k
    return FoldAssignment(k, fold_of)
