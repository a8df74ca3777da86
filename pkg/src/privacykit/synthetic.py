"""Synthetic desk-scale corpora: the real photo dataset is not
redistributable, so experiments and tests run on generated records whose
label is a known function of two feature dimensions and one indicator tag."""

import numpy as np

from .corpus import ImageRecord, PRIVATE, PUBLIC

CATEGORIES = [
    "maillot", "wig", "brassiere", "miniskirt", "groom", "portraitsubject",
    "lakeshore", "fountain", "sandbar", "seashore", "valley", "alp",
    "church", "castle", "streetsign", "parkbench", "balloon", "umbrella",
    "laptop", "teapot",
]
PRIVATE_CATS = CATEGORIES[:6]
PUBLIC_CATS = CATEGORIES[6:12]

SIGNAL_TAG = "portrait"
NOISE_TAGS = [
    "travel", "summer", "night", "vacation", "city", "friends", "sun",
    "holiday", "architecture", "nature", "music", "festival", "winter",
    "spring", "canon", "nikon", "europe", "asia", "street", "light",
]


def make_synthetic_corpus(n, seed=0, ratio=3.0, feature_dim=6, block="fc-R",
                          tag_flip=0.02, n_noise_tags=3):
    """Generate n records at the given public:private ratio.

    Private images live inside the radius-0.7 disc of feature dims (0, 1),
    public ones outside radius 1.1 (an RBF-separable ring); the signal tag
    marks the private class with probability 1 - tag_flip on either side.
    """
    rng = np.random.default_rng(seed)
    n_private = int(round(n / (1.0 + ratio)))
    records = []
    for i in range(n):
        private = i < n_private
        # ring geometry in the first two dims, noise elsewhere
        angle = rng.uniform(0, 2 * np.pi)
        radius = rng.uniform(0.0, 0.7) if private else rng.uniform(1.1, 2.0)
        feats = rng.normal(0, 0.3, size=feature_dim)
        feats[0] = radius * np.cos(angle)
        feats[1] = radius * np.sin(angle)

        tags = list(rng.choice(NOISE_TAGS, size=n_noise_tags, replace=False))
        signal_on = rng.random() >= tag_flip if private else rng.random() < tag_flip
        if signal_on:
            tags.insert(int(rng.integers(0, len(tags) + 1)), SIGNAL_TAG)

        logits = rng.normal(0, 1.0, size=len(CATEGORIES))
        boost = PRIVATE_CATS if private else PUBLIC_CATS
        for cat in rng.choice(boost, size=3, replace=False):
            logits[CATEGORIES.index(cat)] += 3.0
        e = np.exp(logits - logits.max())
        prob = e / e.sum()

        records.append(ImageRecord(
            "img%05d" % i,
            PRIVATE if private else PUBLIC,
            tags,
            {block: feats},
            prob_names=CATEGORIES,
            prob_values=prob,
        ))
    order = rng.permutation(n)
    return [records[i] for i in order]
