import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from privacykit import synthetic  # noqa: E402


@pytest.fixture(scope="session")
def small_corpus():
    return synthetic.make_synthetic_corpus(400, seed=7)


@pytest.fixture(scope="session")
def corpus_file(tmp_path_factory, small_corpus):
    from privacykit import corpus
    path = tmp_path_factory.mktemp("data") / "corpus.jsonl"
    corpus.save_corpus(small_corpus, path)
    return path
