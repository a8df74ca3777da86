import numpy as np
import pytest
from PIL import Image


def write_toy_images(root, n, seed=0, size=(64, 48)):
    """n labeled toy images split across private/ and public/ subdirectories."""
    rng = np.random.default_rng(seed)
    ids = []
    for i in range(n):
        label = "private" if i % 2 == 0 else "public"
        sub = root / label
        sub.mkdir(exist_ok=True)
        # private images dark, public bright, plus noise: a learnable signal
        base = 40 if label == "private" else 200
        arr = np.clip(base + rng.normal(0, 30, size=(size[1], size[0], 3)), 0, 255)
        path = sub / ("img%03d.png" % i)
        Image.fromarray(arr.astype(np.uint8)).save(path)
        ids.append(("img%03d" % i, label))
    return ids


@pytest.fixture(scope="session")
def toy_sample(tmp_path_factory):
    root = tmp_path_factory.mktemp("sample")
    ids = write_toy_images(root, 10, seed=1)
    return root, ids
