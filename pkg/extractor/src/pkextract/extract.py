"""Directory -> feature-file extraction in the toolkit's JSONL corpus format.

Each output line is a self-contained record:

    {"id": ..., "label": "private"|"public", "user_tags": [...],
     "features": {block: [float32 values]}, "prob": {"names": [...], "values": [...]}}

Labels come from `private/` / `public/` subdirectories when present,
otherwise from the job's default label. Records are written in sorted path
order by a single writer, so output is deterministic.
"""

import json
import logging
import os
from dataclasses import dataclass, field

import numpy as np
import torch
from PIL import Image

from .models import ARCH_BLOCKS, IMAGENET_CATEGORIES, ExtractorError, extract_blocks, load_model

log = logging.getLogger("pkextract")

IMAGE_EXTS = (".jpg", ".jpeg", ".png", ".bmp", ".pgm", ".ppm")

# standard ImageNet preprocessing: resize short side to 256, center crop 224
_MEAN = np.array([0.485, 0.456, 0.406], dtype=np.float32)
_STD = np.array([0.229, 0.224, 0.225], dtype=np.float32)


@dataclass
class ExtractionJob:
    image_dir: str
    arch: str
    out_path: str
    blocks: tuple = ()          # empty = all blocks of the architecture
    batch_size: int = 8
    default_label: str = "public"
    weights: str = None
    tags_file: str = None       # optional JSON: image id -> [user tags]
    seed: int = 0

    def __post_init__(self):
        if self.arch not in ARCH_BLOCKS:
            raise ExtractorError("unknown architecture %r" % self.arch)
        if not self.blocks:
            self.blocks = tuple(ARCH_BLOCKS[self.arch])
        bad = [b for b in self.blocks if b not in ARCH_BLOCKS[self.arch]]
        if bad:
            raise ExtractorError("architecture %s has no block(s): %s"
                                 % (self.arch, ", ".join(bad)))
        if self.batch_size < 1:
            raise ExtractorError("batch size must be >= 1")
        if self.default_label not in ("private", "public"):
            raise ExtractorError("label must be 'private' or 'public'")


def preprocess(img):
    """PIL image -> normalized (3, 224, 224) float tensor."""
    img = img.convert("RGB")
    w, h = img.size
    scale = 256.0 / min(w, h)
    img = img.resize((max(224, round(w * scale)), max(224, round(h * scale))),
                     Image.BILINEAR)
    w, h = img.size
    left, top = (w - 224) // 2, (h - 224) // 2
    img = img.crop((left, top, left + 224, top + 224))
    arr = np.asarray(img, dtype=np.float32) / 255.0
    arr = (arr - _MEAN) / _STD
    return torch.from_numpy(arr.transpose(2, 0, 1))


def discover_images(image_dir, default_label):
    """Sorted (path, id, label) triples; labels from private/ / public/
    subdirectories when present."""
    if not os.path.isdir(image_dir):
        raise ExtractorError("image directory not found: %s" % image_dir)
    found = []
    for sub in ("private", "public"):
        d = os.path.join(image_dir, sub)
        if os.path.isdir(d):
            for name in sorted(os.listdir(d)):
                if name.lower().endswith(IMAGE_EXTS):
                    found.append((os.path.join(d, name), os.path.splitext(name)[0], sub))
    for name in sorted(os.listdir(image_dir)):
        path = os.path.join(image_dir, name)
        if os.path.isfile(path) and name.lower().endswith(IMAGE_EXTS):
            found.append((path, os.path.splitext(name)[0], default_label))
    if not found:
        raise ExtractorError("no images under %s" % image_dir)
    return found


def _load_tags(tags_file):
    if tags_file is None:
        return {}
    with open(tags_file, "r", encoding="utf-8") as fh:
        table = json.load(fh)
    if not isinstance(table, dict):
        raise ExtractorError("tags file must map image id -> tag list")
    return table


def extract_features(job):
    """Run the job; returns the number of records written.

    Unreadable images are skipped with a logged reason; a missing layer is a
    job error (raised before any inference runs).
    """
    model = load_model(job.arch, weights=job.weights, seed=job.seed)
    tags = _load_tags(job.tags_file)
    images = discover_images(job.image_dir, job.default_label)

    loaded = []
    for path, image_id, label in images:
        try:
            with Image.open(path) as img:
                tensor = preprocess(img)
        except (OSError, ValueError) as exc:
            log.warning("skipping %s: %s", path, exc)
            continue
        loaded.append((tensor, image_id, label))

    written = 0
    out_dir = os.path.dirname(os.path.abspath(job.out_path))
    os.makedirs(out_dir, exist_ok=True)
    with open(job.out_path, "w", encoding="utf-8") as fh:
        for start in range(0, len(loaded), job.batch_size):
            chunk = loaded[start:start + job.batch_size]
            batch = torch.stack([t for t, _, _ in chunk])
            taps = extract_blocks(job.arch, model, batch, job.blocks)
            for row, (_, image_id, label) in enumerate(chunk):
                features = {}
                record = {
                    "id": image_id,
                    "label": label,
                    "user_tags": list(tags.get(image_id, [])),
                    "features": features,
                }
                for name in job.blocks:
                    vec = taps[name][row].numpy().astype(np.float32)
                    features[name] = [float(v) for v in vec]
                    if name == "prob":
                        # also emitted with category names so the toolkit can
                        # derive deep tags without a separate label list
                        record["prob"] = {
                            "names": IMAGENET_CATEGORIES,
                            "values": features[name],
                        }
                fh.write(json.dumps(record, sort_keys=True) + "\n")
                written += 1
    log.info("wrote %d records to %s", written, job.out_path)
    return written
