"""Desk-scale fine-tuning of the pretrained networks for the two-class
privacy task.

The final classifier layer is replaced (1000 object categories -> 2 privacy
classes) and trained under one of three settings:

    fc      only the replaced layer (lr 0.001); everything else frozen
    fc-all  all fully-connected layers: replaced layer at 0.001, the other
            fc layers at 0.0001; convolutional stack frozen
    all     whole network: replaced layer at 0.001, all other layers at 0.0001

`fc-all` is rejected for architectures whose only fully-connected layer is
the final classifier (googlenet, resnet101).

Predictions are exported as an `id  label  score` table (score = softmax
probability of "private") that the toolkit's eval command ingests directly.
"""

import os
from dataclasses import dataclass

import torch
import torch.nn.functional as F
from torch import nn

from .extract import discover_images, preprocess
from .models import SINGLE_FC_ARCHS, ExtractorError, load_model

SETTINGS = ("fc", "fc-all", "all")
LR_NEW, LR_OLD = 1e-3, 1e-4


@dataclass
class FinetuneConfig:
    arch: str
    setting: str = "fc"
    epochs: int = 3
    batch_size: int = 16
    momentum: float = 0.9
    seed: int = 0
    weights: str = None

    def __post_init__(self):
        if self.setting not in SETTINGS:
            raise ExtractorError("setting must be one of %s" % (SETTINGS,))
        if self.setting == "fc-all" and self.arch in SINGLE_FC_ARCHS:
            raise ExtractorError(
                "setting 'fc-all' is not applicable to %s: its only "
                "fully-connected layer is the final classifier" % self.arch)


def _replace_head(arch, model):
    """Swap the 1000-way classifier for a 2-way one; returns the new layer."""
    if arch in ("alexnet", "vgg16"):
        old = model.classifier[6]
        model.classifier[6] = nn.Linear(old.in_features, 2)
        return model.classifier[6]
    old = model.fc
    model.fc = nn.Linear(old.in_features, 2)
    return model.fc


def _param_groups(arch, model, head, setting):
    head_params = list(head.parameters())
    head_ids = {id(p) for p in head_params}
    groups = [{"params": head_params, "lr": LR_NEW}]
    if setting == "fc":
        others = []
    elif setting == "fc-all":
        others = [p for m in model.classifier if isinstance(m, nn.Linear)
                  for p in m.parameters() if id(p) not in head_ids]
    else:  # all
        others = [p for p in model.parameters() if id(p) not in head_ids]
    if others:
        groups.append({"params": others, "lr": LR_OLD})
    trainable = head_ids | {id(p) for p in others}
    for p in model.parameters():
        p.requires_grad_(id(p) in trainable)
    return groups


def finetune(image_dir, config, out_scores=None, default_label="public"):
    """Fine-tune on a labeled image directory; returns (model, rows) where
    rows are (id, label, private-probability) triples, optionally written to
    ``out_scores`` as a TSV the eval harness accepts."""
    torch.manual_seed(config.seed)
    model = load_model(config.arch, weights=config.weights, seed=config.seed)
    head = _replace_head(config.arch, model)
    groups = _param_groups(config.arch, model, head, config.setting)
    opt = torch.optim.SGD(groups, momentum=config.momentum)

    images = discover_images(image_dir, default_label)
    tensors, ids, labels = [], [], []
    for path, image_id, label in images:
        from PIL import Image
        with Image.open(path) as img:
            tensors.append(preprocess(img))
        ids.append(image_id)
        labels.append(label)
    X = torch.stack(tensors)
    y = torch.tensor([0 if lab == "private" else 1 for lab in labels])

    model.train()
    n = len(y)
    gen = torch.Generator().manual_seed(config.seed)
    for _ in range(config.epochs):
        perm = torch.randperm(n, generator=gen)
        for start in range(0, n, config.batch_size):
            idx = perm[start:start + config.batch_size]
            opt.zero_grad()
            loss = F.cross_entropy(model(X[idx]), y[idx])
            loss.backward()
            opt.step()

    model.eval()
    rows = []
    with torch.no_grad():
        for start in range(0, n, config.batch_size):
            probs = F.softmax(model(X[start:start + config.batch_size]), dim=1)
            for row, k in enumerate(range(start, min(start + config.batch_size, n))):
                rows.append((ids[k], labels[k], float(probs[row, 0])))

    if out_scores is not None:
        os.makedirs(os.path.dirname(os.path.abspath(out_scores)), exist_ok=True)
        with open(out_scores, "w", encoding="utf-8") as fh:
            fh.write("id\tlabel\tscore\n")
            for image_id, label, score in rows:
                fh.write("%s\t%s\t%.6f\n" % (image_id, label, score))
    return model, rows
