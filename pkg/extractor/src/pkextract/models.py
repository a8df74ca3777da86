"""Architecture wrappers exposing named activation blocks.

Each supported network maps block names to the layer whose output is dumped:

    alexnet    fc6 (4096), fc7 (4096), fc8 (1000), prob (1000)
    vgg16      fc6 (4096), fc7 (4096), fc8 (1000), prob (1000)
    googlenet  loss3 (1000), prob (1000)
    resnet101  fc-R (1000), prob (1000)

`prob` is the softmax of the network's final logits. Weights load from a
local state-dict file when given; otherwise the network keeps its random
initialization (dimensions and the softmax contract are unaffected).
"""

import torch
import torch.nn.functional as F
from torchvision.models import alexnet, googlenet, resnet101, vgg16
from torchvision.models._meta import _IMAGENET_CATEGORIES


class ExtractorError(Exception):
    pass


IMAGENET_CATEGORIES = list(_IMAGENET_CATEGORIES)

# per-architecture: block name -> (dimension, module path) for fc taps;
# "prob" is always the softmax of the final logits.
ARCH_BLOCKS = {
    "alexnet": {"fc6": 4096, "fc7": 4096, "fc8": 1000, "prob": 1000},
    "vgg16": {"fc6": 4096, "fc7": 4096, "fc8": 1000, "prob": 1000},
    "googlenet": {"loss3": 1000, "prob": 1000},
    "resnet101": {"fc-R": 1000, "prob": 1000},
}

# architectures whose only fully-connected layer is the final classifier
SINGLE_FC_ARCHS = ("googlenet", "resnet101")


def top_deep_tags(prob, k=10, names=None):
    """Category names of the k largest probabilities (ties to lower index)."""
    names = IMAGENET_CATEGORIES if names is None else names
    values = torch.as_tensor(prob, dtype=torch.float64)
    idx = torch.topk(values, k).indices.tolist()
    return [names[i] for i in idx]


def _build(arch):
    if arch == "alexnet":
        return alexnet(weights=None)
    if arch == "vgg16":
        return vgg16(weights=None)
    if arch == "googlenet":
        return googlenet(weights=None, aux_logits=False, init_weights=True)
    if arch == "resnet101":
        return resnet101(weights=None)
    raise ExtractorError("unknown architecture %r (choose from %s)"
                         % (arch, ", ".join(sorted(ARCH_BLOCKS))))


def load_model(arch, weights=None, seed=0):
    """Network in eval mode. Random init is seeded for reproducibility when
    no weights file is supplied."""
    torch.manual_seed(seed)
    model = _build(arch)
    if weights is not None:
        state = torch.load(weights, map_location="cpu", weights_only=True)
        model.load_state_dict(state)
    model.eval()
    return model


def _fc_modules(arch, model):
    """Block name -> linear module producing that block's activations."""
    if arch in ("alexnet", "vgg16"):
        return {"fc6": model.classifier[1 if arch == "alexnet" else 0],
                "fc7": model.classifier[4 if arch == "alexnet" else 3],
                "fc8": model.classifier[6]}
    if arch == "googlenet":
        return {"loss3": model.fc}
    return {"fc-R": model.fc}


def extract_blocks(arch, model, batch, blocks):
    """Run one preprocessed batch (B,3,H,W); returns {block: (B, dim) tensor}.

    Raises ExtractorError for a block the architecture does not provide.
    """
    known = ARCH_BLOCKS[arch]
    bad = [b for b in blocks if b not in known]
    if bad:
        raise ExtractorError("architecture %s has no block(s) %s; available: %s"
                             % (arch, ", ".join(bad), ", ".join(known)))
    taps = {}
    hooks = []
    fc = _fc_modules(arch, model)
    for name in blocks:
        if name == "prob":
            continue
        hooks.append(fc[name].register_forward_hook(
            lambda _m, _i, out, name=name: taps.__setitem__(name, out.detach())))
    try:
        with torch.no_grad():
            logits = model(batch)
    finally:
        for h in hooks:
            h.remove()
    if "prob" in blocks:
        taps["prob"] = F.softmax(logits, dim=1)
    return {name: taps[name] for name in blocks}
