"""Text CNN over tag sequences: embeddings -> parallel convolutions
(widths 3/4/5, 128 filters each by default) -> ReLU -> max-over-time pooling
-> dropout -> dense softmax over {private, public}.

Implemented directly on numpy with analytic gradients; class index 0 is
private, 1 is public.
"""

import json
from dataclasses import dataclass, field

import numpy as np

PAD = "<pad>"


class TagCnnError(ValueError):
    pass


@dataclass
class TagCnnConfig:
    vocab: list                      # tag strings; PAD is prepended internally
    embed_dim: int = 300
    num_filters: int = 128
    widths: tuple = (3, 4, 5)
    max_len: int = 32
    dropout: float = 0.5
    embeddings_trainable: bool = True

    def __post_init__(self):
        if self.max_len < max(self.widths):
            raise TagCnnError("max_len must be >= the largest filter width")
        if not 0 <= self.dropout < 1:
            raise TagCnnError("dropout must be in [0, 1)")


@dataclass
class TrainConfig:
    epochs: int = 30
    batch_size: int = 64
    learning_rate: float = 1e-3
    seed: int = 0
    early_stop_patience: int = 5

    def __post_init__(self):
        if min(self.epochs, self.batch_size, self.early_stop_patience) <= 0 or self.learning_rate <= 0:
            raise TagCnnError("train config fields must be positive")


def load_pretrained_embeddings(path, vocab, dim, seed=0):
    """Embedding matrix for ``vocab`` from a `word v1 ... vD` text file.

    Known words get the file vector; unknown words are initialized uniformly
    in [-0.25, 0.25] from the seed. Row 0 (padding) stays zero.
    """
    table = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip().split()
            if not parts:
                continue
            vec = np.array([float(v) for v in parts[1:]], dtype=np.float64)
            if len(vec) != dim:
                raise TagCnnError("%s line %d: expected %d dims, got %d" % (path, lineno, dim, len(vec)))
            table[parts[0]] = vec
    rng = np.random.default_rng(seed)
    emb = np.zeros((len(vocab) + 1, dim))
    for i, word in enumerate(vocab, start=1):
        if word in table:
            emb[i] = table[word]
        else:
            emb[i] = rng.uniform(-0.25, 0.25, size=dim)
    return emb


class TagCnnModel:
    def __init__(self, config, seed=0, embeddings=None):
        self.config = config
        self.index_of = {t: i for i, t in enumerate(config.vocab, start=1)}
        rng = np.random.default_rng(seed)
        D, F = config.embed_dim, config.num_filters
        self.params = {}
        if embeddings is not None:
            emb = np.asarray(embeddings, dtype=np.float64)
            if emb.shape != (len(config.vocab) + 1, D):
                raise TagCnnError("embedding matrix shape mismatch")
            self.params["emb"] = emb.copy()
        else:
            self.params["emb"] = rng.uniform(-0.25, 0.25, size=(len(config.vocab) + 1, D))
        self.params["emb"][0] = 0.0
        for w in config.widths:
            self.params["conv_w%d" % w] = rng.normal(0.0, 0.1, size=(F, w * D))
            self.params["conv_b%d" % w] = np.zeros(F)
        H = F * len(config.widths)
        self.params["dense_w"] = rng.normal(0.0, 0.1, size=(H, 2))
        self.params["dense_b"] = np.zeros(2)

    # --- encoding -----------------------------------------------------------

    def encode(self, tags):
        """Pad/truncate one tag sequence to max_len ids (0 = padding)."""
        ids = [self.index_of[t] for t in tags if t in self.index_of][: self.config.max_len]
        return np.array(ids + [0] * (self.config.max_len - len(ids)), dtype=np.int64)

    def encode_batch(self, tag_seqs):
        return np.stack([self.encode(t) for t in tag_seqs])

    # --- forward / backward -------------------------------------------------

    def _forward(self, ids, dropout_rng=None):
        cfg = self.config
        B, L = ids.shape
        X = self.params["emb"][ids]  # (B, L, D)
        cache = {"ids": ids, "X": X, "banks": {}}
        pooled_parts = []
        for w in cfg.widths:
            P = L - w + 1
            # windows (B, P, w*D)
            A = np.stack([X[:, p:p + w, :].reshape(B, -1) for p in range(P)], axis=1)
            Z = A @ self.params["conv_w%d" % w].T + self.params["conv_b%d" % w]
            R = np.maximum(Z, 0.0)
            # windows made entirely of padding are excluded from the max
            valid = np.stack([(ids[:, p:p + w] != 0).any(axis=1) for p in range(P)], axis=1)
            Rm = np.where(valid[:, :, None], R, -1.0)
            arg = Rm.argmax(axis=1)  # (B, F)
            pooled = np.take_along_axis(Rm, arg[:, None, :], axis=1)[:, 0, :]
            pooled = np.maximum(pooled, 0.0)
            cache["banks"][w] = {"A": A, "Z": Z, "valid": valid, "arg": arg, "pooled": pooled}
            pooled_parts.append(pooled)
        H = np.concatenate(pooled_parts, axis=1)
        cache["H"] = H
        if dropout_rng is not None and cfg.dropout > 0:
            mask = (dropout_rng.random(H.shape) >= cfg.dropout) / (1.0 - cfg.dropout)
        else:
            mask = np.ones_like(H)
        Hd = H * mask
        cache["mask"], cache["Hd"] = mask, Hd
        logits = Hd @ self.params["dense_w"] + self.params["dense_b"]
        m = logits.max(axis=1, keepdims=True)
        e = np.exp(logits - m)
        probs = e / e.sum(axis=1, keepdims=True)
        cache["logits"], cache["probs"] = logits, probs
        return logits, probs, cache

    def forward(self, tags):
        """Inference on one tag sequence; returns (logits, probs)."""
        logits, probs, _ = self._forward(self.encode_batch([tags]))
        return logits[0], probs[0]

    def predict_proba(self, tags):
        """Probability of the private class, dropout off."""
        return float(self.forward(tags)[1][0])

    def predict_proba_batch(self, tag_seqs):
        _, probs, _ = self._forward(self.encode_batch(tag_seqs))
        return probs[:, 0]

    def loss_and_grads(self, ids, labels, dropout_rng=None):
        """Mean cross-entropy and analytic gradients for every parameter.

        labels: int array, 0 = private, 1 = public. Dropout is applied only
        when a dropout_rng is given (training mode).
        """
        if len(ids) == 0:
            raise TagCnnError("empty batch")
        cfg = self.config
        B = len(ids)
        _, probs, cache = self._forward(ids, dropout_rng)
        eps = 1e-300
        loss = float(-np.mean(np.log(probs[np.arange(B), labels] + eps)))

        grads = {k: np.zeros_like(v) for k, v in self.params.items()}
        dlogits = probs.copy()
        dlogits[np.arange(B), labels] -= 1.0
        dlogits /= B
        grads["dense_w"] = cache["Hd"].T @ dlogits
        grads["dense_b"] = dlogits.sum(axis=0)
        dH = (dlogits @ self.params["dense_w"].T) * cache["mask"]

        dX = np.zeros_like(cache["X"])
        offset = 0
        F = cfg.num_filters
        for w in cfg.widths:
            bank = cache["banks"][w]
            dpooled = dH[:, offset:offset + F]
            offset += F
            # gradient reaches only the max-attaining window, where the
            # post-ReLU value was positive
            live = bank["pooled"] > 0.0
            dZ = np.zeros_like(bank["Z"])
            b_idx, f_idx = np.nonzero(live)
            dZ[b_idx, bank["arg"][b_idx, f_idx], f_idx] = dpooled[b_idx, f_idx]
            grads["conv_w%d" % w] = np.einsum("bpf,bpk->fk", dZ, bank["A"])
            grads["conv_b%d" % w] = dZ.sum(axis=(0, 1))
            dA = dZ @ self.params["conv_w%d" % w]  # (B, P, w*D)
            P = dA.shape[1]
            D = cfg.embed_dim
            for p in range(P):
                dX[:, p:p + w, :] += dA[:, p, :].reshape(B, w, D)
        if cfg.embeddings_trainable:
            np.add.at(grads["emb"], cache["ids"].ravel(), dX.reshape(-1, cfg.embed_dim))
            grads["emb"][0] = 0.0  # padding row stays frozen
        return loss, grads

    # --- training -----------------------------------------------------------

    def train(self, train_seqs, train_labels, dev_seqs, dev_labels, config):
        """Mini-batch Adam with early stopping on dev weighted F1.

        Deterministic given the seed; returns the per-epoch history. The model
        is left at the best-dev-F1 parameters.
        """
        from . import evaluation

        if not train_seqs or not dev_seqs:
            raise TagCnnError("train and dev sets must be non-empty")
        ids = self.encode_batch(train_seqs)
        labels = np.asarray(train_labels, dtype=np.int64)
        dev_ids = self.encode_batch(dev_seqs)
        dev_y = np.asarray(dev_labels, dtype=np.int64)
        rng = np.random.default_rng(config.seed)
        drop_rng = np.random.default_rng(config.seed + 1)

        m = {k: np.zeros_like(v) for k, v in self.params.items()}
        v = {k: np.zeros_like(va) for k, va in self.params.items()}
        beta1, beta2, eps = 0.9, 0.999, 1e-8
        step = 0
        history = []
        best_f1, best_key, best_params, patience = -1.0, None, None, 0
        for epoch in range(config.epochs):
            order = rng.permutation(len(ids))
            epoch_loss = 0.0
            nb = 0
            for start in range(0, len(ids), config.batch_size):
                batch = order[start:start + config.batch_size]
                loss, grads = self.loss_and_grads(ids[batch], labels[batch], dropout_rng=drop_rng)
                if not np.isfinite(loss):
                    raise TagCnnError("training diverged (non-finite loss) at epoch %d" % epoch)
                epoch_loss += loss
                nb += 1
                step += 1
                for k in self.params:
                    if k == "emb" and not self.config.embeddings_trainable:
                        continue
                    m[k] = beta1 * m[k] + (1 - beta1) * grads[k]
                    v[k] = beta2 * v[k] + (1 - beta2) * grads[k] ** 2
                    mh = m[k] / (1 - beta1 ** step)
                    vh = v[k] / (1 - beta2 ** step)
                    self.params[k] -= config.learning_rate * mh / (np.sqrt(vh) + eps)
                self.params["emb"][0] = 0.0
            _, dev_probs, _ = self._forward(dev_ids)
            dev_pred = np.where(dev_probs[:, 0] >= 0.5, 1, -1)
            dev_true = np.where(dev_y == 0, 1, -1)
            rep = evaluation.metrics(evaluation.confusion(dev_pred, dev_true))
            f1 = rep.overall["f1"]
            dev_loss = float(-np.mean(np.log(dev_probs[np.arange(len(dev_y)), dev_y] + 1e-300)))
            history.append({"epoch": epoch, "train_loss": epoch_loss / max(nb, 1),
                            "dev_weighted_f1": f1, "dev_loss": dev_loss})
            # best params by F1, dev loss breaking ties; patience counts F1 stalls
            key = (f1, -dev_loss)
            if best_key is None or key > best_key:
                best_key = key
                best_params = {k: p.copy() for k, p in self.params.items()}
            if f1 > best_f1:
                best_f1 = f1
                patience = 0
            else:
                patience += 1
                if patience >= config.early_stop_patience:
                    break
        if best_params is not None:
            self.params = best_params
        return history

    # --- persistence --------------------------------------------------------

    def save(self, path):
        meta = {
            "vocab": self.config.vocab,
            "embed_dim": self.config.embed_dim,
            "num_filters": self.config.num_filters,
            "widths": list(self.config.widths),
            "max_len": self.config.max_len,
            "dropout": self.config.dropout,
            "embeddings_trainable": self.config.embeddings_trainable,
        }
        np.savez(path, __meta__=np.frombuffer(json.dumps(meta, sort_keys=True).encode(), dtype=np.uint8),
                 **self.params)

    @classmethod
    def load(cls, path):
        data = np.load(path if str(path).endswith(".npz") else str(path) + ".npz")
        meta = json.loads(bytes(data["__meta__"]).decode())
        cfg = TagCnnConfig(
            vocab=meta["vocab"], embed_dim=meta["embed_dim"], num_filters=meta["num_filters"],
            widths=tuple(meta["widths"]), max_len=meta["max_len"], dropout=meta["dropout"],
            embeddings_trainable=meta["embeddings_trainable"],
        )
        model = cls(cfg, seed=0)
        for k in model.params:
            model.params[k] = data[k]
        return model
