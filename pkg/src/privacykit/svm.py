"""Kernel SVM trained by sequential minimal optimization, with Platt calibration
and cross-validated grid search over C and kernel."""

import json
from dataclasses import dataclass

import numpy as np

from . import evaluation


class SvmError(ValueError):
    pass


@dataclass(frozen=True)
class KernelSpec:
    kind: str  # "rbf" or "poly"
    gamma: float = 1.0
    degree: int = 2

    def __post_init__(self):
        if self.kind not in ("rbf", "poly"):
            raise SvmError("unknown kernel kind %r" % (self.kind,))
        if self.kind == "rbf" and not self.gamma > 0:
            raise SvmError("gamma must be > 0")
        if self.kind == "poly" and self.degree < 1:
            raise SvmError("degree must be >= 1")

    def label(self):
        if self.kind == "rbf":
            return "R,gamma=%g" % self.gamma
        return "P,d=%d" % self.degree


def kernel_eval(spec, x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise SvmError("dimension mismatch: %s vs %s" % (x.shape, y.shape))
    if spec.kind == "rbf":
        d = x - y
        return float(np.exp(-spec.gamma * np.dot(d, d)))
    return float((np.dot(x, y) + 1.0) ** spec.degree)


def kernel_matrix(spec, X, Y=None):
    """Gram matrix k(X_i, Y_j); Y defaults to X."""
    X = np.asarray(X, dtype=np.float64)
    Y = X if Y is None else np.asarray(Y, dtype=np.float64)
    if spec.kind == "rbf":
        sq = (X * X).sum(axis=1)[:, None] + (Y * Y).sum(axis=1)[None, :] - 2.0 * X @ Y.T
        np.maximum(sq, 0.0, out=sq)
        return np.exp(-spec.gamma * sq)
    return (X @ Y.T + 1.0) ** spec.degree


@dataclass
class PlattScaler:
    """Sigmoid p(private | f) = 1 / (1 + exp(a*f + b)); a < 0 for a useful model."""

    a: float
    b: float

    def prob(self, decision_values):
        z = self.a * np.asarray(decision_values, dtype=np.float64) + self.b
        return 1.0 / (1.0 + np.exp(np.clip(z, -500, 500)))


class SvmModel:
    """Trained two-class SVM: decision(x) = sum_i dual_coef_i k(sv_i, x) + bias.

    Positive decision values predict the private class.
    """

    def __init__(self, support_vectors, dual_coefs, bias, kernel, calibrator=None):
        self.support_vectors = np.asarray(support_vectors, dtype=np.float64)
        self.dual_coefs = np.asarray(dual_coefs, dtype=np.float64)
        self.bias = float(bias)
        self.kernel = kernel
        self.calibrator = calibrator

    def decision_values(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.support_vectors.shape[1]:
            raise SvmError(
                "dimension mismatch: model expects %d, got %d"
                % (self.support_vectors.shape[1], X.shape[1])
            )
        K = kernel_matrix(self.kernel, X, self.support_vectors)
        return K @ self.dual_coefs + self.bias

    def decision_value(self, x):
        return float(self.decision_values(np.atleast_2d(x))[0])

    def predict(self, X):
        return np.where(self.decision_values(X) > 0, 1, -1)

    def predict_proba(self, X):
        if self.calibrator is None:
            raise SvmError("model has no probability calibrator")
        return self.calibrator.prob(self.decision_values(X))

    def save(self, path):
        lines = ["privacykit-svm v1"]
        lines.append(json.dumps({
            "kind": self.kernel.kind,
            "gamma": self.kernel.gamma,
            "degree": self.kernel.degree,
            "bias": "%.17g" % self.bias,
            "calibrator": None if self.calibrator is None
            else ["%.17g" % self.calibrator.a, "%.17g" % self.calibrator.b],
            "n_sv": len(self.dual_coefs),
            "dim": self.support_vectors.shape[1],
        }, sort_keys=True))
        for coef, sv in zip(self.dual_coefs, self.support_vectors):
            lines.append(" ".join(["%.17g" % coef] + ["%.17g" % v for v in sv]))
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().strip()
            if header != "privacykit-svm v1":
                raise SvmError("unrecognized model file header %r" % header)
            meta = json.loads(fh.readline())
            rows = [line.split() for line in fh if line.strip()]
        if len(rows) != meta["n_sv"]:
            raise SvmError("model file truncated: expected %d SVs" % meta["n_sv"])
        arr = np.array([[float(v) for v in row] for row in rows], dtype=np.float64)
        cal = meta["calibrator"]
        return cls(
            arr[:, 1:],
            arr[:, 0],
            float(meta["bias"]),
            KernelSpec(meta["kind"], gamma=meta["gamma"], degree=meta["degree"]),
            calibrator=None if cal is None else PlattScaler(float(cal[0]), float(cal[1])),
        )


def smo_train(X, y, c, spec, tol=1e-3, max_iter=100000):
    """Train a two-class SVM by SMO on the dual, selecting the maximal
    KKT-violating pair each iteration; stops when the duality-gap bound
    drops below tol.

    y must be +/-1 (positive = private).
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if not np.all(np.isfinite(X)):
        raise SvmError("non-finite feature values")
    if set(np.unique(y)) != {-1.0, 1.0}:
        raise SvmError("training data must contain both classes as +/-1 labels")
    if c <= 0:
        raise SvmError("C must be > 0")
    n = len(y)
    K = kernel_matrix(spec, X)
    Q = K * np.outer(y, y)
    alpha = np.zeros(n)
    grad = -np.ones(n)  # gradient of 0.5 a'Qa - e'a

    for _ in range(max_iter):
        yg = -y * grad
        up = ((y > 0) & (alpha < c - 1e-12)) | ((y < 0) & (alpha > 1e-12))
        low = ((y < 0) & (alpha < c - 1e-12)) | ((y > 0) & (alpha > 1e-12))
        if not up.any() or not low.any():
            break
        i = np.flatnonzero(up)[np.argmax(yg[up])]
        j = np.flatnonzero(low)[np.argmin(yg[low])]
        gap = yg[i] - yg[j]
        if gap < tol:
            break
        # move along alpha_i += y_i t, alpha_j -= y_j t (keeps sum(alpha*y) fixed)
        quad = K[i, i] + K[j, j] - 2.0 * K[i, j]
        t = gap / max(quad, 1e-12)
        if y[i] > 0:
            t = min(t, c - alpha[i])
        else:
            t = min(t, alpha[i])
        if y[j] > 0:
            t = min(t, alpha[j])
        else:
            t = min(t, c - alpha[j])
        if t <= 0:
            break
        d_i = y[i] * t
        d_j = -y[j] * t
        alpha[i] += d_i
        alpha[j] += d_j
        grad += Q[:, i] * d_i + Q[:, j] * d_j

    yg = -y * grad
    up = ((y > 0) & (alpha < c - 1e-12)) | ((y < 0) & (alpha > 1e-12))
    low = ((y < 0) & (alpha < c - 1e-12)) | ((y > 0) & (alpha > 1e-12))
    free = (alpha > 1e-12) & (alpha < c - 1e-12)
    if free.any():
        bias = float(np.mean(yg[free]))
    elif up.any() and low.any():
        bias = float((yg[up].max() + yg[low].min()) / 2.0)
    else:
        bias = 0.0

    sv = alpha > 1e-10
    if not sv.any():
        # degenerate but possible for pathological C; keep one point per class
        sv = np.zeros(n, dtype=bool)
        sv[np.argmax(y)] = True
        sv[np.argmin(y)] = True
    model = SvmModel(X[sv], (alpha * y)[sv], bias, spec)
    model.train_alpha_ = alpha
    model.train_objective_ = dual_objective(alpha, y, K)
    return model


def dual_objective(alpha, y, K):
    """Dual objective sum(alpha) - 0.5 a'Qa, the quantity SMO maximizes."""
    v = alpha * y
    return float(alpha.sum() - 0.5 * v @ K @ v)


def platt_fit(decision_values, labels, max_iter=100, min_step=1e-10, sigma=1e-12):
    """Fit Platt's sigmoid on decision values by regularized log-loss (Newton
    with backtracking, Lin et al. formulation, smoothed targets)."""
    f = np.asarray(decision_values, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    pos = y > 0
    n_pos, n_neg = int(pos.sum()), int((~pos).sum())
    if n_pos == 0 or n_neg == 0:
        raise SvmError("Platt fit needs both classes")
    hi = (n_pos + 1.0) / (n_pos + 2.0)
    lo = 1.0 / (n_neg + 2.0)
    t = np.where(pos, hi, lo)

    a, b = 0.0, np.log((n_neg + 1.0) / (n_pos + 1.0))

    def objective(a, b):
        # cross-entropy of p = 1/(1+e^z) against smoothed targets:
        # sum(log(1+e^z) - (1-t) z), stably
        z = a * f + b
        return float(np.sum(np.logaddexp(0.0, z) - (1.0 - t) * z))

    fval = objective(a, b)
    for _ in range(max_iter):
        z = a * f + b
        p = 1.0 / (1.0 + np.exp(np.clip(z, -500, 500)))
        d1 = t - p  # d/dz of the objective
        g1 = float(np.sum(f * d1))
        g2 = float(np.sum(d1))
        if abs(g1) < 1e-5 and abs(g2) < 1e-5:
            break
        w = p * (1.0 - p)
        h11 = float(np.sum(f * f * w)) + sigma
        h22 = float(np.sum(w)) + sigma
        h21 = float(np.sum(f * w))
        det = h11 * h22 - h21 * h21
        da = -(h22 * g1 - h21 * g2) / det
        db = -(-h21 * g1 + h11 * g2) / det
        gd = g1 * da + g2 * db
        step = 1.0
        while step >= min_step:
            na, nb = a + step * da, b + step * db
            nf = objective(na, nb)
            if nf < fval + 1e-4 * step * gd:
                a, b, fval = na, nb, nf
                break
            step /= 2.0
        else:
            break
    return PlattScaler(a, b)


def train_calibrated(X, y, c, spec, tol=1e-3, n_cal_folds=3, seed=0):
    """Train an SVM and attach a Platt scaler fitted on out-of-fold decision values."""
    model = smo_train(X, y, c, spec, tol=tol)
    rng = np.random.default_rng(seed)
    n = len(y)
    order = rng.permutation(n)
    folds = np.empty(n, dtype=int)
    folds[order] = np.arange(n) % n_cal_folds
    oof = np.empty(n)
    for k in range(n_cal_folds):
        tr = folds != k
        if len(np.unique(y[tr])) < 2:
            oof[~tr] = 0.0
            continue
        sub = smo_train(X[tr], y[tr], c, spec, tol=tol)
        oof[~tr] = sub.decision_values(X[~tr])
    model.calibrator = platt_fit(oof, y)
    return model


PAPER_DEFAULT_C = (0.001, 0.01, 0.1, 1.0, 2.0, 5.0, 10.0)


@dataclass
class GridSpec:
    c_values: tuple
    kernels: tuple
    folds: int = 10

    def __post_init__(self):
        if not self.c_values or not self.kernels:
            raise SvmError("grid must have at least one C and one kernel")
        if self.folds < 2:
            raise SvmError("grid folds must be >= 2")


def default_grid(folds=10):
    kernels = (
        KernelSpec("rbf", gamma=0.05),
        KernelSpec("rbf", gamma=0.5),
        KernelSpec("poly", degree=1),
        KernelSpec("poly", degree=2),
    )
    return GridSpec(PAPER_DEFAULT_C, kernels, folds)


def _kernel_sort_key(spec):
    # ties prefer RBF before Poly, then smaller gamma / degree
    return (0, spec.gamma) if spec.kind == "rbf" else (1, spec.degree)


def grid_search_cv(X, y, grid, seed=0, tol=1e-3):
    """k-fold cross-validated grid search maximizing mean weighted F1.

    Returns (best KernelSpec, best C, cv table). Per-cell training failures
    are recorded in the table; only an all-failed grid raises.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = len(y)
    rng = np.random.default_rng(seed)
    folds = np.empty(n, dtype=int)
    for cls in (-1.0, 1.0):
        idx = np.flatnonzero(y == cls)
        rng.shuffle(idx)
        folds[idx] = np.arange(len(idx)) % grid.folds

    table = []
    best = None
    for spec in grid.kernels:
        for c in grid.c_values:
            scores = []
            err = None
            try:
                for k in range(grid.folds):
                    tr, te = folds != k, folds == k
                    model = smo_train(X[tr], y[tr], c, spec, tol=tol)
                    preds = model.predict(X[te])
                    rep = evaluation.metrics(evaluation.confusion(preds, y[te]))
                    scores.append(rep.overall["f1"])
            except SvmError as exc:
                err = str(exc)
            mean_f1 = float(np.mean(scores)) if scores and err is None else None
            table.append({
                "kernel": spec.label(),
                "c": c,
                "mean_weighted_f1": mean_f1,
                "error": err,
            })
            if mean_f1 is None:
                continue
            key = (-mean_f1, c, _kernel_sort_key(spec))
            if best is None or key < best[0]:
                best = (key, spec, c)
    if best is None:
        raise SvmError("all grid cells failed")
    return best[1], best[2], table
