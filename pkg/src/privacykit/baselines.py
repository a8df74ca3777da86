"""Non-deep baselines: GIST scene descriptor from a Gabor filter bank,
bag-of-visual-words over precomputed local descriptors, and the tag rule
classifier (private iff a person tag is present)."""

import numpy as np

from .corpus import PRIVATE, PUBLIC

DEFAULT_PERSON_TAGS = frozenset({"people", "men", "women"})


class BaselineError(ValueError):
    pass


def gabor_bank(n_scales=4, n_orientations=8, size=31):
    """Complex Gabor kernels, 4 scales x 8 orientations by default.

    Wavelength doubles per scale starting at 4 px; sigma = 0.56 * wavelength
    (about one octave bandwidth), aspect ratio 0.5. Each kernel has its mean
    removed so the bank is blind to the DC component.
    """
    half = size // 2
    ys, xs = np.mgrid[-half:half + 1, -half:half + 1].astype(np.float64)
    kernels = []
    for s in range(n_scales):
        lam = 4.0 * (2 ** s)
        sigma = 0.56 * lam
        gamma = 0.5
        for o in range(n_orientations):
            theta = np.pi * o / n_orientations
            xr = xs * np.cos(theta) + ys * np.sin(theta)
            yr = -xs * np.sin(theta) + ys * np.cos(theta)
            env = np.exp(-(xr ** 2 + (gamma * yr) ** 2) / (2 * sigma ** 2))
            carrier = np.exp(2j * np.pi * xr / lam)
            k = env * carrier
            k -= k.mean()
            kernels.append(k)
    return kernels


def _circular_convolve(image, kernel):
    h, w = image.shape
    kh, kw = kernel.shape
    pad = np.zeros((h, w), dtype=np.complex128)
    pad[:kh, :kw] = kernel
    # center the kernel so responses align with pixel positions
    pad = np.roll(pad, (-(kh // 2), -(kw // 2)), axis=(0, 1))
    return np.fft.ifft2(np.fft.fft2(image) * np.fft.fft2(pad))


def gist_extract(image, bank=None, grid=4):
    """512-dim GIST: 32 Gabor magnitude maps averaged over a 4x4 grid.

    The image must be grayscale, at least 16x16, with values in [0, 1];
    convolution is circular so a constant image maps to the zero vector.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2 or min(image.shape) < 16:
        raise BaselineError("image must be a 2-D array of at least 16x16 pixels")
    if image.min() < 0 or image.max() > 1:
        raise BaselineError("pixel values must lie in [0, 1]")
    if bank is None:
        bank = gabor_bank()
    feats = []
    for kernel in bank:
        mag = np.abs(_circular_convolve(image, kernel))
        for rows in np.array_split(mag, grid, axis=0):
            for cell in np.array_split(rows, grid, axis=1):
                feats.append(cell.mean())
    return np.array(feats)


def kmeans_fit(descriptors, k=128, seed=0, max_iter=100, shift_tol=1e-4):
    """Lloyd's k-means from k-means++ seeding; deterministic per seed."""
    X = np.asarray(descriptors, dtype=np.float64)
    distinct = np.unique(X, axis=0)
    if len(distinct) < k:
        raise BaselineError("need at least %d distinct descriptors, have %d" % (k, len(distinct)))
    rng = np.random.default_rng(seed)

    # k-means++ seeding
    centroids = [X[rng.integers(len(X))]]
    d2 = ((X - centroids[0]) ** 2).sum(axis=1)
    for _ in range(1, k):
        probs = d2 / d2.sum() if d2.sum() > 0 else np.full(len(X), 1.0 / len(X))
        idx = rng.choice(len(X), p=probs)
        centroids.append(X[idx])
        d2 = np.minimum(d2, ((X - centroids[-1]) ** 2).sum(axis=1))
    C = np.stack(centroids)

    for _ in range(max_iter):
        d = ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)
        assign = d.argmin(axis=1)
        newC = C.copy()
        for j in range(k):
            members = X[assign == j]
            if len(members):
                newC[j] = members.mean(axis=0)
        shift = np.sqrt(((newC - C) ** 2).sum(axis=1)).max()
        C = newC
        if shift < shift_tol:
            break
    return C


def kmeans_inertia(descriptors, centroids):
    X = np.asarray(descriptors, dtype=np.float64)
    d = ((X[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    return float(d.min(axis=1).sum())


def bovw_encode(descriptors, centroids):
    """L1-normalized nearest-centroid histogram; empty input maps to zeros."""
    C = np.asarray(centroids, dtype=np.float64)
    X = np.asarray(descriptors, dtype=np.float64)
    if X.size == 0:
        return np.zeros(len(C))
    if X.ndim != 2 or X.shape[1] != C.shape[1]:
        raise BaselineError("descriptor dimension mismatch")
    d = ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)
    hist = np.bincount(d.argmin(axis=1), minlength=len(C)).astype(np.float64)
    return hist / hist.sum()


def rule_tag_classify(user_tags, person_tags=DEFAULT_PERSON_TAGS):
    """Private iff any person tag is present (tag variant of the person rule)."""
    if not person_tags:
        raise BaselineError("person tag set must be non-empty")
    return PRIVATE if any(t in person_tags for t in user_tags) else PUBLIC


def load_pgm(path):
    """Read a binary (P5) or ASCII (P2) portable graymap, scaled to [0, 1]."""
    with open(path, "rb") as fh:
        data = fh.read()
    tokens = []
    i = 0
    while len(tokens) < 4 and i < len(data):
        if data[i:i + 1] == b"#":
            while i < len(data) and data[i] != 0x0A:
                i += 1
        elif data[i:i + 1].isspace():
            i += 1
        else:
            j = i
            while j < len(data) and not data[j:j + 1].isspace():
                j += 1
            tokens.append(data[i:j])
            i = j
    if len(tokens) < 4 or tokens[0] not in (b"P2", b"P5"):
        raise BaselineError("%s: not a P2/P5 graymap" % path)
    w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    if tokens[0] == b"P5":
        i += 1  # single whitespace byte separates header from raster
        raw = np.frombuffer(data[i:i + w * h], dtype=np.uint8)
    else:
        raw = np.array(data[i:].split(), dtype=np.float64)
    if raw.size != w * h:
        raise BaselineError("%s: truncated pixel data" % path)
    return raw.reshape(h, w).astype(np.float64) / maxval
