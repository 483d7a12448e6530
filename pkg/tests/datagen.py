"""Seeded synthetic datasets used by the acceptance suite.

Three generators mirror the data regimes the toolkit targets: a small
nonlinear binary problem (sonar_like), a very high-dimensional binary
problem with sparse signal (arcene_like), and a 10-class image problem
built from the scikit-learn digits set upsampled to 28x28 with seeded
augmentation (mnist_like). All outputs are deterministic in the seed.
"""

import numpy as np
from scipy import ndimage


def sonar_like(n=208, d=60, seed=0, n_clusters=10, spread=1.1):
    """Binary spectra-style data: clustered latent classes, nonlinear lift.

    Each class is a union of latent Gaussian clusters, lifted through a
    fixed random smooth map into d correlated channels. Cluster overlap
    keeps accuracy away from 100% while local and global classifiers
    both stay competitive, as on real sonar returns.
    """
    rng = np.random.default_rng(seed)
    k = 8
    centers = rng.normal(size=(n_clusters, k)) * 1.6
    cluster_class = np.arange(n_clusters) % 2
    assign = rng.integers(0, n_clusters, size=n)
    labels = cluster_class[assign].astype(np.int64)
    U = centers[assign] + rng.normal(size=(n, k)) * spread
    A = rng.normal(size=(k, 24)) / np.sqrt(k)
    B = rng.normal(size=(24, d)) / np.sqrt(24)
    X = np.tanh(U @ A) @ B
    # smooth channel-correlated noise plus white noise
    C = rng.normal(size=(8, d)) / np.sqrt(8)
    X = X + rng.normal(size=(n, 8)) @ C * 0.1
    X = X + rng.normal(size=(n, d)) * 0.05
    return X, labels, ["rock", "metal"]


def arcene_like(n=172, d=10000, seed=0, informative=60, shift=1.1):
    """High-dimensional binary data: a sparse mean-shift block buried in noise.

    The informative block carries class-dependent means; everything else
    is standard normal, with a correlated distractor block mimicking
    probe features.
    """
    rng = np.random.default_rng(seed)
    labels = (rng.random(n) < 0.5).astype(np.int64)
    X = rng.normal(size=(n, d))
    signs = rng.choice([-1.0, 1.0], size=informative)
    mu = signs * shift
    X[:, :informative] += np.where(labels[:, None] == 1, mu, -mu)
    # correlated distractors: shared factors, no class information
    n_fac = 20
    F = rng.normal(size=(n, n_fac))
    L = rng.normal(size=(n_fac, 400)) * 0.7
    X[:, informative:informative + 400] += F @ L
    return X, labels, ["cancer", "normal"]


def _upsample28(img8):
    # 8x8 -> 28x28 bilinear, placed on the MNIST-like canvas
    return ndimage.zoom(img8, 28.0 / 8.0, order=1, prefilter=False)


def _augment(img, rng):
    angle = rng.uniform(-18.0, 18.0)
    out = ndimage.rotate(img, angle, reshape=False, order=1, mode="constant")
    zoom = rng.uniform(0.85, 1.15)
    out = ndimage.zoom(out, zoom, order=1, prefilter=False)
    canvas = np.zeros((28, 28))
    m = min(28, out.shape[0])
    o_src = (out.shape[0] - m) // 2
    o_dst = (28 - m) // 2
    canvas[o_dst:o_dst + m, o_dst:o_dst + m] = out[o_src:o_src + m, o_src:o_src + m]
    shift = rng.integers(-3, 4, size=2)
    canvas = ndimage.shift(canvas, shift, order=0, mode="constant")
    canvas = canvas + rng.normal(0.0, 0.9, size=canvas.shape)
    return canvas


def mnist_like(n=2600, seed=0):
    """10-class 28x28 digit images, n samples, pixel values roughly 0..16.

    Base shapes come from sklearn's digits set upsampled to 28x28; every
    output sample is a seeded random rotation, rescale, shift and noise
    variant, so intra-class nuisance variation is large, as in MNIST.
    """
    from sklearn.datasets import load_digits

    digits = load_digits()
    base = digits.images.astype(np.float64)
    y = digits.target.astype(np.int64)
    rng = np.random.default_rng(seed)
    up = np.stack([_upsample28(img) for img in base])
    imgs = []
    lbls = []
    total = 0
    while total < n:
        take = min(n - total, up.shape[0])
        idx = rng.permutation(up.shape[0])[:take]
        aug = np.stack([_augment(up[i], rng) for i in idx])
        imgs.append(aug)
        lbls.append(y[idx])
        total += take
    X = np.concatenate(imgs)[:n].reshape(n, 28 * 28)
    labels = np.concatenate(lbls)[:n]
    order = rng.permutation(n)
    return X[order], labels[order], [str(c) for c in range(10)]


def standardize_pair(train_X, test_X):
    """Train-fitted standardization applied to both matrices."""
    mean = train_X.mean(axis=0)
    std = train_X.std(axis=0)
    std = np.where(std == 0.0, 1.0, std)
    return (train_X - mean) / std, (test_X - mean) / std, mean, std
