"""Dataset loading, label encoding, standardization, and splitting.

Formats: dense CSV with the label in the last column, sparse libsvm lines
("label idx:val ..." with 1-based ascending indices), and the paired-file
layout where features and labels live in two whitespace-separated files.
All loaders densify to float64 and encode labels as 0..p-1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError


@dataclass
class Dataset:
    """Dense feature matrix with integer class labels.

    ``label_names[c]`` is the original token of class index c. The scaler
    fields are populated on the train split by standardize_split:
    ``scaler_constant`` flags zero-variance columns that were left alone
    (their std entry is 1).
    """

    X: np.ndarray
    labels: np.ndarray
    label_names: list[str] = field(default_factory=list)
    scaler_mean: np.ndarray | None = None
    scaler_std: np.ndarray | None = None
    scaler_constant: np.ndarray | None = None
    # rows' positions in the dataset this one was split from, when applicable
    source_indices: np.ndarray | None = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.X.ndim != 2 or self.X.shape[0] < 1 or self.X.shape[1] < 1:
            raise DataError(f"X must be a non-empty matrix, got shape {self.X.shape}")
        if self.labels.shape != (self.X.shape[0],):
            raise DataError("one label per row required")
        if not np.all(np.isfinite(self.X)):
            raise DataError("features contain NaN or Inf")
        if self.labels.min() < 0:
            raise DataError("labels must be non-negative class indices")
        if not self.label_names:
            self.label_names = [str(c) for c in range(int(self.labels.max()) + 1)]

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.label_names)


def _read_lines(path) -> list[str]:
    try:
        with open(path, "r", encoding="utf-8", newline=None) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    lines = [ln for ln in lines if ln.strip()]
    if not lines:
        raise DataError(f"{path} is empty")
    return lines


def _encode_first_appearance(tokens: list[str]) -> tuple[np.ndarray, list[str]]:
    names: list[str] = []
    index: dict[str, int] = {}
    out = np.empty(len(tokens), dtype=np.int64)
    for i, tok in enumerate(tokens):
        if tok not in index:
            index[tok] = len(names)
            names.append(tok)
        out[i] = index[tok]
    return out, names


def _encode_numeric_ascending(tokens: list[str], path) -> tuple[np.ndarray, list[str]]:
    try:
        vals = [float(t) for t in tokens]
    except ValueError as exc:
        raise DataError(f"{path}: non-numeric label {exc}") from exc
    uniq = sorted(set(vals))
    index = {v: i for i, v in enumerate(uniq)}
    names = [format(v, "g") for v in uniq]
    return np.array([index[v] for v in vals], dtype=np.int64), names


def load_csv(path, has_header: bool = False) -> Dataset:
    """Dense CSV: features then label, label tokens mapped in first-appearance order."""
    lines = _read_lines(path)
    start = 1 if has_header else 0
    if start >= len(lines):
        raise DataError(f"{path} has a header but no data rows")
    rows: list[list[float]] = []
    tokens: list[str] = []
    width = None
    for lineno, line in enumerate(lines[start:], start=start + 1):
        cells = [c.strip() for c in line.split(",")]
        if width is None:
            width = len(cells)
            if width < 2:
                raise DataError(f"{path}:{lineno}: need at least one feature and a label")
        elif len(cells) != width:
            raise DataError(
                f"{path}:{lineno}: row has {len(cells)} cells, expected {width}"
            )
        try:
            rows.append([float(c) for c in cells[:-1]])
        except ValueError:
            bad = next(c for c in cells[:-1] if not _is_float(c))
            raise DataError(f"{path}:{lineno}: non-numeric feature cell {bad!r}") from None
        tokens.append(cells[-1])
    labels, names = _encode_first_appearance(tokens)
    return Dataset(X=np.array(rows), labels=labels, label_names=names)


def _is_float(cell: str) -> bool:
    try:
        float(cell)
        return True
    except ValueError:
        return False


def load_libsvm(path, d: int | None = None) -> Dataset:
    """Sparse "label idx:val" lines; 1-based strictly ascending indices.

    Missing entries are zero; d defaults to the largest index seen. Numeric
    labels are mapped to 0..p-1 in ascending value order, so {-1, +1}
    becomes {0, 1}.
    """
    lines = _read_lines(path)
    rows: list[dict[int, float]] = []
    tokens: list[str] = []
    max_idx = 0
    for lineno, line in enumerate(lines, start=1):
        parts = line.split()
        tokens.append(parts[0])
        entries: dict[int, float] = {}
        prev = 0
        for pair in parts[1:]:
            try:
                idx_s, val_s = pair.split(":", 1)
                idx, val = int(idx_s), float(val_s)
            except ValueError:
                raise DataError(f"{path}:{lineno}: malformed pair {pair!r}") from None
            if idx < 1:
                raise DataError(f"{path}:{lineno}: index {idx} is not 1-based")
            if idx <= prev:
                raise DataError(
                    f"{path}:{lineno}: index {idx} not ascending after {prev}"
                )
            prev = idx
            entries[idx] = val
            max_idx = max(max_idx, idx)
        rows.append(entries)
    dim = d if d is not None else max_idx
    if dim < max_idx:
        raise DataError(f"{path}: index {max_idx} exceeds declared dimension {dim}")
    if dim < 1:
        raise DataError(f"{path}: no feature indices and no dimension given")
    X = np.zeros((len(rows), dim))
    for i, entries in enumerate(rows):
        for idx, val in entries.items():
            X[i, idx - 1] = val
    labels, names = _encode_numeric_ascending(tokens, path)
    return Dataset(X=X, labels=labels, label_names=names)


def load_paired(features_path, labels_path) -> Dataset:
    """Two-file layout: whitespace-separated feature rows, one label per line."""
    feat_lines = _read_lines(features_path)
    rows = []
    width = None
    for lineno, line in enumerate(feat_lines, start=1):
        try:
            row = [float(c) for c in line.split()]
        except ValueError as exc:
            raise DataError(f"{features_path}:{lineno}: {exc}") from None
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise DataError(
                f"{features_path}:{lineno}: row has {len(row)} values, expected {width}"
            )
        rows.append(row)
    tokens = [ln.strip() for ln in _read_lines(labels_path)]
    if len(tokens) != len(rows):
        raise DataError(
            f"{labels_path}: {len(tokens)} labels for {len(rows)} feature rows"
        )
    labels, names = _encode_numeric_ascending(tokens, labels_path)
    return Dataset(X=np.array(rows), labels=labels, label_names=names)


def write_csv(path, dataset: Dataset) -> None:
    """Inverse of load_csv at full precision: repr round-trips every float."""
    with open(path, "w", encoding="utf-8") as fh:
        for row, lab in zip(dataset.X, dataset.labels):
            cells = [repr(v) for v in row.tolist()]
            cells.append(dataset.label_names[lab])
            fh.write(",".join(cells) + "\n")


def standardize_split(dataset: Dataset, test_fraction: float | None = None,
                      seed: int = 0, n_train: int | None = None,
                      n_test: int | None = None) -> tuple[Dataset, Dataset]:
    """Seeded shuffle, split, and per-feature standardization.

    Give either ``test_fraction`` or explicit ``n_train``/``n_test`` counts.
    Mean and std come from the train rows alone and are applied to both
    sides; zero-variance columns pass through untouched (std recorded as 1,
    flagged in ``scaler_constant``). A class absent from the train side is
    an error.
    """
    n = dataset.n_samples
    if test_fraction is not None:
        if not 0 < test_fraction < 1:
            raise DataError(f"test_fraction must be in (0, 1), got {test_fraction}")
        k_test = int(round(n * test_fraction))
        k_test = min(max(k_test, 1), n - 1)
        k_train = n - k_test
    else:
        if n_train is None:
            raise DataError("give test_fraction or explicit counts")
        k_train = int(n_train)
        k_test = int(n_test) if n_test is not None else n - k_train
        if k_train < 1 or k_test < 1 or k_train + k_test > n:
            raise DataError(
                f"counts n_train={k_train}, n_test={k_test} do not fit {n} samples"
            )
    perm = np.random.default_rng(seed).permutation(n)
    idx_train = perm[:k_train]
    idx_test = perm[k_train:k_train + k_test]
    y_train = dataset.labels[idx_train]
    present = np.unique(y_train)
    for c in range(dataset.n_classes):
        if c not in present and np.any(dataset.labels == c):
            raise DataError(
                f"split leaves class {dataset.label_names[c]!r} empty in train; "
                "use another seed or a larger train side"
            )
    X_train = dataset.X[idx_train]
    mean = X_train.mean(axis=0)
    std = X_train.std(axis=0)
    constant = std == 0.0
    mean = np.where(constant, 0.0, mean)
    std = np.where(constant, 1.0, std)
    train = Dataset(X=(X_train - mean) / std, labels=y_train,
                    label_names=list(dataset.label_names),
                    scaler_mean=mean, scaler_std=std, scaler_constant=constant,
                    source_indices=idx_train)
    test = Dataset(X=(dataset.X[idx_test] - mean) / std,
                   labels=dataset.labels[idx_test],
                   label_names=list(dataset.label_names),
                   source_indices=idx_test)
    return train, test


def stratified_subset(dataset: Dataset, n: int, seed: int) -> tuple[Dataset, Dataset]:
    """Split off n rows keeping class proportions; returns (subset, rest).

    Per-class counts follow the largest-remainder rule on the class
    frequencies, with every present class getting at least one row.
    """
    if not 1 <= n < dataset.n_samples:
        raise DataError(f"subset size {n} must be in [1, {dataset.n_samples})")
    rng = np.random.default_rng(seed)
    y = dataset.labels
    classes = np.unique(y)
    if n < len(classes):
        raise DataError(f"subset size {n} is below the class count {len(classes)}")
    counts = {int(c): int(np.sum(y == c)) for c in classes}
    exact = {c: n * counts[c] / dataset.n_samples for c in counts}
    quotas = {c: min(counts[c], max(1, int(exact[c]))) for c in counts}
    total = sum(quotas.values())
    # largest-remainder rounding, bounded to [1, class count]
    order = sorted(counts, key=lambda c: (-(exact[c] - int(exact[c])), c))
    k = 0
    while total != n:
        c = order[k % len(order)]
        if total < n and quotas[c] < counts[c]:
            quotas[c] += 1
            total += 1
        elif total > n and quotas[c] > 1:
            quotas[c] -= 1
            total -= 1
        k += 1
    take = []
    for c in classes:
        pool = np.flatnonzero(y == c)
        take.extend(rng.choice(pool, size=quotas[c], replace=False))
    take = np.sort(np.array(take))
    mask = np.zeros(dataset.n_samples, dtype=bool)
    mask[take] = True
    subset = Dataset(X=dataset.X[mask], labels=y[mask],
                     label_names=list(dataset.label_names),
                     source_indices=np.flatnonzero(mask))
    rest = Dataset(X=dataset.X[~mask], labels=y[~mask],
                   label_names=list(dataset.label_names),
                   source_indices=np.flatnonzero(~mask))
    return subset, rest
