"""Plug-in estimates from labelled data and synthetic Gaussian datasets."""

import csv
from dataclasses import dataclass

import numpy as np

from ._validation import as_vector
from .exceptions import InsufficientDataError, RoadError
from .model import GaussianPair


@dataclass(frozen=True)
class LabeledDataset:
    X: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        labels = np.asarray(self.labels).astype(int).ravel()
        if X.ndim != 2 or X.shape[0] != labels.size:
            raise RoadError(f"{X.shape[0]} rows but {labels.size} labels")
        if not np.all(np.isin(labels, (1, 2))):
            raise RoadError("labels must be 1 or 2")
        if not (np.any(labels == 1) and np.any(labels == 2)):
            raise RoadError("both labels must be present")
        if not np.all(np.isfinite(X)):
            raise RoadError("dataset has non-finite entries")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "labels", labels)

    @property
    def p(self):
        return self.X.shape[1]

    def __len__(self):
        return self.labels.size


@dataclass(frozen=True)
class SampleEstimates:
    mu1_hat: np.ndarray
    mu2_hat: np.ndarray
    sigma_hat: np.ndarray
    n1: int
    n2: int

    @property
    def mu_a_hat(self):
        return (self.mu1_hat + self.mu2_hat) / 2

    @property
    def mu_d_hat(self):
        return (self.mu1_hat - self.mu2_hat) / 2

    @classmethod
    def from_truth(cls, truth, n1=0, n2=0):
        """Estimates equal to the truth; the infinite-sample limit."""
        return cls(truth.mu1.copy(), truth.mu2.copy(), truth.sigma.copy(), n1, n2)

    def as_model(self):
        return GaussianPair(self.mu1_hat, self.mu2_hat, self.sigma_hat)


def pooled_covariance(X, labels):
    """Within-group scatter summed over both groups, divided by ``n1 + n2 - 2``."""
    scatter = np.zeros((X.shape[1], X.shape[1]))
    for g in (1, 2):
        Z = X[labels == g]
        Z = Z - Z.mean(axis=0)
        scatter += Z.T @ Z
    sigma = scatter / (X.shape[0] - 2)
    # exact symmetry by construction
    return np.triu(sigma) + np.triu(sigma, 1).T


def fit_estimates(data):
    n1 = int(np.sum(data.labels == 1))
    n2 = int(np.sum(data.labels == 2))
    if n1 < 2 or n2 < 2:
        raise InsufficientDataError(f"each group needs at least 2 observations, got n1={n1}, n2={n2}")
    return SampleEstimates(
        mu1_hat=data.X[data.labels == 1].mean(axis=0),
        mu2_hat=data.X[data.labels == 2].mean(axis=0),
        sigma_hat=pooled_covariance(data.X, data.labels),
        n1=n1,
        n2=n2,
    )


def covariance_factor(sigma):
    """Symmetric square root of a PSD matrix via its eigendecomposition."""
    eig, vec = np.linalg.eigh(sigma)
    p = sigma.shape[0]
    floor = -1e-10 * max(np.trace(sigma) / p, 0.0)
    if eig[0] < floor:
        raise RoadError(f"covariance factorization failed: eigenvalue {eig[0]:.3g} < {floor:.3g}")
    return (vec * np.sqrt(np.clip(eig, 0.0, None))) @ vec.T


def _seed_sequence(seed):
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(int(seed))


def gen_synthetic(truth, n_per_group, seed):
    """Draw ``n_per_group`` rows from each group; the stream for group ``g`` is ``(seed, g)``.

    ``seed`` may be an integer or a :class:`numpy.random.SeedSequence`.
    """
    n = int(n_per_group)
    if n < 2:
        raise InsufficientDataError("n_per_group must be at least 2")
    root = _seed_sequence(seed)
    factor = covariance_factor(truth.sigma)
    blocks = []
    for g, mean in ((1, truth.mu1), (2, truth.mu2)):
        ss = np.random.SeedSequence(root.entropy, spawn_key=tuple(root.spawn_key) + (g,))
        z = np.random.default_rng(ss).standard_normal((n, truth.p))
        blocks.append(mean + z @ factor)
    X = np.vstack(blocks)
    labels = np.repeat([1, 2], n)
    return LabeledDataset(X, labels)


def read_dataset_csv(path):
    """Read ``label,x1,...,xp`` rows (header required)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[0].strip() != "label":
            raise RoadError(f"{path}: expected header 'label,x1,...,xp'")
        rows = [r for r in reader if r]
    if not rows:
        raise RoadError(f"{path}: no observations")
    try:
        arr = np.array(rows, dtype=float)
    except ValueError as exc:
        raise RoadError(f"{path}: {exc}") from exc
    if arr.shape[1] != len(header):
        raise RoadError(f"{path}: ragged rows")
    return LabeledDataset(arr[:, 1:], arr[:, 0].astype(int))


def write_dataset_csv(data, fh):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["label"] + [f"x{j + 1}" for j in range(data.p)])
    for label, row in zip(data.labels, data.X):
        writer.writerow([int(label)] + [repr(float(v)) for v in row])


def read_matrix_csv(path):
    """``p`` rows of ``p`` comma-separated reals, no header."""
    try:
        arr = np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError as exc:
        raise RoadError(f"{path}: {exc}") from exc
    return arr


def parse_vector(text):
    return as_vector([float(t) for t in str(text).split(",") if t.strip()], "vector")
