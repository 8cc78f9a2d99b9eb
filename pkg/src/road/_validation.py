"""Input validation helpers shared by every module."""

import numpy as np

from .exceptions import DimensionMismatchError, RoadError

SYM_RTOL = 1e-12
PSD_RTOL = 1e-10


def as_vector(v, name="vector", p=None):
    """Return ``v`` as a finite 1-d float array, optionally of length ``p``."""
    arr = np.asarray(v, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1 or arr.size == 0:
        raise DimensionMismatchError(f"{name} must be a non-empty 1-d array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise RoadError(f"{name} has non-finite entries")
    if p is not None and arr.size != p:
        raise DimensionMismatchError(f"{name} has length {arr.size}, expected {p}")
    return arr


def as_sym_matrix(m, name="matrix", p=None, psd=False):
    """Return ``m`` as a symmetric float matrix with a nonnegative diagonal.

    Symmetry is checked to ``SYM_RTOL`` relative to the largest entry and the
    result is exactly symmetrized. With ``psd=True`` the smallest eigenvalue
    must be at least ``-PSD_RTOL`` times the largest.
    """
    arr = np.atleast_2d(np.asarray(m, dtype=float))
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionMismatchError(f"{name} must be square, got shape {arr.shape}")
    if p is not None and arr.shape[0] != p:
        raise DimensionMismatchError(f"{name} is {arr.shape[0]}x{arr.shape[0]}, expected {p}x{p}")
    if not np.all(np.isfinite(arr)):
        raise RoadError(f"{name} has non-finite entries")
    scale = max(np.max(np.abs(arr)), 1.0)
    if np.max(np.abs(arr - arr.T)) > SYM_RTOL * scale:
        raise RoadError(f"{name} is not symmetric")
    if np.any(np.diag(arr) < 0):
        raise RoadError(f"{name} has a negative diagonal entry")
    arr = 0.5 * (arr + arr.T)
    if psd:
        eig = np.linalg.eigvalsh(arr)
        if eig[0] < -PSD_RTOL * max(eig[-1], 0.0):
            raise RoadError(f"{name} is not positive semidefinite (min eigenvalue {eig[0]:.3g})")
    return arr


def check_same_dim(*arrays):
    sizes = {a.shape[0] for a in arrays}
    if len(sizes) != 1:
        raise DimensionMismatchError(f"dimension mismatch: {sorted(sizes)}")
    return sizes.pop()
