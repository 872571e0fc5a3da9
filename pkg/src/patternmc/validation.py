"""Input validation helpers used by the estimators and model constructors."""
import math

import numpy as np

from .exceptions import ModelError

#: Tolerance for structural probability invariants (row sums, vector sums).
PROB_TOL = 1e-12


def exact_row_sums(matrix):
    """Row sums with exactly rounded (compensated) summation."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim == 1:
        return math.fsum(matrix.tolist())
    return np.array([math.fsum(row) for row in matrix.reshape(-1, matrix.shape[-1]).tolist()]).reshape(
        matrix.shape[:-1]
    )


def check_probability_vector(vec, name="vector", length=None):
    vec = np.array(vec, dtype=float)
    if vec.ndim != 1:
        raise ModelError(f"{name} must be one-dimensional, got shape {vec.shape}")
    if length is not None and vec.shape[0] != length:
        raise ModelError(f"{name} must have length {length}, got {vec.shape[0]}")
    if not np.all(np.isfinite(vec)) or np.any(vec < 0) or np.any(vec > 1):
        raise ModelError(f"{name} entries must lie in [0, 1]")
    total = exact_row_sums(vec)
    if abs(total - 1.0) > PROB_TOL:
        raise ModelError(f"{name} sums to {total!r}, not 1")
    return vec


def check_stochastic_matrix(mat, name="matrix", size=None, substochastic=False):
    """Validate a square (sub)stochastic matrix and return it as float array."""
    mat = np.array(mat, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ModelError(f"{name} must be square, got shape {mat.shape}")
    if size is not None and mat.shape[0] != size:
        raise ModelError(f"{name} must be {size}x{size}, got {mat.shape}")
    if not np.all(np.isfinite(mat)) or np.any(mat < 0) or np.any(mat > 1):
        raise ModelError(f"{name} entries must lie in [0, 1]")
    sums = exact_row_sums(mat)
    if substochastic:
        bad = np.flatnonzero(sums > 1 + PROB_TOL)
    else:
        bad = np.flatnonzero(np.abs(sums - 1) > PROB_TOL)
    if bad.size:
        row = int(bad[0])
        raise ModelError(f"{name} row {row} sums to {sums[row]!r}")
    return mat


def check_positive_int(value, name, minimum=1):
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < minimum:
        raise ModelError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def check_rng(seed):
    """Turn ``None``, an int or a Generator into a ``numpy.random.Generator``."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def normalize_rows(counts):
    """Normalize rows of non-negative counts; zero-mass rows become uniform."""
    counts = np.asarray(counts, dtype=float)
    totals = counts.sum(axis=-1, keepdims=True)
    width = counts.shape[-1]
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(totals > 0, counts / np.where(totals > 0, totals, 1.0), 1.0 / width)
    return out
