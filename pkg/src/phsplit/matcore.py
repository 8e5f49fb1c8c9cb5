"""
Small dense matrix algebra: commutators, symmetry classification,
matrix exponential and norms.

Everything here is a pure function of its inputs.  Matrices are plain
``numpy.ndarray`` objects of dtype float64.
"""

from __future__ import annotations

import os
from typing import Literal, Sequence

import numpy as np
import scipy.linalg

from .errors import DimensionError, NonFiniteError

SymmetryClass = Literal["symmetric", "skew", "neither"]

DEFAULT_REL_TOL = 1e-12


def default_tol() -> float:
    """Relative tolerance used by structure checks; ``PHSPLIT_TOL`` overrides it."""
    raw = os.environ.get("PHSPLIT_TOL")
    if raw is None or raw.strip() == "":
        return DEFAULT_REL_TOL
    value = float(raw)
    if not np.isfinite(value) or value < 0:
        raise ValueError(f"PHSPLIT_TOL must be a nonnegative number, got {raw!r}")
    return value


def as_matrix(X, name: str = "matrix") -> np.ndarray:
    """Convert to a finite float64 2-d array."""
    A = np.asarray(X, dtype=float)
    if A.ndim != 2:
        raise DimensionError(f"{name} must be 2-dimensional, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NonFiniteError(f"{name} has non-finite entries")
    return A


def as_square(X, name: str = "matrix") -> np.ndarray:
    A = as_matrix(X, name)
    if A.shape[0] != A.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {A.shape}")
    return A


def _check_finite(A: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(A)):
        raise NonFiniteError(f"{what} produced non-finite entries")
    return A


def commutator(X, Y) -> np.ndarray:
    """Return ``XY - YX``."""
    X = as_square(X, "X")
    Y = as_square(Y, "Y")
    if X.shape != Y.shape:
        raise DimensionError(f"dimension mismatch: {X.shape} vs {Y.shape}")
    return _check_finite(X @ Y - Y @ X, "commutator")


def nested_commutator(chain: Sequence) -> np.ndarray:
    """Right-nested bracket ``[x1, [x2, [..., x_k]]]`` of a chain of length >= 2."""
    if len(chain) < 2:
        raise DimensionError("nested_commutator needs at least two matrices")
    mats = [as_square(M, f"chain[{i}]") for i, M in enumerate(chain)]
    shape = mats[0].shape
    for M in mats[1:]:
        if M.shape != shape:
            raise DimensionError(f"dimension mismatch: {shape} vs {M.shape}")
    acc = mats[-1]
    for M in reversed(mats[:-1]):
        acc = M @ acc - acc @ M
    return _check_finite(acc, "nested commutator")


def symmetry_class(X, tol: float | None = None) -> SymmetryClass:
    """Classify ``X`` as symmetric, skew or neither by a max-entry test.

    ``tol`` is absolute; by default it is ``default_tol() * max(1, max|X_ij|)``.
    A matrix passing both tests (only the zero matrix, up to ``tol``) is
    reported as symmetric.
    """
    X = as_square(X, "X")
    if tol is None:
        tol = default_tol() * max(1.0, float(np.max(np.abs(X), initial=0.0)))
    if np.max(np.abs(X - X.T), initial=0.0) <= tol:
        return "symmetric"
    if np.max(np.abs(X + X.T), initial=0.0) <= tol:
        return "skew"
    return "neither"


def skew_defect(X) -> float:
    X = as_square(X)
    return float(np.max(np.abs(X + X.T), initial=0.0))


def symmetric_defect(X) -> float:
    X = as_square(X)
    return float(np.max(np.abs(X - X.T), initial=0.0))


def expm(X) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a Pade approximant."""
    X = as_square(X, "X")
    return _check_finite(scipy.linalg.expm(X), "expm")


def spectral_norm(X) -> float:
    """Largest singular value of a (possibly rectangular) matrix."""
    A = np.atleast_2d(np.asarray(X, dtype=float))
    if A.size == 0:
        return 0.0
    return float(np.linalg.norm(A, 2))


def taylor_expm(X, terms: int = 30) -> np.ndarray:
    """Reference exponential: scale to norm <= 1/2, truncated Taylor, square back.

    Slow and only meant as an independent check of :func:`expm`.
    """
    X = as_square(X, "X")
    n = X.shape[0]
    norm = np.linalg.norm(X, 1)
    s = 0
    if norm > 0.5:
        s = int(np.ceil(np.log2(norm / 0.5)))
    Y = X / 2.0**s
    E = np.eye(n)
    term = np.eye(n)
    for k in range(1, terms + 1):
        term = term @ Y / k
        E = E + term
    for _ in range(s):
        E = E @ E
    return E
