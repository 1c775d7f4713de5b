"""Dense real/complex matrix kernel.

Matrices are plain 2-D numpy arrays; this module adds the shape checks,
error types and I/O conventions the rest of the package relies on. LU and
SVD are delegated to LAPACK through scipy.
"""

from __future__ import annotations

import os
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .exceptions import EmptyMatrix, ShapeMismatch, SingularMatrix

PIVOT_FLOOR = 1e-300


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a)
    if m.ndim == 1:
        m = m[:, None]
    if m.ndim != 2:
        raise ShapeMismatch(f"expected a 2-D array, got ndim={m.ndim}")
    return m


def matmul(a, b) -> np.ndarray:
    a, b = np.asarray(a), np.asarray(b)
    if a.ndim != 2 or b.ndim not in (1, 2) or a.shape[1] != b.shape[0]:
        raise ShapeMismatch(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def conj_transpose(a) -> np.ndarray:
    return np.asarray(a).conj().T


@dataclass(frozen=True)
class LUFactors:
    """Partial-pivoting LU of a square matrix, reusable across right-hand sides."""

    lu: np.ndarray
    piv: np.ndarray
    sign: int

    @property
    def n(self) -> int:
        return self.lu.shape[0]

    def min_pivot(self) -> float:
        return float(np.abs(np.diagonal(self.lu)).min())

    def reconstruct(self) -> np.ndarray:
        """Return ``P^T L U``, i.e. the factored matrix."""
        p, l, u = _unpack(self)
        return p @ l @ u


def _unpack(f: LUFactors):
    n = f.n
    l = np.tril(f.lu, -1) + np.eye(n, dtype=f.lu.dtype)
    u = np.triu(f.lu)
    perm = np.arange(n)
    for i, p in enumerate(f.piv):
        perm[i], perm[p] = perm[p], perm[i]
    pmat = np.zeros((n, n))
    pmat[perm, np.arange(n)] = 1.0
    return pmat, l, u


def lu_factor(a) -> LUFactors:
    a = as_matrix(a)
    if a.size == 0:
        raise EmptyMatrix("cannot factor an empty matrix")
    if a.shape[0] != a.shape[1]:
        raise ShapeMismatch(f"LU requires a square matrix, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix contains non-finite entries")
    with warnings.catch_warnings():
        # exact zero pivots are reported as SingularMatrix below
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(a, check_finite=False)
    if np.abs(np.diagonal(lu)).min() < PIVOT_FLOOR:
        raise SingularMatrix("zero pivot encountered in LU factorization")
    sign = -1 if np.count_nonzero(piv != np.arange(len(piv))) % 2 else 1
    return LUFactors(lu=lu, piv=piv, sign=sign)


def lu_solve(a, b) -> np.ndarray:
    """Solve ``a x = b``; ``a`` may be a matrix or precomputed :class:`LUFactors`."""
    f = a if isinstance(a, LUFactors) else lu_factor(a)
    b = np.asarray(b)
    if b.shape[0] != f.n:
        raise ShapeMismatch(f"right-hand side has {b.shape[0]} rows, matrix has {f.n}")
    return sla.lu_solve((f.lu, f.piv), b, check_finite=False)


def condition_estimate(a, factors: LUFactors | None = None) -> float:
    """1-norm condition number estimate from an LU factorization (LAPACK ``gecon``)."""
    a = as_matrix(a)
    f = factors if factors is not None else lu_factor(a)
    anorm = np.linalg.norm(a, 1)
    gecon = sla.get_lapack_funcs("gecon", (f.lu,))
    rcond, info = gecon(f.lu, anorm, norm="1")
    if info != 0:
        raise ValueError(f"gecon failed with info={info}")
    return np.inf if rcond == 0 else 1.0 / rcond


def norms(a) -> dict:
    a = np.asarray(a)
    if a.size == 0:
        raise EmptyMatrix("norm of an empty matrix")
    return {
        "frobenius": float(np.linalg.norm(a)),
        "max_abs_entry": float(np.abs(a).max()),
    }


def singular_values(a, k: int | None = None) -> np.ndarray:
    """The ``k`` largest singular values in nonincreasing order."""
    a = as_matrix(a)
    if a.size == 0:
        raise EmptyMatrix("singular values of an empty matrix")
    kmax = min(a.shape)
    k = kmax if k is None else k
    if not 0 < k <= kmax:
        raise ShapeMismatch(f"k must lie in [1, {kmax}], got {k}")
    s = sla.svdvals(a, check_finite=False)
    return s[:k]


def _format_entry(z) -> str:
    z = complex(z)
    return f"{z.real!r}{'+' if z.imag >= 0 or np.isnan(z.imag) else '-'}{abs(z.imag)!r}i"


def _parse_entry(tok: str) -> complex:
    tok = tok.strip()
    if not tok.endswith("i"):
        return complex(float(tok))
    return complex(tok[:-1] + "j")


def save_matrix(path, a) -> None:
    """Write ``a`` as ``.npy`` (binary) or ``.csv`` (one row per line, ``re+imi`` entries)."""
    a = as_matrix(a)
    path = os.fspath(path)
    if path.endswith(".npy"):
        np.save(path, a)
        return
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        for row in a:
            fh.write(",".join(_format_entry(z) for z in row))
            fh.write("\n")


def load_matrix(path) -> np.ndarray:
    path = os.fspath(path)
    if path.endswith(".npy"):
        return np.load(path)
    with open(path, encoding="ascii") as fh:
        rows = [[_parse_entry(t) for t in line.split(",")] for line in fh if line.strip()]
    if not rows:
        raise EmptyMatrix(f"{path} holds no entries")
    if len({len(r) for r in rows}) != 1:
        raise ShapeMismatch(f"{path} has ragged rows")
    m = np.array(rows, dtype=complex)
    if not np.any(m.imag):
        m = m.real.copy()
    return m
