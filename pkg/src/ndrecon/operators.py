"""Boundary-time operators discretized with the trapezoidal rule.

Boundary signals are stacked vectors: all time samples at the left endpoint
followed by all time samples at the right endpoint. On [0, T] a block has
``n_t`` entries; on the extended axis [0, 2T + dt] it has ``2 n_t``.
Every operator acts identically on both blocks, so each matrix is built as
one ``n_t``-sized block and placed block-diagonally.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .exceptions import ShapeMismatch
from .grid import Grid


@dataclass(frozen=True)
class OperatorSet:
    """Dense matrices for every boundary-time operator on a given time grid.

    Attributes
    ----------
    P_T : (2n_t, 4n_t) restriction from the extended axis to [0, T].
    trace_T : (2, 2n_t) evaluation at t = T.
    R : (2n_t, 2n_t) time reversal t -> T - t.
    int1, int2 : running integral from 0 and its square.
    Z : running integral to T (continuous adjoint of ``int1``).
    J : (2n_t, 4n_t) half-integral of the extended signal over [t, 2T - t].
    S : (2, 2n_t) ``trace_T @ int2``.
    """

    n_t: int
    dt: float
    horizon_T: float
    P_T: np.ndarray = field(repr=False)
    trace_T: np.ndarray = field(repr=False)
    R: np.ndarray = field(repr=False)
    int1: np.ndarray = field(repr=False)
    int2: np.ndarray = field(repr=False)
    Z: np.ndarray = field(repr=False)
    J: np.ndarray = field(repr=False)
    S: np.ndarray = field(repr=False)

    @property
    def P_T_star(self) -> np.ndarray:
        return self.P_T.T

    @property
    def t_nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon_T, self.n_t)

    def quadrature_weights(self) -> np.ndarray:
        """Trapezoid weights for the inner product on (0, T) x {-1, 1}."""
        w = np.full(self.n_t, self.dt)
        w[0] = w[-1] = self.dt / 2
        return np.concatenate([w, w])


def _trapezoid_rows(n: int) -> np.ndarray:
    # row k integrates over nodes 0..k: (1, 2, ..., 2, 1), row 0 empty
    a = np.tril(np.full((n, n), 2.0))
    a[:, 0] = 1.0
    np.fill_diagonal(a, 1.0)
    a[0, 0] = 0.0
    return a


def _j_block(n_t: int) -> np.ndarray:
    n_ext = 2 * n_t
    block = np.zeros((n_t, n_ext))
    for i in range(n_t):
        # [t_i, 2T - t_i] spans nodes i .. 2n_t - 2 - i
        hi = n_ext - 2 - i
        if hi > i:
            block[i, i : hi + 1] = 2.0
            block[i, i] = block[i, hi] = 1.0
    return 0.5 * block


def build_time_operators(n_t: int, T: float) -> OperatorSet:
    """Build the operator set from the temporal grid alone (no spatial data needed)."""
    if n_t < 3:
        raise ShapeMismatch(f"n_t must be >= 3, got {n_t}")
    dt = T / (n_t - 1)
    eye = np.eye(n_t)
    zero = np.zeros((n_t, n_t))

    p_block = np.hstack([eye, zero])
    P_T = sla.block_diag(p_block, p_block)

    trace_T = np.zeros((2, 2 * n_t))
    trace_T[0, n_t - 1] = 1.0
    trace_T[1, 2 * n_t - 1] = 1.0

    r_block = eye[::-1]
    R = sla.block_diag(r_block, r_block)

    i1 = (dt / 2) * _trapezoid_rows(n_t)
    int1 = sla.block_diag(i1, i1)
    int2 = int1 @ int1

    # row k integrates over nodes k..n_t-1; built directly, not as R int1 R
    z1 = np.triu(np.full((n_t, n_t), 2.0))
    z1[:, -1] = 1.0
    np.fill_diagonal(z1, 1.0)
    z1[-1, -1] = 0.0
    z1 *= dt / 2
    Z = sla.block_diag(z1, z1)

    jb = (dt / 2) * _j_block(n_t)
    J = sla.block_diag(jb, jb)

    S = trace_T @ int2
    return OperatorSet(
        n_t=n_t,
        dt=dt,
        horizon_T=float(T),
        P_T=P_T,
        trace_T=trace_T,
        R=R,
        int1=int1,
        int2=int2,
        Z=Z,
        J=J,
        S=S,
    )


def build_operators(grid: Grid) -> OperatorSet:
    ops = build_time_operators(grid.n_t, grid.horizon_T)
    assert ops.dt == grid.dt or np.isclose(ops.dt, grid.dt, rtol=1e-14, atol=0)
    return ops


def apply_S_star(ops: OperatorSet, f_bdry) -> np.ndarray:
    """Continuous adjoint of ``S``: the signal ``(T - t) f`` on each boundary block."""
    f = np.asarray(f_bdry)
    if f.shape[0] != 2:
        raise ShapeMismatch(f"boundary data must have 2 entries per column, got {f.shape}")
    ramp = ops.horizon_T - ops.t_nodes
    if f.ndim == 1:
        return np.concatenate([ramp * f[0], ramp * f[1]])
    return np.vstack([np.outer(ramp, f[0]), np.outer(ramp, f[1])])


def apply_S_transpose(ops: OperatorSet, f_bdry) -> np.ndarray:
    """Discrete transpose ``[S]^T f``, the right-hand side used by the reconstruction."""
    f = np.asarray(f_bdry)
    if f.shape[0] != 2:
        raise ShapeMismatch(f"boundary data must have 2 entries per column, got {f.shape}")
    return ops.S.T @ f


def split_blocks(signal: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split a stacked boundary signal into (left, right) time series."""
    signal = np.asarray(signal)
    if signal.shape[0] % 2:
        raise ShapeMismatch("stacked boundary signal must have even length")
    half = signal.shape[0] // 2
    return signal[:half], signal[half:]


def stack_blocks(left, right) -> np.ndarray:
    left, right = np.asarray(left), np.asarray(right)
    if left.shape != right.shape:
        raise ShapeMismatch("left and right blocks differ in shape")
    return np.concatenate([left, right])
