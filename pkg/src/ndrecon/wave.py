"""Leapfrog solver for u_tt - c^2 u_xx + q u = 0 with Neumann boundary sources,
and assembly of the discrete hyperbolic Neumann-to-Dirichlet map from
impulse responses.

Normal derivatives are outward: ``-u_x`` at the left end, ``+u_x`` at the
right end. Both are imposed with second-order ghost nodes.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import toeplitz

from .exceptions import CFLViolation, ShapeMismatch
from .grid import CFL_FACTOR, CoefficientLike, Grid, sample_coefficient

logger = logging.getLogger(__name__)

CACHE_VERSION = 1


@dataclass(frozen=True)
class Coefficients:
    c: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        q = np.asarray(self.q, dtype=float)
        if c.shape != q.shape or c.ndim != 1:
            raise ShapeMismatch(f"c and q must be 1-D of equal length, got {c.shape}, {q.shape}")
        if c.min() <= 0:
            from .exceptions import NonPositiveSpeed

            raise NonPositiveSpeed("wave speed must be positive")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "q", q)

    @classmethod
    def on_grid(cls, grid: Grid, c: CoefficientLike = 1.0, q: CoefficientLike = 0.0) -> "Coefficients":
        x = grid.x_nodes
        return cls(sample_coefficient(c, x), sample_coefficient(q, x))

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(self.c.tobytes())
        h.update(self.q.tobytes())
        return h.hexdigest()


@dataclass(frozen=True)
class WaveField:
    """Nodal solution values, one row per time step starting at t = 0."""

    u: np.ndarray = field(repr=False)
    dt: float

    @property
    def n_steps(self) -> int:
        return self.u.shape[0]

    def snapshot_at(self, t: float) -> np.ndarray:
        k = int(round(t / self.dt))
        if not 0 <= k < self.n_steps or not np.isclose(k * self.dt, t, rtol=1e-9, atol=1e-12):
            raise ValueError(f"t={t} is not a stored time node")
        return self.u[k]

    def boundary_trace(self) -> np.ndarray:
        """Stacked Dirichlet trace: left endpoint block then right endpoint block."""
        return np.concatenate([self.u[:, 0], self.u[:, -1]])


def _extend(f: np.ndarray, n_t: int) -> np.ndarray:
    f = np.asarray(f)
    if f.ndim != 1:
        raise ShapeMismatch("boundary signal must be a vector")
    if f.shape[0] == 4 * n_t:
        return f
    if f.shape[0] == 2 * n_t:
        ext = np.zeros(4 * n_t, dtype=f.dtype)
        ext[:n_t] = f[:n_t]
        ext[2 * n_t : 3 * n_t] = f[n_t:]
        return ext
    raise ShapeMismatch(f"boundary signal length {f.shape[0]} is neither 2n_t nor 4n_t (n_t={n_t})")


def wave_solve(grid: Grid, coeff: Coefficients, f, n_steps: int | None = None) -> WaveField:
    """March the leapfrog scheme from zero initial data.

    ``f`` is a stacked boundary signal on the extended time axis (length
    ``4 n_t``) or on [0, T] (length ``2 n_t``, zero-extended). Boundary data at
    time node ``n`` enters the update producing step ``n + 1``; the value at
    t = 0 is never read, since ``u^1`` vanishes under zero initial data.
    """
    n_t = grid.n_t
    n_steps = 2 * n_t if n_steps is None else int(n_steps)
    if not 1 <= n_steps <= 2 * n_t:
        raise ShapeMismatch(f"n_steps must lie in [1, {2 * n_t}]")
    if coeff.c.shape != (grid.n_x,):
        raise ShapeMismatch("coefficients do not match the grid")
    bound = CFL_FACTOR * grid.dx / coeff.c.max()
    if grid.dt > bound * (1 + 1e-12):
        raise CFLViolation(f"dt={grid.dt:.6g} exceeds the CFL bound {bound:.6g}")

    f = _extend(f, n_t)
    f_left, f_right = f[: 2 * n_t], f[2 * n_t :]
    dtype = np.result_type(f.dtype, float)

    dx, dt = grid.dx, grid.dt
    lam2 = (dt / dx) ** 2 * coeff.c**2
    ghost_gain = 2.0 * dt**2 * coeff.c[[0, -1]] ** 2 / dx
    qdt2 = dt**2 * coeff.q

    u = np.zeros((n_steps, grid.n_x), dtype=dtype)
    lap = np.empty(grid.n_x, dtype=dtype)
    for n in range(1, n_steps - 1):
        un = u[n]
        lap[1:-1] = un[2:] - 2.0 * un[1:-1] + un[:-2]
        lap[0] = 2.0 * (un[1] - un[0])
        lap[-1] = 2.0 * (un[-2] - un[-1])
        nxt = 2.0 * un - u[n - 1] + lam2 * lap - qdt2 * un
        nxt[0] += ghost_gain[0] * f_left[n]
        nxt[-1] += ghost_gain[1] * f_right[n]
        u[n + 1] = nxt
    return WaveField(u=u, dt=dt)


@dataclass(frozen=True)
class HyperbolicNDMap:
    """Discrete hyperbolic ND map on the extended axis and its restriction to [0, T]."""

    Lambda: np.ndarray = field(repr=False)
    n_t: int

    @property
    def Lambda_T(self) -> np.ndarray:
        n = self.n_t
        idx = np.r_[0:n, 2 * n : 3 * n]
        return self.Lambda[np.ix_(idx, idx)]

    def apply(self, f) -> np.ndarray:
        return self.Lambda @ _extend(np.asarray(f), self.n_t)

    def with_lambda(self, Lambda: np.ndarray) -> "HyperbolicNDMap":
        if Lambda.shape != self.Lambda.shape:
            raise ShapeMismatch("replacement matrix changes the shape")
        return HyperbolicNDMap(Lambda=Lambda, n_t=self.n_t)

    @classmethod
    def from_matrix(cls, Lambda) -> "HyperbolicNDMap":
        Lambda = np.asarray(Lambda)
        if Lambda.ndim != 2 or Lambda.shape[0] != Lambda.shape[1] or Lambda.shape[0] % 4:
            raise ShapeMismatch(f"Lambda must be square with size divisible by 4, got {Lambda.shape}")
        return cls(Lambda=Lambda, n_t=Lambda.shape[0] // 4)


def impulse_responses(grid: Grid, coeff: Coefficients) -> np.ndarray:
    """Boundary traces for a unit impulse at time node 1, per source side.

    Returns an array ``r[source, receiver, step]`` of shape (2, 2, 2 n_t).
    """
    n_ext = 2 * grid.n_t
    out = np.empty((2, 2, n_ext))
    for side in (0, 1):
        f = np.zeros(2 * n_ext)
        f[side * n_ext + 1] = 1.0
        field_ = wave_solve(grid, coeff, f, n_ext)
        out[side, 0] = field_.u[:, 0]
        out[side, 1] = field_.u[:, -1]
    return out


def _shift_block(response: np.ndarray) -> np.ndarray:
    # column j holds the response to an impulse at node j: response shifted by j - 1
    lagged = response[1:]
    col = np.concatenate([lagged, [0.0]])
    block = toeplitz(col, np.zeros_like(col))
    block[:, 0] = 0.0
    return block


def assemble_hyperbolic_nd_map(
    grid: Grid, coeff: Coefficients, cache_dir: str | os.PathLike | None = None
) -> HyperbolicNDMap:
    """Assemble the 4n_t x 4n_t map from two solves using time-shift invariance."""
    cache_path = meta_path = None
    if cache_dir is not None:
        key = cache_key(grid, coeff)
        cache_dir = Path(cache_dir)
        cache_path = cache_dir / f"lambda_{key}.npy"
        meta_path = cache_dir / f"lambda_{key}.json"
        if cache_path.exists():
            logger.info("loading cached Lambda from %s", cache_path)
            return HyperbolicNDMap.from_matrix(np.load(cache_path))

    r = impulse_responses(grid, coeff)
    blocks = [[_shift_block(r[src, rcv]) for src in (0, 1)] for rcv in (0, 1)]
    nd = HyperbolicNDMap(Lambda=np.block(blocks), n_t=grid.n_t)

    if cache_path is not None:
        cache_dir.mkdir(parents=True, exist_ok=True)
        tmp = cache_path.with_suffix(".tmp.npy")
        np.save(tmp, nd.Lambda)
        os.replace(tmp, cache_path)
        meta = {
            "version": CACHE_VERSION,
            "x_min": grid.x_min,
            "x_max": grid.x_max,
            "n_x": grid.n_x,
            "T": grid.horizon_T,
            "n_t": grid.n_t,
            "dt": grid.dt,
            "coefficients_sha256": coeff.digest(),
        }
        meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return nd


def cache_key(grid: Grid, coeff: Coefficients) -> str:
    h = hashlib.sha256()
    h.update(repr((CACHE_VERSION, grid.x_min, grid.x_max, grid.n_x, grid.horizon_T, grid.n_t)).encode())
    h.update(coeff.digest().encode())
    return h.hexdigest()[:20]
