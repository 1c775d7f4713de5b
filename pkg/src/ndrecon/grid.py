"""Space-time discretization of [x_min, x_max] x [0, T].

The spatial grid is uniform with ``n_x`` nodes. The time step is chosen from
the CFL bound ``dt <= 4 dx / (5 max c)`` and then shrunk so that the last of
the ``n_t`` temporal nodes lands exactly on ``T``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np
from scipy.integrate import trapezoid

from .exceptions import DegenerateGrid, InsufficientObservationTime, NonPositiveSpeed

CoefficientLike = Union[float, Callable[[np.ndarray], np.ndarray], np.ndarray]

CFL_FACTOR = 0.8


def sample_coefficient(coef: CoefficientLike, x: np.ndarray) -> np.ndarray:
    """Evaluate a coefficient given as a constant, callable or nodal samples."""
    if callable(coef):
        values = np.asarray(coef(x), dtype=float)
        values = np.broadcast_to(values, x.shape).copy()
    else:
        values = np.asarray(coef, dtype=float)
        if values.ndim == 0:
            values = np.full(x.shape, float(values))
        elif values.shape != x.shape:
            raise DegenerateGrid(
                f"coefficient samples have shape {values.shape}, expected {x.shape}"
            )
    if not np.all(np.isfinite(values)):
        raise ValueError("coefficient contains non-finite values")
    return values


@dataclass(frozen=True)
class Grid:
    """Uniform grid on the interval and on [0, T]; immutable once built."""

    x_min: float
    x_max: float
    n_x: int
    dx: float
    horizon_T: float
    n_t: int
    dt: float
    c_max: float
    tau_max: float
    x_nodes: np.ndarray = field(repr=False)
    t_nodes: np.ndarray = field(repr=False)

    @property
    def t_star(self) -> float:
        """Largest distance to the boundary in travel time (tau_max / 2 in 1D)."""
        return self.tau_max / 2.0

    @property
    def n_ext(self) -> int:
        """Temporal nodes per boundary side on the extended axis [0, 2T + dt]."""
        return 2 * self.n_t

    @property
    def t_ext_nodes(self) -> np.ndarray:
        return np.arange(self.n_ext) * self.dt

    @property
    def cfl_dt(self) -> float:
        return CFL_FACTOR * self.dx / self.c_max

    def check_observation_time(self) -> None:
        """Gate for reconstruction runs: require ``tau_max < T``.

        Values within 1% of ``T`` only warn, since ``tau_max`` carries a
        quadrature error.
        """
        T = self.horizon_T
        if self.tau_max > 1.01 * T:
            raise InsufficientObservationTime(
                f"tau_max={self.tau_max:.6g} exceeds T={T:.6g}; the control map is not onto"
            )
        if self.tau_max >= 0.99 * T:
            warnings.warn(
                f"tau_max={self.tau_max:.6g} is within 1% of T={T:.6g}",
                RuntimeWarning,
                stacklevel=2,
            )


def build_grid(
    x_min: float = -1.0,
    x_max: float = 1.0,
    n_x: int = 401,
    T: float = 4.0,
    c: CoefficientLike = 1.0,
) -> Grid:
    if n_x < 3:
        raise DegenerateGrid(f"n_x must be >= 3, got {n_x}")
    if not x_max > x_min:
        raise DegenerateGrid("x_max must exceed x_min")
    if not T > 0:
        raise DegenerateGrid("T must be positive")

    x = x_min + np.arange(n_x) * ((x_max - x_min) / (n_x - 1))
    x[-1] = x_max
    dx = (x_max - x_min) / (n_x - 1)
    c_vals = sample_coefficient(c, x)
    if c_vals.min() <= 0:
        raise NonPositiveSpeed(f"wave speed must be positive, min is {c_vals.min()}")

    c_max = float(c_vals.max())
    dt0 = CFL_FACTOR * dx / c_max
    # guard against T/dt0 = k + O(eps) rounding up to an extra node
    ratio = T / dt0
    n_steps = round(ratio)
    if n_steps < ratio * (1 - 1e-13):
        n_steps = math.ceil(ratio)
    n_t = max(n_steps, 2) + 1
    dt = T / (n_t - 1)
    t = np.arange(n_t) * dt
    t[-1] = T

    tau_max = float(trapezoid(1.0 / c_vals, x))
    x.flags.writeable = False
    t.flags.writeable = False
    return Grid(
        x_min=float(x_min),
        x_max=float(x_max),
        n_x=int(n_x),
        dx=float(dx),
        horizon_T=float(T),
        n_t=int(n_t),
        dt=float(dt),
        c_max=c_max,
        tau_max=tau_max,
        x_nodes=x,
        t_nodes=t,
    )
