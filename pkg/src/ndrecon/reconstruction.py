"""Recover the elliptic ND map at frequency lambda from the hyperbolic ND map.

Pipeline: the connecting operator ``K = J Lam P_T^T - R Lam_T R J P_T^T`` gives
the Gram operator of the control map without touching the interior. The
Tikhonov-regularized normal system

    [(I + conj(lam) Z^2) K (I + lam int2) + S^T S + alpha I] fdd = S^T f

is solved once per boundary input, and ``S Lam_T fdd`` is the reconstructed
Dirichlet data. ``int2 @ fdd`` is the boundary control whose wave snapshot
at t = T approximates the elliptic solution.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ShapeMismatch
from .grid import Grid
from .linalg import LUFactors, condition_estimate, lu_factor, lu_solve
from .operators import OperatorSet, apply_S_transpose
from .wave import Coefficients, HyperbolicNDMap, wave_solve

CANONICAL_INPUTS = np.eye(2)


@dataclass(frozen=True)
class ConnectingOperator:
    K: np.ndarray = field(repr=False)

    def pairing(self, f, h, weights: np.ndarray) -> float:
        """Weighted inner product ``(f, K h)`` on (0, T) x boundary."""
        return np.sum(weights * np.conj(f) * (self.K @ h))


def assemble_K(nd: HyperbolicNDMap, ops: OperatorSet) -> ConnectingOperator:
    n = ops.n_t
    if nd.Lambda.shape != (4 * n, 4 * n) or ops.J.shape != (2 * n, 4 * n):
        raise ShapeMismatch(
            f"Lambda {nd.Lambda.shape} and J {ops.J.shape} are inconsistent with n_t={n}"
        )
    lam_pt = nd.Lambda @ ops.P_T.T
    jpt = ops.J @ ops.P_T.T
    K = ops.J @ lam_pt - ops.R @ (nd.Lambda_T @ (ops.R @ jpt))
    return ConnectingOperator(K=K)


@dataclass(frozen=True)
class RegularizedSystem:
    normal: np.ndarray = field(repr=False)
    lam: complex
    alpha: float
    lu: LUFactors = field(repr=False)

    def solve(self, rhs) -> np.ndarray:
        return lu_solve(self.lu, rhs)

    def condition_estimate(self) -> float:
        return condition_estimate(self.normal, self.lu)


def _real_if_possible(lam: complex):
    lam = complex(lam)
    return lam.real if lam.imag == 0 else lam


@dataclass(frozen=True)
class NormalTerms:
    """Frequency-independent products of the normal matrix for one K.

    Expanding the two factors gives
    ``K + conj(lam) Z^2 K + lam K int2 + |lam|^2 Z^2 K int2 + S^T S``, so a
    sweep over many frequencies pays for the dense products only once.
    """

    K: np.ndarray = field(repr=False)
    ZZK: np.ndarray = field(repr=False)
    K_int2: np.ndarray = field(repr=False)
    ZZK_int2: np.ndarray = field(repr=False)
    StS: np.ndarray = field(repr=False)

    @classmethod
    def from_operator(cls, K: ConnectingOperator, ops: OperatorSet) -> "NormalTerms":
        ZZK = ops.Z @ (ops.Z @ K.K)
        return cls(K=K.K, ZZK=ZZK, K_int2=K.K @ ops.int2, ZZK_int2=ZZK @ ops.int2, StS=ops.S.T @ ops.S)

    def assemble(self, lam: complex, alpha: float) -> np.ndarray:
        lam = _real_if_possible(lam)
        normal = self.K + self.StS
        if lam != 0:
            normal = normal + np.conj(lam) * self.ZZK + lam * self.K_int2 + abs(lam) ** 2 * self.ZZK_int2
        normal[np.diag_indices(normal.shape[0])] += alpha
        return normal


def normal_matrix(K: ConnectingOperator, ops: OperatorSet, lam: complex, alpha: float) -> np.ndarray:
    lam = _real_if_possible(lam)
    n2 = K.K.shape[0]
    eye = np.eye(n2)
    left = eye + np.conj(lam) * (ops.Z @ ops.Z)
    right = eye + lam * ops.int2
    normal = left @ K.K @ right + ops.S.T @ ops.S
    normal[np.diag_indices(n2)] += alpha
    return normal


def build_regularized_system(
    K: ConnectingOperator,
    ops: OperatorSet,
    lam: complex = 0.0,
    alpha: float = 1e-4,
    terms: NormalTerms | None = None,
) -> RegularizedSystem:
    """Assemble and LU-factor the normal matrix.

    Pass ``terms`` (built once from the same K) when sweeping many
    frequencies; the result agrees with the direct product to rounding.
    """
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    normal = terms.assemble(lam, alpha) if terms is not None else normal_matrix(K, ops, lam, alpha)
    return RegularizedSystem(normal=normal, lam=complex(lam), alpha=float(alpha), lu=lu_factor(normal))


@dataclass(frozen=True)
class ReconstructionResult:
    """Reconstructed 2x2 map plus the boundary controls that realize it.

    ``f_ddot`` and ``controls`` hold one column per canonical input (1, 0)
    and (0, 1); controls for any other Neumann data follow by linearity.
    """

    L_reconstructed: np.ndarray
    f_ddot: np.ndarray = field(repr=False)
    controls: np.ndarray = field(repr=False)
    snapshots: np.ndarray | None = field(default=None, repr=False)

    def control_for(self, f_bdry) -> np.ndarray:
        return self.controls @ np.asarray(f_bdry)

    def snapshot_for(self, f_bdry) -> np.ndarray:
        if self.snapshots is None:
            raise ValueError("reconstruction was run without snapshots")
        return self.snapshots @ np.asarray(f_bdry)


def solve_controls(sys: RegularizedSystem, ops: OperatorSet, f_bdry=CANONICAL_INPUTS) -> np.ndarray:
    """Solve the normal system for ``fdd`` with right-hand side ``S^T f``."""
    return sys.solve(apply_S_transpose(ops, f_bdry))


def control_snapshot(grid: Grid, coeff: Coefficients, control: np.ndarray) -> np.ndarray:
    """Wave state at t = T driven by ``control`` on (0, T) (zero afterwards)."""
    field_ = wave_solve(grid, coeff, control, n_steps=grid.n_t)
    return field_.u[grid.n_t - 1]


def reconstruct(
    sys: RegularizedSystem,
    nd: HyperbolicNDMap,
    ops: OperatorSet,
    with_snapshot: bool = False,
    grid: Grid | None = None,
    coeff: Coefficients | None = None,
) -> ReconstructionResult:
    f_ddot = solve_controls(sys, ops)
    L = ops.S @ (nd.Lambda_T @ f_ddot)
    controls = ops.int2 @ f_ddot
    snapshots = None
    if with_snapshot:
        if grid is None or coeff is None:
            raise ValueError("snapshots need the grid and coefficients")
        snapshots = np.column_stack([control_snapshot(grid, coeff, controls[:, k]) for k in range(2)])
    return ReconstructionResult(L_reconstructed=L, f_ddot=f_ddot, controls=controls, snapshots=snapshots)


def reconstruct_map(
    nd: HyperbolicNDMap, ops: OperatorSet, lam: complex = 0.0, alpha: float = 1e-4
) -> np.ndarray:
    """Shortcut: the reconstructed 2x2 map only."""
    K = assemble_K(nd, ops)
    sys = build_regularized_system(K, ops, lam, alpha)
    return reconstruct(sys, nd, ops).L_reconstructed


def weighted_frobenius(A: np.ndarray, w_out: np.ndarray, w_in: np.ndarray) -> float:
    """Frobenius norm of ``A`` between trapezoid-weighted L^2 spaces.

    Upper bound for the operator norm of the continuous operator ``A`` stands
    for: ``|| diag(sqrt(w_out)) A diag(1/sqrt(w_in)) ||_F``.
    """
    return float(np.linalg.norm(np.sqrt(w_out)[:, None] * A / np.sqrt(w_in)[None, :]))


def extended_weights(ops: OperatorSet) -> np.ndarray:
    w = np.full(2 * ops.n_t, ops.dt)
    w[0] = w[-1] = ops.dt / 2
    return np.concatenate([w, w])


@dataclass(frozen=True)
class StabilityProbe:
    dL: float
    dLambda: float
    dK: float
    ratio: float


def stability_probe(
    nd: HyperbolicNDMap,
    nd_perturbed: HyperbolicNDMap,
    ops: OperatorSet,
    lam: complex = 0.0,
    alpha: float = 1e-4,
) -> StabilityProbe:
    """Compare fixed-alpha reconstructions from two hyperbolic maps.

    ``dLambda`` and ``dK`` are weighted Frobenius norms (surrogates for the
    L^2 operator norms); ``dL`` is the plain Frobenius norm of the 2x2 difference.
    """
    if nd.Lambda.shape != nd_perturbed.Lambda.shape:
        raise ShapeMismatch("hyperbolic maps differ in shape")
    w_ext = extended_weights(ops)
    w = ops.quadrature_weights()
    dLambda = weighted_frobenius(nd_perturbed.Lambda - nd.Lambda, w_ext, w_ext)
    K = assemble_K(nd, ops)
    Kp = assemble_K(nd_perturbed, ops)
    dK = weighted_frobenius(Kp.K - K.K, w, w)
    L = reconstruct(build_regularized_system(K, ops, lam, alpha), nd, ops).L_reconstructed
    Lp = reconstruct(build_regularized_system(Kp, ops, lam, alpha), nd_perturbed, ops).L_reconstructed
    dL = float(np.linalg.norm(Lp - L))
    ratio = dL / dLambda if dLambda > 0 else float("nan")
    return StabilityProbe(dL=dL, dLambda=dLambda, dK=dK, ratio=ratio)
