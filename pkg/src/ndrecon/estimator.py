"""scikit-learn style front end for the reconstruction.

``NDMapReconstructor`` is fit on a discrete hyperbolic ND map (the only data
the method needs; the interior coefficients stay unknown) and predicts
Dirichlet boundary values for given Neumann data at the chosen frequency.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .operators import build_time_operators
from .reconstruction import assemble_K, build_regularized_system, reconstruct
from .wave import HyperbolicNDMap


def check_hyperbolic_map(X) -> HyperbolicNDMap:
    """Validate ``X`` as a 4n_t x 4n_t real matrix and wrap it."""
    if isinstance(X, HyperbolicNDMap):
        return X
    X = check_array(X, dtype=np.float64, ensure_min_samples=12, ensure_min_features=12)
    if X.shape[0] != X.shape[1] or X.shape[0] % 4:
        raise ValueError(f"expected a square matrix with size divisible by 4, got {X.shape}")
    return HyperbolicNDMap.from_matrix(X)


def check_boundary_data(F) -> np.ndarray:
    """Neumann data as an (n_samples, 2) array; a single pair is promoted."""
    F = np.asarray(F)
    if F.ndim == 1:
        F = F[None, :]
    F = check_array(F, dtype=None, ensure_min_features=2)
    if F.shape[1] != 2:
        raise ValueError(f"boundary data must have 2 columns (left, right), got {F.shape[1]}")
    if not np.issubdtype(F.dtype, np.number):
        raise ValueError("boundary data must be numeric")
    return F


class NDMapReconstructor(RegressorMixin, BaseEstimator):
    """Regularized reconstruction of the elliptic ND map from hyperbolic data.

    Parameters
    ----------
    t_final : float
        Observation time T. The map passed to ``fit`` lives on [0, 2T + dt].
    lam : complex
        Frequency at which the elliptic map is sought.
    alpha : float
        Tikhonov regularization parameter.
    """

    def __init__(self, t_final: float = 4.0, lam: complex = 0.0, alpha: float = 1e-4):
        self.t_final = t_final
        self.lam = lam
        self.alpha = alpha

    def fit(self, X, y=None):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not self.t_final > 0:
            raise ValueError(f"t_final must be positive, got {self.t_final}")
        nd = check_hyperbolic_map(X)
        ops = build_time_operators(nd.n_t, self.t_final)
        K = assemble_K(nd, ops)
        system = build_regularized_system(K, ops, self.lam, self.alpha)
        result = reconstruct(system, nd, ops)
        self.n_t_ = nd.n_t
        self.operators_ = ops
        self.connecting_operator_ = K
        self.system_ = system
        self.result_ = result
        self.map_ = result.L_reconstructed
        self.n_features_in_ = 2
        return self

    def predict(self, F) -> np.ndarray:
        """Dirichlet values ``(u(-1), u(1))`` for each row of Neumann data."""
        check_is_fitted(self, "map_")
        F = check_boundary_data(F)
        out = F @ self.map_.T
        return out.real if not np.iscomplexobj(self.map_) else out

    def controls(self, F) -> np.ndarray:
        """Boundary controls on (0, T), one stacked signal per row of ``F``."""
        check_is_fitted(self, "result_")
        F = check_boundary_data(F)
        return F @ self.result_.controls.T
