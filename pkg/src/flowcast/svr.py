"""Epsilon-insensitive support vector regression trained by SMO.

The working-pair solver lives in a compiled extension when available
(``flowcast._smo``) with a numpy implementation as fallback; set
``FLOWCAST_PURE_PYTHON=1`` to force the fallback.  Linear and RBF
kernels are supported; hyperparameters can be tuned by an inner
cross-validated grid search scored on validation MAPE.
"""

from __future__ import annotations

import os
import random
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from . import _smo_py

if os.environ.get("FLOWCAST_PURE_PYTHON"):
    _smo_impl = _smo_py
    BACKEND = "python"
else:
    try:
        from . import _smo as _smo_impl  # type: ignore[attr-defined]
        BACKEND = "compiled"
    except ImportError:
        _smo_impl = _smo_py
        BACKEND = "python"

LINEAR = "linear"
RBF = "rbf"

DEFAULT_C_GRID = (0.1, 1.0, 10.0, 100.0)
DEFAULT_GAMMA_GRID = (0.01, 0.1, 1.0)
DEFAULT_TOL = 1e-3
DEFAULT_MAX_ITER = 10 ** 6


class SolverError(RuntimeError):
    """Raised when training cannot produce a feasible model."""


@dataclass(frozen=True)
class Kernel:
    """Symmetric positive kernel: linear dot product or Gaussian RBF."""

    kind: str = RBF
    gamma: float | None = None  # RBF bandwidth, required for kind="rbf"

    def __post_init__(self):
        if self.kind not in (LINEAR, RBF):
            raise ValueError(f"unknown kernel {self.kind!r}")
        if self.kind == RBF and (self.gamma is None or self.gamma <= 0):
            raise ValueError("rbf kernel requires gamma > 0")

    def matrix(self, X: np.ndarray, Z: np.ndarray | None = None) -> np.ndarray:
        """Gram matrix k(X_i, Z_j); Z defaults to X."""
        X = np.asarray(X, dtype=float)
        Z = X if Z is None else np.asarray(Z, dtype=float)
        if self.kind == LINEAR:
            return X @ Z.T
        sq = (X * X).sum(axis=1)[:, None] + (Z * Z).sum(axis=1)[None, :] - 2.0 * (X @ Z.T)
        np.maximum(sq, 0.0, out=sq)
        return np.exp(-self.gamma * sq)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "gamma": self.gamma}

    @classmethod
    def from_dict(cls, data: dict) -> "Kernel":
        return cls(data["kind"], data.get("gamma"))


@dataclass
class SVRModel:
    """Support vector expansion f(x) = sum_i coef_i k(sv_i, x) + bias."""

    kernel: Kernel
    C: float
    epsilon: float
    support_vectors: np.ndarray
    coef: np.ndarray  # net dual coefficients, each in [-C, C]
    bias: float
    meta: dict = field(default_factory=dict)

    @property
    def dimension(self) -> int:
        return self.support_vectors.shape[1]

    def predict(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        if len(self.coef) == 0:  # flat fit: dimension is unconstrained
            return self.bias
        if x.shape != (self.dimension,):
            raise ValueError(f"expected {self.dimension} features, got {x.shape}")
        k = self.kernel.matrix(self.support_vectors, x[None, :])[:, 0]
        return float(self.coef @ k + self.bias)

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if len(self.coef) == 0:
            return np.full(len(X), self.bias)
        return self.kernel.matrix(X, self.support_vectors) @ self.coef + self.bias

    def to_dict(self) -> dict:
        return {
            "kernel": self.kernel.to_dict(),
            "C": self.C,
            "epsilon": self.epsilon,
            "support_vectors": self.support_vectors.tolist(),
            "coef": self.coef.tolist(),
            "bias": self.bias,
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SVRModel":
        sv = np.asarray(data["support_vectors"], dtype=float)
        if sv.ndim != 2:
            sv = sv.reshape(0, 0) if sv.size == 0 else sv
        return cls(
            kernel=Kernel.from_dict(data["kernel"]),
            C=data["C"],
            epsilon=data["epsilon"],
            support_vectors=sv,
            coef=np.asarray(data["coef"], dtype=float),
            bias=data["bias"],
            meta=dict(data.get("meta", {})),
        )


def default_epsilon(y: np.ndarray) -> float:
    """Tube width default: 1% of the target standard deviation."""
    return 0.01 * float(np.std(np.asarray(y, dtype=float)))


def train_svr(X, y, kernel: Kernel, C: float, epsilon: float | None = None,
              tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
              record_objective: bool = False) -> SVRModel:
    """Fit an SVR by SMO; deterministic for fixed inputs.

    The returned model's meta records iterations, the final KKT gap,
    whether the solver converged, and the (exactly zero) equality
    constraint residual.  Dual feasibility is checked before returning.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError("X must be (n, d) with matching y")
    if len(y) == 0:
        raise ValueError("training set is empty")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise ValueError("training data contains non-finite values")
    if C <= 0:
        raise ValueError("C must be > 0")
    if epsilon is None:
        epsilon = default_epsilon(y)
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    if tol <= 0:
        raise ValueError("tol must be > 0")

    K = kernel.matrix(X)
    beta, bias, iterations, gap, objectives = _smo_impl.solve(
        K, y, float(C), float(epsilon), float(tol), int(max_iter), record_objective
    )

    net_sum = float(beta.sum())
    if abs(net_sum) > 1e-2:
        raise SolverError(f"equality constraint violated: sum of coefficients = {net_sum}")
    if beta.max(initial=0.0) > C + 1e-9 or beta.min(initial=0.0) < -C - 1e-9:
        raise SolverError("box constraint violated")

    mask = beta != 0.0
    meta = {
        "iterations": int(iterations),
        "gap": float(gap),
        "converged": bool(gap <= tol),
        "tol": float(tol),
        "n_train": int(len(y)),
        "constraint_residual": net_sum,
        "backend": BACKEND,
    }
    if record_objective:
        meta["objectives"] = [float(v) for v in objectives]
    return SVRModel(
        kernel=kernel,
        C=float(C),
        epsilon=float(epsilon),
        support_vectors=X[mask].copy(),
        coef=beta[mask].copy(),
        bias=float(bias),
        meta=meta,
    )


def _validation_mape(model: SVRModel, X, y) -> float | None:
    keep = y != 0
    if not keep.any():
        return None
    pred = model.predict_batch(X[keep])
    return float(np.mean(np.abs((y[keep] - pred) / y[keep]))) * 100.0


def grid_search(X, y, folds: int, C_grid=DEFAULT_C_GRID, gamma_grid=DEFAULT_GAMMA_GRID,
                epsilon: float | None = None, tol: float = DEFAULT_TOL,
                max_iter: int = DEFAULT_MAX_ITER, seed: int = 0):
    """Pick (C, gamma) for an RBF fit by inner k-fold validation MAPE.

    Ties prefer smaller C, then smaller gamma.  Returns the winning
    (C, gamma, model) with the model refit on the full training set.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if folds < 2:
        raise ValueError("grid search needs at least 2 folds")
    if len(y) < folds:
        raise ValueError(f"training set of {len(y)} examples is smaller than {folds} folds")
    if not C_grid or not gamma_grid:
        raise ValueError("grids must be non-empty")

    indices = list(range(len(y)))
    random.Random(seed).shuffle(indices)
    chunks = [np.asarray(part) for part in np.array_split(np.asarray(indices), folds)]

    best = None
    for C, gamma in product(sorted(C_grid), sorted(gamma_grid)):
        kernel = Kernel(RBF, gamma)
        scores = []
        for held in range(folds):
            train_idx = np.concatenate([chunks[f] for f in range(folds) if f != held])
            model = train_svr(X[train_idx], y[train_idx], kernel, C, epsilon,
                              tol=tol, max_iter=max_iter)
            score = _validation_mape(model, X[chunks[held]], y[chunks[held]])
            if score is not None:
                scores.append(score)
        if not scores:
            raise SolverError("no validation fold had non-zero targets")
        mean_score = float(np.mean(scores))
        key = (mean_score, C, gamma)
        if best is None or key < best[0]:
            best = (key, C, gamma)
    _, C, gamma = best
    model = train_svr(X, y, Kernel(RBF, gamma), C, epsilon, tol=tol, max_iter=max_iter)
    return C, gamma, model
