"""Nuisance regressors for the doubly-robust scores.

The required backend is kernel ridge regression with a polynomial kernel,
solved in dual form. Because the moment functional here is ``Y * g``, the
Riesz representer coincides with the regression function itself, so one
fitted model serves both nuisance roles.

A small two-layer MLP backend exists as an optional alternative; it is
not needed by any reproduction target.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import ConfigError, IndexOutOfRange, ShapeMismatch, SingularSystem
from .panel import (
    Standardizer,
    apply_standardizer,
    fit_standardizer,
    identity_standardizer,
)

KERNEL_RIDGE_POLY = "kernel_ridge_poly"
MLP = "mlp"

_JITTERS = (0.0, 1e-10, 1e-8, 1e-6)


@dataclass(frozen=True)
class RegressorSpec:
    """Configuration of a nuisance regressor.

    ``kernel_gamma="auto"`` resolves to ``1/d`` at fit time, keeping the
    polynomial kernel's dot products scale-free in the feature count.
    """

    kind: str = KERNEL_RIDGE_POLY
    kernel_degree: int = 3
    kernel_coef0: float = 1.0
    ridge_lambda: float = 1.0
    kernel_gamma: "float | str" = "auto"
    mlp_hidden: int = 64
    mlp_epochs: int = 300
    mlp_learning_rate: float = 0.01
    mlp_seed: int = 0

    def __post_init__(self):
        if self.kind not in (KERNEL_RIDGE_POLY, MLP):
            raise ConfigError(f"unknown regressor kind {self.kind!r}")
        if not self.ridge_lambda > 0:
            raise ConfigError(f"ridge_lambda must be > 0, got {self.ridge_lambda}")
        if self.kernel_degree < 1:
            raise ConfigError(f"kernel_degree must be >= 1, got {self.kernel_degree}")
        if self.kernel_gamma != "auto" and not self.kernel_gamma > 0:
            raise ConfigError(
                f"kernel_gamma must be > 0 or 'auto', got {self.kernel_gamma}"
            )
        if self.mlp_hidden < 1 or self.mlp_epochs < 1 or self.mlp_learning_rate <= 0:
            raise ConfigError("invalid MLP training controls")

    def resolved_gamma(self, width: int) -> float:
        if self.kernel_gamma == "auto":
            return 1.0 / width
        return float(self.kernel_gamma)


def _validate_xy(features, targets):
    features = np.asarray(features, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if features.ndim != 2:
        raise ShapeMismatch(f"features must be 2-D, got shape {features.shape}")
    if targets.ndim != 1 or targets.shape[0] != features.shape[0]:
        raise ShapeMismatch(
            f"targets shape {targets.shape} does not match {features.shape[0]} rows"
        )
    if features.shape[0] < 1:
        raise ConfigError("need at least one training sample")
    if not (np.all(np.isfinite(features)) and np.all(np.isfinite(targets))):
        raise ConfigError("training data contains non-finite values")
    return features, targets


class KernelRidgeModel:
    """Polynomial-kernel ridge regressor in dual form.

    Stores the (standardized) training features and dual coefficients c
    solving ``(K + lambda I) c = y`` with
    ``K_ab = (gamma <x_a, x_b> + coef0)^degree``. Prediction and masked
    prediction are pure functions of the stored state.
    """

    def __init__(self, train_features, dual_coeffs, spec, standardizer, gamma):
        self.train_features = train_features
        self.dual_coeffs = dual_coeffs
        self.spec = spec
        self.standardizer = standardizer
        self.gamma = gamma

    @property
    def width(self) -> int:
        return self.train_features.shape[1]

    def _kernel_from_dots(self, dots: np.ndarray) -> np.ndarray:
        return (self.gamma * dots + self.spec.kernel_coef0) ** self.spec.kernel_degree

    def _standardize_queries(self, features) -> np.ndarray:
        features = np.asarray(features, dtype=np.float64)
        if features.ndim != 2 or features.shape[1] != self.width:
            raise ShapeMismatch(
                f"queries have shape {features.shape}, expected (*, {self.width})"
            )
        return apply_standardizer(self.standardizer, features)

    def predict(self, features) -> np.ndarray:
        z = self._standardize_queries(features)
        return self._kernel_from_dots(z @ self.train_features.T) @ self.dual_coeffs

    def predict_masked(self, features, masked_columns) -> np.ndarray:
        """Predict with the given columns zeroed in standardized space.

        Zeroing a standardized column evaluates the model at that column's
        training mean, which approximates marginalizing the variable out.
        """
        cols = _check_columns(masked_columns, self.width)
        z = self._standardize_queries(features).copy()
        z[:, cols] = 0.0
        return self._kernel_from_dots(z @ self.train_features.T) @ self.dual_coeffs

    def prepare_queries(self, features) -> "PreparedQueries":
        """Precompute the query/train dot products shared by all masks."""
        z = self._standardize_queries(features)
        return PreparedQueries(model=self, z=z, base_dots=z @ self.train_features.T)


class PreparedQueries:
    """Shared state for evaluating many masked variants of one query set.

    Masking only the query side changes each dot product by the masked
    columns' contribution, so each mask costs a thin rank-|mask| update
    instead of a full kernel evaluation.
    """

    def __init__(self, model, z, base_dots):
        self.model = model
        self.z = z
        self.base_dots = base_dots

    def predict(self) -> np.ndarray:
        return self.model._kernel_from_dots(self.base_dots) @ self.model.dual_coeffs

    def predict_masked(self, masked_columns) -> np.ndarray:
        cols = _check_columns(masked_columns, self.model.width)
        dots = self.base_dots - self.z[:, cols] @ self.model.train_features[:, cols].T
        return self.model._kernel_from_dots(dots) @ self.model.dual_coeffs


def _check_columns(masked_columns, width):
    cols = sorted(int(c) for c in masked_columns)
    for c in cols:
        if not 0 <= c < width:
            raise IndexOutOfRange(f"masked column {c} not in [0, {width})")
    return cols


def _fit_kernel_ridge(spec, features, targets, standardize):
    std = fit_standardizer(features) if standardize else identity_standardizer(
        features.shape[1]
    )
    z = apply_standardizer(std, features)
    gamma = spec.resolved_gamma(z.shape[1])
    k = (gamma * (z @ z.T) + spec.kernel_coef0) ** spec.kernel_degree
    n = k.shape[0]
    system = k + spec.ridge_lambda * np.eye(n)
    coeffs = None
    for jitter in _JITTERS:
        attempt = system if jitter == 0.0 else system + jitter * np.eye(n)
        try:
            factor = cho_factor(attempt, lower=True)
        except np.linalg.LinAlgError:
            continue
        coeffs = cho_solve(factor, targets)
        break
    if coeffs is None:
        raise SingularSystem(
            f"kernel system of size {n} is not positive definite even with "
            f"diagonal jitter up to {_JITTERS[-1]}"
        )
    y_norm = np.linalg.norm(targets)
    residual = np.linalg.norm(system @ coeffs - targets)
    if residual > 1e-6 * y_norm:
        raise SingularSystem(
            f"dual solve residual {residual:.3e} exceeds 1e-6 * ||y|| = "
            f"{1e-6 * y_norm:.3e}"
        )
    return KernelRidgeModel(
        train_features=z,
        dual_coeffs=coeffs,
        spec=spec,
        standardizer=std,
        gamma=gamma,
    )


class MlpModel:
    """Two-layer perceptron: tanh hidden layer, linear output.

    Trained by full-batch gradient descent on squared error for a fixed
    epoch budget; deterministic given the spec's seed.
    """

    def __init__(self, w1, b1, w2, b2, spec, standardizer):
        self.w1 = w1
        self.b1 = b1
        self.w2 = w2
        self.b2 = b2
        self.spec = spec
        self.standardizer = standardizer

    @property
    def width(self) -> int:
        return self.w1.shape[1]

    def _standardize_queries(self, features) -> np.ndarray:
        features = np.asarray(features, dtype=np.float64)
        if features.ndim != 2 or features.shape[1] != self.width:
            raise ShapeMismatch(
                f"queries have shape {features.shape}, expected (*, {self.width})"
            )
        return apply_standardizer(self.standardizer, features)

    def _forward(self, z) -> np.ndarray:
        return np.tanh(z @ self.w1.T + self.b1) @ self.w2 + self.b2

    def predict(self, features) -> np.ndarray:
        return self._forward(self._standardize_queries(features))

    def predict_masked(self, features, masked_columns) -> np.ndarray:
        cols = _check_columns(masked_columns, self.width)
        z = self._standardize_queries(features).copy()
        z[:, cols] = 0.0
        return self._forward(z)

    def prepare_queries(self, features) -> "PreparedMlpQueries":
        return PreparedMlpQueries(self, self._standardize_queries(features))


class PreparedMlpQueries:
    def __init__(self, model, z):
        self.model = model
        self.z = z

    def predict(self) -> np.ndarray:
        return self.model._forward(self.z)

    def predict_masked(self, masked_columns) -> np.ndarray:
        cols = _check_columns(masked_columns, self.model.width)
        z = self.z.copy()
        z[:, cols] = 0.0
        return self.model._forward(z)


def _fit_mlp(spec, features, targets, standardize):
    std = fit_standardizer(features) if standardize else identity_standardizer(
        features.shape[1]
    )
    z = apply_standardizer(std, features)
    n, d = z.shape
    h = spec.mlp_hidden
    rng = np.random.default_rng(spec.mlp_seed)
    w1 = rng.normal(0.0, 1.0 / math.sqrt(max(d, 1)), size=(h, d))
    b1 = np.zeros(h)
    w2 = rng.normal(0.0, 1.0 / math.sqrt(h), size=h)
    b2 = float(targets.mean())
    lr = spec.mlp_learning_rate
    for _ in range(spec.mlp_epochs):
        hidden = np.tanh(z @ w1.T + b1)
        pred = hidden @ w2 + b2
        err = pred - targets  # (n,)
        grad_out = 2.0 * err / n
        gw2 = hidden.T @ grad_out
        gb2 = grad_out.sum()
        back = np.outer(grad_out, w2) * (1.0 - hidden**2)
        gw1 = back.T @ z
        gb1 = back.sum(axis=0)
        w1 -= lr * gw1
        b1 -= lr * gb1
        w2 -= lr * gw2
        b2 -= lr * gb2
    return MlpModel(w1=w1, b1=b1, w2=w2, b2=b2, spec=spec, standardizer=std)


def fit(spec: RegressorSpec, features, targets, standardize: bool = False):
    """Fit a nuisance regressor.

    Parameters
    ----------
    spec : RegressorSpec
    features : (n, d) array
    targets : (n,) array
    standardize : bool
        When true, a standardizer is fit on these rows and stored with
        the model; predictions standardize queries internally. When
        false, the model carries an identity standardizer and works on
        raw features.
    """
    features, targets = _validate_xy(features, targets)
    if spec.kind == KERNEL_RIDGE_POLY:
        return _fit_kernel_ridge(spec, features, targets, standardize)
    return _fit_mlp(spec, features, targets, standardize)


def predict(model, features) -> np.ndarray:
    return model.predict(features)


def predict_masked(model, features, masked_columns) -> np.ndarray:
    return model.predict_masked(features, masked_columns)
