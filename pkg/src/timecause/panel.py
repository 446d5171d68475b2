"""Panel data model, lag-window design construction, standardization, folds.

A :class:`Panel` is a collection of independently observed trajectories of
the same set of variables. Everything downstream (regression, causal
testing) consumes the :class:`LaggedDesign` built from it: one regression
row per usable time step, whose features are the previous ``lag`` values
of every variable.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    ConfigError,
    EmptyPanel,
    IndexOutOfRange,
    LagTooLarge,
    ShapeMismatch,
    TooFewTrajectories,
)


def _readonly(arr: np.ndarray) -> np.ndarray:
    out = np.asarray(arr)
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class Panel:
    """A set of trajectories over the same (target + covariate) variables.

    Parameters
    ----------
    trajectories : tuple of ndarray
        Each of shape ``(T_r, m+1)``, time-major: row ``t`` holds all
        variables at time ``t``. Lengths may differ across trajectories.
    variable_names : tuple of str
        One unique name per column.
    target_index : int
        Column of the default target variable.
    """

    trajectories: tuple
    variable_names: tuple
    target_index: int = 0

    def __post_init__(self):
        trajs = tuple(
            _readonly(np.array(t, dtype=np.float64, order="C"))
            for t in self.trajectories
        )
        object.__setattr__(self, "trajectories", trajs)
        object.__setattr__(self, "variable_names", tuple(self.variable_names))
        if not trajs:
            raise EmptyPanel("panel has no trajectories")
        width = trajs[0].shape[1] if trajs[0].ndim == 2 else -1
        if width < 2:
            raise ConfigError("panel needs at least 2 variables (target + 1 covariate)")
        for r, t in enumerate(trajs):
            if t.ndim != 2 or t.shape[1] != width:
                raise ShapeMismatch(
                    f"trajectory {r} has shape {t.shape}, expected (*, {width})"
                )
            if t.shape[0] < 2:
                raise ConfigError(f"trajectory {r} has length {t.shape[0]}, need >= 2")
            if not np.all(np.isfinite(t)):
                raise ConfigError(f"trajectory {r} contains non-finite values")
        if len(self.variable_names) != width:
            raise ConfigError(
                f"{len(self.variable_names)} variable names for {width} columns"
            )
        if len(set(self.variable_names)) != width:
            raise ConfigError("variable names must be unique")
        if not 0 <= self.target_index < width:
            raise IndexOutOfRange(f"target_index {self.target_index} not in [0, {width})")

    @property
    def n_variables(self) -> int:
        return self.trajectories[0].shape[1]

    @property
    def n_covariates(self) -> int:
        return self.n_variables - 1

    @property
    def n_trajectories(self) -> int:
        return len(self.trajectories)

    @property
    def lengths(self) -> tuple:
        return tuple(t.shape[0] for t in self.trajectories)


@dataclass(frozen=True, eq=False)
class LaggedDesign:
    """Regression matrix/target built from a panel at a fixed lag.

    Column layout is deterministic: the value of variable ``v`` at lag
    ``k`` (i.e. time ``T - k``) lives in column ``(k-1)*(m+1) + v``. This
    lets per-variable column masks be computed by pure arithmetic.
    """

    features: np.ndarray
    targets: np.ndarray
    lag: int
    n_variables: int
    row_origin: np.ndarray  # (N, 2) of (trajectory index, time index T)

    def __post_init__(self):
        object.__setattr__(self, "features", _readonly(self.features))
        object.__setattr__(self, "targets", _readonly(self.targets))
        object.__setattr__(self, "row_origin", _readonly(self.row_origin))

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def width(self) -> int:
        return self.features.shape[1]

    def column_of(self, lag_k: int, variable: int) -> int:
        """Column index holding variable ``variable`` at lag ``lag_k``."""
        if not 1 <= lag_k <= self.lag:
            raise IndexOutOfRange(f"lag {lag_k} not in [1, {self.lag}]")
        if not 0 <= variable < self.n_variables:
            raise IndexOutOfRange(
                f"variable {variable} not in [0, {self.n_variables})"
            )
        return (lag_k - 1) * self.n_variables + variable


def build_lagged_design(panel: Panel, target_index: int, lag: int) -> LaggedDesign:
    """Unroll a panel into one regression row per predictable time step.

    For each trajectory, rows exist only for times ``T >= lag``: the first
    ``lag`` steps serve as context and never as targets. No row's feature
    window crosses a trajectory boundary.

    Raises
    ------
    LagTooLarge
        If ``lag`` is as long as some trajectory.
    EmptyPanel
        If the panel holds no trajectories (guarded at Panel construction).
    """
    if lag < 1:
        raise ConfigError(f"lag must be >= 1, got {lag}")
    nv = panel.n_variables
    if not 0 <= target_index < nv:
        raise IndexOutOfRange(f"target_index {target_index} not in [0, {nv})")
    for r, t_len in enumerate(panel.lengths):
        if lag >= t_len:
            raise LagTooLarge(
                f"lag {lag} >= length {t_len} of trajectory {r}; no rows remain"
            )
    feature_blocks = []
    target_blocks = []
    origin_blocks = []
    for r, traj in enumerate(panel.trajectories):
        t_len = traj.shape[0]
        n_rows = t_len - lag
        block = np.empty((n_rows, lag * nv))
        for k in range(1, lag + 1):
            block[:, (k - 1) * nv : k * nv] = traj[lag - k : t_len - k, :]
        feature_blocks.append(block)
        target_blocks.append(traj[lag:, target_index])
        origin = np.empty((n_rows, 2), dtype=np.int64)
        origin[:, 0] = r
        origin[:, 1] = np.arange(lag, t_len)
        origin_blocks.append(origin)
    return LaggedDesign(
        features=np.vstack(feature_blocks),
        targets=np.concatenate(target_blocks),
        lag=lag,
        n_variables=nv,
        row_origin=np.vstack(origin_blocks),
    )


def mask_columns_for(design: LaggedDesign, variable: int) -> set:
    """All feature columns holding lagged copies of one variable."""
    if not 0 <= variable < design.n_variables:
        raise IndexOutOfRange(
            f"variable {variable} not in [0, {design.n_variables})"
        )
    return {design.column_of(k, variable) for k in range(1, design.lag + 1)}


@dataclass(frozen=True, eq=False)
class Standardizer:
    """Per-column affine transform to zero mean, unit variance.

    Columns with zero variance keep ``std = 1`` and are flagged in
    ``constant_columns`` so masking them stays a no-op.
    """

    means: np.ndarray
    stds: np.ndarray
    constant_columns: np.ndarray  # bool per column

    def __post_init__(self):
        object.__setattr__(self, "means", _readonly(self.means))
        object.__setattr__(self, "stds", _readonly(self.stds))
        object.__setattr__(self, "constant_columns", _readonly(self.constant_columns))


def identity_standardizer(width: int) -> Standardizer:
    """Standardizer that leaves data untouched (for unstandardized fits)."""
    return Standardizer(
        means=np.zeros(width),
        stds=np.ones(width),
        constant_columns=np.zeros(width, dtype=bool),
    )


def fit_standardizer(features: np.ndarray, rows=None) -> Standardizer:
    """Estimate column means/stds on a row subset (default: all rows)."""
    features = np.asarray(features, dtype=np.float64)
    sub = features if rows is None else features[rows]
    if sub.shape[0] == 0:
        raise ConfigError("cannot fit a standardizer on an empty row subset")
    means = sub.mean(axis=0)
    stds = sub.std(axis=0)
    constant = stds == 0.0
    stds = np.where(constant, 1.0, stds)
    return Standardizer(means=means, stds=stds, constant_columns=constant)


def apply_standardizer(s: Standardizer, features: np.ndarray) -> np.ndarray:
    features = np.asarray(features, dtype=np.float64)
    if features.shape[1] != s.means.shape[0]:
        raise ShapeMismatch(
            f"features have {features.shape[1]} columns, standardizer has "
            f"{s.means.shape[0]}"
        )
    return (features - s.means) / s.stds


def invert_standardizer(s: Standardizer, features: np.ndarray) -> np.ndarray:
    features = np.asarray(features, dtype=np.float64)
    if features.shape[1] != s.means.shape[0]:
        raise ShapeMismatch(
            f"features have {features.shape[1]} columns, standardizer has "
            f"{s.means.shape[0]}"
        )
    return features * s.stds + s.means


@dataclass(frozen=True, eq=False)
class FoldAssignment:
    """Trajectory-level fold labels for cross-fitting."""

    k: int
    trajectory_to_fold: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "trajectory_to_fold", _readonly(self.trajectory_to_fold)
        )

    def trajectories_in(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.trajectory_to_fold == fold)


def assign_folds(n_trajectories: int, k: int, seed) -> FoldAssignment:
    """Split trajectories uniformly at random into k balanced folds.

    Deterministic for a given seed; fold sizes differ by at most one
    trajectory. Folds are assigned at trajectory granularity so that
    temporally adjacent rows never straddle a train/held-out split.
    """
    if k < 2:
        raise ConfigError(f"need at least 2 folds, got {k}")
    if n_trajectories < k:
        raise TooFewTrajectories(
            f"{n_trajectories} trajectories cannot fill {k} folds"
        )
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(90,)))
    perm = rng.permutation(n_trajectories)
    labels = np.empty(n_trajectories, dtype=np.int64)
    labels[perm] = np.arange(n_trajectories) % k
    return FoldAssignment(k=k, trajectory_to_fold=labels)
