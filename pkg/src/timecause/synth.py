"""Synthetic benchmark generator with known lagged causal structure.

Covariates and the target evolve through randomly-initialized one-hidden-
layer tanh networks applied to their lagged parents, keeping every
noiseless signal inside ``[-signal_scale, signal_scale]``. The covariate
structure is a Bernoulli(edge_prob) tensor over (lag, cause, effect), the
target structure a Bernoulli matrix over (lag, cause); the ground truth
is returned alongside the data.

Randomness uses counter-based Philox streams split by purpose:

===================  =========================================
spawn key            draws (in order)
===================  =========================================
(0,)                 structure: sigma (delta, m, m), sigma_y (delta, m)
(1, j)               transform weights for covariate j: W1, b1, W2, b2
(2,)                 transform weights for the target, same order
(3, r)               trajectory r uniforms, shape (T, m+1) in [-s, s]
(4, r)               trajectory r standard normals, shape (T, m+1)
===================  =========================================

Noise draws live at fixed (time, variable) positions in their trajectory
stream, independent of the sampled structure, so flipping a single
structure entry perturbs exactly the series that entry feeds.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._recursion import run_recursion
from .errors import ConfigError, ShapeMismatch
from .panel import Panel

_STRUCTURE_KEY = 0
_COVARIATE_WEIGHTS_KEY = 1
_TARGET_WEIGHTS_KEY = 2
_UNIFORM_KEY = 3
_GAUSS_KEY = 4


def _stream(seed, *key) -> np.random.Generator:
    seq = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(seq))


@dataclass(frozen=True)
class SynthConfig:
    """Full description of the synthetic data-generating process."""

    m: int
    delta: int
    timesteps: int
    n_traj: int
    nsr: float
    edge_prob: float = 0.5
    hidden_units: int = 200
    signal_scale: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if self.m < 1:
            raise ConfigError(f"need at least one covariate, got m={self.m}")
        if self.delta < 1:
            raise ConfigError(f"lag must be >= 1, got {self.delta}")
        if self.timesteps <= self.delta:
            raise ConfigError(
                f"timesteps ({self.timesteps}) must exceed lag ({self.delta})"
            )
        if self.n_traj < 1:
            raise ConfigError("need at least one trajectory")
        if self.nsr < 0:
            raise ConfigError(f"nsr must be >= 0, got {self.nsr}")
        if not 0.0 <= self.edge_prob <= 1.0:
            raise ConfigError(f"edge_prob must be in [0, 1], got {self.edge_prob}")
        if self.hidden_units < 1:
            raise ConfigError("hidden_units must be >= 1")
        if self.signal_scale <= 0:
            raise ConfigError("signal_scale must be > 0")


@dataclass(frozen=True, eq=False)
class AdjacencyTensor:
    """Ground-truth lagged structure.

    ``sigma[k-1, i, j] = 1`` iff covariate i at lag k causes covariate j;
    ``sigma_y[k-1, j] = 1`` iff covariate j at lag k causes the target.
    All edges point at least one step forward in time.
    """

    sigma: np.ndarray  # (delta, m, m) of 0/1
    sigma_y: np.ndarray  # (delta, m) of 0/1

    def __post_init__(self):
        sigma = np.asarray(self.sigma, dtype=np.uint8)
        sigma_y = np.asarray(self.sigma_y, dtype=np.uint8)
        if sigma.ndim != 3 or sigma.shape[1] != sigma.shape[2]:
            raise ShapeMismatch(f"sigma must be (delta, m, m), got {sigma.shape}")
        if sigma_y.shape != (sigma.shape[0], sigma.shape[1]):
            raise ShapeMismatch(
                f"sigma_y shape {sigma_y.shape} does not match sigma {sigma.shape}"
            )
        if not (np.all(sigma <= 1) and np.all(sigma_y <= 1)):
            raise ConfigError("adjacency entries must be 0/1")
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "sigma_y", sigma_y)

    @property
    def delta(self) -> int:
        return self.sigma.shape[0]

    @property
    def m(self) -> int:
        return self.sigma.shape[1]

    def target_parents(self) -> np.ndarray:
        """Covariate indices that cause the target at any lag."""
        return np.flatnonzero(self.sigma_y.any(axis=0))

    def covariate_edges(self) -> set:
        """Summary edges (i, j) between covariates, any lag."""
        any_lag = self.sigma.any(axis=0)
        return {(int(i), int(j)) for i, j in zip(*np.nonzero(any_lag))}


@dataclass(frozen=True, eq=False)
class MlpTransform:
    """One-hidden-layer tanh network producing values in [-scale, scale].

    ``parents`` lists the (lag, covariate index) pairs feeding the input
    slots, in lag-major then index order; ``input_dim == len(parents)``.
    """

    parents: tuple  # of (lag, covariate index)
    w1: np.ndarray  # (hidden, input_dim)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (hidden,)
    b2: float
    scale: float

    @property
    def input_dim(self) -> int:
        return len(self.parents)

    @property
    def parentless(self) -> bool:
        return self.input_dim == 0

    def __call__(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.input_dim:
            raise ShapeMismatch(
                f"transform expects {self.input_dim} inputs, got {x.shape[1]}"
            )
        hidden = np.tanh(x @ self.w1.T + self.b1)
        return self.scale * np.tanh(hidden @ self.w2 + self.b2)


def sample_structure(config: SynthConfig) -> AdjacencyTensor:
    """Draw the causal structure: i.i.d. Bernoulli(edge_prob) entries."""
    rng = _stream(config.seed, _STRUCTURE_KEY)
    sigma = rng.random((config.delta, config.m, config.m)) < config.edge_prob
    sigma_y = rng.random((config.delta, config.m)) < config.edge_prob
    return AdjacencyTensor(sigma=sigma, sigma_y=sigma_y)


def _parents_of_covariate(structure, j) -> tuple:
    return tuple(
        (k, int(i))
        for k in range(1, structure.delta + 1)
        for i in range(structure.m)
        if structure.sigma[k - 1, i, j]
    )


def _parents_of_target(structure) -> tuple:
    return tuple(
        (k, int(j))
        for k in range(1, structure.delta + 1)
        for j in range(structure.m)
        if structure.sigma_y[k - 1, j]
    )


def _draw_transform(rng, parents, hidden, scale) -> MlpTransform:
    input_dim = len(parents)
    if input_dim == 0:
        return MlpTransform(
            parents=(),
            w1=np.zeros((hidden, 0)),
            b1=np.zeros(hidden),
            w2=np.zeros(hidden),
            b2=0.0,
            scale=scale,
        )
    in_std = 1.0 / math.sqrt(input_dim)
    out_std = 1.0 / math.sqrt(hidden)
    return MlpTransform(
        parents=parents,
        w1=rng.normal(0.0, in_std, size=(hidden, input_dim)),
        b1=rng.normal(0.0, in_std, size=hidden),
        w2=rng.normal(0.0, out_std, size=hidden),
        b2=float(rng.normal(0.0, out_std)),
        scale=scale,
    )


def init_transforms(structure: AdjacencyTensor, config: SynthConfig) -> list:
    """Structural functions for the m covariates plus the target (last)."""
    if structure.delta != config.delta or structure.m != config.m:
        raise ShapeMismatch(
            f"structure is ({structure.delta}, {structure.m}), config wants "
            f"({config.delta}, {config.m})"
        )
    transforms = []
    for j in range(config.m):
        rng = _stream(config.seed, _COVARIATE_WEIGHTS_KEY, j)
        transforms.append(
            _draw_transform(
                rng, _parents_of_covariate(structure, j),
                config.hidden_units, config.signal_scale,
            )
        )
    rng = _stream(config.seed, _TARGET_WEIGHTS_KEY)
    transforms.append(
        _draw_transform(
            rng, _parents_of_target(structure),
            config.hidden_units, config.signal_scale,
        )
    )
    return transforms


def _pack_transforms(transforms, hidden):
    """Pad per-variable parents/weights to a common width for the kernel."""
    n_vars = len(transforms)
    max_par = max(1, max(t.input_dim for t in transforms))
    n_parents = np.zeros(n_vars, dtype=np.int64)
    par_lag = np.zeros((n_vars, max_par), dtype=np.int64)
    par_var = np.zeros((n_vars, max_par), dtype=np.int64)
    w1 = np.zeros((n_vars, hidden, max_par))
    b1 = np.zeros((n_vars, hidden))
    w2 = np.zeros((n_vars, hidden))
    b2 = np.zeros(n_vars)
    for v, tr in enumerate(transforms):
        npar = tr.input_dim
        n_parents[v] = npar
        if npar == 0:
            continue
        par_lag[v, :npar] = [k for k, _ in tr.parents]
        par_var[v, :npar] = [i for _, i in tr.parents]
        w1[v, :, :npar] = tr.w1
        b1[v] = tr.b1
        w2[v] = tr.w2
        b2[v] = tr.b2
    return n_parents, par_lag, par_var, w1, b1, w2, b2


def simulate_panel(
    config: SynthConfig, structure: AdjacencyTensor = None, backend=None
):
    """Generate a panel plus its ground-truth structure.

    The first ``delta`` steps of each trajectory bootstrap the recursion
    with uniform draws in ``[-signal_scale, signal_scale]``; afterwards
    each covariate is its transform applied to its lagged parents plus
    unit Gaussian noise, and the target likewise plus Gaussian noise with
    standard deviation ``nsr * signal_scale``. Parentless variables
    redraw uniformly each step (plus their noise) so they keep variance.

    Passing ``structure`` overrides the sampled one, which is how null
    benchmarks (all-zero target row) and hand-built graphs are produced.

    Returns
    -------
    (Panel, AdjacencyTensor)
        Panel columns are ordered target-first: ``Y, X1, ..., Xm``.
    """
    if structure is None:
        structure = sample_structure(config)
    transforms = init_transforms(structure, config)
    n_parents, par_lag, par_var, w1, b1, w2, b2 = _pack_transforms(
        transforms, config.hidden_units
    )
    n_vars = config.m + 1
    scale = config.signal_scale
    uniforms = np.empty((config.n_traj, config.timesteps, n_vars))
    normals = np.empty_like(uniforms)
    for r in range(config.n_traj):
        uniforms[r] = _stream(config.seed, _UNIFORM_KEY, r).uniform(
            -scale, scale, size=(config.timesteps, n_vars)
        )
        normals[r] = _stream(config.seed, _GAUSS_KEY, r).standard_normal(
            size=(config.timesteps, n_vars)
        )
    noise_scale = np.full(n_vars, 1.0)
    noise_scale[config.m] = config.nsr * scale
    state = run_recursion(
        uniforms, normals, noise_scale, n_parents, par_lag, par_var,
        w1, b1, w2, b2, scale, config.delta, backend=backend,
    )
    trajectories = []
    for r in range(config.n_traj):
        block = np.empty((config.timesteps, n_vars))
        block[:, 0] = state[r, :, config.m]
        block[:, 1:] = state[r, :, : config.m]
        trajectories.append(block)
    names = ("Y",) + tuple(f"X{j + 1}" for j in range(config.m))
    return Panel(trajectories=tuple(trajectories), variable_names=names,
                 target_index=0), structure
