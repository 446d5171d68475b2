"""Hot kernels for the synthetic generator's time-stepping recursion.

The recursion is the one genuinely Python-bound inner loop in this
package (everything else rides on BLAS), so it ships in two forms:

* a numba ``@njit`` kernel (scalar loops, compiled, cached on disk), and
* a pure-numpy fallback vectorized across trajectories.

Backend selection: the ``TIMECAUSE_BACKEND`` environment variable may be
``auto`` (default: numba when importable, else numpy), ``numba``, or
``numpy``. Call sites may also pass ``backend=`` explicitly, which wins
over the environment. Both backends implement identical semantics;
floating-point accumulation order differs, so trajectories generated by
the two may diverge in low-order bits (and, over long horizons, visibly,
since the recursion can be chaotic). Within one backend, output is
bitwise deterministic.

See ``benchmarks/bench_backends.py`` for a speed comparison.
"""

import os

import numpy as np

from .errors import ConfigError

ENV_VAR = "TIMECAUSE_BACKEND"

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False


def available_backends() -> tuple:
    return ("numba", "numpy") if HAVE_NUMBA else ("numpy",)


def resolve_backend(backend=None) -> str:
    """Pick the kernel backend from the argument or the environment."""
    choice = backend if backend is not None else os.environ.get(ENV_VAR, "auto")
    choice = choice.lower()
    if choice == "auto":
        return "numba" if HAVE_NUMBA else "numpy"
    if choice == "numba":
        if not HAVE_NUMBA:
            raise ConfigError(
                "backend 'numba' requested but numba is not importable"
            )
        return "numba"
    if choice == "numpy":
        return "numpy"
    raise ConfigError(f"unknown backend {choice!r}; use auto, numba, or numpy")


def _recursion_numpy(
    uniforms, normals, noise_scale, n_parents, par_lag, par_var,
    w1, b1, w2, b2, out_scale, delta,
):
    n_traj, t_len, n_vars = uniforms.shape
    state = np.empty((n_traj, t_len, n_vars))
    state[:, :delta, :] = uniforms[:, :delta, :]
    for t in range(delta, t_len):
        for v in range(n_vars):
            npar = n_parents[v]
            if npar == 0:
                base = uniforms[:, t, v]
            else:
                x = state[:, t - par_lag[v, :npar], par_var[v, :npar]]
                hidden = np.tanh(x @ w1[v, :, :npar].T + b1[v])
                base = out_scale * np.tanh(hidden @ w2[v] + b2[v])
            state[:, t, v] = base + noise_scale[v] * normals[:, t, v]
    return state


def _recursion_scalar(
    uniforms, normals, noise_scale, n_parents, par_lag, par_var,
    w1, b1, w2, b2, out_scale, delta,
):
    n_traj, t_len, n_vars = uniforms.shape
    n_hidden = b1.shape[1]
    state = np.empty((n_traj, t_len, n_vars))
    for r in range(n_traj):
        for t in range(t_len):
            if t < delta:
                for v in range(n_vars):
                    state[r, t, v] = uniforms[r, t, v]
                continue
            for v in range(n_vars):
                npar = n_parents[v]
                if npar == 0:
                    base = uniforms[r, t, v]
                else:
                    acc_out = b2[v]
                    for h in range(n_hidden):
                        acc = b1[v, h]
                        for p in range(npar):
                            acc += w1[v, h, p] * state[
                                r, t - par_lag[v, p], par_var[v, p]
                            ]
                        acc_out += w2[v, h] * np.tanh(acc)
                    base = out_scale * np.tanh(acc_out)
                state[r, t, v] = base + noise_scale[v] * normals[r, t, v]
    return state


if HAVE_NUMBA:
    _recursion_numba = njit(cache=True)(_recursion_scalar)


def run_recursion(
    uniforms: np.ndarray,
    normals: np.ndarray,
    noise_scale: np.ndarray,
    n_parents: np.ndarray,
    par_lag: np.ndarray,
    par_var: np.ndarray,
    w1: np.ndarray,
    b1: np.ndarray,
    w2: np.ndarray,
    b2: np.ndarray,
    out_scale: float,
    delta: int,
    backend=None,
) -> np.ndarray:
    """Run the structural recursion for all trajectories at once.

    Parameters
    ----------
    uniforms, normals : (n_traj, T, n_vars) arrays
        Pre-drawn noise. ``uniforms`` feeds the bootstrap steps and the
        per-step redraws of parentless variables; ``normals`` is the
        additive noise, scaled per variable by ``noise_scale``.
    n_parents, par_lag, par_var : int arrays
        Parent counts and (lag, state-column) pairs per variable, padded
        to a common width.
    w1, b1, w2, b2 : arrays
        Per-variable MLP parameters, first axis indexing the variable;
        ``w1`` is zero-padded to the common parent width.
    out_scale : float
        Output scaling of the tanh transforms.
    delta : int
        Bootstrap length; steps before ``delta`` copy ``uniforms``.

    Returns
    -------
    (n_traj, T, n_vars) array of simulated values.
    """
    chosen = resolve_backend(backend)
    args = (
        np.ascontiguousarray(uniforms, dtype=np.float64),
        np.ascontiguousarray(normals, dtype=np.float64),
        np.ascontiguousarray(noise_scale, dtype=np.float64),
        np.ascontiguousarray(n_parents, dtype=np.int64),
        np.ascontiguousarray(par_lag, dtype=np.int64),
        np.ascontiguousarray(par_var, dtype=np.int64),
        np.ascontiguousarray(w1, dtype=np.float64),
        np.ascontiguousarray(b1, dtype=np.float64),
        np.ascontiguousarray(w2, dtype=np.float64),
        np.ascontiguousarray(b2, dtype=np.float64),
        float(out_scale),
        int(delta),
    )
    if chosen == "numba":
        return _recursion_numba(*args)
    return _recursion_numpy(*args)
