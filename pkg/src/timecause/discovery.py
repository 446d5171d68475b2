"""Cross-fitted doubly-robust Granger causality testing.

For a target variable, every other series is scored by comparing two
debiased moment estimates: one from a regressor seeing all lagged
variables, one from the same regressor with the candidate's lagged
columns masked out (or, in audit mode, refit without them). Because the
moment functional is ``Y * g`` and its Riesz representer equals the
regression function, each per-row score collapses algebraically to
``2 y g - g^2``. A paired t-test on the per-row score differences decides
whether removing the candidate changed the estimate.

The per-row difference is ``z = psi_full - psi_masked``; a candidate that
matters makes ``z`` systematically nonzero, and the spread of ``z`` is
the default ranking signal for threshold-free evaluation.
"""

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConfigError,
    DegenerateCandidate,
    DegenerateData,
    IndexOutOfRange,
    TooFewSamples,
)
from .panel import Panel, assign_folds, build_lagged_design, mask_columns_for
from .regression import RegressorSpec, fit
from .special import student_t_two_sided_p

SURROGATE_ZERO_MASK = "surrogate_zero_mask"
REFIT = "refit"

STD_Z = "std_z"
ABS_T = "abs_t"


@dataclass(frozen=True)
class DiscoveryConfig:
    """Knobs of one causal discovery run."""

    lag: int
    k_folds: int = 5
    significance_alpha: float = 0.05
    masking_mode: str = SURROGATE_ZERO_MASK
    regressor: RegressorSpec = field(default_factory=RegressorSpec)
    ranking_metric: str = STD_Z
    seed: int = 0
    standardize: bool = True

    def __post_init__(self):
        if self.lag < 1:
            raise ConfigError(f"lag must be >= 1, got {self.lag}")
        if self.k_folds < 2:
            raise ConfigError(f"k_folds must be >= 2, got {self.k_folds}")
        if not 0.0 < self.significance_alpha < 1.0:
            raise ConfigError(
                f"significance_alpha must be in (0, 1), got {self.significance_alpha}"
            )
        if self.masking_mode not in (SURROGATE_ZERO_MASK, REFIT):
            raise ConfigError(f"unknown masking_mode {self.masking_mode!r}")
        if self.ranking_metric not in (STD_Z, ABS_T):
            raise ConfigError(f"unknown ranking_metric {self.ranking_metric!r}")


@dataclass(frozen=True, eq=False)
class ScoreSamples:
    """Per-held-out-row ingredients of one candidate's test.

    ``psi_full = 2 y g_full - g_full^2`` and likewise for the masked
    model; ``z`` is their difference. Every held-out row appears exactly
    once; ``fold_ids`` records which fold held it out.
    """

    candidate: int
    y: np.ndarray
    g_full: np.ndarray
    g_masked: np.ndarray
    psi_full: np.ndarray
    psi_masked: np.ndarray
    z: np.ndarray
    fold_ids: np.ndarray

    @property
    def n(self) -> int:
        return self.z.size


@dataclass(frozen=True)
class EdgeStatistics:
    """Test outcome for one candidate cause."""

    candidate_index: int
    candidate_name: str
    n: int
    theta_full: float
    theta_masked: float
    mean_z: float
    std_z: float
    t_stat: float
    p_value: float
    ranking_score: float
    selected: bool
    degenerate: bool = False


@dataclass(frozen=True)
class FoldDiagnostics:
    fold: int
    n_train_rows: int
    n_heldout_rows: int
    heldout_rmse: float


@dataclass(frozen=True, eq=False)
class DiscoveryReport:
    """Everything one target's run produced, ready for serialization.

    ``elapsed_seconds`` is informational only and deliberately excluded
    from the serialized form so identical runs write identical bytes.
    """

    target_index: int
    target_name: str
    variable_names: tuple
    n_rows: int
    config: DiscoveryConfig
    edges: tuple  # of EdgeStatistics, ascending candidate index
    fold_diagnostics: tuple  # of FoldDiagnostics
    elapsed_seconds: float = None

    def edge_for(self, candidate_index: int) -> EdgeStatistics:
        for e in self.edges:
            if e.candidate_index == candidate_index:
                return e
        raise IndexOutOfRange(f"no candidate {candidate_index} in report")

    def selected_candidates(self) -> tuple:
        return tuple(e.candidate_index for e in self.edges if e.selected)


def paired_t_test(z, alpha: float, mean=None):
    """Two-sided paired t-test of zero mean on per-sample differences.

    Returns ``(t_stat, p_value, selected)``. ``mean`` overrides the
    pooled sample mean (used by the engine to keep the reported t
    consistent with fold-averaged moment estimates). Zero spread is
    resolved by convention: all-zero differences accept, exactly
    constant nonzero differences reject with p = 0.
    """
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 1 or z.size < 2:
        raise TooFewSamples(f"paired t-test needs >= 2 samples, got shape {z.shape}")
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"alpha must be in (0, 1), got {alpha}")
    n = z.size
    m = float(z.mean()) if mean is None else float(mean)
    s = float(z.std(ddof=1))
    if s == 0.0:
        if m == 0.0:
            return 0.0, 1.0, False
        return math.copysign(math.inf, m), 0.0, True
    t = m / (s / math.sqrt(n))
    p = student_t_two_sided_p(t, n - 1)
    return t, p, p < alpha


def ranking_score(samples: ScoreSamples, metric: str = STD_Z) -> float:
    """Edge-strength score used for threshold-free (AUROC) ranking."""
    if samples.n < 2:
        raise TooFewSamples("ranking needs >= 2 samples")
    if metric == STD_Z:
        return float(samples.z.std(ddof=1))
    if metric == ABS_T:
        t, _, _ = paired_t_test(samples.z, alpha=0.5)
        return abs(t)
    raise ConfigError(f"unknown ranking_metric {metric!r}")


def _psi(y, g):
    return 2.0 * y * g - g * g


class _CrossFitEngine:
    """Shared per-target state: design, folds, per-fold full models.

    The full-model predictions are computed once and reused by every
    candidate; in surrogate mode each candidate then costs only masked
    re-evaluations of the same models.
    """

    def __init__(self, panel: Panel, target_index: int, config: DiscoveryConfig):
        self.panel = panel
        self.target_index = target_index
        self.config = config
        self.design = build_lagged_design(panel, target_index, config.lag)
        self.folds = assign_folds(panel.n_trajectories, config.k_folds, config.seed)
        self.fold_of_row = self.folds.trajectory_to_fold[self.design.row_origin[:, 0]]
        n = self.design.n_rows
        self.models = []
        self.prepared = []
        self.heldout_rows = []
        self.train_rows = []
        self.g_full = np.empty(n)
        for j in range(config.k_folds):
            held = np.flatnonzero(self.fold_of_row == j)
            train = np.flatnonzero(self.fold_of_row != j)
            model = fit(
                config.regressor,
                self.design.features[train],
                self.design.targets[train],
                standardize=config.standardize,
            )
            prep = model.prepare_queries(self.design.features[held])
            self.g_full[held] = prep.predict()
            self.models.append(model)
            self.prepared.append(prep)
            self.heldout_rows.append(held)
            self.train_rows.append(train)
        if not np.all(np.isfinite(self.g_full)):
            raise DegenerateData("full-model predictions contain non-finite values")
        self.psi_full = _psi(self.design.targets, self.g_full)
        # Column stds per training fold, for degenerate-candidate detection.
        self._train_col_has_var = np.stack(
            [self.design.features[tr].std(axis=0) > 0.0 for tr in self.train_rows]
        )

    def candidate_columns(self, candidate: int):
        return sorted(mask_columns_for(self.design, candidate))

    def is_degenerate(self, candidate: int) -> bool:
        cols = self.candidate_columns(candidate)
        return not bool(self._train_col_has_var[:, cols].any())

    def masked_predictions(self, candidate: int) -> np.ndarray:
        cols = self.candidate_columns(candidate)
        g_masked = np.empty(self.design.n_rows)
        if self.config.masking_mode == SURROGATE_ZERO_MASK:
            for j in range(self.config.k_folds):
                g_masked[self.heldout_rows[j]] = self.prepared[j].predict_masked(cols)
        else:
            reduced = np.delete(np.asarray(self.design.features), cols, axis=1)
            for j in range(self.config.k_folds):
                train = self.train_rows[j]
                model = fit(
                    self.config.regressor,
                    reduced[train],
                    self.design.targets[train],
                    standardize=self.config.standardize,
                )
                held = self.heldout_rows[j]
                g_masked[held] = model.predict(reduced[held])
        return g_masked

    def score_samples(self, candidate: int) -> ScoreSamples:
        if candidate == self.target_index:
            raise ConfigError(f"candidate {candidate} is the target itself")
        if not 0 <= candidate < self.design.n_variables:
            raise IndexOutOfRange(
                f"candidate {candidate} not in [0, {self.design.n_variables})"
            )
        if self.is_degenerate(candidate):
            raise DegenerateCandidate(
                f"candidate {candidate} has zero variance in every training fold"
            )
        g_masked = self.masked_predictions(candidate)
        psi_masked = _psi(self.design.targets, g_masked)
        if not np.all(np.isfinite(psi_masked)):
            raise DegenerateData(
                f"scores for candidate {candidate} contain non-finite values"
            )
        return ScoreSamples(
            candidate=candidate,
            y=self.design.targets,
            g_full=self.g_full,
            g_masked=g_masked,
            psi_full=self.psi_full,
            psi_masked=psi_masked,
            z=self.psi_full - psi_masked,
            fold_ids=self.fold_of_row,
        )

    def fold_mean(self, values: np.ndarray) -> float:
        """Average of per-fold means (robust to mildly unequal folds)."""
        return float(
            np.mean([values[rows].mean() for rows in self.heldout_rows])
        )

    def edge_statistics(self, candidate: int) -> EdgeStatistics:
        name = self.panel.variable_names[candidate]
        try:
            samples = self.score_samples(candidate)
        except DegenerateCandidate:
            theta = self.fold_mean(self.psi_full)
            return EdgeStatistics(
                candidate_index=candidate,
                candidate_name=name,
                n=self.design.n_rows,
                theta_full=theta,
                theta_masked=theta,
                mean_z=0.0,
                std_z=0.0,
                t_stat=0.0,
                p_value=1.0,
                ranking_score=0.0,
                selected=False,
                degenerate=True,
            )
        theta_full = self.fold_mean(samples.psi_full)
        theta_masked = self.fold_mean(samples.psi_masked)
        mean_z = theta_full - theta_masked
        t, p, selected = paired_t_test(
            samples.z, self.config.significance_alpha, mean=mean_z
        )
        return EdgeStatistics(
            candidate_index=candidate,
            candidate_name=name,
            n=samples.n,
            theta_full=theta_full,
            theta_masked=theta_masked,
            mean_z=mean_z,
            std_z=float(samples.z.std(ddof=1)),
            t_stat=t,
            p_value=p,
            ranking_score=ranking_score(samples, self.config.ranking_metric),
            selected=selected,
        )

    def fold_diagnostics(self) -> tuple:
        diags = []
        for j in range(self.config.k_folds):
            held = self.heldout_rows[j]
            resid = self.design.targets[held] - self.g_full[held]
            diags.append(
                FoldDiagnostics(
                    fold=j,
                    n_train_rows=int(self.train_rows[j].size),
                    n_heldout_rows=int(held.size),
                    heldout_rmse=float(np.sqrt(np.mean(resid**2))),
                )
            )
        return tuple(diags)


def compute_score_samples(
    panel: Panel, target_index: int, candidate: int, config: DiscoveryConfig
) -> ScoreSamples:
    """Cross-fitted per-row scores for a single candidate cause."""
    return _CrossFitEngine(panel, target_index, config).score_samples(candidate)


def discover_causes(
    panel: Panel, target_index: int, config: DiscoveryConfig
) -> DiscoveryReport:
    """Test every candidate series as a cause of the target.

    One regressor per fold is fit on the full lagged design; candidates
    are then scored against masked (or refit) variants. Degenerate
    candidates (no variance in any training fold) are flagged in the
    report and never selected; if all candidates are degenerate the run
    aborts.
    """
    start = time.perf_counter()
    engine = _CrossFitEngine(panel, target_index, config)
    edges = tuple(
        engine.edge_statistics(v)
        for v in range(panel.n_variables)
        if v != target_index
    )
    if all(e.degenerate for e in edges):
        raise DegenerateData(
            f"every candidate for target {panel.variable_names[target_index]!r} "
            "is degenerate"
        )
    return DiscoveryReport(
        target_index=target_index,
        target_name=panel.variable_names[target_index],
        variable_names=panel.variable_names,
        n_rows=engine.design.n_rows,
        config=config,
        edges=edges,
        fold_diagnostics=engine.fold_diagnostics(),
        elapsed_seconds=time.perf_counter() - start,
    )


def discover_all(panel: Panel, config: DiscoveryConfig) -> list:
    """Run discovery with every variable as the target, in index order.

    The union of selected edges over all reports forms a directed summary
    graph; cycles are allowed. Any per-target failure aborts the whole
    call, annotated with the offending target.
    """
    reports = []
    for v in range(panel.n_variables):
        try:
            reports.append(discover_causes(panel, v, config))
        except Exception as e:
            e.args = (
                f"while discovering causes of "
                f"{panel.variable_names[v]!r}: {e}",
            )
            raise
    return reports
