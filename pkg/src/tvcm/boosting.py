"""Cyclic training loop, dimension-wise early stopping, feature importance.

Training adds one tree per coefficient dimension per cycle, in ascending
dimension order, each fitted to directional gradients recomputed from
the live linear predictor. Tuning runs the same loop on a train half
and accepts a candidate tree only when it strictly decreases the loss
on the validation half; a dimension closes after ``patience``
consecutive rejections and rejected candidates are discarded entirely.

One-hot groups may be updated in parallel within a cycle: member
columns are disjoint indicators, so group members computed from the
same pre-group predictor produce exactly the model a serial sweep
would. The loop itself is sequential over (cycle, dimension); fitted
models and tune results are immutable outputs.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .data import Dataset, split, standardize
from .errors import ConfigError, FitError
from .losses import check_canonical, loss_total
from .model import (
    CoefficientFunction,
    FeatureSpace,
    GlmCoefficients,
    TvcmModel,
    fit_glm,
    glm_linear_predictor,
    intercept_shift,
)
from .tree import TreeConfig, fit_gradient_tree, presort_columns

logger = logging.getLogger("tvcm")


@dataclass(frozen=True)
class BoostConfig:
    """Shrinkage, tree counts, tree shape, and per-dimension modifier sets.

    ``epsilon`` and ``kappa`` accept a scalar or one value per
    dimension. ``modifier_sets`` maps each dimension to the modifier
    column names its trees may split on (None: all modifiers for every
    dimension).
    """

    epsilon: float | tuple = 0.01
    kappa: int | tuple = 0
    tree: TreeConfig = field(default_factory=TreeConfig)
    modifier_sets: tuple | None = None
    parallel_onehot: bool = False

    def epsilon_vector(self, p: int) -> np.ndarray:
        eps = np.broadcast_to(np.asarray(self.epsilon, dtype=float), (p,)).copy()
        if np.any(eps <= 0) or np.any(eps > 1):
            raise ConfigError("epsilon values must lie in (0, 1]")
        return eps

    def kappa_vector(self, p: int) -> np.ndarray:
        kappa = np.broadcast_to(np.asarray(self.kappa, dtype=np.int64), (p,)).copy()
        if np.any(kappa < 0):
            raise ConfigError("kappa values must be >= 0")
        return kappa


@dataclass(frozen=True)
class StoppingConfig:
    """Early-stopping protocol: split fraction, patience, and margin.

    ``acceptance_z`` scales a noise margin on the validation
    improvement: a candidate is accepted when it beats the current loss
    by more than z times the standard error of its first-order loss
    delta. z = 0 is plain strict decrease; at shrinkage 0.01 a strict
    decrease is nearly a coin flip for a no-signal candidate, so a
    positive z is what makes "no structure implies zero trees" hold in
    practice.
    """

    validation_fraction: float = 0.5
    patience: int = 20
    seed: int = 0
    acceptance_z: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.validation_fraction < 1.0:
            raise ConfigError("validation_fraction must be in (0, 1)")
        if self.patience < 1:
            raise ConfigError("patience must be >= 1")
        if self.acceptance_z < 0:
            raise ConfigError("acceptance_z must be >= 0")


@dataclass(frozen=True)
class TraceRow:
    cycle: int
    dimension: str
    train_loss: float
    valid_loss: float | None
    accepted: bool


@dataclass
class TuneResult:
    kappa: np.ndarray
    trace: list[TraceRow]
    split_seed: int


@dataclass
class FiStar:
    """Mean absolute coefficient per dimension, normalized over the
    dimensions on a common (standardized) scale."""

    values: np.ndarray  # normalized; NaN for excluded dimensions
    raw: np.ndarray  # unnormalized mean |beta_j(z)|, all dimensions
    included: np.ndarray  # bool mask, False for one-hot member dimensions
    labels: list[str]


@dataclass
class FeatureImportance:
    split_gain: np.ndarray  # rows: dimensions, cols: aggregated modifiers
    row_labels: list[str]
    col_labels: list[str]
    fi_star: FiStar | None = None


def _resolve_modifier_sets(config: BoostConfig, ds: Dataset) -> list[np.ndarray]:
    q = len(ds.z_names)
    if config.modifier_sets is None:
        full = np.arange(q, dtype=np.int64)
        return [full for _ in range(ds.p)]
    if len(config.modifier_sets) != ds.p:
        raise ConfigError("modifier_sets must have one entry per dimension")
    pos = {n: i for i, n in enumerate(ds.z_names)}
    out = []
    for j, names in enumerate(config.modifier_sets):
        missing = [n for n in names if n not in pos]
        if missing:
            raise ConfigError(
                f"dimension {j}: unknown modifier column(s) {missing}"
            )
        if not names:
            raise ConfigError(f"dimension {j}: empty modifier set")
        out.append(np.asarray([pos[n] for n in names], dtype=np.int64))
    return out


class _CycleState:
    """Mutable trainer state over one dataset: cached eta, presorted
    modifier columns per unique subset, accumulated trees."""

    def __init__(self, ds: Dataset, glm: GlmCoefficients, config: BoostConfig,
                 loss, link, modifier_sets):
        self.ds = ds
        self.loss = loss
        self.link = link
        self.config = config
        self.eps = config.epsilon_vector(ds.p)
        self.modifier_sets = modifier_sets
        self.x_cols = [np.ascontiguousarray(ds.X[:, j]) for j in range(ds.p)]
        self.eta = glm_linear_predictor(glm, ds.X)
        self.trees: list[list] = [[] for _ in range(ds.p)]
        self._assign_buf = np.empty(ds.n, dtype=np.int32)
        self._subset_cache: dict[tuple, tuple] = {}
        self._zsub: list[np.ndarray] = []
        self._presorted: list[list[np.ndarray]] = []
        for idx in modifier_sets:
            key = tuple(idx.tolist())
            if key not in self._subset_cache:
                # column-major: the split scan gathers whole columns
                sub = np.asfortranarray(ds.Z[:, idx])
                self._subset_cache[key] = (sub, presort_columns(sub))
            sub, pre = self._subset_cache[key]
            self._zsub.append(sub)
            self._presorted.append(pre)

    def fit_candidate(self, j: int):
        """Fitted candidate tree plus its training-row leaf assignment."""
        tree = fit_gradient_tree(
            self.loss,
            self.link,
            self.x_cols[j],
            self._zsub[j],
            self.eta,
            self.ds.y,
            self.ds.w,
            self.config.tree,
            presorted=self._presorted[j],
            dim=j,
            assign_out=self._assign_buf,
        )
        return tree, self._assign_buf.copy()

    def apply(self, j: int, tree, leaf_of: np.ndarray, cycle: int) -> None:
        self.eta = self.eta + self.eps[j] * tree.value[leaf_of] * self.x_cols[j]
        if not np.all(np.isfinite(self.eta)):
            raise FitError(
                f"non-finite linear predictor after cycle {cycle}, "
                f"dimension {j} ({self.ds.x_names[j]})"
            )
        self.trees[j].append(tree)

    def train_loss(self) -> float:
        return loss_total(self.loss, self.link, self.eta, self.ds.y, self.ds.w)


def _cycle_blocks(ds: Dataset, parallel_onehot: bool) -> list[list[int]]:
    """Dimension processing plan for one cycle, ascending index order.

    With parallel one-hot updates, the member dimensions of a
    categorical group form one block anchored at the first member.
    """
    if not parallel_onehot or not ds.onehot_groups:
        return [[j] for j in range(ds.p)]
    pos = {n: j for j, n in enumerate(ds.x_names)}
    group_of: dict[int, str] = {}
    for base, members in ds.onehot_groups.items():
        for m in members:
            if m in pos:
                group_of[pos[m]] = base
    blocks: list[list[int]] = []
    seen_groups: set[str] = set()
    for j in range(ds.p):
        base = group_of.get(j)
        if base is None:
            blocks.append([j])
        elif base not in seen_groups:
            seen_groups.add(base)
            members = sorted(pos[m] for m in ds.onehot_groups[base] if m in pos)
            blocks.append(members)
    return blocks


def _build_space(ds: Dataset, scaler, modifier_sets) -> FeatureSpace:
    return FeatureSpace(
        feature_names=list(ds.x_names),
        modifier_names=list(ds.z_names),
        modifier_sets=modifier_sets,
        onehot_groups={k: list(v) for k, v in ds.onehot_groups.items()},
        scaler=scaler,
    )


def train(
    dataset: Dataset,
    glm: GlmCoefficients,
    config: BoostConfig,
    loss,
    link,
    scaler,
) -> tuple[TvcmModel, list[TraceRow]]:
    """Cyclic training at fixed per-dimension tree counts.

    ``dataset`` must be encoded and standardized with ``scaler``. The
    intercept is recalibrated once, after all boosting. Returns the
    model plus the per-(cycle, dimension) training-loss trace.
    """
    check_canonical(loss, link)
    kappa = config.kappa_vector(dataset.p)
    modifier_sets = _resolve_modifier_sets(config, dataset)
    state = _CycleState(dataset, glm, config, loss, link, modifier_sets)
    trace: list[TraceRow] = []
    blocks = _cycle_blocks(dataset, config.parallel_onehot)
    for cycle in range(1, int(kappa.max(initial=0)) + 1):
        for block in blocks:
            active = [j for j in block if cycle <= kappa[j]]
            # candidates in a block are fitted before any of them is
            # applied; for one-hot siblings this matches a serial sweep
            candidates = [(j, *state.fit_candidate(j)) for j in active]
            for j, tree, leaf_of in candidates:
                state.apply(j, tree, leaf_of, cycle)
                trace.append(
                    TraceRow(
                        cycle=cycle,
                        dimension=dataset.x_names[j],
                        train_loss=state.train_loss(),
                        valid_loss=None,
                        accepted=True,
                    )
                )
    beta0 = intercept_shift(
        loss, link, state.eta - glm.beta0, dataset.y, dataset.w
    )
    coef = [
        CoefficientFunction(
            dim=j,
            beta_glm=float(glm.beta[j]),
            epsilon=float(state.eps[j]),
            trees=state.trees[j],
        )
        for j in range(dataset.p)
    ]
    model = TvcmModel(beta0, coef, loss, link, _build_space(dataset, scaler, modifier_sets))
    return model, trace


def tune_kappa(
    dataset: Dataset,
    glm: GlmCoefficients,
    config: BoostConfig,
    stopping: StoppingConfig,
    loss,
    link,
    refit_glm: bool = True,
) -> TuneResult:
    """Dimension-wise early stopping on a train/validation split.

    The cyclic loop runs on the train part; after fitting each
    candidate tree the validation loss is evaluated with the tree
    applied and the tree is kept only if that loss strictly decreases.
    ``patience`` consecutive rejections close a dimension. The returned
    kappa counts accepted trees; rejected candidates leave no footprint.

    By default the GLM initialization is refitted on the train part, so
    the loop starts at the stationary point of its own data; pass
    ``refit_glm=False`` to initialize from the supplied coefficients.
    """
    check_canonical(loss, link)
    kappa_max = config.kappa_vector(dataset.p)
    modifier_sets = _resolve_modifier_sets(config, dataset)
    frac = stopping.validation_fraction
    ds_tr, ds_va = split(dataset, (1.0 - frac, frac), stopping.seed)
    if ds_tr.n == 0 or ds_va.n == 0:
        raise ConfigError(
            f"degenerate train/validation split ({ds_tr.n}/{ds_va.n} rows)"
        )
    if refit_glm:
        glm = fit_glm(ds_tr, loss, link)
    state = _CycleState(ds_tr, glm, config, loss, link, modifier_sets)

    def score_at(eta):
        # dL/deta per validation row, for the acceptance noise margin
        mu = link.inverse(eta)
        return loss.deriv_mu(mu, ds_va.y, ds_va.w) * link.inverse_deriv(eta)
    va_subsets: dict[tuple, np.ndarray] = {}
    va_zsub = []
    for idx in modifier_sets:
        key = tuple(idx.tolist())
        if key not in va_subsets:
            va_subsets[key] = (
                ds_va.Z
                if idx.size == ds_va.Z.shape[1]
                and np.array_equal(idx, np.arange(idx.size))
                else np.ascontiguousarray(ds_va.Z[:, idx])
            )
        va_zsub.append(va_subsets[key])
    va_xcols = [np.ascontiguousarray(ds_va.X[:, j]) for j in range(ds_va.p)]
    eta_va = glm_linear_predictor(glm, ds_va.X)
    loss_va = loss_total(loss, link, eta_va, ds_va.y, ds_va.w)

    kappa = np.zeros(dataset.p, dtype=np.int64)
    rejections = np.zeros(dataset.p, dtype=np.int64)
    open_dim = kappa_max > 0
    trace: list[TraceRow] = []
    cycle = 0
    while np.any(open_dim):
        cycle += 1
        remaining = np.flatnonzero(open_dim & (cycle <= kappa_max))
        if remaining.size == 0:
            break
        for j in remaining:
            tree, leaf_of = state.fit_candidate(j)
            delta_va = state.eps[j] * tree.predict(va_zsub[j]) * va_xcols[j]
            eta_va_new = eta_va + delta_va
            loss_va_new = loss_total(loss, link, eta_va_new, ds_va.y, ds_va.w)
            margin = 0.0
            if stopping.acceptance_z > 0.0:
                contrib = score_at(eta_va) * delta_va
                margin = stopping.acceptance_z * float(
                    np.sqrt(np.sum(contrib * contrib))
                )
            accepted = loss_va_new < loss_va - margin
            if accepted:
                state.apply(j, tree, leaf_of, cycle)
                eta_va = eta_va_new
                loss_va = loss_va_new
                kappa[j] += 1
                rejections[j] = 0
            else:
                rejections[j] += 1
                if rejections[j] >= stopping.patience:
                    open_dim[j] = False
            trace.append(
                TraceRow(
                    cycle=cycle,
                    dimension=dataset.x_names[j],
                    train_loss=state.train_loss(),
                    valid_loss=loss_va_new,
                    accepted=bool(accepted),
                )
            )
        open_dim &= cycle < kappa_max
    return TuneResult(kappa=kappa, trace=trace, split_seed=stopping.seed)


@dataclass
class FitResult:
    model: TvcmModel
    glm: GlmCoefficients
    tune: TuneResult | None
    train_trace: list[TraceRow]


def fit_tvcm(
    dataset: Dataset,
    loss,
    link,
    config: BoostConfig,
    stopping: StoppingConfig | None = None,
) -> FitResult:
    """End-to-end fit on an encoded (one-hot, unstandardized) dataset.

    Standardizes with training statistics, fits the GLM initialization,
    optionally tunes per-dimension tree counts by early stopping, then
    trains on the full data at the tuned counts.
    """
    check_canonical(loss, link)
    ds_std, scaler = standardize(dataset)
    glm = fit_glm(ds_std, loss, link)
    cfg = config
    tune = None
    if stopping is not None:
        tune = tune_kappa(ds_std, glm, cfg, stopping, loss, link)
        cfg = replace(cfg, kappa=tuple(int(k) for k in tune.kappa))
    model, trace = train(ds_std, glm, cfg, loss, link, scaler)
    return FitResult(model=model, glm=glm, tune=tune, train_trace=trace)


# -- feature importance ---------------------------------------------------------


def _aggregated_modifier_columns(space: FeatureSpace):
    """Aggregated column labels: one-hot members fold into their group."""
    member_to_base = {
        m: base for base, members in space.onehot_groups.items() for m in members
    }
    labels: list[str] = []
    col_of: dict[str, int] = {}
    mapping = np.zeros(len(space.modifier_names), dtype=np.int64)
    for i, name in enumerate(space.modifier_names):
        label = member_to_base.get(name, name)
        if label not in col_of:
            col_of[label] = len(labels)
            labels.append(label)
        mapping[i] = col_of[label]
    return labels, mapping


def feature_importance(model: TvcmModel, normalize: bool = True) -> FeatureImportance:
    """Split-gain importance matrix, rows normalized to sum to one.

    Entry (j, k): total squared-error reduction from splits on modifier
    k inside dimension j's trees, with one-hot member columns summed
    into their group before normalization. Rows of dimensions with no
    trees (or no splits) stay all-zero. ``normalize=False`` returns the
    raw per-row gain totals instead.
    """
    space = model.space
    col_labels, mapping = _aggregated_modifier_columns(space)
    M = np.zeros((model.p, len(col_labels)))
    for j, cf in enumerate(model.coef):
        idx = space.modifier_sets[j]
        for tree in cf.trees:
            for local_f, gain in tree.split_gains().items():
                M[j, mapping[idx[local_f]]] += gain
    if normalize:
        sums = M.sum(axis=1)
        nz = sums > 0
        M[nz] /= sums[nz, None]
    return FeatureImportance(
        split_gain=M,
        row_labels=list(space.feature_names),
        col_labels=col_labels,
    )


def fi_star(model: TvcmModel, dataset: Dataset) -> FiStar:
    """Mean absolute coefficient value per dimension over dataset rows.

    One-hot member dimensions are excluded from the normalization (their
    indicator columns are not on the standardized scale); their
    normalized entries are NaN.
    """
    beta = model.beta_of(dataset.Z)
    raw = np.mean(np.abs(beta), axis=0)
    excluded = model.space.onehot_member_dims()
    included = np.asarray(
        [j not in excluded for j in range(model.p)], dtype=bool
    )
    values = np.full(model.p, np.nan)
    total = float(raw[included].sum())
    if total > 0:
        values[included] = raw[included] / total
    else:
        values[included] = 0.0
    return FiStar(
        values=values,
        raw=raw,
        included=included,
        labels=list(model.space.feature_names),
    )


def importance_report(model: TvcmModel, dataset: Dataset | None = None) -> FeatureImportance:
    report = feature_importance(model)
    if dataset is not None:
        report.fi_star = fi_star(model, dataset)
    return report


def write_trace_csv(trace: list[TraceRow], path) -> None:
    """Trace export: one row per (cycle, dimension) candidate."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cycle", "dimension", "train_loss", "valid_loss", "accepted"])
        for row in trace:
            writer.writerow(
                [
                    row.cycle,
                    row.dimension,
                    repr(row.train_loss),
                    "" if row.valid_loss is None else repr(row.valid_loss),
                    int(row.accepted),
                ]
            )
