"""Dataset container, simulation generator, CSV ingestion, encoding, splits.

Random draws use numpy's PCG64 generator; normal variates come from its
ziggurat-based ``standard_normal``, so identical seeds reproduce
datasets bit for bit.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, DataError

SIM_DIM = 8


@dataclass
class Dataset:
    """Rows of (response y, weight w, predictive X, effect modifiers Z).

    ``Z is X`` for the standard setup where every predictive feature is
    also an effect modifier. Categorical columns arrive as integer codes
    in ``cat_codes`` and stay there until ``onehot_encode`` expands them
    into 0/1 columns of X (and Z). Instances are treated as immutable
    once built; all transforms return new datasets.
    """

    y: np.ndarray
    w: np.ndarray
    X: np.ndarray
    x_names: list[str]
    Z: np.ndarray | None = None
    z_names: list[str] | None = None
    onehot_groups: dict[str, list[str]] = field(default_factory=dict)
    cat_codes: dict[str, np.ndarray] = field(default_factory=dict)
    cat_levels: dict[str, list[str]] = field(default_factory=dict)

    def __post_init__(self):
        if self.Z is None:
            self.Z = self.X
            self.z_names = list(self.x_names)

    @property
    def n(self) -> int:
        return int(self.y.shape[0])

    @property
    def p(self) -> int:
        return int(self.X.shape[1])

    def take(self, idx: np.ndarray) -> "Dataset":
        """Row subset; keeps Z is X sharing when present."""
        shared = self.Z is self.X
        X = self.X[idx]
        return Dataset(
            y=self.y[idx],
            w=self.w[idx],
            X=X,
            x_names=list(self.x_names),
            Z=X if shared else self.Z[idx],
            z_names=list(self.z_names),
            onehot_groups={k: list(v) for k, v in self.onehot_groups.items()},
            cat_codes={k: v[idx] for k, v in self.cat_codes.items()},
            cat_levels={k: list(v) for k, v in self.cat_levels.items()},
        )


@dataclass(frozen=True)
class SimulationSpec:
    n: int
    seed: int
    corr_x2_x8: float = 0.5
    noise_sd: float = 1.0

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError("simulation size must be >= 1")


def true_beta(x) -> np.ndarray:
    """Coefficient functions of the simulated law for rows of 8 features.

    Component order (1-based): 0.5, -x2/4, sgn(x3)*sin(2*x3)/2, x5/4,
    x4/4, x5^2/8, 0, 0.
    """
    x = np.asarray(x, dtype=float)
    one_row = x.ndim == 1
    if one_row:
        x = x[None, :]
    if x.shape[1] != SIM_DIM:
        raise DataError(f"expected {SIM_DIM} features, got {x.shape[1]}")
    beta = np.zeros_like(x)
    beta[:, 0] = 0.5
    beta[:, 1] = -x[:, 1] / 4.0
    beta[:, 2] = 0.5 * np.sign(x[:, 2]) * np.sin(2.0 * x[:, 2])
    beta[:, 3] = x[:, 4] / 4.0
    beta[:, 4] = x[:, 3] / 4.0
    beta[:, 5] = x[:, 4] ** 2 / 8.0
    return beta[0] if one_row else beta


def true_mu(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    one_row = x.ndim == 1
    if one_row:
        x = x[None, :]
    mu = np.sum(true_beta(x) * x, axis=1)
    return float(mu[0]) if one_row else mu


def simulate(spec: SimulationSpec) -> tuple[Dataset, np.ndarray]:
    """Simulated Gaussian dataset plus the true mean vector.

    Features are standard normal with independent components except
    corr(X2, X8) = corr_x2_x8, realized through a two-column factor that
    keeps X8's variance at one. The response is mu(x) plus
    N(0, noise_sd^2) noise, and Z is X.
    """
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    X = rng.standard_normal((spec.n, SIM_DIM))
    rho = spec.corr_x2_x8
    X[:, 7] = rho * X[:, 1] + np.sqrt(1.0 - rho * rho) * X[:, 7]
    mu = true_mu(X)
    y = mu + spec.noise_sd * rng.standard_normal(spec.n)
    names = [f"x{j}" for j in range(1, SIM_DIM + 1)]
    ds = Dataset(y=y, w=np.ones(spec.n), X=X, x_names=names)
    return ds, mu


@dataclass(frozen=True)
class Schema:
    """Column roles and cleaning directives for CSV ingestion.

    ``response_kind`` is "real" or "count"; counts must be nonnegative.
    ``response_per_weight`` divides the response by the weight column at
    load time (claim counts over exposure become frequencies, matching
    the scale the loss functions expect). ``caps``/``floors`` clip a
    column (the response and weight included), ``transforms`` applies a
    declared transform ("log" or "log1p"), and ``ordinal`` maps a string
    column listed under ``numeric`` to 1-based codes over an explicitly
    declared level order. No recode or transform ever happens
    implicitly.
    """

    response: str
    numeric: tuple[str, ...]
    categorical: tuple[str, ...] = ()
    weight: str | None = None
    response_kind: str = "real"
    response_per_weight: bool = False
    caps: dict[str, float] = field(default_factory=dict)
    floors: dict[str, float] = field(default_factory=dict)
    transforms: dict[str, str] = field(default_factory=dict)
    ordinal: dict[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self):
        if self.response_kind not in ("real", "count"):
            raise ConfigError(f"unknown response_kind {self.response_kind!r}")
        for col, name in self.transforms.items():
            if name not in ("log", "log1p"):
                raise ConfigError(f"unknown transform {name!r} for column {col!r}")
        if self.response_per_weight and self.weight is None:
            raise ConfigError("response_per_weight requires a weight column")
        for col in self.ordinal:
            if col not in self.numeric:
                raise ConfigError(
                    f"ordinal column {col!r} must be listed under numeric"
                )

    def parse_numeric_cell(self, col: str, text: str, row: int) -> float:
        if col in self.ordinal:
            levels = self.ordinal[col]
            try:
                return float(levels.index(text) + 1)
            except ValueError:
                raise DataError(
                    f"unknown ordinal level {text!r} at row {row}, "
                    f"column {col!r} (declared: {', '.join(levels)})"
                ) from None
        return _parse_float(text, row, col)


def _parse_float(text: str, row: int, col: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise DataError(
            f"unparsable numeric value {text!r} at row {row}, column {col!r}"
        ) from None


def load_csv(path, schema: Schema) -> Dataset:
    """Parse a comma-separated, headered, UTF-8 file into a Dataset.

    Categorical columns become integer codes over lexicographically
    sorted level names, pending one-hot expansion. Reported row numbers
    are 0-based data rows (the header is not counted).
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        pos = {name: i for i, name in enumerate(header)}
        needed = [schema.response, *schema.numeric, *schema.categorical]
        if schema.weight:
            needed.append(schema.weight)
        for col in needed:
            if col not in pos:
                raise DataError(f"{path}: missing column {col!r}")
        y_raw: list[float] = []
        w_raw: list[float] = []
        num_raw: list[list[float]] = [[] for _ in schema.numeric]
        cat_raw: list[list[str]] = [[] for _ in schema.categorical]
        for r, rec in enumerate(reader):
            if len(rec) != len(header):
                raise DataError(f"{path}: row {r} has {len(rec)} fields, "
                                f"expected {len(header)}")
            y_raw.append(_parse_float(rec[pos[schema.response]], r, schema.response))
            if schema.weight:
                wv = _parse_float(rec[pos[schema.weight]], r, schema.weight)
                if schema.weight in schema.caps:
                    wv = min(wv, schema.caps[schema.weight])
                if wv <= 0:
                    raise DataError(
                        f"{path}: non-positive weight {wv} at row {r}, "
                        f"column {schema.weight!r}"
                    )
                w_raw.append(wv)
            for k, col in enumerate(schema.numeric):
                num_raw[k].append(schema.parse_numeric_cell(col, rec[pos[col]], r))
            for k, col in enumerate(schema.categorical):
                cat_raw[k].append(rec[pos[col]])

    n = len(y_raw)
    if n == 0:
        raise DataError(f"{path}: no data rows")
    y = np.asarray(y_raw, dtype=float)
    if not np.all(np.isfinite(y)):
        bad = int(np.flatnonzero(~np.isfinite(y))[0])
        raise DataError(f"{path}: non-finite value at row {bad}, "
                        f"column {schema.response!r}")
    if schema.weight and not all(np.isfinite(w_raw)):
        bad = [i for i, v in enumerate(w_raw) if not np.isfinite(v)][0]
        raise DataError(f"{path}: non-finite value at row {bad}, "
                        f"column {schema.weight!r}")
    if schema.response_kind == "count" and np.any(y < 0):
        bad = int(np.flatnonzero(y < 0)[0])
        raise DataError(f"{path}: negative count at row {bad}, "
                        f"column {schema.response!r}")
    if schema.response in schema.caps:
        y = np.minimum(y, schema.caps[schema.response])
    w = np.asarray(w_raw, dtype=float) if schema.weight else np.ones(n)
    if schema.response_per_weight:
        y = y / w

    cols = []
    for k, col in enumerate(schema.numeric):
        v = np.asarray(num_raw[k], dtype=float)
        if not np.all(np.isfinite(v)):
            bad = int(np.flatnonzero(~np.isfinite(v))[0])
            raise DataError(f"{path}: non-finite value at row {bad}, column {col!r}")
        if col in schema.floors:
            v = np.maximum(v, schema.floors[col])
        if col in schema.caps:
            v = np.minimum(v, schema.caps[col])
        if col in schema.transforms:
            t = schema.transforms[col]
            if t == "log":
                if np.any(v <= 0):
                    bad = int(np.flatnonzero(v <= 0)[0])
                    raise DataError(
                        f"{path}: log transform needs positive values; "
                        f"row {bad}, column {col!r}"
                    )
                v = np.log(v)
            elif t == "log1p":
                v = np.log1p(v)
        cols.append(v)
    X = np.column_stack(cols) if cols else np.empty((n, 0))

    cat_codes: dict[str, np.ndarray] = {}
    cat_levels: dict[str, list[str]] = {}
    for k, col in enumerate(schema.categorical):
        values = cat_raw[k]
        levels = sorted(set(values))
        lookup = {lv: i for i, lv in enumerate(levels)}
        cat_codes[col] = np.asarray([lookup[v] for v in values], dtype=np.int64)
        cat_levels[col] = levels

    return Dataset(
        y=y,
        w=w,
        X=X,
        x_names=list(schema.numeric),
        cat_codes=cat_codes,
        cat_levels=cat_levels,
    )


def onehot_member_name(column: str, level: str) -> str:
    return f"{column}={level}"


def onehot_encode(ds: Dataset) -> Dataset:
    """Expand pending categorical codes into 0/1 columns of X and Z.

    Every level keeps its own column (no reference level is dropped);
    the group map records member column names per original column.
    """
    if not ds.cat_codes:
        return ds
    if ds.Z is not ds.X:
        raise DataError("one-hot encoding expects Z is X before expansion")
    blocks = [ds.X]
    names = list(ds.x_names)
    groups = {k: list(v) for k, v in ds.onehot_groups.items()}
    for col in sorted(ds.cat_codes):
        codes = ds.cat_codes[col]
        levels = ds.cat_levels[col]
        block = np.zeros((ds.n, len(levels)))
        block[np.arange(ds.n), codes] = 1.0
        blocks.append(block)
        members = [onehot_member_name(col, lv) for lv in levels]
        names.extend(members)
        groups[col] = members
    X = np.column_stack(blocks)
    return Dataset(
        y=ds.y,
        w=ds.w,
        X=X,
        x_names=names,
        onehot_groups=groups,
    )


def split(ds: Dataset, fractions, seed: int) -> tuple[Dataset, Dataset]:
    """Disjoint, exhaustive two-way split by seeded permutation."""
    f1, f2 = float(fractions[0]), float(fractions[1])
    if abs(f1 + f2 - 1.0) > 1e-9:
        raise ConfigError("split fractions must sum to 1")
    rng = np.random.Generator(np.random.PCG64(seed))
    perm = rng.permutation(ds.n)
    n1 = int(round(f1 * ds.n))
    idx1 = np.sort(perm[:n1])
    idx2 = np.sort(perm[n1:])
    return ds.take(idx1), ds.take(idx2)


def split_by_indices(ds: Dataset, first_idx) -> tuple[Dataset, Dataset]:
    """Split with an explicit index list for the first part (row order kept)."""
    first_idx = np.asarray(first_idx, dtype=np.int64)
    if first_idx.size and (first_idx.min() < 0 or first_idx.max() >= ds.n):
        raise DataError("split index out of range")
    mask = np.zeros(ds.n, dtype=bool)
    mask[first_idx] = True
    if int(mask.sum()) != first_idx.size:
        raise DataError("split index list contains duplicates")
    return ds.take(first_idx), ds.take(np.flatnonzero(~mask))


@dataclass(frozen=True)
class Standardizer:
    """Per-column affine maps fitted on training data.

    One-hot columns keep mean 0 / sd 1 so 0/1 indicators pass through;
    constant columns get sd 1 to avoid dividing by zero.
    """

    x_mean: np.ndarray
    x_sd: np.ndarray
    z_mean: np.ndarray
    z_sd: np.ndarray

    def apply_x(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.x_mean) / self.x_sd

    def apply_z(self, Z) -> np.ndarray:
        return (np.asarray(Z, dtype=float) - self.z_mean) / self.z_sd


def _column_stats(M: np.ndarray, names: list[str], onehot_members: set[str]):
    mean = M.mean(axis=0)
    sd = M.std(axis=0)
    for k, name in enumerate(names):
        if name in onehot_members:
            mean[k] = 0.0
            sd[k] = 1.0
        elif sd[k] == 0.0:
            sd[k] = 1.0
    return mean, sd


def standardize(ds: Dataset) -> tuple[Dataset, Standardizer]:
    """Center/scale continuous columns of X and Z to mean 0, sd 1."""
    if ds.cat_codes:
        raise DataError("standardize expects one-hot encoding to have run")
    members = {m for group in ds.onehot_groups.values() for m in group}
    x_mean, x_sd = _column_stats(ds.X, ds.x_names, members)
    shared = ds.Z is ds.X
    if shared:
        z_mean, z_sd = x_mean, x_sd
    else:
        z_mean, z_sd = _column_stats(ds.Z, ds.z_names, members)
    scaler = Standardizer(x_mean=x_mean, x_sd=x_sd, z_mean=z_mean, z_sd=z_sd)
    X_std = scaler.apply_x(ds.X)
    std = replace(
        ds,
        X=X_std,
        Z=X_std if shared else scaler.apply_z(ds.Z),
        z_names=list(ds.z_names),
    )
    return std, scaler
