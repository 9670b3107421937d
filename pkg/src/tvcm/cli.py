"""Batch command-line front end.

Commands: simulate | tune | train | predict | evaluate | importance.
Every command is deterministic given its flags and seeds; rerunning
writes byte-identical files. All tabular outputs are headered CSV, and
figures are emitted as tidy CSV data rather than images. Errors go to
stderr with the prefix ``tvcm: error:`` and a nonzero exit code.

Setting precedence: command-line flags > config file > profile
defaults. Config files are flat ``key = value`` text; ``#`` starts a
comment. The "sim" and "real" profiles carry the hyperparameters of the
simulation and claim-frequency setups (tree depth 2, learning rate
0.01, minimum leaf sizes 10 and 20).
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

import numpy as np

from . import boosting, data, losses, model as model_mod
from .errors import ConfigError, DataError, TvcmError
from .tree import TreeConfig

PROFILES = {
    "sim": {
        "loss": "gaussian_deviance",
        "link": "identity",
        "max_depth": "2",
        "min_samples_leaf": "10",
        "epsilon": "0.01",
        "max_kappa": "1500",
        "patience": "20",
        "validation_fraction": "0.5",
        "acceptance_z": "2.0",
        "response": "y",
        "weight": "w",
        "numeric": "auto",
        "categorical": "",
    },
    "real": {
        "loss": "poisson_deviance",
        "link": "log",
        "max_depth": "2",
        "min_samples_leaf": "20",
        "epsilon": "0.01",
        "max_kappa": "1000",
        "patience": "20",
        "validation_fraction": "0.5",
        "acceptance_z": "2.0",
        "response": "ClaimNb",
        "weight": "Exposure",
        "response_kind": "count",
        "response_per_weight": "true",
        "numeric": "VehPower,VehAge,DrivAge,BonusMalus,Density,Area",
        "categorical": "VehBrand,VehGas,Region",
        "ordinal:Area": "A,B,C,D,E,F",
        "cap:ClaimNb": "4",
        "cap:Exposure": "1",
    },
}


def parse_config(path: str) -> dict[str, str]:
    out: dict[str, str] = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(
                        f"{path}:{lineno}: expected 'key = value', got {line!r}"
                    )
                key, _, value = line.partition("=")
                out[key.strip()] = value.strip()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    return out


class Settings:
    """Flag > config file > profile resolution for one command run."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.file = parse_config(args.config) if getattr(args, "config", None) else {}
        profile = getattr(args, "profile", None) or self.file.get("profile") or "sim"
        if profile not in PROFILES:
            raise ConfigError(f"unknown profile {profile!r}")
        self.profile_name = profile
        self.profile = PROFILES[profile]

    def raw(self, key: str, default=None):
        flag = getattr(self.args, key.replace("-", "_").replace(":", "_"), None)
        if flag is not None:
            return flag
        if key in self.file:
            return self.file[key]
        if key in self.profile:
            return self.profile[key]
        return default

    def get_str(self, key: str, default=None) -> str | None:
        value = self.raw(key, default)
        return None if value in (None, "", "none") else str(value)

    def get_int(self, key: str, default=None) -> int | None:
        value = self.raw(key, default)
        return None if value is None else int(value)

    def get_float(self, key: str, default=None) -> float | None:
        value = self.raw(key, default)
        return None if value is None else float(value)

    def get_bool(self, key: str, default=False) -> bool:
        value = self.raw(key, None)
        if value is None:
            return default
        if isinstance(value, bool):
            return value
        return str(value).strip().lower() in ("1", "true", "yes", "on")

    def get_list(self, key: str) -> list[str]:
        value = self.raw(key, "")
        if not value:
            return []
        return [item.strip() for item in str(value).split(",") if item.strip()]

    def prefixed(self, prefix: str) -> dict[str, str]:
        out: dict[str, str] = {}
        for source in (self.profile, self.file):
            for key, value in source.items():
                if key.startswith(prefix):
                    out[key[len(prefix):]] = value
        return out


def _csv_header(path: str) -> list[str]:
    with open(path, newline="", encoding="utf-8") as fh:
        try:
            return next(csv.reader(fh))
        except StopIteration:
            raise DataError(f"{path}: empty file") from None


def build_schema(st: Settings, data_path: str) -> data.Schema:
    response = st.get_str("response", "y")
    weight = st.get_str("weight")
    categorical = st.get_list("categorical")
    numeric = st.get_list("numeric")
    ordinal = {
        col: tuple(v.strip() for v in levels.split(","))
        for col, levels in st.prefixed("ordinal:").items()
    }
    if numeric == ["auto"] or not numeric:
        skip = {response, weight, *categorical}
        numeric = [c for c in _csv_header(data_path) if c not in skip and c]
    caps = {col: float(v) for col, v in st.prefixed("cap:").items()}
    floors = {col: float(v) for col, v in st.prefixed("floor:").items()}
    transforms = dict(st.prefixed("transform:"))
    return data.Schema(
        response=response,
        numeric=tuple(numeric),
        categorical=tuple(categorical),
        weight=weight,
        response_kind=st.get_str("response_kind", "real"),
        response_per_weight=st.get_bool("response_per_weight", False),
        caps=caps,
        floors=floors,
        transforms=transforms,
        ordinal=ordinal,
    )


def loss_link(st: Settings):
    loss = losses.get_loss(st.get_str("loss", "gaussian_deviance"))
    link = losses.get_link(st.get_str("link", "identity"))
    losses.check_canonical(loss, link)
    return loss, link


def boost_config(st: Settings, kappa=0) -> boosting.BoostConfig:
    return boosting.BoostConfig(
        epsilon=st.get_float("epsilon", 0.01),
        kappa=kappa,
        tree=TreeConfig(
            max_depth=st.get_int("max_depth", 2),
            min_samples_leaf=st.get_int("min_samples_leaf", 10),
        ),
        parallel_onehot=st.get_bool("parallel_onehot", False),
    )


def load_encoded(st: Settings, path: str) -> tuple[data.Dataset, data.Schema]:
    schema = build_schema(st, path)
    ds = data.load_csv(path, schema)
    return data.onehot_encode(ds), schema


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_csv(path: str, header: list[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(
                [cell if isinstance(cell, str) else _fmt(cell) for cell in row]
            )


def _out_dir(st: Settings) -> str:
    out = st.get_str("out", ".")
    os.makedirs(out, exist_ok=True)
    return out


# -- commands ----------------------------------------------------------------


def cmd_simulate(st: Settings) -> None:
    n = st.get_int("n", 200000)
    seed = st.get_int("seed", 1)
    out = _out_dir(st)
    ds, mu = data.simulate(data.SimulationSpec(n=n, seed=seed))
    beta = data.true_beta(ds.X)

    def write_pair(stem: str, idx: np.ndarray) -> None:
        write_csv(
            os.path.join(out, f"{stem}.csv"),
            ["y", "w", *ds.x_names],
            ([ds.y[i], ds.w[i], *ds.X[i]] for i in idx),
        )
        write_csv(
            os.path.join(out, f"{stem}_truth.csv"),
            ["row_id", "mu", *[f"beta_{k}" for k in range(1, 9)]],
            ([int(i), mu[i], *beta[i]] for i in idx),
        )

    write_pair("sim_data", np.arange(n))
    frac = st.get_float("split_frac")
    if frac is not None:
        split_seed = st.get_int("split_seed", seed)
        rng = np.random.Generator(np.random.PCG64(split_seed))
        perm = rng.permutation(n)
        n1 = int(round(frac * n))
        write_pair("sim_train", np.sort(perm[:n1]))
        write_pair("sim_test", np.sort(perm[n1:]))
    print(f"simulate: wrote {n} rows (seed {seed}) to {out}")


def _tune(st: Settings, ds_enc: data.Dataset):
    loss, link = loss_link(st)
    config = boost_config(st, kappa=st.get_int("max_kappa", 1500))
    stopping = boosting.StoppingConfig(
        validation_fraction=st.get_float("validation_fraction", 0.5),
        patience=st.get_int("patience", 20),
        seed=st.get_int("seed", 0),
        acceptance_z=st.get_float("acceptance_z", 0.0),
    )
    ds_std, scaler = data.standardize(ds_enc)
    glm = model_mod.fit_glm(ds_std, loss, link)
    result = boosting.tune_kappa(ds_std, glm, config, stopping, loss, link)
    return result, glm, config, stopping


def cmd_tune(st: Settings) -> None:
    path = st.get_str("data")
    if not path:
        raise ConfigError("tune requires --data")
    out = _out_dir(st)
    ds_enc, _ = load_encoded(st, path)
    print(
        f"tune: profile={st.profile_name} max_depth={st.get_int('max_depth', 2)} "
        f"min_samples_leaf={st.get_int('min_samples_leaf', 10)} "
        f"epsilon={st.get_float('epsilon', 0.01)} "
        f"max_kappa={st.get_int('max_kappa', 1500)} "
        f"patience={st.get_int('patience', 20)} "
        f"validation_fraction={st.get_float('validation_fraction', 0.5)} "
        f"acceptance_z={st.get_float('acceptance_z', 0.0)} "
        f"seed={st.get_int('seed', 0)}"
    )
    result, _, _, _ = _tune(st, ds_enc)
    write_csv(
        os.path.join(out, "kappa.csv"),
        ["dimension", "kappa"],
        zip(ds_enc.x_names, result.kappa),
    )
    boosting.write_trace_csv(result.trace, os.path.join(out, "tune_trace.csv"))
    summary = " ".join(f"{n}={k}" for n, k in zip(ds_enc.x_names, result.kappa))
    print(f"tune: kappa {summary}")


def _read_kappa(st: Settings, names: list[str]) -> tuple[int, ...]:
    spec = st.get_str("kappa")
    if spec is None:
        raise ConfigError("train requires --kappa (a tune output file or values)")
    if os.path.exists(spec):
        by_name: dict[str, int] = {}
        with open(spec, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                by_name[row["dimension"]] = int(row["kappa"])
        missing = [n for n in names if n not in by_name]
        if missing:
            raise ConfigError(f"kappa file {spec} is missing dimensions {missing}")
        return tuple(by_name[n] for n in names)
    values = [int(v) for v in spec.split(",")]
    if len(values) == 1:
        return tuple(values * len(names))
    if len(values) != len(names):
        raise ConfigError(
            f"--kappa lists {len(values)} values for {len(names)} dimensions"
        )
    return tuple(values)


def cmd_train(st: Settings) -> None:
    path = st.get_str("data")
    if not path:
        raise ConfigError("train requires --data")
    out = _out_dir(st)
    loss, link = loss_link(st)
    ds_enc, _ = load_encoded(st, path)
    kappa = _read_kappa(st, ds_enc.x_names)
    config = boost_config(st, kappa=kappa)
    result = boosting.fit_tvcm(ds_enc, loss, link, config, stopping=None)
    model_path = os.path.join(out, "model.json")
    model_mod.save_model(result.model, model_path)
    if result.train_trace:
        boosting.write_trace_csv(
            result.train_trace, os.path.join(out, "train_trace.csv")
        )
    mu = result.model.predict_mu(ds_enc.X, ds_enc.Z)
    train_loss = float(
        np.mean(result.model.loss.value(mu, ds_enc.y, ds_enc.w))
    )
    if st.get_bool("emit_beta", False):
        beta = result.model.beta_of(ds_enc.Z)
        write_csv(
            os.path.join(out, "train_beta.csv"),
            ["row_id", *[f"beta_hat_{n}" for n in ds_enc.x_names]],
            ([i, *beta[i]] for i in range(ds_enc.n)),
        )
    glm_txt = " ".join(
        f"{n}={g:.6g}" for n, g in zip(ds_enc.x_names, result.glm.beta)
    )
    kappa_txt = " ".join(f"{n}={k}" for n, k in zip(ds_enc.x_names, kappa))
    print(f"train: average training loss {train_loss:.6f}")
    print(f"train: glm beta0={result.glm.beta0:.6g} {glm_txt}")
    print(f"train: kappa {kappa_txt}")
    print(f"train: model written to {model_path}")


def _read_frame(path: str, wanted: list[str]) -> tuple[dict[str, list[str]], int]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty file")
        pos = {}
        for name in wanted:
            if name not in header:
                raise DataError(f"{path}: missing column {name!r}")
            pos[name] = header.index(name)
        columns: dict[str, list[str]] = {name: [] for name in wanted}
        for r, rec in enumerate(reader):
            if len(rec) != len(header):
                raise DataError(
                    f"{path}: row {r} has {len(rec)} fields, expected {len(header)}"
                )
            for name in wanted:
                columns[name].append(rec[pos[name]])
    n = len(columns[wanted[0]]) if wanted else 0
    return columns, n


def _frame_for_model(st: Settings, mdl, path: str):
    """Raw encoded X for a prediction input, plus optional weights."""
    schema = build_schema(st, path)
    numeric, bases = mdl.space.raw_input_columns()
    wanted = [*numeric, *bases]
    weight_col = schema.weight if schema.weight in _csv_header(path) else None
    if weight_col:
        wanted = [*wanted, weight_col]
    columns, n = _read_frame(path, wanted)
    parsed: dict[str, object] = {}
    for name in numeric:
        parsed[name] = [
            schema.parse_numeric_cell(name, text, r)
            for r, text in enumerate(columns[name])
        ]
    for base in bases:
        parsed[base] = columns[base]
    X = mdl.space.encode_frame(parsed)
    w = (
        np.asarray([float(v) for v in columns[weight_col]])
        if weight_col
        else np.ones(n)
    )
    return X, w, n


def cmd_predict(st: Settings) -> None:
    model_path = st.get_str("model")
    path = st.get_str("data")
    if not model_path or not path:
        raise ConfigError("predict requires --model and --data")
    out = _out_dir(st)
    mdl = model_mod.load_model(model_path)
    X, w, n = _frame_for_model(st, mdl, path)
    mu = mdl.predict_mu(X)
    header = ["row_id", "mu_hat"]
    cols = [mu]
    if mdl.loss.kind == "poisson_deviance":
        header.append("expected_response")
        cols.append(w * mu)
    if st.get_bool("emit_beta", False):
        beta = mdl.beta_of(X)
        header += [f"beta_hat_{name}" for name in mdl.space.feature_names]
        cols += [beta[:, j] for j in range(mdl.p)]
    if st.get_bool("emit_delta", False):
        delta = mdl.delta_of(X)
        header += [f"delta_{name}" for name in mdl.space.feature_names]
        cols += [delta[:, j] for j in range(mdl.p)]
    dest = os.path.join(out, "predictions.csv")
    write_csv(dest, header, ([i, *[c[i] for c in cols]] for i in range(n)))
    print(f"predict: wrote {n} rows to {dest}")


def _load_predictions(path: str, n_expected: int) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "mu_hat" not in reader.fieldnames:
            raise DataError(f"{path}: predictions need a mu_hat column")
        values = [float(row["mu_hat"]) for row in reader]
    if len(values) != n_expected:
        raise DataError(
            f"{path}: {len(values)} prediction rows for {n_expected} data rows"
        )
    return np.asarray(values)


def _baseline_models(st: Settings, train_path: str, loss, link):
    ds_enc, _ = load_encoded(st, train_path)
    zero = boost_config(st, kappa=0)
    glm_model = boosting.fit_tvcm(ds_enc, loss, link, zero).model
    ds_null = data.Dataset(
        y=ds_enc.y, w=ds_enc.w, X=np.empty((ds_enc.n, 0)), x_names=[]
    )
    null_model = boosting.fit_tvcm(ds_null, loss, link, zero).model
    return null_model, glm_model


def cmd_evaluate(st: Settings) -> None:
    path = st.get_str("data")
    if not path:
        raise ConfigError("evaluate requires --data")
    preds = getattr(st.args, "pred", None) or []
    out = _out_dir(st)
    loss, link = loss_link(st)
    schema = build_schema(st, path)
    ds = data.load_csv(path, schema)
    ds_enc = data.onehot_encode(ds)
    named: list[tuple[str, np.ndarray]] = []
    for item in preds:
        name, _, ppath = item.partition("=")
        if not ppath:
            raise ConfigError(f"--pred wants NAME=path, got {item!r}")
        named.append((name, _load_predictions(ppath, ds.n)))
    baseline_path = st.get_str("fit_baselines")
    if baseline_path:
        null_model, glm_model = _baseline_models(st, baseline_path, loss, link)
        X, _, _ = _frame_for_model(st, glm_model, path)
        named.append(("Intercept", null_model.predict_mu(np.empty((ds.n, 0)))))
        named.append(("GLM", glm_model.predict_mu(X)))
    if not named:
        raise ConfigError("evaluate needs --pred and/or --fit-baselines")
    poisson = loss.kind == "poisson_deviance"
    header = ["model", "avg_loss"] + (["avg_loss_x100"] if poisson else [])
    rows = []
    for name, mu in named:
        avg = float(np.mean(loss.value(mu, ds.y, ds.w)))
        rows.append([name, avg] + ([avg * 100.0] if poisson else []))
    dest = os.path.join(out, "evaluation.csv")
    write_csv(dest, header, rows)
    for row in rows:
        print(f"evaluate: {row[0]} avg_loss={row[1]:.6f}")
    window = st.get_int("rolling")
    if window:
        order = np.argsort(named[0][1], kind="stable")
        kernel = np.ones(window) / window
        def roll(v):
            return np.convolve(v[order], kernel, mode="valid")
        roll_w = roll(ds.w)
        cols = [("y", roll(ds.y * ds.w) / roll_w)]
        cols += [(name, roll(mu)) for name, mu in named]
        dest = os.path.join(out, "rolling_mean.csv")
        write_csv(
            dest,
            ["index", *[c[0] for c in cols]],
            (
                [i, *[c[1][i] for c in cols]]
                for i in range(len(cols[0][1]))
            ),
        )
        print(f"evaluate: rolling-mean comparison written to {dest}")


def cmd_importance(st: Settings) -> None:
    model_path = st.get_str("model")
    path = st.get_str("data")
    if not model_path or not path:
        raise ConfigError("importance requires --model and --data")
    out = _out_dir(st)
    mdl = model_mod.load_model(model_path)
    X, _, _ = _frame_for_model(st, mdl, path)
    report = boosting.feature_importance(mdl)
    stars = boosting.fi_star(
        mdl, data.Dataset(y=np.zeros(len(X)), w=np.ones(len(X)), X=X,
                          x_names=list(mdl.space.feature_names))
    )
    kappa = mdl.kappa
    gain_rows = []
    for j, label in enumerate(report.row_labels):
        note = "" if kappa[j] > 0 else "no_trees"
        gain_rows.append([label, *report.split_gain[j], int(kappa[j]), note])
    dest_gain = os.path.join(out, "importance_split_gain.csv")
    write_csv(
        dest_gain,
        ["dimension", *report.col_labels, "kappa", "note"],
        gain_rows,
    )
    if st.get_bool("aggregate_rows", False):
        labels, mapping = _grouped_rows(mdl)
        raw_gains = boosting.feature_importance(mdl, normalize=False).split_gain
        grouped = np.zeros((len(labels), raw_gains.shape[1]))
        for j in range(mdl.p):
            grouped[mapping[j]] += raw_gains[j]
        sums = grouped.sum(axis=1)
        nz = sums > 0
        grouped[nz] /= sums[nz, None]
        write_csv(
            os.path.join(out, "importance_split_gain_grouped.csv"),
            ["dimension", *report.col_labels],
            ([labels[i], *grouped[i]] for i in range(len(labels))),
        )
    star_rows = []
    for j, label in enumerate(stars.labels):
        if stars.included[j]:
            star_rows.append([label, stars.values[j], stars.raw[j], ""])
        else:
            star_rows.append([label, "", stars.raw[j], "onehot_excluded"])
    dest_star = os.path.join(out, "importance_fi_star.csv")
    write_csv(dest_star, ["dimension", "fi_star", "mean_abs_beta", "note"], star_rows)
    print(f"importance: wrote {dest_gain} and {dest_star}")


def _grouped_rows(mdl) -> tuple[list[str], np.ndarray]:
    member_to_base = {
        m: b for b, ms in mdl.space.onehot_groups.items() for m in ms
    }
    labels: list[str] = []
    pos: dict[str, int] = {}
    mapping = np.zeros(mdl.p, dtype=np.int64)
    for j, name in enumerate(mdl.space.feature_names):
        label = member_to_base.get(name, name)
        if label not in pos:
            pos[label] = len(labels)
            labels.append(label)
        mapping[j] = pos[label]
    return labels, mapping


# -- argument parsing -----------------------------------------------------------


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="key = value settings file")
    sub.add_argument("--profile", choices=sorted(PROFILES), help="defaults profile")
    sub.add_argument("--seed", type=int, help="seed for any randomized step")
    sub.add_argument("--threads", type=int,
                     help="reserved; numerical kernels run single-threaded")
    sub.add_argument("--out", help="output directory (default: current)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tvcm",
        description="Tree-based varying-coefficient models via cyclic boosting",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write a simulated dataset and its truth")
    p.add_argument("--n", type=int, help="rows to simulate (default 200000)")
    p.add_argument("--split-frac", type=float, help="also write a train/test split")
    p.add_argument("--split-seed", type=int)
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("tune", help="dimension-wise early stopping for tree counts")
    p.add_argument("--data", help="training CSV")
    p.add_argument("--max-kappa", type=int)
    p.add_argument("--patience", type=int)
    p.add_argument("--validation-fraction", type=float)
    p.add_argument("--acceptance-z", type=float,
                   help="noise-margin multiplier for accepting a tree (0: "
                        "plain strict decrease)")
    _add_common(p)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("train", help="train at fixed per-dimension tree counts")
    p.add_argument("--data", help="training CSV")
    p.add_argument("--kappa", help="tune kappa.csv, one count, or comma list")
    p.add_argument("--emit-beta", action="store_true",
                   help="write per-row coefficient values")
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict means (and coefficients) for a CSV")
    p.add_argument("--model", help="model.json from train")
    p.add_argument("--data", help="input CSV")
    p.add_argument("--emit-beta", action="store_true")
    p.add_argument("--emit-delta", action="store_true")
    _add_common(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="average loss of predictions vs outcomes")
    p.add_argument("--data", help="CSV with outcomes")
    p.add_argument("--pred", action="append", metavar="NAME=path",
                   help="predictions CSV (repeatable)")
    p.add_argument("--fit-baselines", metavar="TRAIN_CSV",
                   help="also fit and score intercept-only and GLM baselines")
    p.add_argument("--rolling", type=int, metavar="WINDOW",
                   help="write a rolling-mean comparison ordered by the first model")
    _add_common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("importance", help="split-gain matrix and FI* scores")
    p.add_argument("--model", help="model.json from train")
    p.add_argument("--data", help="CSV to evaluate FI* on (training data)")
    p.add_argument("--aggregate-rows", action="store_true",
                   help="also write a matrix with one-hot rows grouped")
    _add_common(p)
    p.set_defaults(func=cmd_importance)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        st = Settings(args)
        args.func(st)
    except TvcmError as exc:
        print(f"tvcm: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"tvcm: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
