"""Command-line pipeline around the library: fit, impute, inject, test, score.

Each subcommand reads a CSV plus a schema file and is fully deterministic
given its flags — every random choice is seeded, and the seeds are logged.
A ``--config`` file of ``key = value`` lines supplies defaults that explicit
flags override, so a whole benchmark run can live in one text file::

    irtimpute bench --config run.cfg
    irtimpute fit --data d.csv --schema d.cols --out model.json
    irtimpute impute --data d.csv --schema d.cols --model model.json \\
        --out completed.csv

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
Failures print one ``error: <kind>: <message>`` line to stderr.  Set the
``IRTIMPUTE_LOG`` environment variable (e.g. ``INFO``) for progress detail.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import (
    MISSING,
    CategoricalDataset,
    ColumnSchema,
    DiscretizationMap,
    discretize_dataset,
    emit_csv,
    load_csv,
    load_schema,
)
from .errors import DataError, IrtImputeError, UsageError
from .estimation import (
    FitConfig,
    FittedModel,
    diagnostics_report,
    fit,
    load_model,
    save_model,
)
from .impute import impute_dataset
from .metrics import report_text, score_cells
from .missingness import inject_mar, inject_mcar, littles_test

__all__ = ["main", "RunConfig"]

logger = logging.getLogger("irtimpute")

_FIT_DEFAULTS = {
    "bins": 4,
    "grid_size": 61,
    "grid_lo": -6.0,
    "grid_hi": 6.0,
    "max_iter": 500,
    "tol": 1e-4,
    "seed": 0,
}


@dataclass(frozen=True)
class RunConfig:
    """One command plus its merged options (config file under flags)."""

    command: str
    options: dict

    def __getattr__(self, name: str):
        try:
            return self.options[name]
        except KeyError:
            raise AttributeError(name) from None


# ---------------------------------------------------------------------------
# Config files and argument parsing
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    """Argparse that reports usage problems through the exit-code scheme."""

    def error(self, message: str):
        raise UsageError(message)


def _read_config(path: str) -> list[str]:
    """Turn ``key = value`` lines into a flat flag-token list."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from None
    tokens: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise UsageError(f"{path}:{lineno}: empty key")
        tokens.extend([f"--{key.replace('_', '-')}", value])
    return tokens


def _expand_config(argv: list[str]) -> list[str]:
    """Splice config-file tokens in right after the subcommand.

    Config tokens come first, so flags typed on the command line win
    (argparse keeps the last occurrence of a plain option).
    """
    plain: list[str] = []
    config_tokens: list[str] = []
    i = 0
    while i < len(argv):
        arg = argv[i]
        if arg == "--config":
            if i + 1 >= len(argv):
                raise UsageError("--config needs a file path")
            config_tokens.extend(_read_config(argv[i + 1]))
            i += 2
        elif arg.startswith("--config="):
            config_tokens.extend(_read_config(arg.split("=", 1)[1]))
            i += 1
        else:
            plain.append(arg)
            i += 1
    if not config_tokens:
        return plain
    if not plain or plain[0].startswith("-"):
        raise UsageError("--config requires a subcommand")
    return [plain[0], *config_tokens, *plain[1:]]


def _add_io_options(parser, data_help="input CSV (header row required)"):
    parser.add_argument("--data", required=True, help=data_help)
    parser.add_argument("--schema", required=True,
                        help="schema file (one 'name: kind ...' line per column)")
    parser.add_argument(
        "--missing-tokens", default=",-1", metavar="T1,T2,...",
        help="comma-separated cell values read as missing "
             "(default: the empty string and -1)")
    parser.add_argument("--config", help="key = value file of defaults; "
                                         "explicit flags override")


def _add_fit_options(parser, concrete: bool):
    """Fit hyperparameters; ``concrete=False`` leaves defaults at None so a
    command can tell whether the user supplied them."""
    d = _FIT_DEFAULTS if concrete else dict.fromkeys(_FIT_DEFAULTS)
    parser.add_argument("--bins", type=int, default=d["bins"],
                        help="quantile bins for continuous features (default 4)")
    parser.add_argument("--grid-size", type=int, default=d["grid_size"],
                        help="quadrature nodes (default 61)")
    parser.add_argument("--grid-lo", type=float, default=d["grid_lo"],
                        help="lowest trait node (default -6)")
    parser.add_argument("--grid-hi", type=float, default=d["grid_hi"],
                        help="highest trait node (default 6)")
    parser.add_argument("--max-iter", type=int, default=d["max_iter"],
                        help="EM iteration cap (default 500)")
    parser.add_argument("--tol", type=float, default=d["tol"],
                        help="EM parameter-change tolerance (default 1e-4)")
    parser.add_argument("--seed", type=int, default=d["seed"],
                        help="random seed (default 0)")


def build_parser() -> _Parser:
    parser = _Parser(prog="irtimpute",
                     description="categorical imputation via latent-trait "
                                 "models, plus missingness benchmarking")
    commands = parser.add_subparsers(dest="command", required=True,
                                     metavar="command")

    p = commands.add_parser("fit", help="estimate item parameters",
                            description="Fit the latent-trait model and "
                                        "write it to a JSON file.")
    _add_io_options(p)
    _add_fit_options(p, concrete=True)
    p.add_argument("--out", required=True, help="model file to write")

    p = commands.add_parser("impute", help="fill missing cells",
                            description="Complete a dataset using a saved "
                                        "model, or fit one on the fly.")
    _add_io_options(p)
    _add_fit_options(p, concrete=False)
    p.add_argument("--out", required=True, help="completed CSV to write")
    p.add_argument("--model", help="saved model file (omit to fit first)")
    p.add_argument("--save-model", help="where to store the freshly "
                                        "fitted model (fit-and-impute only)")
    p.add_argument("--probabilities",
                   help="sidecar CSV of per-cell category probabilities")

    p = commands.add_parser("inject", help="blank cells of one column",
                            description="Produce a benchmark dataset by "
                                        "deleting target cells.")
    _add_io_options(p)
    p.add_argument("--out", required=True, help="CSV to write")
    p.add_argument("--target", required=True, help="column losing cells")
    p.add_argument("--fraction", required=True, type=float,
                   help="fraction of rows to blank, in (0, 1)")
    p.add_argument("--mechanism", required=True, choices=("mcar", "mar"))
    p.add_argument("--seed", type=int, help="RNG seed (mcar only)")
    p.add_argument("--conditional",
                   help="fully observed column driving deletion (mar only)")
    p.add_argument("--direction", choices=("top", "bottom"),
                   help="which conditional extreme loses cells "
                        "(mar only, default top)")

    p = commands.add_parser("mcar-test",
                            help="Little's completely-at-random test",
                            description="Run the pattern-mean chi-square "
                                        "test over the feature columns.")
    _add_io_options(p)

    p = commands.add_parser("evaluate", help="score an imputation run",
                            description="Compare imputed cells against the "
                                        "complete truth; cells are located "
                                        "by diffing the with-missing file.")
    p.add_argument("--truth", required=True, help="complete ground-truth CSV")
    p.add_argument("--with-missing", required=True,
                   help="the dataset the imputer saw")
    p.add_argument("--imputed", required=True, help="completed CSV to score")
    p.add_argument("--schema", required=True, help="shared schema file")
    p.add_argument("--missing-tokens", default=",-1", metavar="T1,T2,...",
                   help="comma-separated cell values read as missing")
    p.add_argument("--config", help="key = value file of defaults")

    p = commands.add_parser("bench", help="full inject/fit/impute sweep",
                            description="For every (mechanism, fraction) "
                                        "cell: inject, fit, impute, score "
                                        "against the held-out truth, and "
                                        "run the MCAR test.")
    _add_io_options(p, data_help="complete CSV serving as ground truth")
    _add_fit_options(p, concrete=True)
    p.add_argument("--target", required=True,
                   help="categorical feature column to blank and restore")
    p.add_argument("--conditional",
                   help="column driving the at-random deletions")
    p.add_argument("--direction", choices=("top", "bottom"), default="top")
    p.add_argument("--fractions", default="0.05,0.1,0.3,0.5",
                   metavar="F1,F2,...", help="missingness fractions "
                                             "(default 0.05,0.1,0.3,0.5)")
    p.add_argument("--mechanisms", default="mcar,mar", metavar="M1,M2",
                   help="comma-separated subset of mcar,mar (default both)")
    p.add_argument("--out", help="report file (default: stdout)")

    return parser


# ---------------------------------------------------------------------------
# Shared plumbing
# ---------------------------------------------------------------------------

def _missing_tokens(config: RunConfig) -> tuple[str, ...]:
    return tuple(config.missing_tokens.split(","))


def _load_inputs(config: RunConfig, path: str
                 ) -> tuple[tuple[ColumnSchema, ...], CategoricalDataset]:
    try:
        schemas = load_schema(config.schema)
        data = load_csv(path, schemas, _missing_tokens(config))
    except OSError as exc:
        raise DataError(str(exc)) from None
    return schemas, data


def _check_column(schemas, name: str, flag: str) -> ColumnSchema:
    for schema in schemas:
        if schema.name == name:
            return schema
    raise UsageError(f"{flag}: no column named {name!r} in the schema")


def _resolved_fit_options(config: RunConfig) -> dict:
    return {
        key: default if config.options.get(key) is None
        else config.options[key]
        for key, default in _FIT_DEFAULTS.items()
    }


def _fit_on(data: CategoricalDataset, options: dict
            ) -> tuple[FittedModel, dict[str, DiscretizationMap]]:
    """Discretize continuous features if present, then fit."""
    maps: dict[str, DiscretizationMap] = {}
    if any(data.schemas[j].kind == "continuous"
           for j in data.feature_indices):
        data, maps = discretize_dataset(data, options["bins"])
        for mapping in maps.values():
            logger.info("discretized %r into %d bins, cuts %s",
                        mapping.column, mapping.bins, list(mapping.cuts))
    fit_config = FitConfig(
        grid_size=options["grid_size"],
        grid_range=(options["grid_lo"], options["grid_hi"]),
        max_iter=options["max_iter"],
        tol=options["tol"],
        seed=options["seed"],
    )
    logger.info("fitting %d cases with seed %d", data.n_rows,
                options["seed"])
    return fit(data, fit_config), maps


def _attach_maps(path: str, maps: dict[str, DiscretizationMap]) -> None:
    """Record the fit-time discretization inside the model file."""
    payload = json.loads(Path(path).read_text())
    payload["discretization"] = [
        {"column": mapping.column, "cuts": list(mapping.cuts),
         "labels": list(mapping.labels)}
        for _, mapping in sorted(maps.items())
    ]
    Path(path).write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _load_model_and_maps(path: str
                         ) -> tuple[FittedModel, dict[str, DiscretizationMap]]:
    try:
        model = load_model(path)
        payload = json.loads(Path(path).read_text())
    except OSError as exc:
        raise DataError(str(exc)) from None
    maps = {}
    for entry in payload.get("discretization", ()):
        mapping = DiscretizationMap(entry["column"], tuple(entry["cuts"]),
                                    tuple(entry["labels"]))
        maps[mapping.column] = mapping
    return model, maps


def _model_view(data: CategoricalDataset,
                maps: dict[str, DiscretizationMap]) -> CategoricalDataset:
    """Apply stored discretizations so the data matches the model columns."""
    if not maps:
        return data
    cells = np.array(data.cells, copy=True)
    schemas = list(data.schemas)
    for name, mapping in maps.items():
        j = data.column_index(name)
        schema = data.schemas[j]
        if schema.kind != "continuous":
            raise DataError(
                f"column {name!r} is {schema.kind}, but the model "
                "discretized a continuous column of that name"
            )
        col = cells[:, j]
        observed = col != MISSING
        binned = np.full(col.shape, float(MISSING))
        binned[observed] = mapping.apply(col[observed]).astype(np.float64)
        cells[:, j] = binned
        schemas[j] = ColumnSchema(name, "ordinal", arity=mapping.bins,
                                  labels=mapping.labels, role=schema.role)
    return CategoricalDataset(tuple(schemas), cells)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_fit(config: RunConfig) -> int:
    _, data = _load_inputs(config, config.data)
    model, maps = _fit_on(data, _resolved_fit_options(config))
    save_model(model, config.out)
    _attach_maps(config.out, maps)
    sys.stdout.write(diagnostics_report(model))
    return 0


def cmd_impute(config: RunConfig) -> int:
    fit_flags = [key for key in _FIT_DEFAULTS
                 if config.options.get(key) is not None]
    if config.model and (fit_flags or config.save_model):
        culprit = fit_flags[0] if fit_flags else "save-model"
        raise UsageError(
            f"--{culprit.replace('_', '-')} only applies when fitting; "
            "it cannot modify the model loaded via --model"
        )
    _, data = _load_inputs(config, config.data)
    if config.model:
        model, maps = _load_model_and_maps(config.model)
    else:
        model, maps = _fit_on(data, _resolved_fit_options(config))
        if config.save_model:
            save_model(model, config.save_model)
            _attach_maps(config.save_model, maps)
    view = _model_view(data, maps)
    result = impute_dataset(view, model)

    # write imputed codes back into the original column types; bin codes
    # for a discretized column have no continuous value to restore
    out_cells = np.array(data.cells, copy=True)
    unrestored = 0
    for (row, col) in result.mask:
        if data.schemas[col].is_categorical:
            out_cells[row, col] = result.completed.cells[row, col]
        else:
            unrestored += 1
    if unrestored:
        warnings.warn(
            f"{unrestored} missing continuous cells stay missing: the model "
            "imputes their bins, not their values",
            stacklevel=2,
        )
    emit_csv(data.with_cells(out_cells), config.out)
    if config.probabilities:
        _write_probabilities(config.probabilities, view, result)
    print(f"imputed {len(result.mask)} cells")
    return 0


def _write_probabilities(path: str, view: CategoricalDataset, result) -> None:
    widest = max((len(p) for p in result.probabilities), default=0)
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["case", "column"]
                        + [f"p{k}" for k in range(widest)])
        for (row, col), probs in zip(result.mask, result.probabilities):
            record = [row, view.schemas[col].name]
            record += [repr(float(p)) for p in probs]
            record += [""] * (widest - len(probs))
            writer.writerow(record)


def cmd_inject(config: RunConfig) -> int:
    try:
        schemas = load_schema(config.schema)
    except OSError as exc:
        raise DataError(str(exc)) from None
    _check_column(schemas, config.target, "--target")
    if config.mechanism == "mcar":
        if config.seed is None:
            raise UsageError("mcar injection needs --seed")
        if config.conditional or config.direction:
            raise UsageError("--conditional/--direction are mar-only flags")
    else:
        if config.conditional is None:
            raise UsageError("mar injection needs --conditional")
        if config.seed is not None:
            raise UsageError("mar injection is deterministic; --seed "
                             "applies to mcar only")
        _check_column(schemas, config.conditional, "--conditional")
    try:
        data = load_csv(config.data, schemas, _missing_tokens(config))
    except OSError as exc:
        raise DataError(str(exc)) from None

    if config.mechanism == "mcar":
        logger.info("mcar injection with seed %d", config.seed)
        out = inject_mcar(data, config.target, config.fraction, config.seed)
    else:
        out = inject_mar(data, config.target, config.conditional,
                         config.fraction, config.direction or "top")
    emit_csv(out, config.out)
    removed = int(np.sum(out.cells[:, data.column_index(config.target)]
                         == MISSING))
    print(f"removed {removed} cells from column {config.target!r}")
    return 0


def cmd_mcar_test(config: RunConfig) -> int:
    _, data = _load_inputs(config, config.data)
    result = littles_test(data.to_numeric(data.feature_indices))
    print("Little's MCAR test")
    print(f"statistic: {result.statistic:.6f}")
    print(f"df: {result.df}")
    print(f"p-value: {result.p_value:.6g}")
    print(f"patterns: {result.n_patterns}")
    return 0


def cmd_evaluate(config: RunConfig) -> int:
    try:
        schemas = load_schema(config.schema)
        tokens = tuple(config.missing_tokens.split(","))
        truth = load_csv(config.truth, schemas, tokens)
        holed = load_csv(config.with_missing, schemas, tokens)
        imputed = load_csv(config.imputed, schemas, tokens)
    except OSError as exc:
        raise DataError(str(exc)) from None
    if not truth.n_rows == holed.n_rows == imputed.n_rows:
        raise DataError("the three datasets must have the same rows")

    mask = []
    unscoreable = 0
    for j, schema in enumerate(schemas):
        if not schema.is_categorical:
            continue
        for i in np.flatnonzero(holed.cells[:, j] == MISSING):
            if truth.cells[i, j] == MISSING:
                unscoreable += 1
            else:
                mask.append((int(i), int(j)))
    if unscoreable:
        warnings.warn(
            f"{unscoreable} blanked cells are missing in the truth too and "
            "cannot be scored",
            stacklevel=2,
        )
    report = score_cells(truth, imputed, tuple(sorted(mask)))
    sys.stdout.write(report_text(report))
    return 0


def _parse_fractions(text: str) -> tuple[float, ...]:
    try:
        fractions = tuple(float(tok) for tok in text.split(","))
    except ValueError:
        raise UsageError(f"--fractions: {text!r} is not a comma-separated "
                         "list of numbers") from None
    if not fractions or not all(0.0 < f < 1.0 for f in fractions):
        raise UsageError("--fractions must all lie in (0, 1)")
    return fractions


def _parse_mechanisms(text: str) -> tuple[str, ...]:
    mechanisms = tuple(tok.strip() for tok in text.split(",") if tok.strip())
    if not mechanisms or any(m not in ("mcar", "mar") for m in mechanisms):
        raise UsageError("--mechanisms must be a subset of mcar,mar")
    return mechanisms


def _majority_fill(view: CategoricalDataset, target: str,
                   mask: tuple[tuple[int, int], ...]) -> CategoricalDataset:
    """Complete the view by writing the observed modal code everywhere."""
    codes = view.codes(target)
    observed = codes[codes >= 0]
    arity = view.schema_for(target).arity
    assert arity is not None
    mode = int(np.argmax(np.bincount(observed, minlength=arity)))
    cells = np.array(view.cells, copy=True)
    for row, col in mask:
        cells[row, col] = float(mode)
    return view.with_cells(cells)


def cmd_bench(config: RunConfig) -> int:
    fractions = _parse_fractions(config.fractions)
    mechanisms = _parse_mechanisms(config.mechanisms)
    try:
        schemas = load_schema(config.schema)
    except OSError as exc:
        raise DataError(str(exc)) from None
    target_schema = _check_column(schemas, config.target, "--target")
    if not target_schema.is_categorical or target_schema.role != "feature":
        raise UsageError("--target must be a categorical feature column")
    if "mar" in mechanisms:
        if config.conditional is None:
            raise UsageError("mar benchmarking needs --conditional")
        _check_column(schemas, config.conditional, "--conditional")
    try:
        truth = load_csv(config.data, schemas, _missing_tokens(config))
    except OSError as exc:
        raise DataError(str(exc)) from None

    options = _resolved_fit_options(config)
    little_rows = []
    f1_rows = []
    cell_index = 0
    for mechanism in mechanisms:
        for fraction in fractions:
            seed = options["seed"] + cell_index
            cell_index += 1
            if mechanism == "mcar":
                injected = inject_mcar(truth, config.target, fraction, seed)
                logger.info("cell %d: mcar %g seed %d", cell_index, fraction,
                            seed)
            else:
                injected = inject_mar(truth, config.target,
                                      config.conditional, fraction,
                                      config.direction)
                logger.info("cell %d: mar %g (deterministic)", cell_index,
                            fraction)
            little = littles_test(
                injected.to_numeric(injected.feature_indices))

            model, maps = _fit_on(injected, options)
            view = _model_view(injected, maps)
            result = impute_dataset(view, model)
            truth_view = _model_view(truth, maps)
            scored = score_cells(truth_view, result.completed, result.mask)
            baseline = score_cells(
                truth_view, _majority_fill(view, config.target, result.mask),
                result.mask)

            cells = len(result.mask)
            little_rows.append(
                f"{mechanism:<9} {fraction:<8g} {cells:<6d} "
                f"{little.statistic:<12.6f} {little.df:<4d} "
                f"{little.p_value:.6g}")
            f1_rows.append(
                f"{mechanism:<9} {fraction:<8g} {cells:<6d} "
                f"{scored.macro_f1:<12.6f} {scored.micro_f1:<12.6f} "
                f"{baseline.macro_f1:<15.6f} {baseline.micro_f1:.6f}")

    lines = [
        "imputation benchmark",
        f"target: {config.target}",
        f"conditional: {config.conditional or '-'}",
        f"mechanisms: {' '.join(mechanisms)}",
        f"fractions: {' '.join(f'{f:g}' for f in fractions)}",
        f"base seed: {options['seed']}",
        f"bins: {options['bins']}",
        "",
        "Little's MCAR test on each injected dataset",
        f"{'mechanism':<9} {'fraction':<8} {'cells':<6} "
        f"{'statistic':<12} {'df':<4} p-value",
        *little_rows,
        "",
        "imputed-cell F1, model vs majority baseline",
        f"{'mechanism':<9} {'fraction':<8} {'cells':<6} "
        f"{'model_macro':<12} {'model_micro':<12} "
        f"{'baseline_macro':<15} baseline_micro",
        *f1_rows,
    ]
    text = "\n".join(lines) + "\n"
    if config.out:
        Path(config.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


_COMMANDS = {
    "fit": cmd_fit,
    "impute": cmd_impute,
    "inject": cmd_inject,
    "mcar-test": cmd_mcar_test,
    "evaluate": cmd_evaluate,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    raw = list(sys.argv[1:] if argv is None else argv)
    level = os.environ.get("IRTIMPUTE_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args = build_parser().parse_args(_expand_config(raw))
        options = {key: value for key, value in vars(args).items()
                   if key not in ("command", "config")}
        return _COMMANDS[args.command](RunConfig(args.command, options))
    except UsageError as exc:
        print(f"error: usage: {exc}", file=sys.stderr)
        return 1
    except IrtImputeError as exc:
        kind = {3: "numerical"}.get(exc.exit_code, "data")
        print(f"error: {kind}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
