"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error. Every output byte is a
function of the input files and argv.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from .ensemble import BASE_KINDS, ModelSpec, fit_ensemble
from .evaluation import (NoiseSpec, evaluate_grouped, fake_on_transform, inject_ccn_noise,
                         stratified_cv_f1)
from .metrics import pearson, roc_points, spearman
from .persistence import check_schema, dumps_model, load_model
from .significance import alpha_from_p_minus, li_ma_significance, tune_threshold
from .table import CsvSchema, DataError, event_csv_text, read_event_csv


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _fmt_sigma(value):
    return f"{value + 0.0:.6f}"


def _write_text(text, path):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


# ---------------------------------------------------------------- options

def _add_data(p, group=False, label=False, required_group=False, required_label=False):
    p.add_argument("--data", required=True, help="event CSV")
    p.add_argument("--region-col", default="region")
    if group:
        p.add_argument("--group-col", required=required_group, default=None)
    if label:
        p.add_argument("--label-col", required=required_label, default=None,
                       help="clean +1/-1 labels")


def _add_alpha(p):
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--alpha", type=float, help="On/Off exposure ratio")
    g.add_argument("--p-minus", type=float, help="negative-class noise rate; alpha = p/(1-p)")


def _add_model(p):
    p.add_argument("--model", required=True, choices=BASE_KINDS)
    p.add_argument("--k", type=int, default=8, help="clusters (kmeans)")
    p.add_argument("--max-depth", type=int, default=4, help="tree depth")
    p.add_argument("--ensemble", type=int, default=None, metavar="T",
                   help="bag T members (default: one unbagged model)")
    p.add_argument("--feature-subset-size", type=int, default=None)
    p.add_argument("--tune", choices=("oob", "full", "none"), default="oob",
                   help="ensemble threshold tuning source")


def _add_run(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)


def _add_scores_source(p):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--model-file")
    src.add_argument("--predictions", help="CSV from `predict`")


def _alpha(args):
    if args.alpha is not None:
        if not args.alpha > 0 or not np.isfinite(args.alpha):
            raise UsageError("--alpha must be positive")
        return args.alpha
    if not 0.0 < args.p_minus < 1.0:
        raise UsageError("--p-minus must lie in (0, 1)")
    return alpha_from_p_minus(args.p_minus)


def _check_run(args):
    if getattr(args, "seed", 0) < 0:
        raise UsageError("--seed must be >= 0")
    if getattr(args, "threads", 1) < 1:
        raise UsageError("--threads must be >= 1")
    if getattr(args, "folds", 2) < 2:
        raise UsageError("--folds must be >= 2")


def _spec(args, alpha):
    try:
        spec = ModelSpec(args.model, alpha, k=args.k, max_depth=args.max_depth,
                         n_estimators=args.ensemble,
                         feature_subset_size=args.feature_subset_size, tune=args.tune)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if spec.k < 1 or spec.max_depth < 0:
        raise UsageError("--k must be >= 1 and --max-depth >= 0")
    return spec


def _schema(args):
    return CsvSchema(args.region_col, getattr(args, "group_col", None),
                     getattr(args, "label_col", None))


def _table(args):
    return read_event_csv(args.data, _schema(args))


def _read_predictions(path, n_rows, column):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or column not in reader.fieldnames:
            raise DataError(f"{path}: column {column!r} not found")
        values = []
        for lineno, rec in enumerate(reader, start=2):
            try:
                values.append(float(rec[column]))
            except (TypeError, ValueError):
                raise DataError(f"{path}: row {lineno}, column {column!r}: "
                                f"non-numeric value {rec[column]!r}") from None
    values = np.array(values, dtype=np.float64)
    if n_rows is not None and values.size != n_rows:
        raise DataError(f"{path}: {values.size} predictions for {n_rows} data rows")
    if not np.all(np.isfinite(values)):
        raise DataError(f"{path}: non-finite {column}")
    return values


def _model_scores(args, table):
    """(scores, labels) of the table rows from a model file or predictions CSV."""
    if args.model_file is not None:
        model = load_model(args.model_file)
        check_schema(model, table.feature_names)
        scores = model.predict_score(table.features)
        return scores, (scores > model.threshold).astype(np.uint8), model
    scores = _read_predictions(args.predictions, table.n_rows, "score")
    labels = _read_predictions(args.predictions, table.n_rows, "label")
    return scores, (labels > 0).astype(np.uint8), None


# ---------------------------------------------------------------- commands

def cmd_fit(args):
    spec = _spec(args, _alpha(args))
    table = _table(args)
    model = fit_ensemble(table, spec, seed=args.seed, threads=args.threads)
    _write_text(dumps_model(model), args.out)


def cmd_predict(args):
    table = _table(args)
    model = load_model(args.model_file)
    check_schema(model, table.feature_names)
    scores = model.predict_score(table.features)
    labels = scores > model.threshold
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["row", "score", "label"])
    for i, (s, lab) in enumerate(zip(scores, labels)):
        w.writerow([i, repr(float(s)), int(lab)])
    _write_text(buf.getvalue(), args.out)


def cmd_significance(args):
    alpha = _alpha(args)
    table = _table(args)
    _, labels, _ = _model_scores(args, table)
    sel = labels.astype(bool)
    n_on = np.count_nonzero(sel & table.on_mask)
    n_off = np.count_nonzero(sel & table.off_mask)
    print(_fmt_sigma(li_ma_significance(n_on, n_off, alpha)))


def cmd_tune_threshold(args):
    alpha = _alpha(args)
    table = _table(args)
    scores, _, model = _model_scores(args, table)
    labeled = table.labeled_mask
    result = tune_threshold(scores[labeled], table.on_mask[labeled], alpha)
    if args.out is not None:
        if model is None:
            raise UsageError("--out needs --model-file")
        _write_text(dumps_model(replace(model, threshold=result.theta)), args.out)
    out = {"sigma": round(result.sigma, 6) + 0.0, "theta": result.theta}
    print(json.dumps(out, sort_keys=True))


def cmd_inject_noise(args):
    noise = NoiseSpec(args.p_plus, args.p_minus)
    try:
        noise.validate()
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if not noise.standard_regime:
        print(f"warning: p_plus + p_minus = {args.p_plus + args.p_minus:g} >= 1; "
              "On no longer holds more positives than Off", file=sys.stderr)
    table = _table(args)
    if table.clean_label is None:
        raise DataError("inject-noise needs --label-col")
    noisy = table.with_region(inject_ccn_noise(table.clean_label, noise, args.seed))
    _write_text(event_csv_text(noisy, _schema(args)), args.out)


def cmd_eval_grouped(args):
    spec = _spec(args, _alpha(args))
    table = _table(args)
    report = evaluate_grouped(table, spec, args.folds, seed=args.seed, repeats=args.repeats,
                              tune=args.pooled_tune, threads=args.threads)
    sys.stdout.write(report.to_json())


def cmd_eval_noisy(args):
    noise = NoiseSpec(args.p_plus, args.p_minus)
    try:
        noise.validate()
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if not 0.0 < args.p_minus < 1.0:
        raise UsageError("--p-minus must lie in (0, 1) to define alpha")
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    spec = _spec(args, alpha_from_p_minus(args.p_minus))
    table = _table(args)
    report = stratified_cv_f1(table, noise, spec, n_folds=args.folds, n_trials=args.trials,
                              seed=args.seed, threads=args.threads)
    sys.stdout.write(report.to_json())


def cmd_fake_on(args):
    spec = _spec(args, _alpha(args))
    table = fake_on_transform(_table(args), args.promote)
    if args.out_table is not None:
        _write_text(event_csv_text(table, _schema(args)), args.out_table)
    report = evaluate_grouped(table, spec, args.folds, seed=args.seed, repeats=args.repeats,
                              tune=args.pooled_tune, threads=args.threads, protocol="fake-on")
    report.params["promote"] = args.promote
    sys.stdout.write(report.to_json())


def cmd_roc_dump(args):
    table = _table(args)
    if table.clean_label is None:
        raise DataError("roc-dump needs clean labels (--label-col)")
    scores, _, _ = _model_scores(args, table)
    curve = roc_points(scores, table.clean_label)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["fpr", "tpr", "threshold"])
    for row in zip(*curve):
        w.writerow([repr(float(x)) for x in row])
    _write_text(buf.getvalue(), args.out)


def cmd_agreement(args):
    if args.predictions is not None:
        ours = _read_predictions(args.predictions, None, args.column)
    else:
        if args.data is None:
            raise UsageError("--model-file needs --data")
        table = _table(args)
        ours, _, _ = _model_scores(args, table)
    other = _read_predictions(args.other, ours.size, args.column)
    out = {"n": int(ours.size), "pearson": round(pearson(ours, other), 4) + 0.0,
           "spearman": round(spearman(ours, other), 4) + 0.0}
    print(json.dumps(out, sort_keys=True))


def build_parser():
    parser = _Parser(prog="sigdetect",
                     description="Classifiers from On/Off (noisy) labels by significance "
                                 "maximization.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="train a detector and write a model file")
    _add_data(p, group=True, label=True)
    _add_model(p)
    _add_alpha(p)
    _add_run(p)
    p.add_argument("--out", required=True, help="model file (- for stdout)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="score a table with a model file")
    _add_data(p, group=True, label=True)
    p.add_argument("--model-file", required=True)
    p.add_argument("--out", default=None, help="predictions CSV (default stdout)")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("significance", help="significance of a model's positives")
    _add_data(p, group=True, label=True)
    _add_scores_source(p)
    _add_alpha(p)
    p.set_defaults(func=cmd_significance)

    p = sub.add_parser("tune-threshold", help="significance-maximizing threshold")
    _add_data(p, group=True, label=True)
    _add_scores_source(p)
    _add_alpha(p)
    p.add_argument("--out", default=None, help="write the re-tuned model file")
    p.set_defaults(func=cmd_tune_threshold)

    p = sub.add_parser("inject-noise", help="replace region tags by CCN-noisy labels")
    _add_data(p, group=True, label=True, required_label=True)
    p.add_argument("--p-plus", type=float, required=True)
    p.add_argument("--p-minus", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="output CSV (default stdout)")
    p.set_defaults(func=cmd_inject_noise)

    for name, func, extra in (("eval-grouped", cmd_eval_grouped, False),
                              ("fake-on", cmd_fake_on, True)):
        p = sub.add_parser(name, help="grouped CV with pooled holdout significance"
                           if not extra else "promote an Off region to On, then evaluate")
        _add_data(p, group=True, label=True, required_group=True)
        _add_model(p)
        _add_alpha(p)
        _add_run(p)
        p.add_argument("--folds", type=int, required=True)
        p.add_argument("--repeats", type=int, default=1)
        p.add_argument("--pooled-tune", choices=("pooled", "fold"), default="pooled",
                       help="threshold from pooled holdout scores or per fold model")
        if extra:
            p.add_argument("--promote", type=int, required=True, metavar="K",
                           help="Off region index to declare On")
            p.add_argument("--out-table", default=None)
        p.set_defaults(func=func)

    p = sub.add_parser("eval-noisy", help="stratified CV F1 under injected label noise")
    _add_data(p, group=True, label=True, required_label=True)
    _add_model(p)
    p.add_argument("--p-plus", type=float, required=True)
    p.add_argument("--p-minus", type=float, required=True,
                   help="noise rate of negatives; also sets alpha = p/(1-p)")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--trials", type=int, default=20)
    _add_run(p)
    p.set_defaults(func=cmd_eval_noisy)

    p = sub.add_parser("roc-dump", help="write the ROC curve against clean labels")
    _add_data(p, group=True, label=True, required_label=True)
    _add_scores_source(p)
    p.add_argument("--out", default=None, help="CSV (default stdout)")
    p.set_defaults(func=cmd_roc_dump)

    p = sub.add_parser("agreement", help="Pearson/Spearman between two score columns")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--predictions", help="our predictions CSV")
    src.add_argument("--model-file")
    p.add_argument("--data", default=None, help="table to score with --model-file")
    p.add_argument("--region-col", default="region")
    p.add_argument("--group-col", default=None)
    p.add_argument("--label-col", default=None)
    p.add_argument("--other", required=True, help="reference predictions CSV")
    p.add_argument("--column", default="score")
    p.set_defaults(func=cmd_agreement)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _check_run(args)
        args.func(args)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (DataError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
