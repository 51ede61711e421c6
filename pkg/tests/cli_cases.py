"""Shared CLI fixtures: a small event file and one invocation per subcommand."""

import contextlib
import io
from pathlib import Path

from sigdetect.cli import main
from sigdetect.synthetic import wobble_table
from sigdetect.table import CsvSchema, write_event_csv

SCHEMA = CsvSchema(group_col="group", label_col="label")
COMMON = ["--group-col", "group", "--label-col", "label"]


def run(argv):
    """Run the CLI in-process; returns (exit code, stdout, stderr)."""
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = main([str(a) for a in argv])
    return code, out.getvalue(), err.getvalue()


def write_inputs(directory):
    """Event CSV, a model file and a predictions CSV under ``directory``."""
    d = Path(directory)
    data = d / "events.csv"
    write_event_csv(wobble_table(n=900, gamma_fraction=0.15, n_features=3, n_groups=6, seed=3),
                    data, SCHEMA)
    model = d / "model.json"
    code, _, err = run(["fit", "--data", data, *COMMON, "--model", "noisy-tree",
                        "--max-depth", 3, "--ensemble", 6, "--alpha", 0.2, "--out", model])
    assert code == 0, err
    preds = d / "preds.csv"
    code, _, err = run(["predict", "--data", data, *COMMON, "--model-file", model,
                        "--out", preds])
    assert code == 0, err
    return data, model, preds


def command_cases(data, model, preds, out_dir, threads):
    """(name, argv, output file or None) for every subcommand."""
    o = Path(out_dir)
    thr = ["--threads", threads]
    forest = ["--model", "noisy-tree", "--max-depth", 3, "--ensemble", 6]
    return [
        ("fit", ["fit", "--data", data, *COMMON, *forest, "--alpha", 0.2, "--seed", 4, *thr,
                 "--out", o / "fit.json"], o / "fit.json"),
        ("predict", ["predict", "--data", data, *COMMON, "--model-file", model,
                     "--out", o / "pred.csv"], o / "pred.csv"),
        ("significance", ["significance", "--data", data, *COMMON, "--model-file", model,
                          "--alpha", 0.2], None),
        ("tune-threshold", ["tune-threshold", "--data", data, *COMMON, "--predictions", preds,
                            "--p-minus", 1 / 6], None),
        ("inject-noise", ["inject-noise", "--data", data, *COMMON, "--p-plus", 0.1,
                          "--p-minus", 0.5, "--seed", 2, "--out", o / "noisy.csv"],
         o / "noisy.csv"),
        ("eval-grouped", ["eval-grouped", "--data", data, *COMMON, *forest, "--alpha", 0.2,
                          "--folds", 3, "--repeats", 2, "--seed", 1, *thr], None),
        ("eval-noisy", ["eval-noisy", "--data", data, *COMMON, *forest, "--p-plus", 0.1,
                        "--p-minus", 0.5, "--folds", 3, "--trials", 2, "--seed", 1, *thr], None),
        ("fake-on", ["fake-on", "--data", data, *COMMON, *forest, "--alpha", 0.25,
                     "--folds", 3, "--promote", 2, "--seed", 1, *thr,
                     "--out-table", o / "fake.csv"], o / "fake.csv"),
        ("roc-dump", ["roc-dump", "--data", data, *COMMON, "--model-file", model,
                      "--out", o / "roc.csv"], o / "roc.csv"),
        ("agreement", ["agreement", "--model-file", model, "--data", data, *COMMON,
                       "--other", preds], None),
    ]


def run_case(argv, output):
    """Run one case; returns (exit code, stdout bytes + output file bytes, stderr)."""
    code, out, err = run(argv)
    blob = out.encode()
    if output is not None and code == 0:
        blob += b"\x00" + Path(output).read_bytes()
    return code, blob, err
