"""``strike`` command-line entry point.

Exit codes: 0 success, 1 runtime failure, 2 configuration or schema failure.
Any ``--key value`` pair not recognized as a flag is applied to the run
configuration as an override (dotted keys address nested sections).
"""
from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__, runners
from .bundle import BundleError, dumps, load_bundle, save_bundle
from .config import ConfigError, load_config
from .grouping import PartitionError
from .metrics import evaluate
from .stacking import predict_strike
from .synth import KINDS as FIXTURE_KINDS
from .synth import make_fixture, write_fixture
from .tabular import SchemaError, load_csv

log = logging.getLogger("strike")


class UsageError(ValueError):
    """Bad input detected by a command (exit code 2)."""


def _write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    fields = list(rows[0]) if rows else []
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(fields)
    for r in rows:
        writer.writerow([_fmt(r.get(f)) for f in fields])
    return buf.getvalue()


def _config(args, extra, need_dataset=True):
    cfg = load_config(args.config, extra, need_dataset)
    if getattr(args, "workers", None) is not None:
        cfg.raw["workers"] = args.workers
    if cfg.dataset is not None and not cfg.dataset.is_file():
        raise ConfigError(f"field 'dataset': file {cfg.dataset} not found")
    return cfg


def _output_dir(args, cfg) -> Path:
    return Path(args.out) if getattr(args, "out", None) else cfg.output_dir


def cmd_train(args, extra) -> int:
    cfg = _config(args, extra)
    model, report = runners.run_train(cfg)
    out = _output_dir(args, cfg)
    bundle = save_bundle(out / "bundle.json", model, cfg.model_snapshot())
    _write(out / "report.json", dumps(report))
    mean, std = report["meta"]["cv_auc_mean"], report["meta"]["cv_auc_std"]
    print(f"meta cv auc {mean:.4f} +/- {std:.4f}; test auc {report['test']['auc']:.4f}")
    print(f"wrote {bundle}")
    return 0


def _load_input(model, snapshot, path, require_label):
    label = snapshot.get("label_column", "target")
    return load_csv(path, label, require_label=require_label, kinds=model.stats.kinds)


def cmd_predict(args, extra) -> int:
    if extra:
        raise UsageError(f"unrecognized arguments: {' '.join(extra)}")
    model, snapshot = load_bundle(args.bundle)
    raw = _load_input(model, snapshot, args.input, require_label=False)
    p = predict_strike(model, raw)
    lines = ["row_index,probability"] + [f"{i},{v:.17g}" for i, v in enumerate(p.tolist())]
    path = _write(Path(args.output), "\n".join(lines) + "\n")
    print(f"wrote {len(p)} scores to {path}")
    return 0


def cmd_evaluate(args, extra) -> int:
    if extra:
        raise UsageError(f"unrecognized arguments: {' '.join(extra)}")
    model, snapshot = load_bundle(args.bundle)
    raw = _load_input(model, snapshot, args.input, require_label=True)
    if len(np.unique(raw.labels)) < 2:
        raise UsageError("AUC is undefined: the labeled file contains a single class")
    metrics = evaluate(predict_strike(model, raw), raw.labels, args.threshold).to_dict()
    text = dumps(metrics)
    if args.output:
        _write(Path(args.output), text)
    sys.stdout.write(text)
    return 0


def _emit_table(out: Path, stem: str, rows: list[dict]) -> None:
    _write(out / f"{stem}.csv", rows_to_csv(rows))
    _write(out / f"{stem}.json", dumps(rows))
    sys.stdout.write(rows_to_csv(rows))


def cmd_ablate_groups(args, extra) -> int:
    cfg = _config(args, extra)
    if args.seeds is not None:
        cfg.raw["ablation_seeds"] = args.seeds
    _emit_table(_output_dir(args, cfg), "ablate_groups", runners.run_ablate_groups(cfg))
    return 0


def cmd_ablate_meta(args, extra) -> int:
    cfg = _config(args, extra)
    _emit_table(_output_dir(args, cfg), "ablate_meta", runners.run_ablate_meta(cfg))
    return 0


def cmd_benchmark(args, extra) -> int:
    cfg = _config(args, extra)
    _emit_table(_output_dir(args, cfg), "benchmark", runners.run_benchmark(cfg))
    return 0


def cmd_cmi(args, extra) -> int:
    cfg = _config(args, extra)
    matrix = runners.run_cmi(cfg)
    out = _output_dir(args, cfg)
    _write(out / "cmi.csv", matrix.to_csv())
    _write(out / "cmi.json", dumps(matrix.to_json_dict()))
    sys.stdout.write(matrix.to_csv())
    print(f"off-diagonal mean {matrix.off_diagonal_mean:.6f} nats")
    return 0


def cmd_synth(args, extra) -> int:
    if extra:
        raise UsageError(f"unrecognized arguments: {' '.join(extra)}")
    fx = make_fixture(args.kind, args.n, args.seed)
    paths = write_fixture(fx, args.out, args.label_column, args.stem)
    print(f"wrote {paths['csv']} and {paths['groups']}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="strike", description="Grouped stacking for tabular risk prediction.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def configured(name, fn, help_text):
        p = sub.add_parser(name, help=help_text, allow_abbrev=False)
        p.add_argument("--config", help="run configuration JSON")
        p.add_argument("--workers", type=int, help="parallel workers (outputs do not depend on it)")
        p.add_argument("--out", help="output directory (default: output_dir from the config)")
        p.set_defaults(fn=fn)
        return p

    configured("train", cmd_train, "fit a model and write bundle.json and report.json")
    p = configured("ablate-groups", cmd_ablate_groups, "compare grouping strategies")
    p.add_argument("--seeds", type=int, nargs="+", help="random-grouping seeds (default 0..4)")
    configured("ablate-meta", cmd_ablate_meta, "compare meta-learner kinds")
    configured("benchmark", cmd_benchmark, "monolithic learners vs orthodox stacking vs grouped stacking")
    configured("cmi", cmd_cmi, "cross-group conditional mutual information matrix")

    for name, fn, help_text, out_help in (
            ("predict", cmd_predict, "score a CSV with a saved bundle", "scores CSV path"),
            ("evaluate", cmd_evaluate, "metrics of a saved bundle on a labeled CSV", "metrics JSON path")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--bundle", required=True)
        p.add_argument("--input", required=True)
        p.add_argument("--output", required=(name == "predict"), help=out_help)
        if name == "evaluate":
            p.add_argument("--threshold", type=float, default=0.5)
        p.set_defaults(fn=fn)

    p = sub.add_parser("synth", help="write a synthetic fixture CSV and its true group config")
    p.add_argument("--kind", choices=FIXTURE_KINDS, required=True)
    p.add_argument("--n", type=int, default=20000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--label-column", default="target")
    p.add_argument("--stem", default="data")
    p.set_defaults(fn=cmd_synth)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.fn(args, extra)
    except (ConfigError, SchemaError, PartitionError, BundleError, UsageError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        log.debug("runtime failure", exc_info=True)
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
