"""Command line entry point: one subcommand per pipeline stage.

    insultsense ingest --train train.csv --test test_with_solutions.csv --out work/
    insultsense split --merged work/train_merged.csv --out work/split
    insultsense train --config configs/bilstm.json
    insultsense evaluate --model runs/bilstm/model --split work/split/split.json --out runs/bilstm/eval
    insultsense compare --reports runs/*/report.json --out results/
    insultsense predict --model runs/bilstm/model --text "you absolute clown"
    insultsense serve --model-dir runs/bilstm/model --sink flags.jsonl
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import uuid
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from . import corpus as corpus_mod
from .corpus import MERGED_FILENAME, Origin, SplitSpec, file_sha256

log = logging.getLogger("insultsense")

RUN_MANIFEST = "run_manifest.json"


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def write_run_manifest(directory, command: str, started: str, inputs: dict | None = None, **extra) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = {
        "run_id": uuid.uuid4().hex,
        "command": command,
        "started": started,
        "finished": _now(),
        "inputs": {str(p): file_sha256(p) for p in (inputs or {}) if Path(p).is_file()},
        "tool_version": __version__,
        **extra,
    }
    path = directory / RUN_MANIFEST
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
    return path


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# -- subcommands ------------------------------------------------------------------


def cmd_ingest(args) -> int:
    started = _now()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    train = corpus_mod.load_source_csv(args.train, Origin.TRAIN_FILE)
    test = corpus_mod.load_source_csv(args.test, Origin.TEST_FILE)
    merged = corpus_mod.merge([train, test])
    merged_path = corpus_mod.write_csv(merged, out / MERGED_FILENAME)
    stats = {
        "train_file": corpus_mod.stats(train),
        "test_file": corpus_mod.stats(test),
        "merged": corpus_mod.stats(merged),
    }
    (out / "stats.json").write_text(_dump(stats))
    write_run_manifest(out, "ingest", started, [args.train, args.test], outputs=[str(merged_path)])
    print(_dump(stats), end="")
    return 0


def cmd_split(args) -> int:
    started = _now()
    merged = corpus_mod.load_source_csv(args.merged)
    spec = SplitSpec(tuple(args.ratios), args.seed, args.stratified)
    bundle = corpus_mod.split(merged, spec)
    out = Path(args.out)
    path = corpus_mod.write_split_manifest(
        bundle, out / "split.json", source=str(Path(args.merged).resolve()), source_sha256=file_sha256(args.merged)
    )
    sizes = {name: len(part) for name, part in bundle.parts().items()}
    write_run_manifest(out, "split", started, [args.merged], split={"ratios": list(spec.ratios), "seed": spec.seed,
                       "stratified": spec.stratified}, sizes=sizes)
    print(_dump({"split_manifest": str(path), "sizes": sizes}), end="")
    return 0


def _resolve(base: Path, value: str | None) -> Path | None:
    if value is None:
        return None
    p = Path(value)
    return p if p.is_absolute() else (base / p)


def load_train_config(path, overrides: dict | None = None) -> dict:
    """Read a JSON run config; relative paths resolve against the config's directory."""
    path = Path(path)
    cfg = json.loads(path.read_text())
    base = path.parent.resolve()
    data = cfg.setdefault("data", {})
    for key in ("merged_csv", "split_manifest"):
        if data.get(key):
            data[key] = str(_resolve(base, data[key]))
    for key in ("assets", "out_dir"):
        if cfg.get(key):
            cfg[key] = str(_resolve(base, cfg[key]))
    cfg.setdefault("train", {}).update(overrides or {})
    return cfg


def _bundle_for(data_cfg: dict):
    merged = corpus_mod.load_source_csv(data_cfg["merged_csv"])
    if data_cfg.get("split_manifest"):
        manifest = json.loads(Path(data_cfg["split_manifest"]).read_text())
        return corpus_mod.apply_split_manifest(merged, manifest)
    s = data_cfg.get("split", {})
    spec = SplitSpec(tuple(s.get("ratios", (0.6, 0.2, 0.2))), int(s.get("seed", 42)), bool(s.get("stratified", True)))
    return corpus_mod.split(merged, spec)


def cmd_train(args) -> int:
    from .assets import AssetLocator
    from .evaluation import report
    from .models import ModelKind, TrainConfig, fit, predict_labels, save_model

    started = _now()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    for kv in args.set or []:
        key, _, value = kv.partition("=")
        overrides[key] = json.loads(value)
    cfg = load_train_config(args.config, overrides)
    if args.out:
        cfg["out_dir"] = args.out
    if not cfg.get("out_dir"):
        raise ValueError("no output directory (set out_dir in the config or pass --out)")
    out = Path(cfg["out_dir"])

    kind = ModelKind.from_dict(cfg["model"])
    config = TrainConfig.for_variant(kind.variant, **cfg["train"])
    assets = AssetLocator.from_file(cfg["assets"]) if cfg.get("assets") else AssetLocator.from_env()
    bundle = _bundle_for(cfg["data"])
    model, tlog = fit(kind, bundle, config, assets)
    model_dir = save_model(model, out / "model")

    rep = report(kind.model_id, bundle.test.labels, [int(x) for x in predict_labels(model, bundle.test.texts)])
    report_path = out / "report.json"
    report_path.write_text(rep.to_json())
    inputs = [cfg["data"]["merged_csv"]] + ([cfg["data"]["split_manifest"]] if cfg["data"].get("split_manifest") else [])
    run = dict(split=model.manifest["split"], kind=kind.to_dict(), config=config.to_dict(), report=str(report_path),
               model_dir=str(model_dir), config_file=str(Path(args.config).resolve()))
    write_run_manifest(out, "train", started, inputs, **run)
    write_run_manifest(model_dir, "train", started, inputs, **run)
    summary = {"model_dir": str(model_dir), "report": str(report_path), "epochs_run": len(tlog),
               "best_epoch": tlog.best_epoch, "test_accuracy": round(rep.accuracy, 4),
               "test_macro_f1": round(rep.macro_f1, 4)}
    print(_dump(summary), end="")
    return 0


def cmd_evaluate(args) -> int:
    from .evaluation import report
    from .models import load_model, predict_labels

    started = _now()
    model = load_model(args.model)
    manifest = json.loads(Path(args.split).read_text())
    merged_path = args.merged or manifest.get("source")
    if not merged_path:
        raise ValueError("split manifest has no 'source'; pass --merged")
    bundle = corpus_mod.apply_split_manifest(corpus_mod.load_source_csv(merged_path), manifest)
    part = getattr(bundle, args.part)
    threshold = args.threshold if args.threshold is not None else model.config.decision_threshold
    pred = [int(x) for x in predict_labels(model, part.texts, threshold)]
    rep = report(args.model_id or model.model_id, part.labels, pred)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(rep.to_json())
    write_run_manifest(out, "evaluate", started, [args.split, merged_path], model_dir=str(args.model),
                       model_version=model.model_version, part=args.part, threshold=threshold)
    print(rep.to_json(), end="")
    return 0


def cmd_compare(args) -> int:
    from .evaluation import ClassificationReport, compare, load_baseline, render_charts

    started = _now()
    reports = [ClassificationReport.load(p) for p in args.reports]
    baseline = None if args.no_baseline else load_baseline(args.baseline)
    table = compare(reports, baseline)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    table.to_csv(out / "comparison.csv")
    (out / "comparison.md").write_text(table.to_markdown())
    charts = render_charts(table, out, fmt=args.format)
    inputs = list(args.reports) + ([args.baseline] if args.baseline and not args.no_baseline else [])
    write_run_manifest(out, "compare", started, inputs, outputs=[str(p) for p in charts])
    print(table.to_markdown(), end="")
    return 0


def cmd_predict(args) -> int:
    from .models import load_model
    from .sentinel import Sentinel

    model = load_model(args.model)
    threshold = args.threshold if args.threshold is not None else model.config.decision_threshold
    if args.text is not None:
        texts = [args.text]
    else:
        src = sys.stdin if args.file == "-" else open(args.file, encoding="utf-8")
        with src:
            texts = [ln.rstrip("\n") for ln in src if ln.strip()]
    sentinel = Sentinel(model, sink=None, threshold=threshold, model_version=model.model_version,
                        max_batch=max(len(texts), 1))
    for res in sentinel.score_batch(texts):
        print(json.dumps(res.to_dict()))
    sentinel.close()
    return 0


def cmd_serve(args) -> int:
    from .sentinel import SentinelConfig, parse_sink, run_server

    started = _now()
    config = SentinelConfig.from_env(
        model_dir=args.model_dir,
        threshold=args.threshold,
        sink=parse_sink(args.sink) if args.sink else None,
        max_batch=args.max_batch,
    )
    if args.run_dir:
        write_run_manifest(args.run_dir, "serve", started, model_dir=str(config.model_dir),
                           threshold=config.threshold, sink=str(config.sink))
    run_server(config, host=args.host, port=args.port)
    return 0


# -- parser ----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="insultsense", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="load both source CSVs, merge, write train_merged.csv + stats")
    p.add_argument("--train", required=True, help="train.csv")
    p.add_argument("--test", required=True, help="test_with_solutions.csv")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("split", help="seeded train/val/test split manifest")
    p.add_argument("--merged", required=True)
    p.add_argument("--ratios", type=float, nargs=3, default=[0.6, 0.2, 0.2], metavar=("TRAIN", "VAL", "TEST"))
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--stratified", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="train one model from a JSON run config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="override out_dir")
    p.add_argument("--seed", type=int, help="override train.seed")
    p.add_argument("--set", action="append", metavar="KEY=JSON", help="override a TrainConfig field")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="classification report of a saved model on one split part")
    p.add_argument("--model", required=True)
    p.add_argument("--split", required=True, help="split manifest JSON")
    p.add_argument("--merged", help="merged corpus CSV (defaults to the manifest's source)")
    p.add_argument("--part", choices=["train", "val", "test"], default="test")
    p.add_argument("--threshold", type=float)
    p.add_argument("--model-id")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare", help="comparison table and charts over report JSON files")
    p.add_argument("--reports", nargs="+", required=True)
    p.add_argument("--baseline", help="baseline row fixture (defaults to the bundled one)")
    p.add_argument("--no-baseline", action="store_true")
    p.add_argument("--format", choices=["png", "svg"], default="png")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("predict", help="score text(s) with a saved model")
    p.add_argument("--model", required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--text")
    g.add_argument("--file", help="one comment per line ('-' for stdin)")
    p.add_argument("--threshold", type=float)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("serve", help="run the scoring HTTP service")
    p.add_argument("--model-dir", help="defaults to $SENTINEL_MODEL_DIR")
    p.add_argument("--threshold", type=float, help="defaults to $SENTINEL_THRESHOLD or 0.5")
    p.add_argument("--sink", help="JSONL path or webhook URL (defaults to $SENTINEL_SINK)")
    p.add_argument("--max-batch", type=int)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--run-dir", help="write a run manifest here")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except Exception as exc:
        if args.verbose:
            log.exception("command failed")
        print(f"insultsense {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
