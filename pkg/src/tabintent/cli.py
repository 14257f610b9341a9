"""Command line entry point: ``tabintent <subcommand> ...``.

Exit status: 0 on success, 1 on usage errors, 2 on data errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import Settings, load_config
from .corpus import DEFAULT_COVERAGE_THRESHOLD, DEFAULT_MAX_PER_SCHEMA, prepare, read_corpus, write_corpus
from .errors import DataError, UsageError
from .evalkit import metrics_json, text_report
from .model import Ablation, ModelConfig, load_model, save_model
from .pipeline import Models, featurize, train_all, evaluate
from .recommend import recommend_cf, recommend_chart
from .records import SemanticsLabel
from .signatures import compute_field_signatures
from .semantics import label_semantics_chart
from .synth import SynthSpec, generate_synthetic
from .table import read_csv

log = logging.getLogger("tabintent")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_common(p, model_flags=False):
    p.add_argument("--seed", type=int, default=7, help="random seed (default 7)")
    p.add_argument("--config", help="JSON config overriding vocabularies, keywords, the intent/focus map "
                                    "and, under key \"model\", model hyper-parameters")
    p.add_argument("-v", "--verbose", action="store_true")
    if model_flags:
        p.add_argument("--no-semantics", action="store_true", help="drop intent/focus heads and all pruning")
        p.add_argument("--no-statistical", action="store_true", help="zero signature inputs")
        p.add_argument("--no-linguistic", action="store_true", help="zero text-embedding inputs")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="tabintent", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a labeled synthetic corpus")
    p.add_argument("--n", type=int, required=True, help="number of tables")
    p.add_argument("--output", required=True)
    p.add_argument("--rows-min", type=int, default=12)
    p.add_argument("--rows-max", type=int, default=40)
    p.add_argument("--mix", help='CF pattern mix as JSON, e.g. \'{"IsError": 1}\'')
    p.add_argument("--chart-fraction", type=float, default=0.25)
    _add_common(p)

    p = sub.add_parser("prep", help="merge records, filter by coverage, dedup and sample by schema")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--coverage", type=float, default=DEFAULT_COVERAGE_THRESHOLD)
    p.add_argument("--max-per-schema", type=int, default=DEFAULT_MAX_PER_SCHEMA)
    _add_common(p)

    p = sub.add_parser("featurize", help="compute model inputs and labels for a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--output", required=True, help=".npz archive")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--paper-scale", action="store_true")
    _add_common(p)

    p = sub.add_parser("label", help="golden analytical-semantics labels as JSONL")
    p.add_argument("--corpus", required=True)
    p.add_argument("--output", required=True)
    _add_common(p)

    p = sub.add_parser("train", help="train the CF and chart models")
    p.add_argument("--corpus", required=True)
    p.add_argument("--output", required=True, help="model directory")
    p.add_argument("--paper-scale", action="store_true", help="D=256, 8 heads, 6 layers")
    p.add_argument("--epochs", type=int, help="maximum epochs")
    p.add_argument("--workers", type=int, default=1, help="featurization processes")
    p.add_argument("--only", choices=["cf", "chart"], help="train a single model")
    _add_common(p, model_flags=True)

    p = sub.add_parser("recommend", help="recommend CF rules for a field or charts for a table")
    p.add_argument("--model", required=True, help="model directory")
    p.add_argument("--table", required=True, help="CSV file (first row = headers)")
    p.add_argument("--field", type=int, help="field index (default: every field)")
    p.add_argument("--chart", action="store_true")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--explain", action="store_true")
    p.add_argument("--output", help="JSONL file (default stdout)")
    _add_common(p, model_flags=True)

    p = sub.add_parser("eval", help="evaluate trained models on a corpus split")
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--split", default="test", choices=["train", "val", "test"])
    p.add_argument("--output", help="metrics JSON (default stdout)")
    p.add_argument("--report", help="plain-text report file")
    p.add_argument("--workers", type=int, default=1)
    _add_common(p, model_flags=True)
    return ap


def _settings(args) -> Settings:
    return Settings.load(args.config)


def _ablation(args) -> Ablation:
    return Ablation(args.no_semantics, args.no_statistical, args.no_linguistic)


def _model_config(args) -> ModelConfig:
    overrides = dict(load_config(args.config).get("model", {})) if args.config else {}
    overrides["seed"] = args.seed
    if getattr(args, "epochs", None):
        overrides["max_epochs"] = args.epochs
    if getattr(args, "paper_scale", False):
        overrides = {"D": 256, "heads": 8, "layers": 6, **overrides}
    try:
        cfg = ModelConfig.from_dict(overrides)
    except TypeError as exc:
        raise UsageError(f"bad model settings in config: {exc}") from None
    if hasattr(args, "no_semantics"):
        cfg = replace(cfg, ablation=_ablation(args))
    return cfg


def _run_header(args, **extra) -> dict:
    """Effective settings of a run, free of paths and clocks so outputs stay reproducible."""
    skip = {"output", "report", "model", "corpus", "table", "input", "config", "verbose", "command"}
    argv = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    return {"doc": "run", "command": args.command, "version": __version__, "seed": args.seed,
            "args": argv, "config": load_config(args.config), **extra}


def _write(path, text: str):
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_synth(args):
    mix = json.loads(args.mix) if args.mix else None
    spec = SynthSpec(args.n, (args.rows_min, args.rows_max), args.seed, mix, chart_fraction=args.chart_fraction)
    corpus = generate_synthetic(spec, _settings(args).vocab)
    corpus.header["run"] = _run_header(args)
    write_corpus(args.output, corpus)
    log.info("wrote %d tables, %d records", len(corpus.tables), len(corpus.records))


def cmd_prep(args):
    corpus = read_corpus(args.input)
    out = prepare(corpus, args.coverage, args.max_per_schema, args.seed)
    out.header["run"] = _run_header(args)
    write_corpus(args.output, out)
    log.info("kept %d of %d tables, %d of %d records", len(out.tables), len(corpus.tables),
             len(out.records), len(corpus.records))


def cmd_featurize(args):
    corpus = read_corpus(args.corpus)
    cfg = _model_config(args)
    cf_ex, chart_ex = featurize(corpus, cfg, _settings(args), args.workers)
    arrays = {"__meta__": np.frombuffer(json.dumps(_run_header(args, model=cfg.to_dict()), sort_keys=True)
                                        .encode(), dtype=np.uint8)}
    for name, exs in (("cf", cf_ex), ("chart", chart_ex)):
        if not exs:
            continue
        arrays[f"{name}/ids"] = np.array([f"{e.table_id}:{getattr(e, 'field_index', '')}" for e in exs])
        arrays[f"{name}/offsets"] = np.cumsum([0] + [len(e.rest) for e in exs])
        arrays[f"{name}/rest"] = np.vstack([e.rest for e in exs])
        if name == "cf":
            arrays["cf/first"] = np.vstack([e.first for e in exs])
        for key in ("intent", "focus", "operation"):
            arrays[f"{name}/{key}"] = np.vstack([e.labels[key] for e in exs])
        arrays[f"{name}/reference"] = np.vstack([e.labels["reference"] for e in exs])
    with open(args.output, "wb") as fh:
        np.savez_compressed(fh, **arrays)
    log.info("featurized %d fields and %d chart tables", len(cf_ex), len(chart_ex))


def cmd_label(args):
    from .model.features import field_context
    from .semantics import label_semantics_cf

    corpus = read_corpus(args.corpus)
    settings = _settings(args)
    tmap = corpus.table_map()
    lines = [json.dumps(_run_header(args), sort_keys=True)]
    for (tid, fi), recs in sorted(corpus.cf_records_by_field().items()):
        ctx = field_context(tmap[tid], fi, settings)
        lab = label_semantics_cf(recs, ctx.field, ctx.sigs, settings.vocab)
        lines.append(json.dumps({"doc": "label", "kind": "CF", "table_id": tid, "field_index": fi,
                                 **lab.to_json()}, sort_keys=True))
    for tid, recs in sorted(corpus.chart_records_by_table().items()):
        t = tmap[tid]
        sigs = [compute_field_signatures(t, i, settings.vocab, settings.keywords_x, settings.keywords_y)
                for i in range(len(t.fields))]
        labs = [label_semantics_chart(r, t, sigs) for r in recs]
        merged = SemanticsLabel(frozenset().union(*(x.intents for x in labs)),
                                frozenset().union(*(x.focuses for x in labs)))
        lines.append(json.dumps({"doc": "label", "kind": "Chart", "table_id": tid, **merged.to_json()},
                                sort_keys=True))
    _write(args.output, "\n".join(lines) + "\n")


def cmd_train(args):
    corpus = read_corpus(args.corpus)
    cfg = _model_config(args)
    modes = (args.only,) if args.only else ("cf", "chart")
    models = train_all(corpus, cfg, _settings(args), args.workers, modes)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    summary = _run_header(args, model=cfg.to_dict(),
                          split={k: len(v) for k, v in models.split.items()})
    for name in ("cf", "chart"):
        m = getattr(models, name)
        if m is not None:
            save_model(m, out / f"{name}.npz")
            summary[name] = {"best_epoch": m.meta["best_epoch"], "val_history": m.meta["history"]}
    (out / "split.json").write_text(json.dumps(models.split, indent=1, sort_keys=True), encoding="utf-8")
    (out / "run.json").write_text(json.dumps(summary, indent=2, sort_keys=True), encoding="utf-8")
    log.info("saved models to %s", out)


def _load_models(args, need=("cf", "chart")) -> Models:
    d = Path(args.model)
    if not d.is_dir():
        raise DataError(f"model directory {d} not found")
    loaded = {}
    abl = _ablation(args)
    for name in ("cf", "chart"):
        path = d / f"{name}.npz"
        if name in need and path.exists():
            m = load_model(path)
            a = m.config.ablation
            # flags given at evaluation time add to those the model was trained with
            m.config = replace(m.config, ablation=Ablation(
                a.no_semantics or abl.no_semantics, a.no_statistical or abl.no_statistical,
                a.no_linguistic or abl.no_linguistic))
            loaded[name] = m
        else:
            loaded[name] = None
    split_path = d / "split.json"
    split = json.loads(split_path.read_text(encoding="utf-8")) if split_path.exists() else {}
    return Models(loaded["cf"], loaded["chart"], split)


def cmd_recommend(args):
    table = read_csv(args.table, id=Path(args.table).stem)
    settings = _settings(args)
    models = _load_models(args, ("chart",) if args.chart else ("cf",))
    lines = [json.dumps(_run_header(args), sort_keys=True)]
    if args.chart:
        if models.chart is None:
            raise DataError(f"no chart model in {args.model}")
        recs = recommend_chart(models.chart, table, args.k, settings, explain=args.explain)
        lines += [json.dumps(r.to_json(args.explain), sort_keys=True) for r in recs]
    else:
        if models.cf is None:
            raise DataError(f"no CF model in {args.model}")
        fields = [args.field] if args.field is not None else range(len(table.fields))
        for fi in fields:
            recs = recommend_cf(models.cf, table, fi, args.k, settings, explain=args.explain)
            lines += [json.dumps(r.to_json(args.explain), sort_keys=True) for r in recs]
    _write(args.output, "\n".join(lines) + "\n")


def cmd_eval(args):
    corpus = read_corpus(args.corpus)
    models = _load_models(args)
    if args.split not in models.split:
        raise DataError(f"model directory has no {args.split!r} split")
    metrics = evaluate(models, corpus, args.split, settings=_settings(args))
    metrics["run"] = _run_header(args)
    _write(args.output, metrics_json(metrics))
    if args.report:
        Path(args.report).write_text(text_report(metrics), encoding="utf-8")


COMMANDS = {
    "synth": cmd_synth, "prep": cmd_prep, "featurize": cmd_featurize, "label": cmd_label,
    "train": cmd_train, "recommend": cmd_recommend, "eval": cmd_eval,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            raise UsageError("a subcommand is required: " + ", ".join(COMMANDS))
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
        if getattr(args, "workers", 1) < 1:
            raise UsageError("--workers must be at least 1")
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"tabintent: usage error: {exc}", file=sys.stderr)
        return 1
    except (DataError, FileNotFoundError, IsADirectoryError, json.JSONDecodeError) as exc:
        print(f"tabintent: data error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"tabintent: usage error: {exc}", file=sys.stderr)
        return 1
    return 0


def run(argv=None) -> int:
    return main(argv)


if __name__ == "__main__":
    os.environ.setdefault("PYTHONHASHSEED", "0")
    sys.exit(main())
