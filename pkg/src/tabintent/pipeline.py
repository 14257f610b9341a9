"""End-to-end glue: featurize a labeled corpus, train the CF and chart models
on a shared table split, and evaluate them on held-out tables."""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass


from .config import Settings, default_settings
from .corpus import Corpus
from .embeddings import HashedNGramEmbedder
from .evalkit import (
    NA,
    MatchPolicy,
    chart_recall_at_k,
    chart_recall_precision,
    per_operation_recall,
    recall_at_k_cf,
    semantics_recall,
)
from .model import ModelConfig, TrainedModel, split_by_table, train
from .model.features import cf_example, chart_example
from .model.loss import sigmoid
from .records import NUMERIC_ONLY_FOCUSES, OPERATIONS, ChartType, DataFocusCF, UserIntentCF
from .recommend import decode_cf, rank_decoded, recommend_chart
from .semantics import label_semantics_cf
from .table import FieldType

log = logging.getLogger(__name__)


def _featurize_one(args):
    kind, table, recs, dim, settings, cap = args
    provider = HashedNGramEmbedder(dim=dim)
    if kind == "cf":
        return cf_example(table, recs[0].field_index, recs, provider, settings, cap)
    return chart_example(table, recs, provider, settings)


def featurize(corpus: Corpus, config: ModelConfig, settings: Settings | None = None, workers: int = 1):
    """CF examples (one per field with gold records) and chart examples (one per table with charts)."""
    settings = settings or default_settings()
    tmap = corpus.table_map()
    jobs = [("cf", tmap[tid], recs, config.e, settings, config.sample_cap)
            for (tid, _), recs in sorted(corpus.cf_records_by_field().items())]
    jobs += [("chart", tmap[tid], recs, config.e, settings, config.sample_cap)
             for tid, recs in sorted(corpus.chart_records_by_table().items())]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(_featurize_one, jobs, chunksize=32))
    else:
        out = [_featurize_one(j) for j in jobs]
    n_cf = sum(1 for j in jobs if j[0] == "cf")
    return out[:n_cf], out[n_cf:]


@dataclass
class Models:
    cf: TrainedModel | None
    chart: TrainedModel | None
    split: dict


def train_all(corpus: Corpus, config: ModelConfig, settings: Settings | None = None, workers: int = 1,
              modes=("cf", "chart")) -> Models:
    cf_ex, chart_ex = featurize(corpus, config, settings, workers)
    labeled_ids = sorted({r.table_id for r in corpus.records})
    split = split_by_table(labeled_ids, config.seed)
    trained = {}
    for mode, examples in (("cf", cf_ex), ("chart", chart_ex)):
        if mode not in modes or not examples:
            trained[mode] = None
            continue
        res = train(examples, config, mode, split)
        log.info("%s: best epoch %d of %d", mode, res.best_epoch, len(res.history) - 1)
        trained[mode] = TrainedModel(mode, config, res.params, res.pos_weights, {
            "history": res.history, "best_epoch": res.best_epoch, "split": split,
        })
    return Models(trained["cf"], trained["chart"], split)


def rank_semantics_cf(logits: dict, field_type: FieldType) -> list[tuple]:
    """(intent, focus) pairs by P(u)·P(d); numeric-only focuses dropped on other fields."""
    pu, pd = sigmoid(logits["intent"]), sigmoid(logits["focus"])
    pairs = []
    for i, u in enumerate(UserIntentCF):
        for j, d in enumerate(DataFocusCF):
            if field_type is not FieldType.NUMERIC and d in NUMERIC_ONLY_FOCUSES:
                continue
            pairs.append((-(pu[i] * pd[j]), i, j, u, d))
    pairs.sort(key=lambda t: t[:3])
    return [(u, d) for *_, u, d in pairs]


def evaluate(models: Models, corpus: Corpus, split_name: str = "test", k_max: int = 3,
             settings: Settings | None = None) -> dict:
    from .model import forward_cf

    settings = settings or default_settings()
    ids = set(models.split[split_name])
    tmap = corpus.table_map()
    metrics: dict = {
        "split": {name: len(v) for name, v in models.split.items()},
        "split_fractions": [0.7, 0.1, 0.2],
        "evaluated_on": split_name,
    }
    if models.cf is not None:
        m = models.cf
        provider = HashedNGramEmbedder(dim=m.config.e)
        preds, gold, sem_pred, sem_gold = {}, {}, {}, {}
        for (tid, fi), recs in sorted(corpus.cf_records_by_field().items()):
            if tid not in ids:
                continue
            table = tmap[tid]
            key = f"{tid}:{fi}"
            dec = decode_cf(m, table, fi, settings, provider)
            preds[key] = rank_decoded(dec, table, fi, k_max)
            gold[key] = recs
            ctx = dec.ctx
            sem_gold[key] = label_semantics_cf(recs, ctx.field, ctx.sigs, settings.vocab)
            logits, _ = forward_cf(m, table, fi, provider, settings, ctx)
            sem_pred[key] = rank_semantics_cf(logits, ctx.field.ftype)
        recall = {
            pol.value: {str(k): recall_at_k_cf(preds, gold, k, pol) for k in (1, 3)}
            for pol in MatchPolicy
        }
        per_op = {}
        for op in OPERATIONS:
            n = sum(any(r.operation is op for r in g) for g in gold.values())
            per_op[op.value] = {"R@1": per_operation_recall(preds, gold, op), "n": n}
        sem = NA if m.config.ablation.no_semantics else semantics_recall(sem_pred, sem_gold, 1)
        metrics["cf"] = {"n_fields": len(gold), "recall": recall, "per_operation": per_op, "semantics": sem,
                         "ablation": m.config.ablation.tag()}
    if models.chart is not None:
        m = models.chart
        provider = HashedNGramEmbedder(dim=m.config.e)
        preds, gold = {}, {}
        for tid, recs in sorted(corpus.chart_records_by_table().items()):
            if tid not in ids:
                continue
            preds[tid] = recommend_chart(m, tmap[tid], k_max, settings, provider)
            gold[tid] = recs
        per_type = {}
        for ct in ChartType:
            r, p = chart_recall_precision(preds, gold, ct)
            per_type[ct.value] = {"R@1": r, "P@1": p}
        metrics["chart"] = {
            "n_tables": len(gold),
            "recall": {str(k): chart_recall_at_k(preds, gold, k) for k in (1, 3)},
            "per_type": per_type,
        }
    return metrics


def checksum(models: Models) -> dict:
    return {name: getattr(models, name).checksum() for name in ("cf", "chart") if getattr(models, name)}


__all__ = ["Models", "checksum", "evaluate", "featurize", "rank_semantics_cf", "train_all"]
