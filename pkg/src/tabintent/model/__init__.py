"""Feature fusion, transformer encoder, task heads, losses and training."""
from __future__ import annotations

from ..config import Settings
from ..embeddings import EmbeddingProvider
from ..errors import EmptyTable, UntrainedModel
from ..table import Table
from .config import Ablation, LossWeights, ModelConfig
from .features import CFExample, ChartExample, FieldContext, cf_example, cf_inputs, chart_inputs, collate, field_context
from .io import TrainedModel, load_model, save_model
from .loss import compute_loss
from .network import Batch, encode, forward, fuse_inputs, init_params
from .train import TrainResult, split_by_table, train

__all__ = [
    "Ablation", "Batch", "CFExample", "ChartExample", "FieldContext", "LossWeights", "ModelConfig",
    "TrainResult", "TrainedModel", "cf_example", "collate", "compute_loss", "encode", "field_context",
    "forward", "forward_cf", "forward_chart", "fuse_inputs", "init_params", "load_model", "save_model",
    "split_by_table", "train",
]


def _check(model: TrainedModel | None, mode: str):
    if model is None or not model.params:
        raise UntrainedModel("no trained parameters loaded")
    if model.mode != mode:
        raise UntrainedModel(f"model was trained for {model.mode!r}, not {mode!r}")


def forward_cf(model: TrainedModel, table: Table, field_index: int, provider: EmbeddingProvider,
               settings: Settings, ctx: FieldContext | None = None):
    """Logits for one field plus the context that maps reference positions to cells."""
    _check(model, "cf")
    if ctx is None:
        ctx = field_context(table, field_index, settings, model.config.sample_cap)
    first, rest = cf_inputs(ctx, provider, settings)
    batch = collate([CFExample(table.id, field_index, first, rest)], model.config.e, model.config.ablation)
    logits, _ = forward(model.params, model.config, batch)
    out = {k: logits[k][0] for k in ("intent", "focus", "operation")}
    out["reference"] = logits["reference"][0, :, 0]
    return out, ctx


def forward_chart(model: TrainedModel, table: Table, provider: EmbeddingProvider, settings: Settings):
    _check(model, "chart")
    if not table.fields:
        raise EmptyTable(f"table {table.id!r} has no fields")
    rest, sigs = chart_inputs(table, provider, settings)
    batch = collate([ChartExample(table.id, rest)], model.config.e, model.config.ablation)
    logits, _ = forward(model.params, model.config, batch)
    out = {k: logits[k][0] for k in ("intent", "focus", "operation")}
    out["axis"] = logits["reference"][0]
    return out, sigs
