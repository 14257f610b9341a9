from __future__ import annotations

import logging
from dataclasses import dataclass, field as dc_field
from typing import Sequence

import numpy as np

from ..errors import CorpusTooSmall
from .config import ModelConfig
from .features import collate
from .loss import compute_loss, loss_and_grads, positive_weights
from .network import backward, forward, init_params

log = logging.getLogger(__name__)

MIN_EXAMPLES = 10
SPLIT_FRACTIONS = (0.7, 0.1, 0.2)


def split_by_table(table_ids: Sequence[str], seed: int) -> dict[str, list[str]]:
    """Seeded 70/10/20 split of the distinct table ids."""
    ids = sorted(set(table_ids))
    order = np.random.default_rng(seed).permutation(len(ids))
    ids = [ids[i] for i in order]
    n_train = int(round(SPLIT_FRACTIONS[0] * len(ids)))
    n_val = int(round(SPLIT_FRACTIONS[1] * len(ids)))
    return {
        "train": ids[:n_train],
        "val": ids[n_train:n_train + n_val],
        "test": ids[n_train + n_val:],
    }


class Adam:
    def __init__(self, params: dict, lr=1e-3, b1=0.9, b2=0.999, eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, b1, b2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict, grads: dict):
        self.t += 1
        c1 = 1.0 - self.b1 ** self.t
        c2 = 1.0 - self.b2 ** self.t
        for k in sorted(params):
            g = grads[k]
            self.m[k] = self.b1 * self.m[k] + (1 - self.b1) * g
            self.v[k] = self.b2 * self.v[k] + (1 - self.b2) * g * g
            params[k] -= self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)


def clip_gradients(grads: dict, max_norm: float) -> float:
    norm = float(np.sqrt(sum(float((g * g).sum()) for g in grads.values())))
    if max_norm and norm > max_norm:
        s = max_norm / norm
        for k in grads:
            grads[k] = grads[k] * s
    return norm


def make_batches(examples: Sequence, batch_size: int, rng: np.random.Generator | None) -> list[list]:
    """Shuffle, then sort within windows of several batches by length to cut padding."""
    idx = np.arange(len(examples)) if rng is None else rng.permutation(len(examples))
    window = batch_size * 8
    batches = []
    for s in range(0, len(idx), window):
        chunk = sorted(idx[s:s + window], key=lambda i: (examples[i].length, i))
        batches += [[examples[i] for i in chunk[j:j + batch_size]] for j in range(0, len(chunk), batch_size)]
    if rng is not None:
        batches = [batches[i] for i in rng.permutation(len(batches))]
    return batches


def _masks(batch):
    return {"reference": batch.rest_mask}


def evaluate_loss(params, config: ModelConfig, batches, pos_weights) -> float:
    total, n = 0.0, 0
    w = config.effective_weights()
    for examples in batches:
        batch = collate(examples, config.e, config.ablation)
        logits, _ = forward(params, config, batch)
        j, _ = compute_loss(logits, batch.labels, w, pos_weights, _masks(batch))
        total += j * batch.size
        n += batch.size
    return total / n if n else 0.0


@dataclass
class TrainResult:
    params: dict
    pos_weights: dict
    split: dict
    history: list = dc_field(default_factory=list)  # validation J_final per epoch, epoch 0 = untrained
    best_epoch: int = 0


def train(examples: Sequence, config: ModelConfig, mode: str, split: dict | None = None) -> TrainResult:
    """Fit parameters on the train split and keep the best validation checkpoint."""
    labeled = [ex for ex in examples if ex.labels is not None]
    if len(labeled) < MIN_EXAMPLES:
        raise CorpusTooSmall(f"need at least {MIN_EXAMPLES} labeled examples, got {len(labeled)}")
    if split is None:
        split = split_by_table([ex.table_id for ex in labeled], config.seed)
    train_ids, val_ids = set(split["train"]), set(split["val"])
    tr = [ex for ex in labeled if ex.table_id in train_ids]
    va = [ex for ex in labeled if ex.table_id in val_ids] or tr

    pos_labels = {}
    for name in ("intent", "focus", "operation"):
        pos_labels[name] = np.vstack([ex.labels[name][None] for ex in tr])
    refs = [ex.labels["reference"] for ex in tr if len(ex.labels["reference"])]
    if refs:
        pos_labels["reference"] = np.vstack(refs)
    pos_weights = positive_weights(pos_labels)

    rng = np.random.default_rng(config.seed)
    params = init_params(config, mode)
    opt = Adam(params, lr=config.learning_rate)
    weights = config.effective_weights()
    val_batches = make_batches(va, config.batch_size, None)

    best = evaluate_loss(params, config, val_batches, pos_weights)
    history = [best]
    best_params = {k: v.copy() for k, v in params.items()}
    best_epoch, stale = 0, 0
    for epoch in range(1, config.max_epochs + 1):
        for examples_b in make_batches(tr, config.batch_size, rng):
            batch = collate(examples_b, config.e, config.ablation)
            logits, cache = forward(params, config, batch)
            _, _, dlogits = loss_and_grads(logits, batch.labels, weights, pos_weights, _masks(batch))
            grads = backward(params, config, batch, cache, dlogits)
            clip_gradients(grads, config.grad_clip)
            opt.step(params, grads)
        val = evaluate_loss(params, config, val_batches, pos_weights)
        history.append(val)
        log.info("epoch %d val J_final %.6f", epoch, val)
        if val < best:
            best, best_epoch, stale = val, epoch, 0
            best_params = {k: v.copy() for k, v in params.items()}
        else:
            stale += 1
            if stale >= config.patience:
                break
    return TrainResult(best_params, pos_weights, split, history, best_epoch)
