"""Class-frequency weighted binary cross-entropy for the four task heads.

Per element: ``p·y·softplus(-z) + (1-y)·softplus(z)`` with ``p = #neg/#pos``
of that class in the training split. Each task loss is the mean over its
unmasked elements; the final loss is the weighted sum of the four.
"""
from __future__ import annotations

import numpy as np

from ..errors import ShapeMismatch
from .config import LossWeights
from .network import HEADS

WEIGHT_NAMES = {"intent": "alpha", "focus": "beta", "operation": "gamma", "reference": "delta"}


def softplus(z):
    return np.logaddexp(0.0, z)


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def weighted_bce(z, y, p):
    """Elementwise loss and its derivative w.r.t. the logits."""
    z = np.asarray(z, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    with np.errstate(invalid="ignore"):
        # 0·softplus(±inf) must stay 0 for saturated perfect logits
        pos = np.where(y > 0, p * y * softplus(-z), 0.0)
        neg = np.where(y < 1, (1.0 - y) * softplus(z), 0.0)
    loss = pos + neg
    s = sigmoid(z)
    grad = -p * y * (1.0 - s) + (1.0 - y) * s
    return loss, grad


def _element_mask(name, logits, masks):
    m = masks.get(name) if masks else None
    if m is None:
        return np.ones(logits.shape, dtype=bool)
    m = np.asarray(m, dtype=bool)
    while m.ndim < logits.ndim:
        m = m[..., None]
    return np.broadcast_to(m, logits.shape)


def _terms(logits, labels, weights: LossWeights, pos_weights=None, masks=None):
    total, breakdown, grads = 0.0, {}, {}
    for name in HEADS:
        z = np.asarray(logits[name], dtype=np.float64)
        y = np.asarray(labels[name], dtype=np.float64)
        if z.shape != y.shape:
            raise ShapeMismatch(f"{name}: logits {z.shape} vs labels {y.shape}")
        if np.any((y != 0) & (y != 1)):
            raise ValueError(f"{name}: labels must be 0 or 1")
        p = 1.0 if pos_weights is None else np.asarray(pos_weights.get(name, 1.0), dtype=np.float64)
        m = _element_mask(name, z, masks)
        n = int(m.sum())
        if n == 0:
            breakdown[name] = 0.0
            grads[name] = np.zeros_like(z)
            continue
        el, g = weighted_bce(z, y, p)
        j = float(np.where(m, el, 0.0).sum() / n)
        w = getattr(weights, WEIGHT_NAMES[name])
        breakdown[name] = j
        grads[name] = np.where(m, g, 0.0) * (w / n)
        total += w * j
    return total, breakdown, grads


def compute_loss(logits: dict, labels: dict, weights: LossWeights, pos_weights=None, masks=None):
    """(J_final, per-task breakdown). ``masks`` maps a head name to a boolean
    array marking valid elements (padded reference positions are False)."""
    total, breakdown, _ = _terms(logits, labels, weights, pos_weights, masks)
    return total, breakdown


def loss_and_grads(logits, labels, weights, pos_weights=None, masks=None):
    return _terms(logits, labels, weights, pos_weights, masks)


def positive_weights(label_arrays: dict, masks: dict | None = None) -> dict:
    """#neg/#pos per class (last axis) over a training split; 1 where a class has no positives."""
    out = {}
    for name, y in label_arrays.items():
        y = np.asarray(y, dtype=np.float64)
        y2 = y.reshape(-1, y.shape[-1])
        if masks and masks.get(name) is not None:
            keep = np.asarray(masks[name], dtype=bool).reshape(-1)
            y2 = y2[keep]
        pos = y2.sum(0)
        neg = y2.shape[0] - pos
        out[name] = np.where(pos > 0, neg / np.maximum(pos, 1.0), 1.0)
    return out
