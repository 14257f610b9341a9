"""Fusion layers, a pre-norm transformer encoder and four task heads in numpy.

Forward passes return a cache that ``backward`` consumes; gradients are
derived by hand and checked against finite differences in the test suite.
No positional encoding is used: the only per-position signal besides the
inputs is the token-type embedding.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from ..errors import DimensionMismatch
from ..records import DataFocusCF, DataFocusChart, OPERATIONS, ChartType, UserIntentCF, UserIntentChart
from ..signatures import FIELD_SIGNATURE_DIM
from .config import ModelConfig

TOKEN_TABLE, TOKEN_FIELD, TOKEN_CELL = 0, 1, 2
CELL_FEATURE_DIM = 19
LN_EPS = 1e-5

HEAD_SIZES = {
    "cf": {"intent": len(UserIntentCF), "focus": len(DataFocusCF), "operation": len(OPERATIONS), "reference": 1},
    "chart": {"intent": len(UserIntentChart), "focus": len(DataFocusChart), "operation": len(ChartType), "reference": 2},
}
HEADS = ("intent", "focus", "operation", "reference")


@dataclass
class Batch:
    """Padded mini-batch. ``first`` is the field input (CF) and ``rest`` the cell
    inputs; in chart mode ``first`` is unused and ``rest`` holds field inputs."""

    mode: str
    first: np.ndarray | None  # (B, e+|S|) for CF
    rest: np.ndarray  # (B, T-1, d_in)
    mask: np.ndarray  # (B, T) bool, position 0 always valid
    types: np.ndarray  # (B, T) int
    labels: dict = dc_field(default_factory=dict)

    @property
    def size(self) -> int:
        return self.mask.shape[0]

    @property
    def rest_mask(self) -> np.ndarray:
        return self.mask[:, 1:]


def _glorot(rng, fan_in, fan_out):
    return rng.normal(0.0, np.sqrt(2.0 / (fan_in + fan_out)), size=(fan_in, fan_out))


def init_params(config: ModelConfig, mode: str, seed: int | None = None, head_scale: float = 0.0) -> dict:
    """Fresh parameters. Heads are zero unless ``head_scale`` > 0 (used by gradient checks)."""
    if mode not in HEAD_SIZES:
        raise ValueError(f"unknown mode {mode!r}")
    rng = np.random.default_rng(config.seed if seed is None else seed)
    D, e = config.D, config.e
    F = D * config.ffn_mult
    p = {
        "Wf": _glorot(rng, e + FIELD_SIGNATURE_DIM, D), "bf": np.zeros(D),
        "Wc": _glorot(rng, e + CELL_FEATURE_DIM, D), "bc": np.zeros(D),
        "tok": rng.normal(0.0, 0.02, size=(3, D)),
    }
    for l in range(config.layers):
        p.update({
            f"l{l}.ln1_g": np.ones(D), f"l{l}.ln1_b": np.zeros(D),
            f"l{l}.Wq": _glorot(rng, D, D), f"l{l}.bq": np.zeros(D),
            f"l{l}.Wk": _glorot(rng, D, D), f"l{l}.bk": np.zeros(D),
            f"l{l}.Wv": _glorot(rng, D, D), f"l{l}.bv": np.zeros(D),
            f"l{l}.Wo": _glorot(rng, D, D), f"l{l}.bo": np.zeros(D),
            f"l{l}.ln2_g": np.ones(D), f"l{l}.ln2_b": np.zeros(D),
            f"l{l}.W1": _glorot(rng, D, F), f"l{l}.b1": np.zeros(F),
            f"l{l}.W2": _glorot(rng, F, D), f"l{l}.b2": np.zeros(D),
        })
    p["lnf_g"], p["lnf_b"] = np.ones(D), np.zeros(D)
    for name, n in HEAD_SIZES[mode].items():
        p[f"head.{name}.W"] = head_scale * rng.normal(size=(D, n)) if head_scale else np.zeros((D, n))
        p[f"head.{name}.b"] = head_scale * rng.normal(size=n) if head_scale else np.zeros(n)
    return p


# --- layer primitives ---------------------------------------------------------

def _ln_fwd(x, g, b):
    mu = x.mean(-1, keepdims=True)
    xc = x - mu
    inv = 1.0 / np.sqrt((xc * xc).mean(-1, keepdims=True) + LN_EPS)
    xh = xc * inv
    return xh * g + b, (xh, inv, g)


def _ln_bwd(dy, cache):
    xh, inv, g = cache
    dg = (dy * xh).reshape(-1, xh.shape[-1]).sum(0)
    db = dy.reshape(-1, xh.shape[-1]).sum(0)
    dxh = dy * g
    dx = inv * (dxh - dxh.mean(-1, keepdims=True) - xh * (dxh * xh).mean(-1, keepdims=True))
    return dx, dg, db


def _lin(x, W, b):
    return x @ W + b


def _lin_grads(x, dy):
    d_in, d_out = x.shape[-1], dy.shape[-1]
    x2, dy2 = x.reshape(-1, d_in), dy.reshape(-1, d_out)
    return x2.T @ dy2, dy2.sum(0)


def _split_heads(x, H):
    B, T, D = x.shape
    return x.reshape(B, T, H, D // H).transpose(0, 2, 1, 3)


def _merge_heads(x):
    B, H, T, dh = x.shape
    return x.transpose(0, 2, 1, 3).reshape(B, T, H * dh)


def _softmax(s):
    m = s.max(-1, keepdims=True)
    e = np.exp(s - m)
    return e / e.sum(-1, keepdims=True)


def _attn_fwd(a, p, l, key_bias, H):
    q = _split_heads(_lin(a, p[f"l{l}.Wq"], p[f"l{l}.bq"]), H)
    k = _split_heads(_lin(a, p[f"l{l}.Wk"], p[f"l{l}.bk"]), H)
    v = _split_heads(_lin(a, p[f"l{l}.Wv"], p[f"l{l}.bv"]), H)
    scale = 1.0 / np.sqrt(q.shape[-1])
    P = _softmax(q @ k.transpose(0, 1, 3, 2) * scale + key_bias)
    O = _merge_heads(P @ v)
    out = _lin(O, p[f"l{l}.Wo"], p[f"l{l}.bo"])
    return out, (a, q, k, v, P, O, scale)


def _attn_bwd(dout, cache, p, l, grads, H):
    a, q, k, v, P, O, scale = cache
    grads[f"l{l}.Wo"], grads[f"l{l}.bo"] = _lin_grads(O, dout)
    dO = _split_heads(dout @ p[f"l{l}.Wo"].T, H)
    dP = dO @ v.transpose(0, 1, 3, 2)
    dv = P.transpose(0, 1, 3, 2) @ dO
    dS = P * (dP - (dP * P).sum(-1, keepdims=True)) * scale
    dq = dS @ k
    dk = dS.transpose(0, 1, 3, 2) @ q
    da = 0.0
    for name, dx in (("q", dq), ("k", dk), ("v", dv)):
        dx = _merge_heads(dx)
        grads[f"l{l}.W{name}"], grads[f"l{l}.b{name}"] = _lin_grads(a, dx)
        da = da + dx @ p[f"l{l}.W{name}"].T
    return da


# --- public pieces ------------------------------------------------------------

def fuse_inputs(params: dict, field_input: np.ndarray, cell_inputs: np.ndarray):
    """Fused sequence and token types for one field: [field] ++ cells.

    ``field_input`` is concat(field embedding, field signature) and each row of
    ``cell_inputs`` concat(cell embedding, cell features).
    """
    field_input = np.asarray(field_input, dtype=np.float64)
    cell_inputs = np.asarray(cell_inputs, dtype=np.float64).reshape(-1, params["Wc"].shape[0]) \
        if np.size(cell_inputs) else np.zeros((0, params["Wc"].shape[0]))
    if field_input.shape != (params["Wf"].shape[0],):
        raise DimensionMismatch(f"field input has shape {field_input.shape}, expected ({params['Wf'].shape[0]},)")
    mfr = np.maximum(field_input, 0.0) @ params["Wf"] + params["bf"]
    mcr = np.maximum(cell_inputs, 0.0) @ params["Wc"] + params["bc"]
    seq = np.vstack([mfr[None, :], mcr])
    types = np.array([TOKEN_FIELD] + [TOKEN_CELL] * len(mcr), dtype=np.int64)
    return seq, types


def _encode_fwd(params, config, X, types, mask):
    p, H = params, config.heads
    X = X + p["tok"][types]
    key_bias = np.where(mask, 0.0, -np.inf)[:, None, None, :]
    caches = []
    for l in range(config.layers):
        a, c_ln1 = _ln_fwd(X, p[f"l{l}.ln1_g"], p[f"l{l}.ln1_b"])
        att, c_att = _attn_fwd(a, p, l, key_bias, H)
        X = X + att
        bn, c_ln2 = _ln_fwd(X, p[f"l{l}.ln2_g"], p[f"l{l}.ln2_b"])
        h = _lin(bn, p[f"l{l}.W1"], p[f"l{l}.b1"])
        r = np.maximum(h, 0.0)
        X = X + _lin(r, p[f"l{l}.W2"], p[f"l{l}.b2"])
        caches.append((c_ln1, c_att, c_ln2, bn, h, r))
    Q, c_lnf = _ln_fwd(X, p["lnf_g"], p["lnf_b"])
    return Q, (caches, c_lnf, types)


def _encode_bwd(params, config, dQ, cache, grads):
    p, H = params, config.heads
    caches, c_lnf, types = cache
    dX, grads["lnf_g"], grads["lnf_b"] = _ln_bwd(dQ, c_lnf)
    for l in reversed(range(config.layers)):
        c_ln1, c_att, c_ln2, bn, h, r = caches[l]
        grads[f"l{l}.W2"], grads[f"l{l}.b2"] = _lin_grads(r, dX)
        dh = (dX @ p[f"l{l}.W2"].T) * (h > 0)
        grads[f"l{l}.W1"], grads[f"l{l}.b1"] = _lin_grads(bn, dh)
        dbn = dh @ p[f"l{l}.W1"].T
        d, grads[f"l{l}.ln2_g"], grads[f"l{l}.ln2_b"] = _ln_bwd(dbn, c_ln2)
        dX = dX + d
        da = _attn_bwd(dX, c_att, p, l, grads, H)
        d, grads[f"l{l}.ln1_g"], grads[f"l{l}.ln1_b"] = _ln_bwd(da, c_ln1)
        dX = dX + d
    dtok = np.zeros_like(p["tok"])
    np.add.at(dtok, types.ravel(), dX.reshape(-1, dX.shape[-1]))
    grads["tok"] = dtok
    return dX


def encode(params: dict, config: ModelConfig, sequence: np.ndarray, token_types) -> np.ndarray:
    """Encode one unpadded sequence (T, D) → (T, D)."""
    X = np.asarray(sequence, dtype=np.float64)[None]
    types = np.asarray(token_types, dtype=np.int64)[None]
    if X.shape[1] != types.shape[1]:
        raise DimensionMismatch("sequence and token types differ in length")
    Q, _ = _encode_fwd(params, config, X, types, np.ones(types.shape, dtype=bool))
    return Q[0]


# --- whole network ------------------------------------------------------------

def _fuse_batch(params, batch: Batch):
    rest_in = np.maximum(batch.rest, 0.0)
    if batch.mode == "cf":
        first_in = np.maximum(batch.first, 0.0)
        h0 = first_in @ params["Wf"] + params["bf"]
        hr = rest_in @ params["Wc"] + params["bc"]
        return np.concatenate([h0[:, None, :], hr], axis=1), (first_in, rest_in, None)
    hr = rest_in @ params["Wf"] + params["bf"]
    m = batch.rest_mask[..., None].astype(np.float64)
    count = np.maximum(m.sum(1), 1.0)
    table = (hr * m).sum(1) / count
    return np.concatenate([table[:, None, :], hr], axis=1), (None, rest_in, (m, count))


def forward(params: dict, config: ModelConfig, batch: Batch):
    X, c_fuse = _fuse_batch(params, batch)
    Q, c_enc = _encode_fwd(params, config, X, batch.types, batch.mask)
    q0, qr = Q[:, 0], Q[:, 1:]
    logits = {}
    for name in HEADS[:3]:
        logits[name] = q0 @ params[f"head.{name}.W"] + params[f"head.{name}.b"]
    logits["reference"] = qr @ params["head.reference.W"] + params["head.reference.b"]
    return logits, (Q, c_fuse, c_enc)


def backward(params: dict, config: ModelConfig, batch: Batch, cache, dlogits: dict) -> dict:
    Q, c_fuse, c_enc = cache
    grads: dict = {}
    dQ = np.zeros_like(Q)
    q0, qr = Q[:, 0], Q[:, 1:]
    for name in HEADS[:3]:
        dz = dlogits[name]
        grads[f"head.{name}.W"] = q0.T @ dz
        grads[f"head.{name}.b"] = dz.sum(0)
        dQ[:, 0] += dz @ params[f"head.{name}.W"].T
    dz = dlogits["reference"]
    grads["head.reference.W"], grads["head.reference.b"] = _lin_grads(qr, dz)
    dQ[:, 1:] += dz @ params["head.reference.W"].T

    dX = _encode_bwd(params, config, dQ, c_enc, grads)
    first_in, rest_in, chart_c = c_fuse
    if batch.mode == "cf":
        grads["Wf"], grads["bf"] = _lin_grads(first_in, dX[:, 0])
        grads["Wc"], grads["bc"] = _lin_grads(rest_in, dX[:, 1:])
    else:
        m, count = chart_c
        dhr = dX[:, 1:] + dX[:, :1] * m / count[:, None, :]
        grads["Wf"], grads["bf"] = _lin_grads(rest_in, dhr)
        grads["Wc"] = np.zeros_like(params["Wc"])
        grads["bc"] = np.zeros_like(params["bc"])
    return grads
