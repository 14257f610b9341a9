"""Parameter files: a numpy ``.npz`` archive whose ``__meta__`` entry is a JSON
header naming the format version, mode, config and every array's shape."""
from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field

import numpy as np

from ..errors import DataError
from .config import ModelConfig

PARAM_FORMAT = "tabintent-params/1"


@dataclass
class TrainedModel:
    mode: str  # "cf" or "chart"
    config: ModelConfig
    params: dict
    pos_weights: dict = dc_field(default_factory=dict)
    meta: dict = dc_field(default_factory=dict)

    def checksum(self) -> str:
        import hashlib

        h = hashlib.sha256()
        for k in sorted(self.params):
            h.update(k.encode())
            h.update(np.ascontiguousarray(self.params[k]).tobytes())
        return h.hexdigest()


def save_model(model: TrainedModel, path) -> None:
    header = {
        "format": PARAM_FORMAT,
        "mode": model.mode,
        "config": model.config.to_dict(),
        "shapes": {k: list(v.shape) for k, v in sorted(model.params.items())},
        "pos_weight_keys": sorted(model.pos_weights),
        "meta": model.meta,
    }
    arrays = {f"p/{k}": v for k, v in model.params.items()}
    arrays.update({f"w/{k}": np.asarray(v, dtype=np.float64) for k, v in model.pos_weights.items()})
    arrays["__meta__"] = np.frombuffer(json.dumps(header, sort_keys=True).encode("utf-8"), dtype=np.uint8)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_model(path) -> TrainedModel:
    try:
        with np.load(path, allow_pickle=False) as z:
            header = json.loads(bytes(z["__meta__"]).decode("utf-8"))
            if header.get("format") != PARAM_FORMAT:
                raise DataError(f"{path}: unsupported parameter format {header.get('format')!r}")
            params = {k[2:]: z[k].copy() for k in z.files if k.startswith("p/")}
            pos = {k[2:]: z[k].copy() for k in z.files if k.startswith("w/")}
    except (OSError, ValueError, KeyError) as exc:
        raise DataError(f"cannot read model file {path}: {exc}") from exc
    for k, shape in header["shapes"].items():
        if list(params[k].shape) != shape:
            raise DataError(f"{path}: array {k} has shape {params[k].shape}, header says {shape}")
    return TrainedModel(header["mode"], ModelConfig.from_dict(header["config"]), params, pos, header["meta"])
