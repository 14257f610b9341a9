from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace


@dataclass(frozen=True)
class LossWeights:
    alpha: float = 1.0  # user intent
    beta: float = 1.0  # data focus
    gamma: float = 1.0  # operation / chart type
    delta: float = 1.0  # reference (cells or axes)

    def __post_init__(self):
        if min(self.alpha, self.beta, self.gamma, self.delta) < 0:
            raise ValueError("loss weights must be non-negative")


@dataclass(frozen=True)
class Ablation:
    no_semantics: bool = False
    no_statistical: bool = False
    no_linguistic: bool = False

    def tag(self) -> str:
        parts = [name for name, on in asdict(self).items() if on]
        return "+".join(parts) or "full"


@dataclass(frozen=True)
class ModelConfig:
    D: int = 64
    layers: int = 2
    heads: int = 4
    ffn_mult: int = 4
    e: int = 64
    loss_weights: LossWeights = field(default_factory=LossWeights)
    learning_rate: float = 1e-3
    batch_size: int = 32
    max_epochs: int = 40
    patience: int = 5
    seed: int = 7
    grad_clip: float = 5.0
    sample_cap: int = 64
    multi_arity: int = 2
    ablation: Ablation = field(default_factory=Ablation)

    def __post_init__(self):
        if self.D % self.heads:
            raise ValueError(f"D={self.D} not divisible by heads={self.heads}")
        if not 2 <= self.multi_arity <= 4:
            raise ValueError("multi_arity must be in [2, 4]")

    @classmethod
    def desk(cls, **kw) -> "ModelConfig":
        return cls(**kw)

    @classmethod
    def paper(cls, **kw) -> "ModelConfig":
        return cls(**{"D": 256, "heads": 8, "layers": 6, **kw})

    def effective_weights(self) -> LossWeights:
        if self.ablation.no_semantics:
            return replace(self.loss_weights, alpha=0.0, beta=0.0)
        return self.loss_weights

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        d = dict(d)
        if "loss_weights" in d:
            d["loss_weights"] = LossWeights(**d["loss_weights"])
        if "ablation" in d:
            d["ablation"] = Ablation(**d["ablation"])
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)
