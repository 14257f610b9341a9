"""Shipped defaults and JSON config loading."""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import TYPE_CHECKING, Any

if TYPE_CHECKING:
    from .semantics import IntentFocusMap
    from .signatures import Vocabulary

CONFIG_FORMAT = "tabintent-config/1"


@lru_cache(maxsize=1)
def _default_dict() -> dict:
    text = resources.files("tabintent").joinpath("data/defaults.json").read_text(encoding="utf-8")
    return json.loads(text)


def default_config() -> dict[str, Any]:
    return json.loads(json.dumps(_default_dict()))


def load_config(path=None) -> dict[str, Any]:
    """Defaults overlaid with the top-level keys present in ``path``."""
    cfg = default_config()
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            user = json.load(fh)
        cfg.update({k: v for k, v in user.items() if k != "format"})
    return cfg


@dataclass(frozen=True)
class Settings:
    vocab: "Vocabulary"
    keywords_x: tuple[str, ...]
    keywords_y: tuple[str, ...]
    focus_map: "IntentFocusMap"

    @classmethod
    def load(cls, path=None) -> "Settings":
        from .semantics import IntentFocusMap
        from .signatures import Vocabulary

        cfg = load_config(path)
        return cls(
            vocab=Vocabulary.from_dict(cfg),
            keywords_x=tuple(k.lower() for k in cfg["keywords_x"]),
            keywords_y=tuple(k.lower() for k in cfg["keywords_y"]),
            focus_map=IntentFocusMap.from_dict(cfg["intent_focus_map"]),
        )


@lru_cache(maxsize=1)
def default_settings() -> Settings:
    return Settings.load()
