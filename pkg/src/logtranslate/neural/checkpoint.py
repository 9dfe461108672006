"""JSON checkpoint envelope: config, vocabularies and base64 float32 tensors."""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .model import ModelConfig
from .vocab import CharVocab

FORMAT_VERSION = 1


@dataclass
class Checkpoint:
    config: ModelConfig
    src_vocab: CharVocab
    tgt_vocab: CharVocab
    params: dict[str, np.ndarray]
    best_val_loss: float = float("nan")
    epoch: int = 0
    meta: dict = field(default_factory=dict)
    version: int = FORMAT_VERSION

    def to_json(self) -> str:
        tensors = []
        for name, arr in self.params.items():
            data = np.ascontiguousarray(arr, dtype="<f4")
            tensors.append({
                "name": name,
                "shape": list(arr.shape),
                "data": base64.b64encode(data.tobytes()).decode("ascii"),
            })
        doc = {
            "version": self.version,
            "config": self.config.to_dict(),
            "vocabs": {"source": list(self.src_vocab.tokens), "target": list(self.tgt_vocab.tokens)},
            "tensors": tensors,
            "best_val_loss": self.best_val_loss,
            "epoch": self.epoch,
            "meta": self.meta,
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "Checkpoint":
        doc = json.loads(text)
        if doc.get("version") != FORMAT_VERSION:
            raise ValueError(f"unsupported checkpoint version {doc.get('version')!r}")
        params = {}
        for t in doc["tensors"]:
            shape = tuple(t["shape"])
            flat = np.frombuffer(base64.b64decode(t["data"]), dtype="<f4")
            if flat.size != int(np.prod(shape, dtype=np.int64)):
                raise ValueError(f"tensor {t['name']!r}: {flat.size} values for shape {shape}")
            params[t["name"]] = flat.astype(np.float32).reshape(shape)
        return cls(
            config=ModelConfig(**doc["config"]),
            src_vocab=CharVocab(tuple(doc["vocabs"]["source"])),
            tgt_vocab=CharVocab(tuple(doc["vocabs"]["target"])),
            params=params,
            best_val_loss=doc["best_val_loss"],
            epoch=doc["epoch"],
            meta=doc.get("meta", {}),
            version=doc["version"],
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Checkpoint":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))
