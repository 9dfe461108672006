"""Character vocabularies for the source (raw) and target (annotation) sides."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

PAD, UNK, START, END = "<PAD>", "<UNK>", "<START>", "<END>"
SOURCE_SPECIALS = (PAD, UNK)
TARGET_SPECIALS = (PAD, START, END)


@dataclass
class CharVocab:
    """Bijective token <-> index map; token 0 is always PAD."""

    tokens: tuple[str, ...]
    index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self.tokens = tuple(self.tokens)
        if not self.tokens or self.tokens[0] != PAD:
            raise ValueError("vocabulary must start with the PAD token")
        self.index = {tok: i for i, tok in enumerate(self.tokens)}
        if len(self.index) != len(self.tokens):
            raise ValueError("duplicate tokens in vocabulary")

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    @property
    def pad(self) -> int:
        return 0

    @property
    def unk(self) -> int:
        return self.index[UNK]

    @property
    def start(self) -> int:
        return self.index[START]

    @property
    def end(self) -> int:
        return self.index[END]

    @property
    def chars(self) -> list[str]:
        return [t for t in self.tokens if t not in (PAD, UNK, START, END)]

    def encode(self, text: str) -> list[int]:
        unk = self.index.get(UNK)
        out = []
        for ch in text:
            idx = self.index.get(ch, unk)
            if idx is None:
                raise KeyError(f"character {ch!r} not in vocabulary")
            out.append(idx)
        return out

    def decode(self, ids: Iterable[int]) -> str:
        """Characters for ``ids``, dropping special tokens."""
        toks = self.tokens
        return "".join(t for t in (toks[i] for i in ids) if len(t) == 1)

    @classmethod
    def for_source(cls, chars: Iterable[str]) -> "CharVocab":
        return cls(SOURCE_SPECIALS + tuple(sorted(set(chars))))

    @classmethod
    def for_target(cls, chars: Iterable[str]) -> "CharVocab":
        return cls(TARGET_SPECIALS + tuple(sorted(set(chars))))


def build_vocab(records) -> tuple[CharVocab, CharVocab]:
    records = list(records)
    if not records:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    src = CharVocab.for_source(ch for r in records for ch in r.raw)
    tgt = CharVocab.for_target(ch for r in records for ch in r.ann)
    return src, tgt


def pad_batch(seqs: Sequence[Sequence[int]], length: int | None = None) -> np.ndarray:
    """Time-major (T, B) int array, PAD-filled."""
    length = max((len(s) for s in seqs), default=0) if length is None else length
    out = np.zeros((length, len(seqs)), dtype=np.int64)
    for b, s in enumerate(seqs):
        out[: len(s), b] = s
    return out
