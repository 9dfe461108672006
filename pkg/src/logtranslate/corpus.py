"""Dataset profiles, random formats and the paired ``.raw``/``.ann`` corpus files."""

from __future__ import annotations

import hashlib
import math
import random
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence, Union

from .fields import (
    CLF,
    DATA_FIELDS,
    DEFAULT_OPTIONS,
    ELF,
    AnnotatedRecord,
    FieldOptions,
    FieldToken,
    FormatSpec,
    generate_record,
)


def _check_field_bounds(min_fields: int, max_fields: int) -> None:
    if not 2 <= min_fields <= max_fields <= len(DATA_FIELDS):
        raise ValueError(
            f"need 2 <= min_fields <= max_fields <= {len(DATA_FIELDS)}, "
            f"got {min_fields}, {max_fields}"
        )


@dataclass(frozen=True)
class RandomFormat:
    """Format source drawing a fresh shuffled field list per record."""

    min_fields: int = 2
    max_fields: int = 15

    def __post_init__(self):
        _check_field_bounds(self.min_fields, self.max_fields)

    def __str__(self) -> str:
        return f"Random({self.min_fields},{self.max_fields})"


# A format source is one of the preset names or a RandomFormat.
FormatSource = Union[str, RandomFormat]
PRESET_SOURCES = ("CLF", "ELF", "QuotedELF")


@dataclass(frozen=True)
class DatasetProfile:
    name: str
    count: int
    mix: tuple[tuple[FormatSource, float], ...]
    seed: int = 0
    options: FieldOptions = field(default=DEFAULT_OPTIONS, compare=False)

    def __post_init__(self):
        if self.count < 1:
            raise ValueError(f"profile count must be >= 1, got {self.count}")
        if not self.mix:
            raise ValueError("profile mix is empty")
        for source, share in self.mix:
            if not isinstance(source, RandomFormat) and source not in PRESET_SOURCES:
                raise ValueError(f"unknown format source {source!r}")
            if not 0.0 <= share <= 1.0:
                raise ValueError(f"proportion {share} outside [0, 1]")
        total = sum(share for _, share in self.mix)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"proportions sum to {total}, expected 1")


# Desk-scale default record counts; pass a larger count for full-size sets.
DEFAULT_COUNTS = {"TT": 2000, "TE": 2000, "TM": 2000, "TMp": 400, "TH": 2000}

PRESET_MIXES: dict[str, tuple[tuple[FormatSource, float], ...]] = {
    "TT": (("ELF", 1.0),),
    "TE": (("ELF", 0.40), ("CLF", 0.24), (RandomFormat(2, 14), 0.36)),
    "TM": (("CLF", 0.5), (RandomFormat(2, 14), 0.5)),
    "TMp": (("CLF", 0.5), (RandomFormat(2, 14), 0.5)),
    "TH": ((RandomFormat(2, 15), 1.0),),
}


def preset_profile(name: str, count: int | None = None, seed: int = 0) -> DatasetProfile:
    """One of the five named training-set recipes (TT, TE, TM, TMp, TH)."""
    if name not in PRESET_MIXES:
        raise ValueError(f"unknown profile {name!r}; choose from {sorted(PRESET_MIXES)}")
    return DatasetProfile(name, DEFAULT_COUNTS[name] if count is None else count,
                          PRESET_MIXES[name], seed)


_MIX_ITEM = re.compile(r"\s*(CLF|ELF|QuotedELF|Random\(\s*(\d+)\s*,\s*(\d+)\s*\))\s*=\s*([0-9.eE+-]+)\s*")


def parse_mix(text: str) -> tuple[tuple[FormatSource, float], ...]:
    """Parse ``"ELF=0.4,CLF=0.24,Random(2,14)=0.36"`` into a profile mix."""
    mix, pos = [], 0
    while pos < len(text):
        m = _MIX_ITEM.match(text, pos)
        if m is None:
            raise ValueError(f"cannot parse format mix at {text[pos:]!r}")
        source: FormatSource = m.group(1)
        if m.group(2) is not None:
            source = RandomFormat(int(m.group(2)), int(m.group(3)))
        mix.append((source, float(m.group(4))))
        pos = m.end()
        if pos < len(text):
            if text[pos] != ",":
                raise ValueError(f"expected ',' at {text[pos:]!r}")
            pos += 1
    if not mix:
        raise ValueError("empty format mix")
    return tuple(mix)


def sample_format(rng: random.Random, min_fields: int = 2, max_fields: int = 15) -> FormatSpec:
    """Draw k distinct bare fields in uniformly shuffled order."""
    _check_field_bounds(min_fields, max_fields)
    k = rng.randint(min_fields, max_fields)
    # random.sample returns the picks in random order already
    return FormatSpec(tuple(FieldToken(kind) for kind in rng.sample(DATA_FIELDS, k)))


def record_seed(master_seed: int, index: int) -> int:
    """Independent per-record seed derived from (master seed, index)."""
    digest = hashlib.blake2b(f"{master_seed}:{index}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def allocate_counts(shares: Sequence[float], total: int) -> list[int]:
    """Largest-remainder apportionment of ``total`` items to ``shares``."""
    quotas = [share * total for share in shares]
    counts = [math.floor(q) for q in quotas]
    order = sorted(range(len(shares)), key=lambda i: (-(quotas[i] - counts[i]), i))
    for i in order[: total - sum(counts)]:
        counts[i] += 1
    return counts


def source_plan(profile: DatasetProfile) -> list[FormatSource]:
    """Format source of every record, in generation order."""
    counts = allocate_counts([share for _, share in profile.mix], profile.count)
    plan = [src for (src, _), n in zip(profile.mix, counts) for _ in range(n)]
    random.Random(record_seed(profile.seed, -1)).shuffle(plan)
    return plan


def make_record(source: FormatSource, rng: random.Random,
                opts: FieldOptions = DEFAULT_OPTIONS) -> AnnotatedRecord:
    if isinstance(source, RandomFormat):
        spec = sample_format(rng, source.min_fields, source.max_fields)
        return generate_record(spec, rng, opts)
    if source == "CLF":
        return generate_record(CLF, rng, opts)
    rec = generate_record(ELF, rng, opts)
    if source == "QuotedELF":
        rec = AnnotatedRecord(f'"{rec.raw}"', f'"{rec.ann}"')
    return rec


def generate_dataset(profile: DatasetProfile) -> list[AnnotatedRecord]:
    return [
        make_record(source, random.Random(record_seed(profile.seed, i)), profile.options)
        for i, source in enumerate(source_plan(profile))
    ]


def corpus_paths(stem: str | Path) -> tuple[Path, Path]:
    stem = str(stem)
    return Path(stem + ".raw"), Path(stem + ".ann")


def _write_lines(path: Path, lines: Sequence[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line + "\n")


def write_corpus(records: Iterable[AnnotatedRecord], stem: str | Path) -> tuple[Path, Path]:
    records = list(records)
    for i, rec in enumerate(records):
        if any(c in rec.raw or c in rec.ann for c in "\r\n"):
            raise ValueError(f"record {i} contains a newline")
    raw_path, ann_path = corpus_paths(stem)
    _write_lines(raw_path, [r.raw for r in records])
    _write_lines(ann_path, [r.ann for r in records])
    return raw_path, ann_path


def _read_lines(path: Path) -> list[str]:
    with open(path, encoding="utf-8", newline="") as fh:
        text = fh.read()
    if not text:
        return []
    if not text.endswith("\n"):
        raise ValueError(f"{path}: missing final newline")
    return text[:-1].split("\n")


def read_corpus(stem: str | Path) -> list[AnnotatedRecord]:
    raw_path, ann_path = corpus_paths(stem)
    raws, anns = _read_lines(raw_path), _read_lines(ann_path)
    if len(raws) != len(anns):
        raise ValueError(
            f"{raw_path} has {len(raws)} lines but {ann_path} has {len(anns)}"
        )
    return [AnnotatedRecord(r, a) for r, a in zip(raws, anns)]


def length_stats(records: Sequence[AnnotatedRecord]) -> tuple[int, float, int]:
    """min, median, max raw length (the columns of a dataset description)."""
    lengths = sorted(len(r.raw) for r in records)
    n = len(lengths)
    median = lengths[n // 2] if n % 2 else (lengths[n // 2 - 1] + lengths[n // 2]) / 2
    return lengths[0], median, lengths[-1]
