"""Greedy and beam-search translation of raw lines into annotation strings."""

from __future__ import annotations

import functools
from typing import Sequence

import numpy as np

from ..kernels import flush_denormals
from .model import decoder_step, select_rows, start_decoding
from .vocab import pad_batch

# Decoding stops this many characters past the input length.
LENGTH_SLACK = 8


def _ftz(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        with flush_denormals():
            return fn(*args, **kwargs)
    return wrapper


def _encode_lines(ckpt, lines: Sequence[str]):
    rev = ckpt.config.reverse_source
    src = pad_batch([ckpt.src_vocab.encode(line[::-1] if rev else line) for line in lines])
    if src.shape[0] == 0:
        src = np.zeros((1, len(lines)), dtype=np.int64)
    return src, src != 0


@_ftz
def translate_batch(ckpt, lines: Sequence[str], batch_size: int = 64) -> list[str]:
    """Greedy translation of many lines, batched by similar length."""
    order = sorted(range(len(lines)), key=lambda i: len(lines[i]))
    out: list[str] = [""] * len(lines)
    for k in range(0, len(order), batch_size):
        idx = order[k:k + batch_size]
        for i, text in zip(idx, _greedy([lines[i] for i in idx], ckpt)):
            out[i] = text
    return out


@_ftz
def translate_greedy(ckpt, line: str) -> str:
    return _greedy([line], ckpt)[0]


def _greedy(lines: Sequence[str], ckpt) -> list[str]:
    params, cfg, tv = ckpt.params, ckpt.config, ckpt.tgt_vocab
    src, mask = _encode_lines(ckpt, lines)
    ds = start_decoding(params, cfg, src, mask)
    caps = np.array([len(line) + LENGTH_SLACK for line in lines])
    B = len(lines)
    tokens = np.full(B, tv.start, dtype=np.int64)
    emitted: list[list[int]] = [[] for _ in range(B)]
    alive = np.ones(B, dtype=bool)
    for step in range(int(caps.max()) + 1):
        alive &= caps > step
        if not alive.any():
            break
        logp, ds = decoder_step(params, cfg, tokens, ds)
        tokens = logp.argmax(axis=-1)
        for b in np.flatnonzero(alive):
            if tokens[b] == tv.end:
                alive[b] = False
            else:
                emitted[b].append(int(tokens[b]))
    return [tv.decode(ids) for ids in emitted]


def translate_beam(ckpt, line: str, beam_width: int) -> str:
    """Length-normalised beam search; ``beam_width=1`` reproduces greedy output."""
    return beam_search(ckpt, line, beam_width)[0]


@_ftz
def beam_search(ckpt, line: str, beam_width: int) -> tuple[str, float, list[int]]:
    """Returns (annotation, total log-probability, emitted token ids incl. END if reached)."""
    if beam_width < 1:
        raise ValueError("beam width must be >= 1")
    params, cfg, tv = ckpt.params, ckpt.config, ckpt.tgt_vocab
    src, mask = _encode_lines(ckpt, [line])
    ds = start_decoding(params, cfg, src, mask)
    cap = len(line) + LENGTH_SLACK
    alive: list[tuple[list[int], float]] = [([], 0.0)]
    finished: list[tuple[list[int], float, int]] = []
    while alive:
        if len(alive[0][0]) >= cap:
            finished.extend((toks, score, len(toks)) for toks, score in alive)
            break
        prev = np.array([toks[-1] if toks else tv.start for toks, _ in alive], dtype=np.int64)
        logp, ds = decoder_step(params, cfg, prev, ds)
        cands = []
        for row, (toks, score) in enumerate(alive):
            top = np.argsort(-logp[row], kind="stable")[:beam_width]
            cands.extend((score + float(logp[row, tok]), row, int(tok)) for tok in top)
        cands.sort(key=lambda c: -c[0])
        next_alive, rows = [], []
        for score, row, tok in cands:
            toks = alive[row][0] + [tok]
            if tok == tv.end:
                finished.append((toks, score, len(toks)))
            else:
                next_alive.append((toks, score))
                rows.append(row)
            if len(next_alive) == beam_width or len(finished) >= beam_width:
                break
        if len(finished) >= beam_width or not next_alive:
            break
        alive = next_alive
        ds = select_rows(ds, np.array(rows))
    best = max(finished, key=lambda f: f[1] / max(f[2], 1))
    ids = [t for t in best[0] if t != tv.end]
    return tv.decode(ids), best[1], best[0]


@_ftz
def sequence_logprob(ckpt, line: str, token_ids: Sequence[int]) -> float:
    """Total log-probability the model assigns to emitting ``token_ids`` for ``line``."""
    params, cfg, tv = ckpt.params, ckpt.config, ckpt.tgt_vocab
    src, mask = _encode_lines(ckpt, [line])
    ds = start_decoding(params, cfg, src, mask)
    prev, total = tv.start, 0.0
    for tok in token_ids:
        logp, ds = decoder_step(params, cfg, np.array([prev]), ds)
        total += float(logp[0, tok])
        prev = tok
    return total


def unk_fraction(ckpt, lines: Sequence[str]) -> float:
    chars = sum(len(line) for line in lines)
    if not chars:
        return 0.0
    unknown = sum(1 for line in lines for ch in line if ch not in ckpt.src_vocab)
    return unknown / chars
