"""Mini-batch training with a seeded 90/10 split and best-validation checkpointing."""

from __future__ import annotations

import csv
import logging
import math
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from ..kernels import flush_denormals
from .checkpoint import Checkpoint
from .model import ModelConfig, forward_backward, init_params, make_batch
from .optim import Adam, OptimizerConfig
from .vocab import build_vocab

log = logging.getLogger(__name__)

MIN_CORPUS = 10
VALIDATION_SHARE = 0.1


class TrainingDiverged(RuntimeError):
    """Raised when a batch loss or gradient stops being finite."""


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    train_loss: float
    val_loss: float
    seconds: float = 0.0


def split_indices(n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Random (train, validation) index split with a 10% validation share."""
    perm = rng.permutation(n)
    n_val = max(1, int(round(VALIDATION_SHARE * n)))
    return np.sort(perm[n_val:]), np.sort(perm[:n_val])


def _pairs(records, max_len):
    pairs, clipped = [], 0
    for r in records:
        if len(r.raw) > max_len:
            clipped += 1
        pairs.append((r.raw, r.ann))
    if clipped:
        log.warning("%d record(s) longer than max_len=%d are truncated for training", clipped, max_len)
    return pairs


def evaluate_loss(params, cfg: ModelConfig, batches) -> float:
    """Token-weighted mean cross-entropy with dropout off."""
    total, tokens = 0.0, 0
    for batch in batches:
        loss, _, info = forward_backward(params, cfg, batch, None, need_grads=False)
        total += loss * info["tokens"]
        tokens += info["tokens"]
    return total / max(tokens, 1)


def train(model_cfg: ModelConfig, opt_cfg: OptimizerConfig, records: Sequence, seed: int = 0,
          on_epoch: Callable[[EpochStats], None] | None = None,
          validation: Sequence | None = None) -> tuple[Checkpoint, list[EpochStats]]:
    """Train a translator; returns the best-validation checkpoint and the loss history.

    By default 10% of ``records`` is held out for validation.  Passing
    ``validation`` trains on every record and scores epochs on that set instead.
    """
    with flush_denormals():
        return _train(model_cfg, opt_cfg, list(records), seed, on_epoch,
                      None if validation is None else list(validation))


def _train(model_cfg, opt_cfg, records, seed, on_epoch, validation):
    if validation is None and len(records) < MIN_CORPUS:
        raise ValueError(f"need at least {MIN_CORPUS} records to train, got {len(records)}")
    if not records or validation == []:
        raise ValueError("training and validation sets must be non-empty")
    src_vocab, tgt_vocab = build_vocab(records + (validation or []))
    init_rng, split_rng, order_rng, drop_rng = (
        np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(4)
    )
    params = init_params(model_cfg, len(src_vocab), len(tgt_vocab), init_rng)
    pairs = _pairs(records + (validation or []), model_cfg.max_len)
    if validation is None:
        train_idx, val_idx = split_indices(len(pairs), split_rng)
    else:
        train_idx = np.arange(len(records))
        val_idx = np.arange(len(records), len(pairs))
    bs = opt_cfg.batch_size

    def batch_of(idx):
        return make_batch([pairs[i] for i in idx], src_vocab, tgt_vocab, model_cfg.max_len,
                          model_cfg.reverse_source)

    val_batches = [batch_of(val_idx[k:k + bs]) for k in range(0, len(val_idx), bs)]
    adam = Adam(params, opt_cfg)
    best_loss, best_epoch, best_params = math.inf, 0, None
    history: list[EpochStats] = []
    stale = 0
    for epoch in range(1, opt_cfg.max_epochs + 1):
        started = time.perf_counter()
        order = train_idx[order_rng.permutation(len(train_idx))]
        total, tokens = 0.0, 0
        for k in range(0, len(order), bs):
            batch = batch_of(order[k:k + bs])
            loss, grads, info = forward_backward(params, model_cfg, batch, drop_rng)
            if not math.isfinite(loss) or not all(np.isfinite(g).all() for g in grads.values()):
                raise TrainingDiverged(f"non-finite loss/gradient in epoch {epoch}, batch {k // bs}")
            adam.step(params, grads)
            total += loss * info["tokens"]
            tokens += info["tokens"]
        val_loss = evaluate_loss(params, model_cfg, val_batches)
        if not math.isfinite(val_loss):
            raise TrainingDiverged(f"non-finite validation loss in epoch {epoch}")
        stats = EpochStats(epoch, total / tokens, val_loss, time.perf_counter() - started)
        history.append(stats)
        log.info("epoch %d train %.5f val %.5f (%.1fs)", epoch, stats.train_loss, val_loss, stats.seconds)
        if on_epoch is not None:
            on_epoch(stats)
        if val_loss < best_loss:
            best_loss, best_epoch, stale = val_loss, epoch, 0
            best_params = {k: v.copy() for k, v in params.items()}
        else:
            stale += 1
            if stale >= opt_cfg.patience:
                log.info("no validation improvement for %d epochs; stopping", stale)
                break
    ckpt = Checkpoint(model_cfg, src_vocab, tgt_vocab, best_params, best_loss, best_epoch,
                      meta={"seed": seed, "optimizer": opt_cfg.to_dict()})
    return ckpt, history


def write_history(history: Sequence[EpochStats], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "train_loss", "val_loss"])
        for h in history:
            w.writerow([h.epoch, repr(h.train_loss), repr(h.val_loss)])
