"""Edit-distance scoring of predicted annotations and percentile summaries."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .kernels import levenshtein

log = logging.getLogger(__name__)

QUANTILES = (0.50, 0.75, 0.90, 0.95, 0.99)
STAT_NAMES = ("min", "avg", "q50", "q75", "q90", "q95", "q99", "max")
HISTOGRAM_BINS = 50

__all__ = [
    "EvalRecordResult", "Summary", "EvalSummary", "levenshtein", "relative_distance",
    "summarize", "score_predictions", "evaluate_corpus", "emit_report",
]


@dataclass(frozen=True)
class EvalRecordResult:
    index: int
    ref_len: int
    da: int
    dr: float


@dataclass(frozen=True)
class Summary:
    min: float
    avg: float
    q50: float
    q75: float
    q90: float
    q95: float
    q99: float
    max: float

    def values(self) -> tuple[float, ...]:
        return tuple(getattr(self, name) for name in STAT_NAMES)


@dataclass(frozen=True)
class EvalSummary:
    da: Summary
    dr: Summary


def relative_distance(d_a: int, reference_length: int) -> float:
    if reference_length < 1:
        raise ValueError(f"reference length must be positive, got {reference_length}")
    return d_a / reference_length


def summarize(values: Iterable[float]) -> Summary:
    """min, mean, max and type-7 (linear interpolation) quantiles."""
    arr = np.asarray(list(values), dtype=np.float64)
    if arr.size == 0:
        raise ValueError("cannot summarize an empty sample")
    qs = np.quantile(arr, QUANTILES, method="linear")
    lo, hi = float(arr.min()), float(arr.max())
    # the mean of equal floats may land one ulp outside [min, max]
    avg = min(max(float(arr.mean()), lo), hi)
    return Summary(lo, avg, *(float(q) for q in qs), hi)


def score_predictions(predictions: Sequence[str], references: Sequence[str]) -> list[EvalRecordResult]:
    if len(predictions) != len(references):
        raise ValueError(f"{len(predictions)} predictions for {len(references)} references")
    results = []
    for i, (pred, ref) in enumerate(zip(predictions, references)):
        da = levenshtein(pred, ref)
        results.append(EvalRecordResult(i, len(ref), da, relative_distance(da, len(ref))))
    return results


def summarize_results(results: Sequence[EvalRecordResult]) -> EvalSummary:
    return EvalSummary(summarize(r.da for r in results), summarize(r.dr for r in results))


def evaluate_corpus(checkpoint, records, beam_width: int | None = None,
                    predictor: Callable[[Sequence[str]], list[str]] | None = None):
    """Score a model (or any ``predictor`` over raw lines) against annotated records.

    Returns ``(per-record results, EvalSummary)``.
    """
    records = list(records)
    if not records:
        raise ValueError("evaluation corpus is empty")
    if predictor is None:
        from .neural import translate_batch, translate_beam, unk_fraction

        frac = unk_fraction(checkpoint, [r.raw for r in records])
        if frac > 0:
            log.warning("%.2f%% of source characters are outside the model vocabulary", 100 * frac)
        if beam_width is not None and beam_width > 1:
            preds = [translate_beam(checkpoint, r.raw, beam_width) for r in records]
        else:
            preds = translate_batch(checkpoint, [r.raw for r in records])
    else:
        preds = predictor([r.raw for r in records])
    results = score_predictions(preds, [r.ann for r in records])
    return results, summarize_results(results)


def histogram(values: Sequence[float], bins: int = HISTOGRAM_BINS) -> list[tuple[float, float, int]]:
    counts, edges = np.histogram(np.asarray(values, dtype=np.float64), bins=bins)
    return [(float(edges[k]), float(edges[k + 1]), int(counts[k])) for k in range(bins)]


def emit_report(runs: dict[str, tuple[Sequence[EvalRecordResult], EvalSummary]],
                destination: str | Path) -> list[Path]:
    """Write the CSV report for one or more evaluated datasets into ``destination``.

    ``runs`` maps a dataset label to ``(results, summary)``.  Produces
    ``summary.csv`` (one row per metric and dataset), ``records_<label>.csv``
    and ``histogram_<metric>_<label>.csv``.
    """
    if not runs:
        raise ValueError("nothing to report")
    dest = Path(destination)
    dest.mkdir(parents=True, exist_ok=True)
    written = [dest / "summary.csv"]
    with open(written[0], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["metric", "dataset", *STAT_NAMES])
        for metric in ("da", "dr"):
            for name, (_, summary) in runs.items():
                w.writerow([metric, name, *(repr(v) for v in getattr(summary, metric).values())])
    for name, (results, _) in runs.items():
        path = dest / f"records_{name}.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["index", "ref_len", "da", "dr"])
            for r in results:
                w.writerow([r.index, r.ref_len, r.da, repr(r.dr)])
        written.append(path)
        for metric in ("da", "dr"):
            path = dest / f"histogram_{metric}_{name}.csv"
            with open(path, "w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["bin_low", "bin_high", "count"])
                for lo, hi, count in histogram([getattr(r, metric) for r in results]):
                    w.writerow([repr(lo), repr(hi), count])
            written.append(path)
    return written
