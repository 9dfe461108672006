"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]

Reports per-call times for Levenshtein distance on annotation-sized strings,
the fused LSTM pointwise kernels, and one training step (forward + backward)
of a 128-cell encoder-decoder on a batch of 64 synthetic ELF records.
"""

import argparse
import json
import os
import random
import subprocess
import sys
import time

import numpy as np


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_levenshtein(mod, repeat):
    rng = random.Random(0)
    pairs = [("".join(rng.choices("hlut_rsbRi", k=220)), "".join(rng.choices("hlut_rsbRi", k=230)))
             for _ in range(5)]
    return best_of(lambda: [mod.levenshtein(a, b) for a, b in pairs], repeat) / len(pairs)


def bench_lstm(mod, repeat, B=64, n=128):
    rng = np.random.default_rng(0)
    z = rng.standard_normal((B, 4 * n)).astype(np.float32)
    c_prev = rng.standard_normal((B, n)).astype(np.float32)
    gates = np.empty_like(z)
    c, tanh_c, h = (np.empty_like(c_prev) for _ in range(3))
    dz, dcp = np.empty_like(z), np.empty_like(c_prev)

    def step():
        for _ in range(100):
            mod.lstm_forward_pointwise(z, c_prev, gates, c, tanh_c, h)
            mod.lstm_backward_pointwise(h, c, gates, c_prev, tanh_c, dz, dcp)

    return best_of(step, repeat) / 100


def bench_training_step(repeat):
    from logtranslate.corpus import generate_dataset, preset_profile
    from logtranslate.kernels import flush_denormals
    from logtranslate.neural import ModelConfig, forward_backward, init_params, make_batch
    from logtranslate.neural.vocab import build_vocab

    recs = generate_dataset(preset_profile("TT", 64, seed=7))
    sv, tv = build_vocab(recs)
    cfg = ModelConfig(arch="mc", cells=128, dropout=0.2)
    params = init_params(cfg, len(sv), len(tv), np.random.default_rng(0))
    batch = make_batch([(r.raw, r.ann) for r in recs], sv, tv)
    rng = np.random.default_rng(0)
    with flush_denormals():
        return best_of(lambda: forward_backward(params, cfg, batch, rng), repeat)


def measure(repeat):
    from logtranslate import kernels

    return {
        "backend": kernels.BACKEND,
        "levenshtein_s": bench_levenshtein(kernels, repeat),
        "lstm_pointwise_s": bench_lstm(kernels, repeat),
        "training_step_s": bench_training_step(max(1, repeat // 2)),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()
    if args.worker:
        print(json.dumps(measure(args.repeat)))
        return
    rows = []
    for pure in ("0", "1"):
        env = dict(os.environ, LOGTRANSLATE_PURE_PYTHON=pure)
        out = subprocess.run([sys.executable, __file__, "--worker", "--repeat", str(args.repeat)],
                             env=env, capture_output=True, text=True, check=True)
        rows.append(json.loads(out.stdout))
    if rows[0]["backend"] != "cython":
        print("compiled extension unavailable; only the fallback was measured")
        rows = rows[1:]
    print(f"{'kernel':<18}" + "".join(f"{r['backend']:>12}" for r in rows) + ("     speedup" if len(rows) == 2 else ""))
    for key, label in (("levenshtein_s", "levenshtein"), ("lstm_pointwise_s", "lstm pointwise"),
                       ("training_step_s", "training step")):
        line = f"{label:<18}" + "".join(f"{r[key] * 1e3:>10.3f}ms" for r in rows)
        if len(rows) == 2:
            line += f"{rows[1][key] / rows[0][key]:>11.1f}x"
        print(line)


if __name__ == "__main__":
    main()
