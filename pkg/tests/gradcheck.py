"""Central finite-difference check of the model's analytic gradients."""

import numpy as np

from logtranslate.neural.model import ModelConfig, forward_backward, init_params, make_batch
from logtranslate.neural.vocab import build_vocab
from logtranslate.fields import AnnotatedRecord

# short records with unequal lengths so padding and masking are exercised
TINY_PAIRS = [
    ("GET HTTP/2", "mmm_HHHHHH"),
    ("1.2.3.4 - ab", "hhhhhhh_l_uu"),
    ("404 12", "sss_bb"),
    ("-", "l"),
]


def relative_error(numeric, analytic):
    scale = max(np.abs(numeric).max(), np.abs(analytic).max(), 1e-8)
    return float(np.abs(numeric - analytic).max() / scale)


def gradient_errors(arch, cell, layers=1, step=1e-4, cells=8, embedding=8, seed=1):
    """Worst relative error per parameter tensor for one tiny float64 model."""
    sv, tv = build_vocab([AnnotatedRecord(r, a) for r, a in TINY_PAIRS])
    cfg = ModelConfig(arch=arch, cell=cell, cells=cells, embedding_dim=embedding, layers=layers,
                      init_scale=0.5)
    params = init_params(cfg, len(sv), len(tv), np.random.default_rng(seed), np.float64)
    batch = make_batch(TINY_PAIRS, sv, tv)
    _, grads, _ = forward_backward(params, cfg, batch)
    errors = {}
    for name, value in params.items():
        numeric = np.zeros_like(value)
        for idx in np.ndindex(value.shape):
            old = value[idx]
            value[idx] = old + step
            up = forward_backward(params, cfg, batch, need_grads=False)[0]
            value[idx] = old - step
            down = forward_backward(params, cfg, batch, need_grads=False)[0]
            value[idx] = old
            numeric[idx] = (up - down) / (2 * step)
        errors[name] = relative_error(numeric, grads[name])
    return errors
