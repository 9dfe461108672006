"""Character-level encoder-decoder translators.

Three decoders share one recurrent encoder:

``mc``  plain encoder-decoder; the decoder starts from the final encoder state.
``ml``  additive (Bahdanau) attention: the previous decoder state scores every
        encoder output, and the resulting context is fed into the decoder input
        and into the output layer.
``ms``  multiplicative "general" (Luong) attention computed from the current
        decoder output; context and output are combined through a tanh layer.

All arrays are time-major, ``(T, B, ...)``.  Gradients are derived by hand and
checked against finite differences in the test-suite.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .cells import back_layer, get_cell, run_layer
from .vocab import CharVocab, pad_batch

log = logging.getLogger(__name__)

ARCHS = ("mc", "ml", "ms")
REFERENCE_CELLS = (256, 512, 1024)
REFERENCE_DROPOUTS = (0.0, 0.2, 0.4, 0.6, 0.8)


@dataclass
class ModelConfig:
    arch: str = "mc"
    cell: str = "lstm"
    cells: int = 128
    dropout: float = 0.0
    embedding_dim: int = 64
    max_len: int = 512
    beam_width: int = 1
    layers: int = 1
    init_scale: float = 0.08
    # added to the LSTM forget-gate bias at initialisation
    forget_bias: float = 0.0
    # feed the encoder the source characters last-to-first
    reverse_source: bool = False

    def __post_init__(self):
        self.arch = self.arch.lower()
        self.cell = self.cell.lower()
        if self.arch not in ARCHS:
            raise ValueError(f"unknown architecture {self.arch!r}; expected one of {ARCHS}")
        get_cell(self.cell)
        for name in ("cells", "embedding_dim", "max_len", "beam_width", "layers"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout must lie in [0, 1), got {self.dropout}")

    def to_dict(self) -> dict:
        return asdict(self)


class Batch(NamedTuple):
    src: np.ndarray       # (Ts, B) source ids
    src_mask: np.ndarray  # (Ts, B) 1 on real characters
    tgt_in: np.ndarray    # (Tt, B) START + gold annotation
    tgt_out: np.ndarray   # (Tt, B) gold annotation + END


def make_batch(pairs: Sequence[tuple[str, str]], src_vocab: CharVocab, tgt_vocab: CharVocab,
               max_len: int | None = None, reverse_source: bool = False) -> Batch:
    srcs, tins, touts = [], [], []
    for raw, ann in pairs:
        if max_len is not None and len(raw) > max_len:
            raw, ann = raw[:max_len], ann[:max_len]
        srcs.append(src_vocab.encode(raw[::-1] if reverse_source else raw))
        ids = tgt_vocab.encode(ann)
        tins.append([tgt_vocab.start] + ids)
        touts.append(ids + [tgt_vocab.end])
    src = pad_batch(srcs)
    return Batch(src, (src != 0), pad_batch(tins), pad_batch(touts))


def param_shapes(cfg: ModelConfig, n_src: int, n_tgt: int) -> dict[str, tuple[int, ...]]:
    H, E = cfg.cells, cfg.embedding_dim
    cell = get_cell(cfg.cell)
    GH = cell.n_gates * H
    shapes: dict[str, tuple[int, ...]] = {"enc_emb": (n_src, E), "dec_emb": (n_tgt, E)}
    for side in ("enc", "dec"):
        for l in range(cfg.layers):
            d_in = E if l == 0 else H
            if side == "dec" and l == 0 and cfg.arch == "ml":
                d_in = E + H
            shapes[f"{side}{l}_Wx"] = (d_in, GH)
            shapes[f"{side}{l}_Wh"] = (H, GH)
            shapes[f"{side}{l}_b"] = (GH,)
            if cell.has_recurrent_bias:
                shapes[f"{side}{l}_bh"] = (GH,)
    if cfg.arch == "ml":
        shapes.update(att_W1=(H, H), att_W2=(H, H), att_v=(H,), out_W=(2 * H, n_tgt))
    elif cfg.arch == "ms":
        shapes.update(att_W=(H, H), comb_W=(2 * H, H), comb_b=(H,), out_W=(H, n_tgt))
    else:
        shapes["out_W"] = (H, n_tgt)
    shapes["out_b"] = (n_tgt,)
    return shapes


def init_params(cfg: ModelConfig, n_src: int, n_tgt: int, rng: np.random.Generator,
                dtype=np.float32) -> dict[str, np.ndarray]:
    s = cfg.init_scale
    params = {
        name: rng.uniform(-s, s, size=shape).astype(dtype)
        for name, shape in param_shapes(cfg, n_src, n_tgt).items()
    }
    if cfg.cell == "lstm" and cfg.forget_bias:
        H = cfg.cells
        for side in ("enc", "dec"):
            for l in range(cfg.layers):
                params[f"{side}{l}_b"][H:2 * H] += dtype(cfg.forget_bias)
    return params


class _Dropout:
    """Inverted dropout drawing masks from a dedicated generator."""

    def __init__(self, rate: float, rng: np.random.Generator | None):
        self.rate = rate if rng is not None else 0.0
        self.rng = rng

    def __call__(self, x):
        if self.rate <= 0.0:
            return x, None
        keep = 1.0 - self.rate
        mask = (self.rng.random(x.shape) < keep).astype(x.dtype) / x.dtype.type(keep)
        return x * mask, mask

    @staticmethod
    def back(d, mask):
        return d if mask is None else d * mask


def masked_softmax(scores: np.ndarray, valid: np.ndarray) -> np.ndarray:
    """Softmax over the last axis ignoring invalid slots; all-invalid rows give zeros."""
    e = np.where(valid, scores, -np.inf)
    top = e.max(axis=-1, keepdims=True)
    top = np.where(np.isfinite(top), top, 0.0)
    w = np.exp(e - top)
    total = w.sum(axis=-1, keepdims=True)
    return w / np.where(total > 0, total, 1.0)


def _softmax_back(w, dw):
    return w * (dw - (w * dw).sum(axis=-1, keepdims=True))


def _affine(x, W, b=None):
    y = (x.reshape(-1, x.shape[-1]) @ W).reshape(x.shape[:-1] + (W.shape[1],))
    return y if b is None else y + b


def _flat_grad(x, dy):
    """Weight gradient of ``x @ W`` given the output gradient ``dy``."""
    return x.reshape(-1, x.shape[-1]).T @ dy.reshape(-1, dy.shape[-1])


def _layer_params(params, prefix):
    return params[prefix + "_Wx"], params[prefix + "_Wh"], params[prefix + "_b"], params.get(prefix + "_bh")


# ---------------------------------------------------------------- encoder

def encode(params, cfg: ModelConfig, src, src_mask, drop: _Dropout):
    cell = get_cell(cfg.cell)
    dtype = params["enc_emb"].dtype
    x = params["enc_emb"][src]
    mask = src_mask[:, :, None].astype(dtype)
    B = src.shape[1]
    tapes, finals = [], []
    for l in range(cfg.layers):
        Wx, Wh, b, bh = _layer_params(params, f"enc{l}")
        XZ = _affine(x, Wx, b)
        outs, final, tape = run_layer(cell, XZ, cell.zero_state(B, cfg.cells, dtype), Wh, bh, mask)
        outs_d, dmask = drop(outs)
        tapes.append((x, tape, dmask))
        finals.append(final)
        x = outs_d
    return x, finals, tapes


def encode_back(params, cfg, grads, src, tapes, d_memory, d_finals):
    cell = get_cell(cfg.cell)
    dx = d_memory
    for l in range(cfg.layers - 1, -1, -1):
        Wx, Wh, _, _ = _layer_params(params, f"enc{l}")
        x, tape, dmask = tapes[l]
        d_outs = _Dropout.back(dx, dmask)
        dXZ, dWh, dbh, _ = back_layer(cell, d_outs, d_finals[l], tape, Wh)
        grads[f"enc{l}_Wx"] += _flat_grad(x, dXZ)
        grads[f"enc{l}_b"] += dXZ.reshape(-1, dXZ.shape[-1]).sum(axis=0)
        grads[f"enc{l}_Wh"] += dWh
        if dbh is not None:
            grads[f"enc{l}_bh"] += dbh
        dx = _affine(dXZ, Wx.T)
    np.add.at(grads["enc_emb"], src, dx)


# ---------------------------------------------------------------- decoders

def _decode_layers(params, cfg, y, init_states, drop):
    """Teacher-forced recurrent stack for the mc/ms decoders."""
    cell = get_cell(cfg.cell)
    tapes = []
    for l in range(cfg.layers):
        Wx, Wh, b, bh = _layer_params(params, f"dec{l}")
        outs, _, tape = run_layer(cell, _affine(y, Wx, b), init_states[l], Wh, bh)
        outs_d, dmask = drop(outs)
        tapes.append((y, tape, dmask))
        y = outs_d
    return y, tapes


def _decode_layers_back(params, cfg, grads, tgt_in, tapes, dy):
    cell = get_cell(cfg.cell)
    d_init = [None] * cfg.layers
    for l in range(cfg.layers - 1, -1, -1):
        Wx, Wh, _, _ = _layer_params(params, f"dec{l}")
        y, tape, dmask = tapes[l]
        d_outs = _Dropout.back(dy, dmask)
        zero = tuple(np.zeros_like(s) for s in tape[1])
        dXZ, dWh, dbh, d_init[l] = back_layer(cell, d_outs, zero, tape, Wh)
        grads[f"dec{l}_Wx"] += _flat_grad(y, dXZ)
        grads[f"dec{l}_b"] += dXZ.reshape(-1, dXZ.shape[-1]).sum(axis=0)
        grads[f"dec{l}_Wh"] += dWh
        if dbh is not None:
            grads[f"dec{l}_bh"] += dbh
        dy = _affine(dXZ, Wx.T)
    np.add.at(grads["dec_emb"], tgt_in, dy)
    return d_init


def _luong_attend(params, S, memory_b, valid):
    """S (Tt, B, H) queries over memory_b (B, Ts, H); returns weights (B, Tt, Ts) and context."""
    SW = _affine(S, params["att_W"]).transpose(1, 0, 2)
    scores = SW @ memory_b.transpose(0, 2, 1)
    alpha = masked_softmax(scores, valid[:, None, :])
    return SW, alpha, (alpha @ memory_b).transpose(1, 0, 2)


def _bahdanau_attend(params, q, mem_w2, memory_b, valid):
    """q (B, H) against memory_b (B, Ts, H); ``mem_w2`` is memory_b @ W2."""
    th = np.tanh(mem_w2 + (q @ params["att_W1"])[:, None, :])
    alpha = masked_softmax(th @ params["att_v"], valid)
    ctx = (alpha[:, None, :] @ memory_b)[:, 0, :]
    return th, alpha, ctx


def _ml_forward(params, cfg, tgt_in, memory, finals, valid, drop):
    cell = get_cell(cfg.cell)
    E, L = cfg.embedding_dim, cfg.layers
    memory_b = np.ascontiguousarray(memory.transpose(1, 0, 2))
    mem_w2 = _affine(memory_b, params["att_W2"])
    Wx0 = params["dec0_Wx"]
    XZe = _affine(params["dec_emb"][tgt_in], Wx0[:E], params["dec0_b"])
    states = list(finals)
    Tt = tgt_in.shape[0]
    B, H = finals[0][0].shape
    S = np.empty((Tt, B, H), memory.dtype)
    ctxs = np.empty_like(S)
    steps = []
    for t in range(Tt):
        q = states[-1][0]
        _, alpha, ctx = _bahdanau_attend(params, q, mem_w2, memory_b, valid)
        xz = XZe[t] + ctx @ Wx0[E:]
        layer_caches = []
        inp = None
        for l in range(L):
            _, Wh, b, bh = _layer_params(params, f"dec{l}")
            dmask = None
            if l:
                inp, dmask = drop(inp)
                xz = inp @ params[f"dec{l}_Wx"] + b
            states[l], cache = cell.step(xz, states[l], Wh, bh)
            layer_caches.append((inp, dmask, cache))
            inp = states[l][0]
        S[t] = inp
        ctxs[t] = ctx
        steps.append((q, alpha, layer_caches))
    S_d, out_mask = drop(S)
    feats = np.concatenate([S_d, ctxs], axis=-1)
    tape = (memory_b, mem_w2, steps, feats, out_mask, ctxs)
    return _affine(feats, params["out_W"], params["out_b"]), tape


def _ml_backward(params, cfg, grads, tgt_in, tape, dlogits):
    cell = get_cell(cfg.cell)
    E, L, H = cfg.embedding_dim, cfg.layers, cfg.cells
    memory_b, mem_w2, steps, feats, out_mask, ctxs = tape
    grads["out_W"] += _flat_grad(feats, dlogits)
    dfeats = _affine(dlogits, params["out_W"].T)
    dS = _Dropout.back(dfeats[..., :H], out_mask)
    dctx_out = dfeats[..., H:]
    Wx0 = params["dec0_Wx"]
    W1, v = params["att_W1"], params["att_v"]
    Tt, B = tgt_in.shape
    dXZe = np.empty((Tt, B, Wx0.shape[1]), dS.dtype)
    dmem_b = np.zeros_like(memory_b)
    dmem_w2 = np.zeros_like(mem_w2)
    dstates = [cell.zero_state(B, H, dS.dtype) for _ in range(L)]
    for t in range(Tt - 1, -1, -1):
        q, alpha, layer_caches = steps[t]
        dstates[-1] = (dstates[-1][0] + dS[t],) + dstates[-1][1:]
        for l in range(L - 1, -1, -1):
            inp, dmask, cache = layer_caches[l]
            Wh = params[f"dec{l}_Wh"]
            dxz, dhz, dstates[l] = cell.step_back(dstates[l], cache, Wh)
            grads[f"dec{l}_Wh"] += cache[0].T @ dhz
            if cell.has_recurrent_bias:
                grads[f"dec{l}_bh"] += dhz.sum(axis=0)
            if l:
                grads[f"dec{l}_Wx"] += inp.T @ dxz
                grads[f"dec{l}_b"] += dxz.sum(axis=0)
                dinp = _Dropout.back(dxz @ params[f"dec{l}_Wx"].T, dmask)
                dstates[l - 1] = (dstates[l - 1][0] + dinp,) + dstates[l - 1][1:]
            else:
                dXZe[t] = dxz
        ctx = ctxs[t]
        dctx = dctx_out[t] + dXZe[t] @ Wx0[E:].T
        grads["dec0_Wx"][E:] += ctx.T @ dXZe[t]
        # attention
        dmem_b += alpha[:, :, None] * dctx[:, None, :]
        dalpha = (memory_b @ dctx[:, :, None])[:, :, 0]
        de = _softmax_back(alpha, dalpha)
        th = np.tanh(mem_w2 + (q @ W1)[:, None, :])
        grads["att_v"] += np.tensordot(de, th, axes=([0, 1], [0, 1]))
        dpre = de[:, :, None] * v * (1.0 - th * th)
        dmem_w2 += dpre
        dqw1 = dpre.sum(axis=1)
        grads["att_W1"] += q.T @ dqw1
        dstates[L - 1] = (dstates[L - 1][0] + dqw1 @ W1.T,) + dstates[L - 1][1:]
    ye = params["dec_emb"][tgt_in]
    grads["dec0_Wx"][:E] += _flat_grad(ye, dXZe)
    grads["dec0_b"] += dXZe.reshape(-1, dXZe.shape[-1]).sum(axis=0)
    np.add.at(grads["dec_emb"], tgt_in, _affine(dXZe, Wx0[:E].T))
    grads["att_W2"] += _flat_grad(memory_b, dmem_w2)
    dmem_b += _affine(dmem_w2, params["att_W2"].T)
    return dmem_b.transpose(1, 0, 2), dstates


# ---------------------------------------------------------------- loss

def _cross_entropy(logits, targets):
    """Mean token cross-entropy over non-PAD targets; returns (loss, probs, dlogits)."""
    shifted = logits - logits.max(axis=-1, keepdims=True)
    logz = np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    logp = shifted - logz
    valid = targets != 0
    n = max(int(valid.sum()), 1)
    picked = np.take_along_axis(logp, targets[..., None], axis=-1)[..., 0]
    loss = -float((picked * valid).sum(dtype=np.float64)) / n
    probs = np.exp(logp)
    d = probs.copy()
    np.put_along_axis(d, targets[..., None], np.take_along_axis(d, targets[..., None], -1) - 1, -1)
    d *= (valid / n).astype(d.dtype)[..., None]
    return loss, probs, d, n


def forward_backward(params, cfg: ModelConfig, batch: Batch, rng: np.random.Generator | None = None,
                     need_grads: bool = True):
    """Teacher-forced loss and (optionally) parameter gradients for one batch.

    ``rng`` drives dropout; pass ``None`` for the deterministic evaluation pass.
    Returns ``(loss, grads or None, info)``, where ``info`` has ``probs``,
    ``tokens`` (non-PAD target count) and, for attention models, ``attention``
    weights shaped (Tt, B, Ts).
    """
    drop = _Dropout(cfg.dropout, rng)
    memory, finals, enc_tapes = encode(params, cfg, batch.src, batch.src_mask, drop)
    valid = batch.src_mask.T
    info = {}
    if cfg.arch == "ml":
        logits, tape = _ml_forward(params, cfg, batch.tgt_in, memory, finals, valid, drop)
        info["attention"] = np.stack([s[1] for s in tape[2]])
    else:
        S_d, dec_tapes = _decode_layers(params, cfg, params["dec_emb"][batch.tgt_in], finals, drop)
        if cfg.arch == "ms":
            memory_b = np.ascontiguousarray(memory.transpose(1, 0, 2))
            SW, alpha, ctx = _luong_attend(params, S_d, memory_b, valid)
            feats = np.concatenate([ctx, S_d], axis=-1)
            ht = np.tanh(_affine(feats, params["comb_W"], params["comb_b"]))
            logits = _affine(ht, params["out_W"], params["out_b"])
            info["attention"] = alpha.transpose(1, 0, 2)
        else:
            logits = _affine(S_d, params["out_W"], params["out_b"])
    loss, probs, dlogits, n_tok = _cross_entropy(logits, batch.tgt_out)
    info["probs"] = probs
    info["tokens"] = n_tok
    if not need_grads:
        return loss, None, info

    grads = {k: np.zeros_like(v) for k, v in params.items()}
    H = cfg.cells
    if cfg.arch == "ml":
        d_memory, d_init = _ml_backward(params, cfg, grads, batch.tgt_in, tape, dlogits)
    else:
        d_memory = np.zeros_like(memory)
        if cfg.arch == "ms":
            grads["out_W"] += _flat_grad(ht, dlogits)
            dht = _affine(dlogits, params["out_W"].T)
            dpre = dht * (1.0 - ht * ht)
            grads["comb_W"] += _flat_grad(feats, dpre)
            grads["comb_b"] += dpre.reshape(-1, H).sum(axis=0)
            dfeats = _affine(dpre, params["comb_W"].T)
            dctx_b = np.ascontiguousarray(dfeats[..., :H].transpose(1, 0, 2))
            dS_d = dfeats[..., H:]
            dalpha = dctx_b @ memory_b.transpose(0, 2, 1)
            dmem_b = alpha.transpose(0, 2, 1) @ dctx_b
            de = _softmax_back(alpha, dalpha)
            dSW = de @ memory_b
            dmem_b += de.transpose(0, 2, 1) @ SW
            S_b = S_d.transpose(1, 0, 2)
            grads["att_W"] += _flat_grad(S_b, dSW)
            dS_d = dS_d + _affine(dSW, params["att_W"].T).transpose(1, 0, 2)
            d_memory = dmem_b.transpose(1, 0, 2)
        else:
            grads["out_W"] += _flat_grad(S_d, dlogits)
            dS_d = _affine(dlogits, params["out_W"].T)
        d_init = _decode_layers_back(params, cfg, grads, batch.tgt_in, dec_tapes, dS_d)
    grads["out_b"] += dlogits.reshape(-1, dlogits.shape[-1]).sum(axis=0)
    encode_back(params, cfg, grads, batch.src, enc_tapes, d_memory, d_init)
    return loss, grads, info


# ---------------------------------------------------------------- stepwise inference

class DecoderState(NamedTuple):
    states: list            # per-layer cell states
    memory_b: np.ndarray    # (B, Ts, H)
    mem_w2: np.ndarray | None
    valid: np.ndarray       # (B, Ts)


def start_decoding(params, cfg: ModelConfig, src, src_mask) -> DecoderState:
    memory, finals, _ = encode(params, cfg, src, src_mask, _Dropout(0.0, None))
    memory_b = np.ascontiguousarray(memory.transpose(1, 0, 2))
    mem_w2 = _affine(memory_b, params["att_W2"]) if cfg.arch == "ml" else None
    return DecoderState(list(finals), memory_b, mem_w2, src_mask.T)


def select_rows(ds: DecoderState, rows) -> DecoderState:
    return DecoderState(
        [tuple(s[rows] for s in st) for st in ds.states],
        ds.memory_b[rows],
        None if ds.mem_w2 is None else ds.mem_w2[rows],
        ds.valid[rows],
    )


def decoder_step(params, cfg: ModelConfig, prev_tokens, ds: DecoderState):
    """Advance every row one character; returns (log-probabilities (B, V), new state)."""
    cell = get_cell(cfg.cell)
    E = cfg.embedding_dim
    emb = params["dec_emb"][prev_tokens]
    states = list(ds.states)
    if cfg.arch == "ml":
        _, _, ctx = _bahdanau_attend(params, states[-1][0], ds.mem_w2, ds.memory_b, ds.valid)
        Wx0 = params["dec0_Wx"]
        xz = emb @ Wx0[:E] + params["dec0_b"] + ctx @ Wx0[E:]
    else:
        xz = emb @ params["dec0_Wx"] + params["dec0_b"]
    for l in range(cfg.layers):
        _, Wh, b, bh = _layer_params(params, f"dec{l}")
        if l:
            xz = states[l - 1][0] @ params[f"dec{l}_Wx"] + b
        states[l], _ = cell.step(xz, states[l], Wh, bh)
    s = states[-1][0]
    if cfg.arch == "ml":
        logits = np.concatenate([s, ctx], axis=-1) @ params["out_W"] + params["out_b"]
    elif cfg.arch == "ms":
        _, _, ctx = _luong_attend(params, s[None], ds.memory_b, ds.valid)
        ht = np.tanh(np.concatenate([ctx[0], s], axis=-1) @ params["comb_W"] + params["comb_b"])
        logits = ht @ params["out_W"] + params["out_b"]
    else:
        logits = s @ params["out_W"] + params["out_b"]
    shifted = logits - logits.max(axis=-1, keepdims=True)
    logp = shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    return logp, ds._replace(states=states)
