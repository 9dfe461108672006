"""LSTM and GRU cells with explicit backward passes.

Weights are split into an input projection ``Wx`` (D, G*H) with bias ``b``,
applied to a whole sequence at once by the caller, and a recurrent matrix
``Wh`` (H, G*H) applied step by step here.  The GRU additionally carries a
recurrent bias ``bh`` (reset gate applied after the recurrent projection).

A cell state is a tuple whose first element is the hidden output ``h``.
"""

from __future__ import annotations

import numpy as np

from ..kernels import lstm_backward_pointwise, lstm_forward_pointwise


def sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


class LSTMCell:
    """Gates ordered [input, forget, output, candidate]."""

    kind = "lstm"
    n_gates = 4
    has_recurrent_bias = False

    @staticmethod
    def zero_state(batch: int, hidden: int, dtype) -> tuple:
        return (np.zeros((batch, hidden), dtype), np.zeros((batch, hidden), dtype))

    @staticmethod
    def step(xz, state, Wh, bh=None):
        h_prev, c_prev = state
        z = xz + h_prev @ Wh
        B, n = h_prev.shape
        gates = np.empty_like(z)
        c = np.empty((B, n), z.dtype)
        tanh_c = np.empty_like(c)
        h = np.empty_like(c)
        lstm_forward_pointwise(z, np.ascontiguousarray(c_prev), gates, c, tanh_c, h)
        return (h, c), (h_prev, c_prev, gates, tanh_c)

    @staticmethod
    def step_back(dstate, cache, Wh):
        """Returns (d input pre-activation, d recurrent pre-activation, d previous state)."""
        dh, dc = dstate
        h_prev, c_prev, gates, tanh_c = cache
        dz = np.empty_like(gates)
        dc_prev = np.empty_like(dc)
        lstm_backward_pointwise(np.ascontiguousarray(dh), np.ascontiguousarray(dc), gates,
                                np.ascontiguousarray(c_prev), tanh_c, dz, dc_prev)
        return dz, dz, (dz @ Wh.T, dc_prev)


class GRUCell:
    """Gates ordered [reset, update, candidate]; h' = (1 - z) * n + z * h."""

    kind = "gru"
    n_gates = 3
    has_recurrent_bias = True

    @staticmethod
    def zero_state(batch: int, hidden: int, dtype) -> tuple:
        return (np.zeros((batch, hidden), dtype),)

    @staticmethod
    def step(xz, state, Wh, bh):
        (h_prev,) = state
        n_h = h_prev.shape[1]
        hz = h_prev @ Wh + bh
        r = sigmoid(xz[:, :n_h] + hz[:, :n_h])
        z = sigmoid(xz[:, n_h:2 * n_h] + hz[:, n_h:2 * n_h])
        n = np.tanh(xz[:, 2 * n_h:] + r * hz[:, 2 * n_h:])
        h = (1.0 - z) * n + z * h_prev
        return (h,), (h_prev, hz, r, z, n)

    @staticmethod
    def step_back(dstate, cache, Wh):
        (dh,) = dstate
        h_prev, hz, r, z, n = cache
        n_h = h_prev.shape[1]
        dn = dh * (1.0 - z)
        dzg = dh * (h_prev - n)
        dan = dn * (1.0 - n * n)
        dar = dan * hz[:, 2 * n_h:] * r * (1.0 - r)
        daz = dzg * z * (1.0 - z)
        dxz = np.concatenate([dar, daz, dan], axis=1)
        dhz = np.concatenate([dar, daz, dan * r], axis=1)
        return dxz, dhz, (dh * z + dhz @ Wh.T,)


CELLS = {"lstm": LSTMCell, "gru": GRUCell}


def get_cell(kind: str):
    try:
        return CELLS[kind.lower()]
    except KeyError:
        raise ValueError(f"unknown cell kind {kind!r}; expected one of {sorted(CELLS)}") from None


def cell_step(kind: str, params: dict, x: np.ndarray, state: tuple):
    """One recurrent step from raw input ``x`` (B, D); returns (new state, output h).

    ``params`` holds ``Wx``, ``Wh``, ``b`` and, for the GRU, ``bh``.
    """
    cell = get_cell(kind)
    Wx, Wh = params["Wx"], params["Wh"]
    H = Wh.shape[0]
    if x.shape[-1] != Wx.shape[0] or Wh.shape != (H, cell.n_gates * H) or state[0].shape[-1] != H:
        raise ValueError(
            f"dimension mismatch: x {x.shape}, Wx {Wx.shape}, Wh {Wh.shape}, h {state[0].shape}"
        )
    x2 = np.atleast_2d(x)
    st = tuple(np.atleast_2d(s) for s in state)
    new, _ = cell.step(x2 @ Wx + params["b"], st, Wh, params.get("bh"))
    if x.ndim == 1:
        new = tuple(s[0] for s in new)
    return new, new[0]


def run_layer(cell, XZ, state0, Wh, bh=None, mask=None):
    """Unroll ``cell`` over time-major pre-activations ``XZ`` (T, B, G*H).

    Where ``mask`` (T, B, 1) is 0 the state is carried over unchanged.
    Returns (outputs (T, B, H), final state, tape for :func:`back_layer`).
    """
    T = XZ.shape[0]
    B, H = state0[0].shape
    outs = np.empty((T, B, H), XZ.dtype)
    caches = []
    state = state0
    for t in range(T):
        new, cache = cell.step(XZ[t], state, Wh, bh)
        if mask is not None:
            m = mask[t]
            new = tuple(m * a + (1.0 - m) * p for a, p in zip(new, state))
        caches.append(cache)
        outs[t] = new[0]
        state = new
    return outs, state, (caches, state0, outs, mask)


def back_layer(cell, dOuts, dstate_final, tape, Wh):
    """Backpropagate through :func:`run_layer`.

    Returns (dXZ, dWh, dbh or None, d initial state).
    """
    caches, state0, outs, mask = tape
    T = len(caches)
    GH = Wh.shape[1]
    dXZ = np.empty((T,) + dOuts.shape[1:-1] + (GH,), dOuts.dtype)
    dHZ = dXZ if cell.n_gates == 4 else np.empty_like(dXZ)
    dstate = tuple(dstate_final)
    for t in range(T - 1, -1, -1):
        dstate = (dstate[0] + dOuts[t],) + dstate[1:]
        if mask is not None:
            m = mask[t]
            carried = tuple((1.0 - m) * d for d in dstate)
            dstate = tuple(m * d for d in dstate)
        dxz, dhz, dprev = cell.step_back(dstate, caches[t], Wh)
        dXZ[t] = dxz
        if dHZ is not dXZ:
            dHZ[t] = dhz
        if mask is not None:
            dprev = tuple(a + b for a, b in zip(dprev, carried))
        dstate = dprev
    H = Wh.shape[0]
    h_prev = np.concatenate([state0[0][None], outs[:-1]], axis=0).reshape(-1, H)
    flat = dHZ.reshape(-1, GH)
    dWh = h_prev.T @ flat
    dbh = flat.sum(axis=0) if cell.has_recurrent_bias else None
    return dXZ, dWh, dbh, dstate
