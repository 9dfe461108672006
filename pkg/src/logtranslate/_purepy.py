"""Pure-Python/numpy versions of the compiled kernels in ``_kernels.pyx``."""

import numpy as np


def levenshtein(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def _sigmoid(x, out):
    # numerically safe logistic: 0.5 * (1 + tanh(x / 2))
    np.multiply(x, 0.5, out=out)
    np.tanh(out, out=out)
    out += 1.0
    out *= 0.5
    return out


def lstm_forward_pointwise(z, c_prev, gates, c, tanh_c, h):
    """Gate activations and state update from pre-activations ``z`` = [i, f, o, g].

    Writes activated gates into ``gates`` (B, 4H), the new cell ``c``, ``tanh(c)`` and ``h``.
    """
    n = c.shape[1]
    _sigmoid(z[:, : 3 * n], gates[:, : 3 * n])
    np.tanh(z[:, 3 * n:], out=gates[:, 3 * n:])
    i, f, o, g = gates[:, :n], gates[:, n:2 * n], gates[:, 2 * n:3 * n], gates[:, 3 * n:]
    np.multiply(f, c_prev, out=c)
    c += i * g
    np.tanh(c, out=tanh_c)
    np.multiply(o, tanh_c, out=h)


def lstm_backward_pointwise(dh, dc, gates, c_prev, tanh_c, dz, dc_prev):
    """Inverse of :func:`lstm_forward_pointwise`.

    ``dc`` holds the gradient flowing into the cell from the next step and is
    not modified; ``dz`` receives pre-activation gradients, ``dc_prev`` the
    gradient for the previous cell.
    """
    n = dh.shape[1]
    i, f, o, g = gates[:, :n], gates[:, n:2 * n], gates[:, 2 * n:3 * n], gates[:, 3 * n:]
    dct = dc + dh * o * (1.0 - tanh_c * tanh_c)
    dz[:, :n] = dct * g * i * (1.0 - i)
    dz[:, n:2 * n] = dct * c_prev * f * (1.0 - f)
    dz[:, 2 * n:3 * n] = dh * tanh_c * o * (1.0 - o)
    dz[:, 3 * n:] = dct * i * (1.0 - g * g)
    np.multiply(dct, f, out=dc_prev)


def set_flush_denormal(enable: bool) -> bool:
    """No-op without the compiled extension; denormals stay IEEE."""
    return False
