"""Hot kernels, compiled when available.

The Cython extension is preferred; set ``LOGTRANSLATE_PURE_PYTHON=1`` to force
the pure-Python fallback.  ``BACKEND`` names the active implementation.
"""

import os
from contextlib import contextmanager

if os.environ.get("LOGTRANSLATE_PURE_PYTHON") == "1":
    from ._purepy import (levenshtein, lstm_backward_pointwise, lstm_forward_pointwise,
                          set_flush_denormal)

    BACKEND = "python"
else:
    try:
        from ._kernels import (levenshtein, lstm_backward_pointwise, lstm_forward_pointwise,
                               set_flush_denormal)

        BACKEND = "cython"
    except ImportError:
        from ._purepy import (levenshtein, lstm_backward_pointwise, lstm_forward_pointwise,
                              set_flush_denormal)

        BACKEND = "python"


@contextmanager
def flush_denormals():
    """Treat subnormal floats as zero inside the block (compiled backend only).

    Vanishing gradients deep in backprop-through-time produce subnormals, which
    are very slow on x86.  The previous mode is restored on exit.
    """
    old = set_flush_denormal(True)
    try:
        yield
    finally:
        set_flush_denormal(old)


__all__ = ["BACKEND", "flush_denormals", "levenshtein", "lstm_backward_pointwise",
           "lstm_forward_pointwise", "set_flush_denormal"]
