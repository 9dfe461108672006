import os
import subprocess
import sys

import numpy as np
import pytest

from logtranslate import _purepy, kernels

needs_ext = pytest.mark.skipif(kernels.BACKEND != "cython", reason="compiled extension not built")


def lstm_inputs(dtype, B=5, n=7, seed=0):
    rng = np.random.default_rng(seed)
    z = (3 * rng.standard_normal((B, 4 * n))).astype(dtype)
    c_prev = rng.standard_normal((B, n)).astype(dtype)
    return z, c_prev


def run_forward(mod, z, c_prev):
    B, n = c_prev.shape
    out = [np.empty((B, 4 * n), z.dtype)] + [np.empty((B, n), z.dtype) for _ in range(3)]
    mod.lstm_forward_pointwise(z, c_prev, *out)
    return out


def test_pure_forward_matches_equations():
    z, c_prev = lstm_inputs(np.float64)
    gates, c, tanh_c, h = run_forward(_purepy, z, c_prev)
    n = c.shape[1]
    sig = 1 / (1 + np.exp(-z[:, :3 * n]))
    i, f, o = sig[:, :n], sig[:, n:2 * n], sig[:, 2 * n:]
    g = np.tanh(z[:, 3 * n:])
    np.testing.assert_allclose(c, f * c_prev + i * g, rtol=1e-12)
    np.testing.assert_allclose(h, o * np.tanh(c), rtol=1e-12)
    assert np.abs(h).max() <= 1


def test_pure_backward_matches_finite_differences():
    z, c_prev = lstm_inputs(np.float64, B=2, n=3)
    rng = np.random.default_rng(1)
    wh, wc = rng.standard_normal((2, 3)), rng.standard_normal((2, 3))

    def loss(z, c_prev):
        _, c, _, h = run_forward(_purepy, z, c_prev)
        return (wh * h).sum() + (wc * c).sum()

    gates, c, tanh_c, h = run_forward(_purepy, z, c_prev)
    dz, dcp = np.empty_like(z), np.empty_like(c_prev)
    _purepy.lstm_backward_pointwise(wh, wc, gates, c_prev, tanh_c, dz, dcp)
    eps = 1e-6
    for arr, grad in ((z, dz), (c_prev, dcp)):
        for idx in np.ndindex(arr.shape):
            old = arr[idx]
            arr[idx] = old + eps
            up = loss(z, c_prev)
            arr[idx] = old - eps
            down = loss(z, c_prev)
            arr[idx] = old
            assert grad[idx] == pytest.approx((up - down) / (2 * eps), rel=1e-6, abs=1e-8)


@needs_ext
@pytest.mark.parametrize("dtype, tol", [(np.float32, 1e-6), (np.float64, 1e-14)])
def test_compiled_lstm_matches_fallback(dtype, tol):
    from logtranslate import _kernels

    z, c_prev = lstm_inputs(dtype, B=9, n=33)
    fwd = [run_forward(m, z, c_prev) for m in (_kernels, _purepy)]
    for a, b in zip(*fwd):
        np.testing.assert_allclose(a, b, rtol=0, atol=tol)
    gates, _, tanh_c, _ = fwd[1]
    rng = np.random.default_rng(3)
    dh = rng.standard_normal(c_prev.shape).astype(dtype)
    dc = rng.standard_normal(c_prev.shape).astype(dtype)
    outs = []
    for m in (_kernels, _purepy):
        dz, dcp = np.empty_like(z), np.empty_like(c_prev)
        m.lstm_backward_pointwise(dh, dc, gates, c_prev, tanh_c, dz, dcp)
        outs.append((dz, dcp))
    for a, b in zip(*outs):
        np.testing.assert_allclose(a, b, rtol=0, atol=10 * tol)


@needs_ext
def test_flush_denormals_is_scoped():
    tiny = np.array([1e-39], dtype=np.float32)
    assert (tiny * np.float32(0.5))[0] != 0
    before = kernels.set_flush_denormal(False)
    with kernels.flush_denormals():
        assert (tiny * np.float32(0.5))[0] == 0
    assert (tiny * np.float32(0.5))[0] != 0
    kernels.set_flush_denormal(before)


def test_pure_python_backend_selected_by_env():
    env = dict(os.environ, LOGTRANSLATE_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "from logtranslate import kernels; print(kernels.BACKEND, kernels.levenshtein('ab', 'ba'))"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.split() == ["python", "2"]
    assert _purepy.set_flush_denormal(True) is False
