import os
import subprocess
import sys

import numpy as np
import pytest

from gcinverse import kernels


def _data(S=12, K=20, B=3, seed=0):
    rng = np.random.default_rng(seed)
    ratio = rng.uniform(0.3, 1.0, (S, K))
    local = rng.standard_normal((S, K, B)) + 1j * rng.standard_normal((S, K, B))
    return ratio, local


def _closed_forms(ratio, local):
    # C[i] = sum_{s < i} prod_{s < m < i} ratio[m] local[s];  D[i] = sum_{s >= i} prod_{i <= m < s} ratio[m] local[s]
    S = local.shape[0]
    C = np.zeros((S + 1,) + local.shape[1:], dtype=complex)
    D = np.zeros_like(C)
    for i in range(S + 1):
        for s in range(i):
            C[i] += np.prod(ratio[s + 1:i], axis=0)[:, None] * local[s]
        for s in range(i, S):
            D[i] += np.prod(ratio[i:s], axis=0)[:, None] * local[s]
    return C, D


@pytest.mark.parametrize("backend", ["python", "cython"])
def test_sweeps_match_closed_forms(backend):
    if backend == "cython" and kernels._ext is None:
        pytest.skip("compiled extension not built")
    ratio, local = _data(6, 5, 2)
    C, D = _closed_forms(ratio, local)
    assert np.abs(kernels.sweep_inner(ratio, local, backend=backend) - C).max() < 1e-13
    assert np.abs(kernels.sweep_outer(ratio, local, backend=backend) - D).max() < 1e-13


@pytest.mark.skipif(kernels._ext is None, reason="compiled extension not built")
@pytest.mark.parametrize("fn", ["sweep_inner", "sweep_outer"])
def test_backends_agree(fn):
    ratio, local = _data()
    a = getattr(kernels, fn)(ratio, local, backend="python")
    b = getattr(kernels, fn)(ratio, local, backend="cython")
    assert np.abs(a - b).max() <= 1e-13 * np.abs(a).max()


def test_env_var_forces_fallback():
    code = "from gcinverse import kernels; print(kernels.BACKEND, kernels._ext is None)"
    env = dict(os.environ, GCINVERSE_PURE_PYTHON="1")
    r = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, env=env, check=True)
    assert r.stdout.split() == ["python", "True"]
