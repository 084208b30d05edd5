"""Pure-Python reference for the radial recurrences (used when the compiled
extension is unavailable)."""

import numpy as np


def sweep_inner(ratio, local):
    """C[0] = 0, C[s+1] = ratio[s] * C[s] + local[s]; returns C of shape (S+1, K, B)."""
    S, K, B = local.shape
    out = np.empty((S + 1, K, B), dtype=np.complex128)
    out[0] = 0.0
    for s in range(S):
        np.multiply(ratio[s][:, None], out[s], out=out[s + 1])
        out[s + 1] += local[s]
    return out


def sweep_outer(ratio, local):
    """D[S] = 0, D[s] = ratio[s] * D[s+1] + local[s]."""
    S, K, B = local.shape
    out = np.empty((S + 1, K, B), dtype=np.complex128)
    out[S] = 0.0
    for s in range(S - 1, -1, -1):
        np.multiply(ratio[s][:, None], out[s + 1], out=out[s])
        out[s] += local[s]
    return out
