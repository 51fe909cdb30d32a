"""Pure numpy jet kernels (reference and fallback for the compiled module)."""

import numpy as np


def mul(a, b, alg):
    """Row-wise truncated product of two ``(N, M)`` coefficient arrays."""
    prod = a[:, alg.pair_i] * b[:, alg.pair_j]
    return np.add.reduceat(prod, alg.pair_starts, axis=1)


def series(coeffs, delta, alg):
    """Horner evaluation of ``sum_k coeffs[k, n] * delta[n]^k`` for each row n.

    ``delta`` must have a zero constant term (it is nilpotent).
    """
    nterms = coeffs.shape[0]
    out = np.zeros(delta.shape, dtype=np.result_type(coeffs, delta))
    out[:, 0] = coeffs[nterms - 1]
    for k in range(nterms - 2, -1, -1):
        out = mul(out, delta, alg)
        out[:, 0] += coeffs[k]
    return out
