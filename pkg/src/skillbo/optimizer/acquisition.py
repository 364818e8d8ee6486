"""Expected Improvement in the maximization frame."""
from __future__ import annotations

import math

import numpy as np
from scipy.special import ndtr

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def expected_improvement(mu, sigma, best) -> np.ndarray | float:
    """EI(x) = (mu - best) Phi(gamma) + sigma phi(gamma), gamma = (mu - best)/sigma.

    At sigma = 0 this degenerates to max(mu - best, 0).
    """
    mu_arr = np.asarray(mu, dtype=float)
    sigma_arr = np.asarray(sigma, dtype=float)
    if np.any(sigma_arr < 0):
        raise ValueError("sigma must be >= 0")
    diff = mu_arr - best
    out = np.maximum(diff, 0.0).astype(float)
    pos = sigma_arr > 0
    if np.any(pos):
        d = diff[pos] if diff.ndim else diff
        s = sigma_arr[pos] if sigma_arr.ndim else sigma_arr
        gamma = d / s
        phi = _INV_SQRT_2PI * np.exp(-0.5 * gamma * gamma)
        val = d * ndtr(gamma) + s * phi
        if out.ndim:
            out[pos] = val
        else:
            out = val
    return out if np.asarray(mu).ndim else float(out)
