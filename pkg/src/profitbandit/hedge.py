"""Log-space exponential-weights helpers."""

import numpy as np


def normalize_log(logw, axis=-1):
    """Shift log-weights so that they exponentiate to a probability vector.

    Max-subtraction keeps the exponentials in range even when the
    accumulated losses are enormous.
    """
    logw = np.asarray(logw, dtype=np.float64)
    top = np.max(logw, axis=axis, keepdims=True)
    shifted = logw - top
    lse = np.log(np.sum(np.exp(shifted), axis=axis, keepdims=True))
    return shifted - lse


def softmax_log(logw, axis=-1):
    return np.exp(normalize_log(logw, axis=axis))


def sample_index(probs, rng) -> int:
    """Inverse-CDF draw from a probability vector.

    Ties go to the lower index: the first cell whose cumulative mass
    strictly exceeds the uniform draw is returned.
    """
    cdf = np.cumsum(probs)
    u = rng.random() * cdf[-1]
    idx = int(np.searchsorted(cdf, u, side="right"))
    return min(idx, len(cdf) - 1)
