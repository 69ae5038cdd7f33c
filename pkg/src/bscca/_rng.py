"""Small random-variate helpers built on :class:`numpy.random.Generator`."""

import numpy as np

# Variance-type draws are kept inside this window so products of several
# shrinkage factors never under/overflow to 0 or inf.
VAR_FLOOR = 1e-100
VAR_CEIL = 1e100


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def inv_gamma(rng: np.random.Generator, shape, rate, size=None):
    """Draw from IG(shape, rate), i.e. ``rate / Gamma(shape, 1)``.

    ``rate`` may be an array, in which case one draw per entry is returned.
    """
    rate = np.asarray(rate, dtype=float)
    if size is None:
        size = rate.shape
    draw = rate / rng.gamma(shape, 1.0, size=size)
    return np.clip(draw, VAR_FLOOR, VAR_CEIL)
