"""MCMC mixing diagnostics: autocorrelation, effective sample size, log-likelihood."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import InputError, NumericalError

__all__ = ["TraceSeries", "autocorrelation", "effective_sample_size", "gaussian_loglik"]


@dataclass(frozen=True)
class TraceSeries:
    name: str
    values: np.ndarray
    thin: int = 1
    burnin: int = 0

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).ravel()
        if not np.all(np.isfinite(vals)):
            raise InputError(f"trace {self.name!r} contains non-finite values")
        object.__setattr__(self, "values", vals)


def _values(series) -> np.ndarray:
    if isinstance(series, TraceSeries):
        return series.values
    return TraceSeries("series", series).values


def _acf_all(x: np.ndarray) -> np.ndarray:
    n = x.size
    centered = x - x.mean()
    var = np.dot(centered, centered) / n
    if not var > 0:
        raise InputError("series has zero variance; autocorrelation is undefined")
    size = 1 << int(np.ceil(np.log2(2 * n)))
    spec = np.fft.rfft(centered, size)
    acov = np.fft.irfft(spec * np.conj(spec), size)[:n] / n
    acf = acov / acov[0]
    acf[0] = 1.0
    return acf


def autocorrelation(series, max_lag: int) -> np.ndarray:
    """Sample autocorrelations for lags ``0..max_lag`` (biased, divide-by-N form)."""
    x = _values(series)
    if max_lag < 0 or max_lag >= x.size / 2:
        raise InputError(f"max_lag must lie in [0, {x.size / 2}), got {max_lag}")
    return _acf_all(x)[: max_lag + 1]


def effective_sample_size(series) -> float:
    """ESS from Geyer's initial monotone positive sequence estimator.

    Autocorrelations are summed in adjacent pairs until the first non-positive
    pair; the pair sums are forced to be non-increasing. The result is clipped
    to ``[1, N]``.
    """
    x = _values(series)
    n = x.size
    if n < 10:
        raise InputError("at least 10 values are needed for an ESS estimate")
    acf = _acf_all(x)
    n_pairs = n // 2
    pairs = acf[0 : 2 * n_pairs : 2] + acf[1 : 2 * n_pairs : 2]
    total = 0.0
    prev = np.inf
    for gamma in pairs:
        if gamma <= 0:
            break
        prev = min(prev, gamma)
        total += prev
    tau = -1.0 + 2.0 * total
    if tau <= 1.0:
        return float(n)
    return float(min(max(n / tau, 1.0), n))


def gaussian_loglik(data, mu_g, sigma) -> float:
    """Sum over subjects of the multivariate normal log density of the stacked row.

    ``data`` is a :class:`~bscca.data.DataViews` or an ``(n, p)`` array.
    """
    x = data.xg if hasattr(data, "xg") else np.atleast_2d(np.asarray(data, dtype=float))
    mu_g = np.asarray(mu_g, dtype=float).ravel()
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    n, p = x.shape
    if mu_g.size != p or sigma.shape != (p, p):
        raise InputError("mean and covariance do not conform to the stacked data")
    try:
        chol = linalg.cholesky(sigma, lower=True)
    except linalg.LinAlgError as exc:
        raise NumericalError("covariance is not positive definite") from exc
    resid = linalg.solve_triangular(chol, (x - mu_g).T, lower=True)
    logdet = 2.0 * np.sum(np.log(np.diag(chol)))
    return float(-0.5 * (n * p * np.log(2 * np.pi) + n * logdet + np.sum(resid**2)))
