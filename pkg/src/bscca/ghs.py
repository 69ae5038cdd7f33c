"""Graphical horseshoe sampler for a sparse precision matrix.

Prior: flat on the diagonal of ``omega``, ``omega_ij ~ N(0, alpha_ij**2 beta**2)``
for ``i < j`` with standard half-Cauchy ``alpha_ij`` and ``beta``, restricted to
positive-definite matrices. The data enter through a sum-of-squares matrix
``s`` and a count ``n`` via ``det(omega)**(n/2) exp(-tr(s omega) / 2)``.

One sweep updates every column of ``omega`` in turn (Gaussian off-diagonal
block plus Gamma Schur complement), the local scales and their augmentation
variables, then the global scale. The covariance ``omega^{-1}`` is carried
along with rank-one updates so each column costs one Cholesky of size p-1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np
from scipy import linalg

from .errors import InputError, NumericalError
from ._rng import VAR_CEIL, VAR_FLOOR, inv_gamma

__all__ = ["GhsState", "ghs_init", "ghs_sweep"]

JITTER = 1e-10


@dataclass
class GhsState:
    """State of one graphical-horseshoe chain.

    ``cov`` caches ``inv(omega)``; it is refreshed from ``omega`` at the end of
    every sweep.
    """

    omega: np.ndarray
    alpha_sq: np.ndarray
    beta_sq: float
    nu_aux: np.ndarray
    xi_aux: float
    cov: np.ndarray
    jittered: int = 0

    @property
    def p(self) -> int:
        return self.omega.shape[0]

    def copy(self) -> "GhsState":
        return GhsState(
            self.omega.copy(),
            self.alpha_sq.copy(),
            self.beta_sq,
            self.nu_aux.copy(),
            self.xi_aux,
            self.cov.copy(),
            self.jittered,
        )


def ghs_init(p: int, rng: np.random.Generator | None = None) -> GhsState:
    """Identity precision with every scale and augmentation variable at 1.

    ``rng`` is accepted for interface symmetry; the start is deterministic.
    """
    if int(p) != p or p < 1:
        raise InputError(f"dimension must be a positive integer, got {p!r}")
    p = int(p)
    return GhsState(
        omega=np.eye(p),
        alpha_sq=np.ones((p, p)),
        beta_sq=1.0,
        nu_aux=np.ones((p, p)),
        xi_aux=1.0,
        cov=np.eye(p),
    )


@numba.njit(cache=True)
def _forward(L, b):
    m = b.shape[0]
    y = np.empty(m)
    for i in range(m):
        acc = b[i]
        for k in range(i):
            acc -= L[i, k] * y[k]
        y[i] = acc / L[i, i]
    return y


@numba.njit(cache=True)
def _backward_t(L, b):
    # solves L^T x = b for lower-triangular L
    m = b.shape[0]
    x = np.empty(m)
    for i in range(m - 1, -1, -1):
        acc = b[i]
        for k in range(i + 1, m):
            acc -= L[k, i] * x[k]
        x[i] = acc / L[i, i]
    return x


@numba.njit(cache=True)
def _chol(m, jitter):
    """Cholesky factor, retrying once with a diagonal ridge.

    Returns (factor, status): status 0 = ok, 1 = ok after jitter, 2 = failed.
    """
    try:
        return np.linalg.cholesky(m), 0
    except Exception:
        pass
    k = m.shape[0]
    ridge = m.copy()
    for i in range(k):
        ridge[i, i] += jitter
    try:
        return np.linalg.cholesky(ridge), 1
    except Exception:
        return np.zeros_like(m), 2


@numba.njit(cache=True)
def _sweep_columns(omega, cov, alpha_sq, nu, beta_sq, s, gam, eps, exp_a, exp_n, jitter, floor, ceil):
    """Column-by-column update, in place. Returns (n_jittered, failed_column)."""
    p = omega.shape[0]
    m = p - 1
    idx = np.empty(m, np.int64)
    inv11 = np.empty((m, m))
    cinv = np.empty((m, m))
    n_jit = 0
    for j in range(p):
        c = 0
        for k in range(p):
            if k != j:
                idx[c] = k
                c += 1
        s22 = s[j, j]
        gamma = gam[j] / (0.5 * s22)
        if m == 0:
            omega[j, j] = gamma
            cov[j, j] = 1.0 / gamma
            continue
        sig22 = cov[j, j]
        for a in range(m):
            ia = idx[a]
            ca = cov[ia, j] / sig22
            for b in range(m):
                inv11[a, b] = cov[ia, idx[b]] - ca * cov[j, idx[b]]
        s12 = np.empty(m)
        for a in range(m):
            s12[a] = s[idx[a], j]
            for b in range(m):
                cinv[a, b] = s22 * inv11[a, b]
            cinv[a, a] += 1.0 / (alpha_sq[idx[a], j] * beta_sq)
        L, status = _chol(cinv, jitter)
        if status == 2:
            return n_jit, j
        n_jit += status
        mean = _backward_t(L, _forward(L, -s12))
        beta = mean + _backward_t(L, eps[j, :m])
        w = inv11 @ beta
        quad = 0.0
        for a in range(m):
            quad += beta[a] * w[a]
        for a in range(m):
            ia = idx[a]
            omega[ia, j] = beta[a]
            omega[j, ia] = beta[a]
            rate = 1.0 / nu[ia, j] + 0.5 * beta[a] * beta[a] / beta_sq
            lam = min(max(rate / exp_a[j, a], floor), ceil)
            alpha_sq[ia, j] = lam
            alpha_sq[j, ia] = lam
            nv = min(max((1.0 + 1.0 / lam) / exp_n[j, a], floor), ceil)
            nu[ia, j] = nv
            nu[j, ia] = nv
        omega[j, j] = gamma + quad
        for a in range(m):
            ia = idx[a]
            for b in range(m):
                cov[ia, idx[b]] = inv11[a, b] + w[a] * w[b] / gamma
            cov[ia, j] = -w[a] / gamma
            cov[j, ia] = -w[a] / gamma
        cov[j, j] = 1.0 / gamma
    return n_jit, -1


def ghs_sweep(state: GhsState, s: np.ndarray, n: int, rng: np.random.Generator) -> GhsState:
    """One full Gibbs sweep of the graphical horseshoe posterior.

    Parameters
    ----------
    state : GhsState
        Current state; not modified.
    s : ndarray (p, p)
        Symmetric sum-of-squares matrix of the (zero-mean) observations.
    n : int
        Number of observations behind ``s``.
    rng : numpy.random.Generator

    Returns
    -------
    GhsState
        The updated state, with ``omega`` positive definite and exactly symmetric.
    """
    s = np.asarray(s, dtype=float)
    p = state.p
    if s.shape != (p, p):
        raise InputError(f"sum-of-squares matrix has shape {s.shape}, expected {(p, p)}")
    if not np.array_equal(s, s.T):
        if not np.allclose(s, s.T, rtol=1e-12, atol=1e-12 * max(1.0, np.abs(s).max())):
            raise InputError("sum-of-squares matrix is not symmetric")
        s = 0.5 * (s + s.T)
    if int(n) != n or n < 1:
        raise InputError(f"observation count must be >= 1, got {n!r}")
    if np.any(np.diag(s) <= 0):
        raise NumericalError("sum-of-squares matrix has a non-positive diagonal entry")

    new = state.copy()
    gam = rng.gamma(0.5 * n + 1.0, 1.0, size=p)
    width = max(p - 1, 1)
    eps = rng.standard_normal((p, width))
    exp_a = rng.standard_exponential((p, width))
    exp_n = rng.standard_exponential((p, width))
    n_jit, failed = _sweep_columns(
        new.omega, new.cov, new.alpha_sq, new.nu_aux, float(new.beta_sq),
        s, gam, eps, exp_a, exp_n, JITTER, VAR_FLOOR, VAR_CEIL,
    )
    if failed >= 0:
        raise NumericalError(f"graphical horseshoe column {failed}: conditional covariance is not positive definite")

    iu = np.triu_indices(p, 1)
    n_pairs = iu[0].size
    rate = 1.0 / new.xi_aux + 0.5 * np.sum(new.omega[iu] ** 2 / new.alpha_sq[iu])
    new.beta_sq = float(inv_gamma(rng, 0.5 * (n_pairs + 1), rate))
    new.xi_aux = float(inv_gamma(rng, 1.0, 1.0 + 1.0 / new.beta_sq))

    try:
        chol = linalg.cholesky(new.omega, lower=True)
    except linalg.LinAlgError as exc:
        raise NumericalError("precision matrix lost positive definiteness after sweep") from exc
    new.cov = linalg.cho_solve((chol, True), np.eye(p))
    new.cov = 0.5 * (new.cov + new.cov.T)
    new.jittered = n_jit
    return new
