"""Gibbs samplers for the two-view inter-battery factor model.

Model, per subject ``i`` and view ``m``::

    x_i^(m) = mu^(m) + A^(m) z_i + e_i^(m),   z_i ~ N(0, I_d),   e_i^(m) ~ N(0, Phi^(m))

Loadings carry a horseshoe-type prior ``a_jk ~ N(0, tau^2 eta_k^2 lambda_jk^2)``
with half-Cauchy ``lambda`` and ``tau`` and the MHCP column scales ``eta``. The
specificity ``Phi`` is either sparse-unstructured with a graphical horseshoe on
its inverse (NDFSM) or diagonal with inverse-gamma entries (DFSM).

One iteration updates, in order: means, factor scores, loading rows and their
shrinkage variables, then the specificity matrices. Steps 1-3 run through the
same code for both models; only the last step differs.
"""

from __future__ import annotations

import logging
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Any

import numba
import numpy as np
from scipy import linalg

from ._rng import inv_gamma, make_rng
from .cca import Model, PosteriorDraws, _cca_core, grand_covariance
from .data import DataViews
from .diagnostics import gaussian_loglik
from .errors import InputError, NumericalError
from .ghs import JITTER, GhsState, _backward_t, _chol, _forward, ghs_init, ghs_sweep
from .mhcp import MhcpState

__all__ = [
    "DataViews",
    "ChainConfig",
    "ViewParams",
    "ChainState",
    "default_truncation",
    "tau_shape",
    "eta_shape",
    "dfsm_shape",
    "init_state",
    "step_mu",
    "step_z",
    "step_a_row",
    "step_a",
    "step_shrinkage",
    "update_lambda",
    "update_tau",
    "update_eta",
    "update_aux",
    "step_phi",
    "gibbs_iteration",
    "run_chain",
    "run_chains",
]

log = logging.getLogger(__name__)

ETA_TAIL_WARN = 1e-3
MAX_FAIL_FRACTION = 0.01


def default_truncation(n: int, p1: int, p2: int) -> int:
    """Number of latent columns used when none is requested."""
    return max(1, min(15, n - 1, p1, p2))


def tau_shape(p: int, d: int) -> float:
    return 0.5 * (p * d + 1)


def eta_shape(d: int, j: int, p1: int, p2: int) -> float:
    """Shape of the ``eta_tilde_j**2`` conditional; ``j`` is 1-based, ``2 <= j <= d``."""
    return 0.5 * ((d - (j - 1)) * (p1 + p2) + 1)


def dfsm_shape(n: int, prior_shape: float = 0.1) -> float:
    return 0.5 * n + prior_shape


@dataclass(frozen=True)
class ChainConfig:
    """Settings of one Gibbs chain.

    ``d=None`` selects :func:`default_truncation` at run time. Stored draws are
    the iterations ``burnin + thin, burnin + 2 thin, ..., iters`` (1-based).
    """

    iters: int = 15000
    burnin: int = 5000
    thin: int = 5
    model: Model = Model.NDFSM
    d: int | None = None
    zeta: float = 0.5
    sigma_sq_mu: float = 100.0
    ig_shape: float = 0.1
    ig_rate: float = 0.1
    ghs_diag_rate: float = 0.1
    seed: int = 0
    n_cc: int = 2

    def __post_init__(self):
        object.__setattr__(self, "model", Model(self.model))
        for name in ("iters", "burnin", "thin", "n_cc"):
            val = getattr(self, name)
            if int(val) != val:
                raise InputError(f"{name} must be an integer, got {val!r}")
        if self.burnin < 0:
            raise InputError("burnin must be non-negative")
        if self.iters <= self.burnin:
            raise InputError(f"iters ({self.iters}) must exceed burnin ({self.burnin})")
        if self.thin < 1:
            raise InputError("thin must be at least 1")
        if self.n_stored < 1:
            raise InputError("the configuration stores no draws")
        if self.d is not None and (int(self.d) != self.d or self.d < 1):
            raise InputError(f"d must be a positive integer, got {self.d!r}")
        for name in ("zeta", "sigma_sq_mu", "ig_shape", "ig_rate"):
            if not getattr(self, name) > 0:
                raise InputError(f"{name} must be positive")
        if not self.ghs_diag_rate >= 0:
            raise InputError("ghs_diag_rate must be non-negative")
        if self.n_cc < 1:
            raise InputError("n_cc must be at least 1")

    @property
    def n_stored(self) -> int:
        return (self.iters - self.burnin) // self.thin


@dataclass
class ViewParams:
    """Parameters attached to one view.

    Exactly one of ``ghs`` (NDFSM) and ``phi_diag`` (DFSM) is set.
    """

    mu: np.ndarray
    a: np.ndarray
    lambda_sq: np.ndarray
    c_aux: np.ndarray
    tau_sq: float
    f_aux: float
    ghs: GhsState | None = None
    phi_diag: np.ndarray | None = None

    @property
    def p(self) -> int:
        return self.a.shape[0]

    @property
    def omega(self) -> np.ndarray:
        """Precision of the specific errors, ``inv(Phi)``."""
        if self.ghs is not None:
            return self.ghs.omega
        return np.diag(1.0 / self.phi_diag)

    @property
    def phi(self) -> np.ndarray:
        if self.ghs is not None:
            return self.ghs.cov
        return np.diag(self.phi_diag)

    def copy(self) -> "ViewParams":
        return ViewParams(
            self.mu.copy(),
            self.a.copy(),
            self.lambda_sq.copy(),
            self.c_aux.copy(),
            self.tau_sq,
            self.f_aux,
            None if self.ghs is None else self.ghs.copy(),
            None if self.phi_diag is None else self.phi_diag.copy(),
        )


@dataclass
class ChainState:
    views: list[ViewParams]
    z: np.ndarray
    mhcp: MhcpState
    jitter_count: int = 0

    @property
    def d(self) -> int:
        return self.z.shape[1]

    @property
    def model(self) -> Model:
        return Model.NDFSM if self.views[0].ghs is not None else Model.DFSM

    def copy(self) -> "ChainState":
        return ChainState([v.copy() for v in self.views], self.z.copy(), self.mhcp.copy(), self.jitter_count)

    def validate(self) -> None:
        """Check positivity and positive-definiteness; raise NumericalError otherwise."""
        self.mhcp.validate()
        for m, v in enumerate(self.views, start=1):
            for name in ("lambda_sq", "c_aux"):
                arr = getattr(v, name)
                if not (np.all(np.isfinite(arr)) and np.all(arr > 0)):
                    raise NumericalError(f"view {m}: {name} has non-positive or non-finite entries")
            if not (v.tau_sq > 0 and v.f_aux > 0 and np.isfinite(v.tau_sq) and np.isfinite(v.f_aux)):
                raise NumericalError(f"view {m}: global scale is non-positive or non-finite")
            if not (np.all(np.isfinite(v.a)) and np.all(np.isfinite(v.mu))):
                raise NumericalError(f"view {m}: loadings or means are non-finite")
            if v.ghs is not None:
                try:
                    linalg.cholesky(v.ghs.omega)
                except linalg.LinAlgError as exc:
                    raise NumericalError(f"view {m}: precision matrix is not positive definite") from exc
            elif not np.all(v.phi_diag > 0):
                raise NumericalError(f"view {m}: diagonal specificity has non-positive entries")
        if not np.all(np.isfinite(self.z)):
            raise NumericalError("latent scores are non-finite")


def _views_of(data: DataViews) -> tuple[np.ndarray, np.ndarray]:
    return data.x1, data.x2


def _check_dims(state: ChainState, data: DataViews) -> None:
    if state.z.shape[0] != data.n or state.views[0].p != data.p1 or state.views[1].p != data.p2:
        raise InputError("chain state does not match the data dimensions")


def _cholesky(m: np.ndarray, what: str, state: ChainState) -> np.ndarray:
    """Lower Cholesky factor, with one ridge retry counted on ``state``."""
    try:
        return linalg.cholesky(m, lower=True)
    except linalg.LinAlgError:
        pass
    try:
        out = linalg.cholesky(m + JITTER * np.eye(m.shape[0]), lower=True)
    except linalg.LinAlgError as exc:
        raise NumericalError(f"{what} is not positive definite") from exc
    state.jitter_count += 1
    return out


def init_state(data: DataViews, config: ChainConfig, rng=None) -> ChainState:
    """Starting point: column-mean ``mu``, standard normal ``Z``, ``A ~ N(0, 0.01)``,
    every scale and augmentation variable at 1 and ``Phi = I``."""
    rng = make_rng(config.seed if rng is None else rng)
    d = config.d or default_truncation(data.n, data.p1, data.p2)
    z = rng.standard_normal((data.n, d))
    views = []
    for x in _views_of(data):
        p = x.shape[1]
        views.append(
            ViewParams(
                mu=x.mean(axis=0),
                a=0.1 * rng.standard_normal((p, d)),
                lambda_sq=np.ones((p, d)),
                c_aux=np.ones((p, d)),
                tau_sq=1.0,
                f_aux=1.0,
                ghs=ghs_init(p) if config.model is Model.NDFSM else None,
                phi_diag=np.ones(p) if config.model is Model.DFSM else None,
            )
        )
    mhcp = MhcpState(np.ones(d), np.ones(d), float(config.zeta), np.ones(d))
    return ChainState(views, z, mhcp)


def _stacked(state: ChainState) -> tuple[np.ndarray, np.ndarray]:
    a = np.vstack([v.a for v in state.views])
    omega = linalg.block_diag(*[v.omega for v in state.views])
    return a, omega


def _sigma_inverse(a: np.ndarray, omega: np.ndarray, state: ChainState) -> np.ndarray:
    # Woodbury: (Phi + A A')^{-1} = Omega - Omega A (I + A' Omega A)^{-1} A' Omega
    oa = omega @ a
    core = np.eye(a.shape[1]) + a.T @ oa
    chol = _cholesky(core, "factor core matrix", state)
    out = omega - oa @ linalg.cho_solve((chol, True), oa.T)
    return 0.5 * (out + out.T)


def step_mu(state: ChainState, data: DataViews, rng, sigma_sq_mu: float = 100.0) -> ChainState:
    """Draw the stacked mean vector with the factor scores integrated out."""
    _check_dims(state, data)
    new = state.copy()
    a, omega = _stacked(new)
    sig_inv = _sigma_inverse(a, omega, new)
    e = data.n * sig_inv
    e[np.diag_indices_from(e)] += 1.0 / sigma_sq_mu
    chol = _cholesky(e, "mean precision", new)
    xbar = data.xg.mean(axis=0)
    mean = linalg.cho_solve((chol, True), data.n * (sig_inv @ xbar))
    eps = rng.standard_normal(mean.size)
    mu = mean + linalg.solve_triangular(chol, eps, lower=True, trans="T")
    p1 = data.p1
    new.views[0].mu = mu[:p1]
    new.views[1].mu = mu[p1:]
    return new


def step_z(state: ChainState, data: DataViews, rng) -> ChainState:
    """Draw every row of the factor-score matrix ``Z``."""
    _check_dims(state, data)
    new = state.copy()
    d = new.d
    prec = np.eye(d)
    lin = np.zeros((data.n, d))
    for v, x in zip(new.views, _views_of(data)):
        oa = v.omega @ v.a
        prec += v.a.T @ oa
        lin += (x - v.mu) @ oa
    prec = 0.5 * (prec + prec.T)
    chol = _cholesky(prec, "factor-score precision", new)
    mean = linalg.cho_solve((chol, True), lin.T).T
    eps = rng.standard_normal((data.n, d))
    new.z = mean + linalg.solve_triangular(chol, eps.T, lower=True, trans="T").T
    return new


@numba.njit(cache=True)
def _update_rows(rows, a, xc_t, r_t, z_t, ztz, omega, inv_delta, eps, jitter):
    """Sequential conditional draws of loading rows, in place.

    ``xc_t`` is the centred data (p x n), ``r_t`` the current residual
    ``x - mu - A z`` (p x n, refreshed after each row). Off-diagonal precision
    entries that are exactly zero are skipped, so a diagonal ``omega`` leaves
    the working response equal to ``xc_t[j]`` bit for bit.
    Returns (n_jittered, failed_row or -1).
    """
    p, d = a.shape
    n = z_t.shape[1]
    xt = np.empty(n)
    e = np.empty((d, d))
    b = np.empty(d)
    n_jit = 0
    for j in rows:
        ojj = omega[j, j]
        for i in range(n):
            xt[i] = xc_t[j, i]
        for k in range(p):
            if k != j:
                w = omega[j, k]
                if w != 0.0:
                    c = w / ojj
                    for i in range(n):
                        xt[i] += c * r_t[k, i]
        for k in range(d):
            acc = 0.0
            for i in range(n):
                acc += z_t[k, i] * xt[i]
            b[k] = ojj * acc
            for l in range(d):
                e[k, l] = ojj * ztz[k, l]
            e[k, k] += inv_delta[j, k]
        L, status = _chol(e, jitter)
        if status == 2:
            return n_jit, j
        n_jit += status
        row = _backward_t(L, _forward(L, b)) + _backward_t(L, eps[j])
        for k in range(d):
            a[j, k] = row[k]
        for i in range(n):
            acc = xc_t[j, i]
            for k in range(d):
                acc -= z_t[k, i] * row[k]
            r_t[j, i] = acc
    return n_jit, -1


def _a_rows(new: ChainState, x: np.ndarray, m: int, rows: np.ndarray, eps: np.ndarray) -> None:
    v = new.views[m]
    z_t = np.ascontiguousarray(new.z.T)
    xc_t = np.ascontiguousarray((x - v.mu).T)
    r_t = xc_t - v.a @ z_t
    inv_delta = 1.0 / (v.tau_sq * new.mhcp.eta_sq[None, :] * v.lambda_sq)
    omega = np.ascontiguousarray(v.omega)
    n_jit, failed = _update_rows(
        rows, v.a, xc_t, r_t, z_t, z_t @ z_t.T, omega, inv_delta, eps, JITTER
    )
    if failed >= 0:
        raise NumericalError(f"view {m + 1}, loading row {failed}: conditional precision is not positive definite")
    new.jitter_count += n_jit


def step_a_row(state: ChainState, data: DataViews, view: int, j: int, rng) -> ChainState:
    """Draw row ``j`` (0-based) of the loading matrix of ``view`` (1 or 2)."""
    _check_dims(state, data)
    if view not in (1, 2):
        raise InputError(f"view must be 1 or 2, got {view!r}")
    p = state.views[view - 1].p
    if not 0 <= j < p:
        raise InputError(f"row index {j} out of range for view {view} with {p} rows")
    new = state.copy()
    eps = np.zeros((p, new.d))
    eps[j] = rng.standard_normal(new.d)
    _a_rows(new, _views_of(data)[view - 1], view - 1, np.array([j], dtype=np.int64), eps)
    return new


def step_a(state: ChainState, data: DataViews, rng) -> ChainState:
    """Draw every loading row, view 1 first, rows in order."""
    _check_dims(state, data)
    new = state.copy()
    for m, x in enumerate(_views_of(data)):
        p = new.views[m].p
        eps = rng.standard_normal((p, new.d))
        _a_rows(new, x, m, np.arange(p, dtype=np.int64), eps)
    return new


def update_lambda(state: ChainState, rng) -> None:
    """In place: ``lambda_jk^2 ~ IG(1, a_jk^2 / (2 tau^2 eta_k^2) + 1 / C_jk)``."""
    eta_sq = state.mhcp.eta_sq
    for v in state.views:
        v.lambda_sq = inv_gamma(rng, 1.0, v.a**2 / (2.0 * v.tau_sq * eta_sq) + 1.0 / v.c_aux)


def update_tau(state: ChainState, rng) -> None:
    eta_sq = state.mhcp.eta_sq
    for v in state.views:
        rate = np.sum(v.a**2 / (2.0 * v.lambda_sq * eta_sq)) + 1.0 / v.f_aux
        v.tau_sq = float(inv_gamma(rng, tau_shape(v.p, state.d), rate))


def update_eta(state: ChainState, rng) -> None:
    """In place: each increment ``eta_tilde_j``, ``j >= 2``, given the others, then the products."""
    mh = state.mhcp
    d = state.d
    p1, p2 = (v.p for v in state.views)
    for j in range(1, d):
        partial = mh.eta_tilde**2
        partial[j] = 1.0
        partial = np.cumprod(partial)[j:]
        rate = 1.0 / mh.h_aux[j]
        for v in state.views:
            rate += np.sum(v.a[:, j:] ** 2 / (2.0 * v.lambda_sq[:, j:] * v.tau_sq * partial))
        mh.eta_tilde[j] = np.sqrt(inv_gamma(rng, eta_shape(d, j + 1, p1, p2), rate))
    mh.refresh_products()


def update_aux(state: ChainState, rng) -> None:
    """In place: the augmentation variables ``C``, ``F`` and ``H``."""
    mh = state.mhcp
    for v in state.views:
        v.c_aux = inv_gamma(rng, 1.0, 1.0 + 1.0 / v.lambda_sq)
    for v in state.views:
        v.f_aux = float(inv_gamma(rng, 1.0, 1.0 + 1.0 / v.tau_sq))
    if state.d > 1:
        mh.h_aux[1:] = inv_gamma(rng, 1.0, 1.0 / mh.zeta**2 + 1.0 / mh.eta_tilde[1:] ** 2)


def step_shrinkage(state: ChainState, rng) -> ChainState:
    """Redraw local, view-global and column scales, then their augmentation variables."""
    new = state.copy()
    update_lambda(new, rng)
    update_tau(new, rng)
    update_eta(new, rng)
    update_aux(new, rng)
    return new


def step_phi(
    state: ChainState,
    data: DataViews,
    rng,
    ig_shape: float = 0.1,
    ig_rate: float = 0.1,
    ghs_diag_rate: float = 0.1,
) -> ChainState:
    """Update the specificity matrices from the factor-model residuals.

    NDFSM states take one graphical-horseshoe sweep on ``R'R``; DFSM states
    draw each diagonal entry from ``IG(n/2 + ig_shape, ig_rate + sum(r**2)/2)``.

    ``ghs_diag_rate`` is the rate ``b`` of an exponential prior on each diagonal
    precision entry, which enters the sweep as ``R'R + 2 b I``. Under a flat
    diagonal prior (``b = 0``) a loading column can reproduce a single feature
    exactly, its residual variance collapses and the precision diverges.
    """
    _check_dims(state, data)
    new = state.copy()
    for m, (v, x) in enumerate(zip(new.views, _views_of(data))):
        resid = x - v.mu - new.z @ v.a.T
        if v.ghs is not None:
            ss = resid.T @ resid
            ss[np.diag_indices_from(ss)] += 2.0 * ghs_diag_rate
            v.ghs = ghs_sweep(v.ghs, ss, data.n, rng)
            new.jitter_count += v.ghs.jittered
        else:
            rate = ig_rate + 0.5 * np.sum(resid**2, axis=0)
            v.phi_diag = inv_gamma(rng, dfsm_shape(data.n, ig_shape), rate)
    return new


def gibbs_iteration(state: ChainState, data: DataViews, config: ChainConfig, rng) -> ChainState:
    state = step_mu(state, data, rng, config.sigma_sq_mu)
    state = step_z(state, data, rng)
    state = step_a(state, data, rng)
    state = step_shrinkage(state, rng)
    return step_phi(state, data, rng, config.ig_shape, config.ig_rate, config.ghs_diag_rate)


def _record(state: ChainState, data: DataViews, n_cc: int):
    v1, v2 = state.views
    sigma = grand_covariance(v1.a, v2.a, v1.phi, v2.phi)
    left, sv, right = _cca_core(sigma, data.p1)
    mu_g = np.concatenate([v1.mu, v2.mu])
    loglik = gaussian_loglik(data, mu_g, sigma)
    sign, logdet = np.linalg.slogdet(sigma)
    if sign <= 0:
        raise NumericalError("grand covariance is not positive definite")
    return sv[:n_cc], left[:, 0], right[:, 0], loglik, logdet


def run_chain(data: DataViews, config: ChainConfig) -> PosteriorDraws:
    """Run one Gibbs chain and return its thinned draws of the CCA quantities.

    A numerically failed iteration is rolled back and retried once with fresh
    random numbers; more than 1% failed iterations abort the run.
    """
    d = config.d or default_truncation(data.n, data.p1, data.p2)
    n_cc = min(config.n_cc, data.p1, data.p2)
    cfg = replace(config, d=d)
    rng = make_rng(cfg.seed)
    state = init_state(data, cfg, rng)

    s = cfg.n_stored
    rho = np.empty((s, n_cc))
    u = np.empty((s, data.p1))
    v = np.empty((s, data.p2))
    loglik = np.empty(s)
    logdet = np.empty(s)
    eta_tail = 0.0
    failures = 0
    stored = 0
    for it in range(1, cfg.iters + 1):
        snapshot = state
        try:
            state = gibbs_iteration(snapshot, data, cfg, rng)
            state.validate()
        except NumericalError as exc:
            failures += 1
            log.debug("iteration %d failed (%s); retrying", it, exc)
            if failures > MAX_FAIL_FRACTION * cfg.iters:
                raise NumericalError(f"more than 1% of iterations failed; last error: {exc}") from exc
            state = gibbs_iteration(snapshot, data, cfg, rng)
            state.validate()
        if it > cfg.burnin and (it - cfg.burnin) % cfg.thin == 0:
            rho[stored], u[stored], v[stored], loglik[stored], logdet[stored] = _record(state, data, n_cc)
            eta_tail += state.mhcp.eta_sq[-1]
            stored += 1

    eta_tail /= s
    if eta_tail > ETA_TAIL_WARN and d > 1:
        warnings.warn(
            f"posterior mean of eta_d^2 is {eta_tail:.3g}; the truncation d={d} may be too small",
            RuntimeWarning,
            stacklevel=2,
        )
    meta: dict[str, Any] = {
        "seed": int(cfg.seed),
        "d": int(d),
        "iters": int(cfg.iters),
        "burnin": int(cfg.burnin),
        "thin": int(cfg.thin),
        "failed_iterations": int(failures),
        "jittered_factorizations": int(state.jitter_count),
        "eta_d_sq_mean": float(eta_tail),
    }
    return PosteriorDraws(cfg.model, rho, u, v, loglik, logdet, meta=meta)


def _run_one(args):
    data, config = args
    return run_chain(data, config)


def run_chains(data: DataViews, config: ChainConfig, n_chains: int, jobs: int = 1) -> list[PosteriorDraws]:
    """Run ``n_chains`` independent chains with seeds ``config.seed + k``.

    Chains are distributed over ``jobs`` worker processes; results come back
    in chain order and do not depend on ``jobs``.
    """
    if n_chains < 1 or jobs < 1:
        raise InputError("n_chains and jobs must be positive")
    tasks = [(data, replace(config, seed=config.seed + k)) for k in range(n_chains)]
    if jobs == 1 or n_chains == 1:
        return [_run_one(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_one, tasks))
