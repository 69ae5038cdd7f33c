"""Canonical correlation algebra and posterior summaries of CCA quantities.

Directions are reported in the whitened space: ``u`` and ``v`` are the unit
singular vectors of ``K = S11^{-1/2} S12 S22^{-1/2}``, not raw-variable weights.
"""

from __future__ import annotations

from dataclasses import MISSING, dataclass, field, replace
from enum import Enum
from typing import Any

import numpy as np

from .errors import InputError, NumericalError

__all__ = [
    "Model",
    "CcaTriple",
    "PosteriorDraws",
    "InferenceSummary",
    "grand_covariance",
    "inv_sqrt_spd",
    "canonical_decomposition",
    "align_signs",
    "summarize",
    "combined_select",
]


class Model(str, Enum):
    NDFSM = "NDFSM"
    DFSM = "DFSM"


@dataclass(frozen=True)
class CcaTriple:
    rho: float
    u: np.ndarray
    v: np.ndarray
    order: int


def grand_covariance(a1, a2, phi1, phi2) -> np.ndarray:
    """Marginal covariance of the stacked views under the inter-battery factor model.

    ``[[A1 A1' + Phi1, A1 A2'], [A2 A1', A2 A2' + Phi2]]``. The cross block is
    ``A1 A2'`` (p1 x p2), the only product of the loadings with conformable shape.
    """
    a1 = np.atleast_2d(np.asarray(a1, dtype=float))
    a2 = np.atleast_2d(np.asarray(a2, dtype=float))
    phi1 = np.atleast_2d(np.asarray(phi1, dtype=float))
    phi2 = np.atleast_2d(np.asarray(phi2, dtype=float))
    p1, d = a1.shape
    p2 = a2.shape[0]
    if a2.shape[1] != d:
        raise InputError(f"loading matrices disagree on the latent dimension ({d} vs {a2.shape[1]})")
    if phi1.shape != (p1, p1) or phi2.shape != (p2, p2):
        raise InputError("specificity matrices do not match the loading row counts")
    sigma = np.empty((p1 + p2, p1 + p2))
    sigma[:p1, :p1] = a1 @ a1.T + phi1
    sigma[p1:, p1:] = a2 @ a2.T + phi2
    cross = a1 @ a2.T
    sigma[:p1, p1:] = cross
    sigma[p1:, :p1] = cross.T
    return sigma


def inv_sqrt_spd(m: np.ndarray) -> np.ndarray:
    """Symmetric inverse square root of an SPD matrix via its eigendecomposition."""
    m = np.asarray(m, dtype=float)
    m = 0.5 * (m + m.T)
    w, vecs = np.linalg.eigh(m)
    lo, hi = w[0], w[-1]
    if not hi > 0 or lo <= 1e-12 * hi:
        raise NumericalError(
            f"matrix is singular or indefinite: smallest eigenvalue {lo:.3e} vs largest {hi:.3e}"
        )
    out = (vecs / np.sqrt(w)) @ vecs.T
    return 0.5 * (out + out.T)


def _cca_core(sigma: np.ndarray, p1: int):
    s11 = sigma[:p1, :p1]
    s22 = sigma[p1:, p1:]
    s12 = sigma[:p1, p1:]
    k = inv_sqrt_spd(s11) @ s12 @ inv_sqrt_spd(s22)
    left, sv, right_t = np.linalg.svd(k, full_matrices=False)
    return left, sv, right_t.T


def canonical_decomposition(sigma: np.ndarray, p1: int, r_max: int = 1) -> list[CcaTriple]:
    """Canonical correlations and whitened direction vectors of a joint covariance.

    Parameters
    ----------
    sigma : ndarray (p1 + p2, p1 + p2)
        Joint covariance of the two views.
    p1 : int
        Number of view-1 variables (leading block).
    r_max : int
        How many canonical triples to return, ``1 <= r_max <= min(p1, p2)``.
    """
    sigma = np.asarray(sigma, dtype=float)
    p2 = sigma.shape[0] - p1
    if p1 < 1 or p2 < 1 or sigma.shape != (p1 + p2, p1 + p2):
        raise InputError("sigma must be square with both view blocks non-empty")
    if not 1 <= r_max <= min(p1, p2):
        raise InputError(f"r_max must lie in [1, {min(p1, p2)}], got {r_max}")
    left, sv, right = _cca_core(sigma, p1)
    return [CcaTriple(float(sv[r]), left[:, r].copy(), right[:, r].copy(), r + 1) for r in range(r_max)]


@dataclass(frozen=True)
class PosteriorDraws:
    """Thinned posterior draws of the CCA estimands from one chain.

    ``rho`` has one column per canonical order; ``u`` and ``v`` are the first
    direction vectors per draw. ``pivot`` is set once signs are aligned.
    """

    model: Model
    rho: np.ndarray
    u: np.ndarray
    v: np.ndarray
    loglik: np.ndarray
    logdet: np.ndarray
    pivot: tuple[int, int] | None = None
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        for name in ("rho", "u", "v", "loglik", "logdet"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.rho.ndim != 2 or self.u.ndim != 2 or self.v.ndim != 2:
            raise InputError("rho, u and v must be 2-d (draws x entries)")
        s = self.rho.shape[0]
        if not (self.u.shape[0] == self.v.shape[0] == self.loglik.shape[0] == self.logdet.shape[0] == s):
            raise InputError("all draw arrays must share the number of stored draws")

    @property
    def n_draws(self) -> int:
        return self.rho.shape[0]


def align_signs(draws: PosteriorDraws) -> PosteriorDraws:
    """Flip ``(u, v)`` jointly so the most influential feature stays positive.

    The pivot is the feature (either view) with the largest mean absolute
    loading across draws; ties go to the lowest (view, index).
    """
    if draws.n_draws == 0:
        raise InputError("cannot align an empty set of draws")
    p1 = draws.u.shape[1]
    both = np.hstack([draws.u, draws.v])
    flat = int(np.argmax(np.abs(both).mean(axis=0)))
    pivot = (1, flat) if flat < p1 else (2, flat - p1)
    sign = np.where(both[:, flat] < 0, -1.0, 1.0)[:, None]
    return replace(draws, u=draws.u * sign, v=draws.v * sign, pivot=pivot)


@dataclass(frozen=True)
class InferenceSummary:
    rho_hat: np.ndarray
    u_hat: np.ndarray
    v_hat: np.ndarray
    ci_lower_u: np.ndarray
    ci_upper_u: np.ndarray
    ci_lower_v: np.ndarray
    ci_upper_v: np.ndarray
    selected_u: np.ndarray
    selected_v: np.ndarray
    p_overshrink: float
    model_used: Model
    pivot_feature: tuple[int, int]
    ci_level: float = 0.5
    cc_floor: float = 0.2

    def to_dict(self) -> dict[str, Any]:
        out = {}
        for key, val in self.__dict__.items():
            if isinstance(val, np.ndarray):
                out[key] = val.tolist()
            elif isinstance(val, Model):
                out[key] = val.value
            elif isinstance(val, tuple):
                out[key] = list(val)
            else:
                out[key] = val
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "InferenceSummary":
        kwargs = {}
        for name, f in cls.__dataclass_fields__.items():
            if name not in data:
                if f.default is not MISSING:
                    continue
                raise InputError(f"summary is missing field {name!r}")
            val = data[name]
            if name == "model_used":
                val = Model(val)
            elif name == "pivot_feature":
                val = tuple(int(x) for x in val)
            elif name.startswith("selected"):
                val = np.asarray(val, dtype=bool)
            elif isinstance(val, list):
                val = np.asarray(val, dtype=float)
            kwargs[name] = val
        return cls(**kwargs)


def summarize(draws: PosteriorDraws, ci_level: float = 0.5, cc_floor: float = 0.2) -> InferenceSummary:
    """Point estimates, equal-tailed credible intervals and selection flags.

    Draws without a recorded pivot are sign-aligned first.
    """
    if not 0.0 < ci_level < 1.0:
        raise InputError(f"ci_level must lie in (0, 1), got {ci_level}")
    if draws.n_draws == 0:
        raise InputError("no draws to summarize")
    if draws.pivot is None:
        draws = align_signs(draws)
    rho = np.asarray(draws.rho)
    if rho.max() > 1.0 + 1e-8 or rho.min() < -1e-8:
        raise NumericalError("canonical correlation draws fall outside [0, 1]")
    rho = np.clip(rho, 0.0, 1.0)

    def unit_mean(x):
        m = x.mean(axis=0)
        norm = np.linalg.norm(m)
        if norm == 0:
            raise NumericalError("mean direction vector is zero after alignment")
        return m / norm

    tail = 0.5 * (1.0 - ci_level)
    lo_u, hi_u = np.quantile(draws.u, [tail, 1.0 - tail], axis=0)
    lo_v, hi_v = np.quantile(draws.v, [tail, 1.0 - tail], axis=0)
    return InferenceSummary(
        rho_hat=rho.mean(axis=0),
        u_hat=unit_mean(draws.u),
        v_hat=unit_mean(draws.v),
        ci_lower_u=lo_u,
        ci_upper_u=hi_u,
        ci_lower_v=lo_v,
        ci_upper_v=hi_v,
        selected_u=(lo_u > 0) | (hi_u < 0),
        selected_v=(lo_v > 0) | (hi_v < 0),
        p_overshrink=float(np.mean(rho[:, 0] < cc_floor)),
        model_used=draws.model,
        pivot_feature=draws.pivot,
        ci_level=ci_level,
        cc_floor=cc_floor,
    )


def combined_select(
    ndfsm: InferenceSummary,
    dfsm: InferenceSummary,
    cc_floor: float = 0.2,
    prob_floor: float = 0.5,
) -> InferenceSummary:
    """Use the DFSM result when the NDFSM posterior suggests overshrinkage.

    Switches iff ``P(rho_1 < cc_floor) > prob_floor`` under NDFSM.
    """
    if not np.isclose(ndfsm.cc_floor, cc_floor):
        raise InputError(
            f"NDFSM summary was computed with cc_floor={ndfsm.cc_floor}, requested {cc_floor}"
        )
    if ndfsm.p_overshrink > prob_floor:
        return replace(dfsm, model_used=Model.DFSM)
    return replace(ndfsm, model_used=Model.NDFSM)
