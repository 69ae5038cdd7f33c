"""Half-Cauchy utilities and the multiplicative half-Cauchy process (MHCP).

The MHCP shrinks column ``k`` of a loading matrix through the running product

    eta_k = prod_{j <= k} eta_tilde_j,   eta_tilde_1 = 1,   eta_tilde_j ~ C+(0, zeta).

Besides prior draws this module carries the closed-form results used as test
oracles: the density of a product of two half-Cauchy variables and the prior
median ``zeta ** (k - 1)`` of ``eta_k``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, NumericalError
from ._rng import inv_gamma

__all__ = [
    "MhcpState",
    "sample_half_cauchy",
    "mhcp_prior_draw",
    "product_half_cauchy_pdf",
    "mhcp_median",
]


@dataclass
class MhcpState:
    """Column shrinkage variables shared by both views.

    Attributes
    ----------
    eta_tilde : ndarray (d,)
        Multiplicative increments; ``eta_tilde[0]`` is fixed at 1.
    eta_sq : ndarray (d,)
        Running products ``eta_k**2 = prod_{j<=k} eta_tilde_j**2``.
    zeta : float
        Scale of the half-Cauchy increments.
    h_aux : ndarray (d,)
        Inverse-gamma augmentation variables of the increments (entry 0 unused).
    """

    eta_tilde: np.ndarray
    eta_sq: np.ndarray
    zeta: float
    h_aux: np.ndarray

    @property
    def d(self) -> int:
        return self.eta_tilde.shape[0]

    def refresh_products(self) -> None:
        self.eta_sq = np.cumprod(self.eta_tilde**2)

    def copy(self) -> "MhcpState":
        return MhcpState(self.eta_tilde.copy(), self.eta_sq.copy(), self.zeta, self.h_aux.copy())

    def validate(self) -> None:
        if self.eta_tilde[0] != 1.0:
            raise NumericalError("eta_tilde[0] must equal 1")
        for name in ("eta_tilde", "eta_sq", "h_aux"):
            arr = getattr(self, name)
            if not (np.all(np.isfinite(arr)) and np.all(arr > 0)):
                raise NumericalError(f"MHCP {name} has non-positive or non-finite entries")
        expected = np.cumprod(self.eta_tilde**2)
        if not np.allclose(self.eta_sq, expected, rtol=1e-12, atol=0.0):
            raise NumericalError("eta_sq is out of sync with eta_tilde")


def sample_half_cauchy(scale: float, rng: np.random.Generator, size=None):
    """Draw from C+(0, scale) by inverting its CDF, ``scale * tan(pi * U / 2)``."""
    if not scale > 0:
        raise InputError(f"half-Cauchy scale must be positive, got {scale!r}")
    # 1 - U lies in (0, 1], which keeps the draw strictly positive
    u = 1.0 - rng.random(size)
    return scale * np.tan(0.5 * np.pi * u)


def mhcp_prior_draw(d: int, zeta: float, rng: np.random.Generator) -> MhcpState:
    """Draw ``(eta_tilde, eta_sq, h_aux)`` exactly from the MHCP prior."""
    if int(d) != d or d < 1:
        raise InputError(f"truncation level d must be a positive integer, got {d!r}")
    if not zeta > 0:
        raise InputError(f"zeta must be positive, got {zeta!r}")
    d = int(d)
    eta_tilde = np.ones(d)
    if d > 1:
        eta_tilde[1:] = sample_half_cauchy(zeta, rng, size=d - 1)
    h_aux = np.ones(d)
    if d > 1:
        # H_j | eta_tilde_j completes an exact joint draw of the augmented prior
        h_aux[1:] = inv_gamma(rng, 1.0, 1.0 / zeta**2 + 1.0 / eta_tilde[1:] ** 2)
    return MhcpState(eta_tilde, np.cumprod(eta_tilde**2), float(zeta), h_aux)


def product_half_cauchy_pdf(u, a: float, b: float):
    """Density of ``W1 * W2`` for independent ``W1 ~ C+(0, a)``, ``W2 ~ C+(0, b)``.

    ``f(u) = 2ab / pi**2 * log(u**2 / (a b)**2) / (u**2 - (a b)**2)``, with the
    removable singularity at ``u = ab`` replaced by its limit ``2 / (pi**2 a b)``.
    """
    if not (a > 0 and b > 0):
        raise InputError("scales a and b must be positive")
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0):
        raise InputError("product density is defined for u > 0 only")
    ab2 = (a * b) ** 2
    u2 = u**2
    gap = u2 - ab2
    near = np.abs(gap) < 1e-10 * ab2
    safe_gap = np.where(near, 1.0, gap)
    out = 2.0 * a * b / np.pi**2 * np.log(u2 / ab2) / safe_gap
    out = np.where(near, 2.0 / (np.pi**2 * a * b), out)
    return out if out.ndim else float(out)


def mhcp_median(k: int, zeta: float) -> float:
    """Prior median of ``eta_k`` (1-based ``k``)."""
    if k < 1:
        raise InputError("k is 1-based and must be >= 1")
    return float(zeta) ** (k - 1)
