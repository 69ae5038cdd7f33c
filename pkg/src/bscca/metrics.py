"""Replicate-level accuracy metrics for canonical correlations, directions and selection."""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import Sequence

import numpy as np

from .cca import InferenceSummary, Model
from .errors import InputError

__all__ = [
    "Block",
    "BlockLabels",
    "ReplicateResult",
    "rmse_cc",
    "bias_cc",
    "rmce",
    "label_blocks",
    "selection_rates",
]

UNIT_TOL = 1e-6
CCA_ONLY_THRESHOLD = 0.1


class Block(IntEnum):
    LATENT_AND_CCA = 1
    CCA_ONLY = 2
    IRRELEVANT = 3


@dataclass(frozen=True)
class BlockLabels:
    block: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.block, dtype=int)
        if arr.ndim != 1 or not np.isin(arr, [b.value for b in Block]).all():
            raise InputError("block labels must be a vector with values in {1, 2, 3}")
        object.__setattr__(self, "block", arr)

    def counts(self) -> dict[Block, int]:
        return {b: int(np.sum(self.block == b)) for b in Block}

    def __len__(self) -> int:
        return self.block.size


@dataclass(frozen=True)
class ReplicateResult:
    rho_hat: np.ndarray
    u_hat: np.ndarray
    v_hat: np.ndarray
    selected_u: np.ndarray
    selected_v: np.ndarray
    model_used: Model

    def __post_init__(self):
        for name in ("u_hat", "v_hat"):
            vec = np.asarray(getattr(self, name), dtype=float)
            if abs(np.linalg.norm(vec) - 1.0) > UNIT_TOL:
                raise InputError(f"{name} is not a unit vector")
            object.__setattr__(self, name, vec)
        object.__setattr__(self, "rho_hat", np.atleast_1d(np.asarray(self.rho_hat, dtype=float)))
        object.__setattr__(self, "selected_u", np.asarray(self.selected_u, dtype=bool))
        object.__setattr__(self, "selected_v", np.asarray(self.selected_v, dtype=bool))
        object.__setattr__(self, "model_used", Model(self.model_used))

    @classmethod
    def from_summary(cls, s: InferenceSummary) -> "ReplicateResult":
        return cls(s.rho_hat, s.u_hat, s.v_hat, s.selected_u, s.selected_v, s.model_used)


def _estimates(estimates) -> np.ndarray:
    est = np.asarray(estimates, dtype=float).ravel()
    if est.size == 0:
        raise InputError("at least one replicate estimate is required")
    return est


def rmse_cc(estimates, truth: float) -> float:
    """Root mean squared error of canonical-correlation estimates."""
    est = _estimates(estimates)
    return float(np.sqrt(np.mean((est - truth) ** 2)))


def bias_cc(estimates, truth: float) -> float:
    return float(np.mean(_estimates(estimates) - truth))


def rmce(estimates: Sequence[np.ndarray], truth: np.ndarray) -> float:
    """Root mean cosine error, ``sqrt(mean(1 - |u_hat' u|))``.

    Direction vectors are identified only up to sign, so each estimate is
    flipped to agree with ``truth`` before the inner product.
    """
    truth = np.asarray(truth, dtype=float)
    est = np.atleast_2d(np.asarray(estimates, dtype=float))
    if est.shape[0] == 0 or est.size == 0:
        raise InputError("at least one estimate is required")
    if est.shape[1] != truth.size:
        raise InputError(f"estimates have dimension {est.shape[1]}, truth has {truth.size}")
    norms = np.linalg.norm(est, axis=1)
    if abs(np.linalg.norm(truth) - 1.0) > UNIT_TOL or np.any(np.abs(norms - 1.0) > UNIT_TOL):
        raise InputError("rmce expects unit-norm vectors")
    cos = np.clip(np.abs(est @ truth), 0.0, 1.0)
    return float(np.sqrt(np.mean(1.0 - cos)))


def label_blocks(setting, true_u: np.ndarray, view: int) -> BlockLabels:
    """Split the features of one view by their role in the truth.

    Block 1: nonzero loading on the first latent column. Block 2: otherwise
    ``|true_u| > 0.1``. Block 3: everything else.
    """
    if view not in (1, 2):
        raise InputError(f"view must be 1 or 2, got {view!r}")
    a = setting.a1_true if view == 1 else setting.a2_true
    true_u = np.asarray(true_u, dtype=float)
    if true_u.size != a.shape[0]:
        raise InputError("true direction does not match the view dimension")
    block = np.full(a.shape[0], Block.IRRELEVANT.value)
    block[np.abs(true_u) > CCA_ONLY_THRESHOLD] = Block.CCA_ONLY.value
    block[a[:, 0] != 0] = Block.LATENT_AND_CCA.value
    return BlockLabels(block)


def selection_rates(
    results: Sequence[ReplicateResult],
    labels_u: BlockLabels,
    labels_v: BlockLabels | None = None,
) -> dict[Block, float]:
    """Percentage of (feature, replicate) pairs flagged as selected, per block.

    Both views are pooled when ``labels_v`` is given. Empty blocks give NaN.
    """
    if not results:
        raise InputError("no replicate results")
    flags = {b: [] for b in Block}
    for r in results:
        pairs = [(labels_u, r.selected_u)]
        if labels_v is not None:
            pairs.append((labels_v, r.selected_v))
        for labels, sel in pairs:
            if sel.size != len(labels):
                raise InputError("selection flags do not match the block labels")
            for b in Block:
                flags[b].append(sel[labels.block == b])
    out = {}
    for b in Block:
        pooled = np.concatenate(flags[b])
        out[b] = float(100.0 * pooled.mean()) if pooled.size else float("nan")
    return out
