"""Two-view data container and per-feature standardization."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError

__all__ = ["DataViews", "standardize"]


@dataclass(frozen=True)
class DataViews:
    """Paired observation matrices, rows = subjects, columns = features."""

    x1: np.ndarray
    x2: np.ndarray
    feature_names_1: list[str] = field(default=None)
    feature_names_2: list[str] = field(default=None)
    standardized: bool = False

    def __post_init__(self):
        x1 = np.array(self.x1, dtype=float, ndmin=2)
        x2 = np.array(self.x2, dtype=float, ndmin=2)
        if x1.ndim != 2 or x2.ndim != 2:
            raise InputError("each view must be a 2-d matrix")
        if x1.shape[0] != x2.shape[0]:
            raise InputError(f"views disagree on the number of subjects ({x1.shape[0]} vs {x2.shape[0]})")
        if x1.shape[0] < 2:
            raise InputError("at least two subjects are required")
        for name, x in (("view 1", x1), ("view 2", x2)):
            bad = np.argwhere(~np.isfinite(x))
            if bad.size:
                r, c = bad[0]
                raise InputError(f"{name} has a missing or non-finite value at row {r + 1}, column {c + 1}")
        x1.setflags(write=False)
        x2.setflags(write=False)
        object.__setattr__(self, "x1", x1)
        object.__setattr__(self, "x2", x2)
        names1 = self.feature_names_1 or [f"x1_{j + 1}" for j in range(x1.shape[1])]
        names2 = self.feature_names_2 or [f"x2_{j + 1}" for j in range(x2.shape[1])]
        if len(names1) != x1.shape[1] or len(names2) != x2.shape[1]:
            raise InputError("feature name lists do not match the column counts")
        object.__setattr__(self, "feature_names_1", list(names1))
        object.__setattr__(self, "feature_names_2", list(names2))

    @property
    def n(self) -> int:
        return self.x1.shape[0]

    @property
    def p1(self) -> int:
        return self.x1.shape[1]

    @property
    def p2(self) -> int:
        return self.x2.shape[1]

    @property
    def xg(self) -> np.ndarray:
        """Both views stacked column-wise, shape (n, p1 + p2)."""
        return np.hstack([self.x1, self.x2])


def _standardize_view(x: np.ndarray, names: list[str]) -> np.ndarray:
    mean = x.mean(axis=0)
    sd = x.std(axis=0, ddof=1)
    flat = np.flatnonzero(~(sd > 0))
    if flat.size:
        raise InputError(f"feature {names[flat[0]]!r} has zero variance and cannot be standardized")
    z = (x - mean) / sd
    # second pass removes the rounding left by the first
    z = z - z.mean(axis=0)
    return z / z.std(axis=0, ddof=1)


def standardize(views: DataViews) -> DataViews:
    """Center every column and scale it to unit sample (n - 1) standard deviation."""
    return DataViews(
        _standardize_view(views.x1, views.feature_names_1),
        _standardize_view(views.x2, views.feature_names_2),
        views.feature_names_1,
        views.feature_names_2,
        standardized=True,
    )
