"""Uniform mesh with the junction ``x = 0`` pinned to a cell interface."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import ModelError, Side


@dataclass(frozen=True)
class Grid:
    """Cells ``[x_min + i dx, x_min + (i+1) dx]`` for ``i = 0 .. K-1``.

    Array index ``i`` corresponds to the signed cell index ``k = i - n_left``,
    so cells ``i < n_left`` lie left of the junction. Interface ``m``
    (``0 <= m <= K``) sits at ``x_min + m dx`` and the junction is interface
    ``n_left``.
    """

    x_min: float
    x_max: float
    dx: float
    lam: float
    K: int = field(init=False)
    n_left: int = field(init=False)

    def __post_init__(self):
        if not (self.x_min < 0.0 < self.x_max):
            raise ModelError(f"window must straddle x=0, got [{self.x_min}, {self.x_max}]")
        if not (0.0 < self.dx < 1.0):
            raise ModelError(f"dx must lie in (0, 1), got {self.dx}")
        if not self.lam > 0.0:
            raise ModelError(f"lambda must be positive, got {self.lam}")
        n_left = _whole_cells(-self.x_min, self.dx, "x_min")
        n_right = _whole_cells(self.x_max, self.dx, "x_max")
        object.__setattr__(self, "n_left", n_left)
        object.__setattr__(self, "K", n_left + n_right)

    @property
    def dt(self) -> float:
        return self.lam * self.dx

    @property
    def junction(self) -> int:
        return self.n_left

    @property
    def centers(self) -> np.ndarray:
        return (np.arange(self.K) - self.n_left + 0.5) * self.dx

    @property
    def interfaces(self) -> np.ndarray:
        return (np.arange(self.K + 1) - self.n_left) * self.dx

    def cell_index(self, i: int) -> int:
        """Signed cell index ``k`` of array position ``i``."""
        return i - self.n_left

    def side_slice(self, side: Side) -> slice:
        return slice(0, self.n_left) if side is Side.LEFT else slice(self.n_left, self.K)


def _whole_cells(length: float, dx: float, name: str) -> int:
    n = length / dx
    m = round(n)
    if m < 1 or not math.isclose(n, m, rel_tol=1e-12, abs_tol=0.0):
        raise ModelError(f"{name} must be a nonzero integer multiple of dx={dx}")
    return int(m)
