from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``t_i = i * t_end / steps``, ``i = 0..steps``."""

    t_end: float
    steps: int

    def __post_init__(self):
        if not self.t_end > 0:
            raise ValueError(f"t_end must be positive, got {self.t_end}")
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValueError(f"steps must be a positive integer, got {self.steps}")

    @property
    def h(self) -> float:
        return self.t_end / self.steps

    @cached_property
    def t(self) -> np.ndarray:
        return np.linspace(0.0, self.t_end, self.steps + 1)

    def index(self, t: float, tol: float = 1e-9) -> int:
        """Grid index of time ``t``; raises if ``t`` is not a grid point."""
        x = t / self.h
        i = int(round(x))
        if abs(x - i) > tol * max(1.0, abs(x)) or not 0 <= i <= self.steps:
            raise ValueError(f"t={t} is not on the grid")
        return i

    @classmethod
    def from_times(cls, t) -> "TimeGrid":
        t = np.asarray(t, dtype=float)
        if t.ndim != 1 or t.size < 2 or t[0] != 0.0:
            raise ValueError("time grid must be 1-D and start at 0")
        d = np.diff(t)
        if np.abs(d - d.mean()).max() > 1e-9 * d.mean():
            raise ValueError("time grid is not uniform")
        return cls(float(t[-1]), t.size - 1)
