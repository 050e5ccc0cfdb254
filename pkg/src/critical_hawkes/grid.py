"""Functions sampled on a uniform time grid."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class GridFunction:
    """Values of a function at ``t_i = start + i * step``, ``i = 0..n-1``.

    Between nodes the function is taken as linear; outside the grid it is
    zero (every grid function here has compact support).
    """

    step: float
    values: np.ndarray
    start: float = 0.0
    name: str = "value"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def t(self) -> np.ndarray:
        return self.start + self.step * np.arange(self.values.size)

    @property
    def horizon(self) -> float:
        return self.start + self.step * (self.values.size - 1)

    def __len__(self):
        return self.values.size

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.interp(x, self.t, self.values, left=0.0, right=0.0)

    def integral(self) -> float:
        """Trapezoidal integral over the grid."""
        v = self.values
        if v.size < 2:
            return 0.0
        return float(self.step * (v.sum() - 0.5 * (v[0] + v[-1])))

    def sup_diff(self, other: "GridFunction") -> float:
        return float(np.max(np.abs(self.values - other(self.t))))
