"""Sample grids in time with composite quadrature weights.

The standard grid mixes a uniform sweep of the diffusive range, a
logarithmic sweep of small times, and explicit multiples of each eps so
that sup-norms see both the fast transient and the tail.  Quadrature uses
one Simpson panel per grid interval (nodes plus interval midpoints), which
integrates cubics exactly on every panel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["TimeGrid", "standard_grid"]


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing sample times starting at 0, with quadrature."""

    times: np.ndarray

    def __post_init__(self):
        t = np.array(self.times, dtype=float)
        if t.ndim != 1 or t.size < 2:
            raise ValueError("grid needs at least two sample times")
        if t[0] != 0.0:
            raise ValueError("grid must start at t = 0")
        if np.any(np.diff(t) <= 0):
            raise ValueError("grid times must be strictly increasing")
        t.setflags(write=False)
        object.__setattr__(self, "times", t)

    @property
    def t_max(self) -> float:
        return float(self.times[-1])

    @property
    def quad_points(self) -> np.ndarray:
        """Grid times interleaved with panel midpoints (Simpson nodes)."""
        t = self.times
        mids = 0.5 * (t[:-1] + t[1:])
        out = np.empty(t.size + mids.size)
        out[0::2] = t
        out[1::2] = mids
        return out

    @property
    def quad_weights(self) -> np.ndarray:
        """Simpson weights matching quad_points; all positive."""
        h = np.diff(self.times)
        w = np.zeros(self.times.size + h.size)
        w[0:-1:2] += h / 6.0
        w[1::2] += 4.0 * h / 6.0
        w[2::2] += h / 6.0
        return w

    def integrate_values(self, values: np.ndarray) -> float:
        """Integral over [0, t_max] of samples given at quad_points."""
        values = np.asarray(values, dtype=float)
        if values.shape[0] != self.quad_points.size:
            raise ValueError("values must be sampled at quad_points")
        return float(np.sum(self.quad_weights * values))

    def with_layer_points(self, eps_values) -> "TimeGrid":
        """Copy of the grid with multiples of each eps added."""
        extra = []
        for eps in eps_values:
            extra.extend([eps, 2 * eps, 5 * eps, 10 * eps])
        extra = [e for e in extra if 0.0 < e <= self.t_max]
        if not extra:
            return self
        return TimeGrid(np.unique(np.concatenate([self.times, extra])))

    def cumulative_integral(self, values: np.ndarray) -> np.ndarray:
        """Running integral from 0 to each grid time, samples at quad_points."""
        values = np.asarray(values, dtype=float)
        if values.shape[0] != self.quad_points.size:
            raise ValueError("values must be sampled at quad_points")
        h = np.diff(self.times)
        left = values[0:-1:2]
        mid = values[1::2]
        right = values[2::2]
        panels = h / 6.0 * (left + 4.0 * mid + right)
        out = np.zeros(self.times.size)
        out[1:] = np.cumsum(panels)
        return out


def standard_grid(
    eps_values=(),
    t_max: float = 20.0,
    linear_count: int = 2000,
    log_count: int = 200,
    log_floor: float = 1e-6,
) -> TimeGrid:
    """Layer-refined grid: uniform + logarithmic times + multiples of eps."""
    if t_max <= 0:
        raise ValueError("t_max must be positive")
    pieces = [np.linspace(0.0, t_max, linear_count)]
    if log_count > 0:
        top = min(1.0, t_max)
        pieces.append(np.geomspace(log_floor, top, log_count))
    for eps in eps_values:
        pieces.append(np.array([eps, 2 * eps, 5 * eps, 10 * eps]))
    times = np.unique(np.concatenate(pieces))
    times = times[(times >= 0.0) & (times <= t_max)]
    if times[0] != 0.0:
        times = np.concatenate([[0.0], times])
    return TimeGrid(times)
