"""Shift-intensity series V_t from a set of detected change points.

Anchor values are CP_{t_i} * (D_max / D_i) where D_i is the duration of
the interval ending at t_i; interior points interpolate linearly between
anchors, the initial phase ramps from 0 to the first anchor, and the
terminal phase decays linearly back to 0 at T.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .changepoint import ChangePointSet
from .errors import TimeOutOfRange


@dataclass
class ShiftSeries:
    values: np.ndarray          # V_t at integer points 1..T
    d_max: int
    anchors: list               # (time, value)
    T: int

    def at(self, t):
        """Evaluate V at a possibly fractional time in [0, T]."""
        if t < 0 or t > self.T:
            raise TimeOutOfRange(f"t={t} outside [0, {self.T}]")
        if not self.anchors:
            return 0.0
        xs = [0.0] + [float(a) for a, _ in self.anchors]
        ys = [0.0] + [v for _, v in self.anchors]
        if self.anchors[-1][0] < self.T:
            xs.append(float(self.T))
            ys.append(0.0)
        return float(np.interp(t, xs, ys))

    def to_json(self):
        return {
            "T": self.T,
            "d_max": self.d_max,
            "anchors": [[t, v] for t, v in self.anchors],
            "values": self.values.tolist(),
        }


def relative_distance(cp: ChangePointSet, T=None) -> ShiftSeries:
    """Build the V_t series for one match of T points."""
    T = cp.T if T is None else T
    if cp.times and (min(cp.times) < 1 or max(cp.times) > T):
        raise TimeOutOfRange("change-point times outside [1, T]")
    if cp.n == 0:
        return ShiftSeries(np.zeros(T), 0, [], T)
    durations = cp.durations()
    d_max = int(durations.max())
    anchors = [
        (t, s * (d_max / d))
        for t, s, d in zip(cp.times, cp.signs, durations)
    ]
    series = ShiftSeries(np.zeros(T), d_max, anchors, T)
    # the terminal anchor at t_N = T keeps its anchor value (no decay span)
    series.values = np.array([series.at(t) for t in range(1, T + 1)])
    return series
