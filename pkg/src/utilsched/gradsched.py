"""Gradient scheduling: one user per frame, picked by marginal-utility weight.

The scheduler keeps an exponentially smoothed average rate per user and, each
frame, hands the whole frame to the user maximizing U_i'(R_i) * c_i.  It is
the classic utility-of-average-rate policy and serves as the baseline the
per-frame time-sharing allocator is compared against: it maximizes mean rate
at the cost of large swings in the instantaneous rate.
"""

from dataclasses import dataclass, replace

import numpy as np

from .timeshare import _as_utility_list

__all__ = ["GradientSchedulerState", "select_user", "update_state"]


@dataclass(frozen=True)
class GradientSchedulerState:
    """Smoothed average rates plus the smoothing factor in (0, 1)."""

    avg_rates: np.ndarray
    smoothing: float = 0.01

    def __post_init__(self):
        object.__setattr__(
            self, "avg_rates", np.atleast_1d(np.asarray(self.avg_rates, dtype=float))
        )
        if not 0.0 < self.smoothing < 1.0:
            raise ValueError(f"smoothing must lie in (0, 1), got {self.smoothing}")
        if np.any(self.avg_rates < 0):
            raise ValueError("average rates must be >= 0")

    @classmethod
    def initial(cls, n_users: int, smoothing: float = 0.01, initial_rate: float = 0.0):
        return cls(np.full(n_users, float(initial_rate)), smoothing)


def select_user(state: GradientSchedulerState, peak_rates, utilities) -> int:
    """Index of argmax_i U_i'(R_i) * c_i; ties go to the lowest index."""
    c = np.atleast_1d(np.asarray(peak_rates, dtype=float))
    utils = _as_utility_list(utilities, c.size)
    scores = np.array(
        [u.derivative(r) * ci for u, r, ci in zip(utils, state.avg_rates, c)]
    )
    return int(np.argmax(scores))


def update_state(
    state: GradientSchedulerState, selected: int, peak_rate: float
) -> GradientSchedulerState:
    """Fold one frame into the averages: the selected user moves toward its
    realized full-frame rate, everyone else decays by (1 - smoothing)."""
    alpha = state.smoothing
    avg = (1.0 - alpha) * state.avg_rates
    avg[selected] += alpha * peak_rate
    return replace(state, avg_rates=avg)
