"""Max-min fairness of time-averaged utilities via adaptive weights.

Aggregate-utility scheduling starves users with weak channel statistics, so
fairness is restored by maximizing a *weighted* aggregate utility and tuning
the weights until every user's average utility is equal.  Each weight vector
yields the exact weighted-sum maximizer per frame (hence a Pareto-optimal
operating point on the fixed sample set); the multiplicative update then
walks along the frontier toward the equal-utility point.

Averages are estimated on one fixed seeded sample set (common random
numbers), so the average-utility map is a deterministic function of the
weights and the adaptation itself is reproducible.
"""

from dataclasses import dataclass

import numpy as np

from .channel import ChannelModel, LinkBudget, achievable_rate, sample_gains
from .errors import ConvergenceError
from .timeshare import _as_utility_list, allocate_ts

__all__ = ["FairnessReport", "weighted_allocate", "average_utilities", "adapt_weights"]


@dataclass
class FairnessReport:
    """Per-user average utilities, their common level and max-min spread."""

    average_utilities: np.ndarray
    common_value: float
    spread: float
    iterations: int


def weighted_allocate(peak_rates, utilities, weights):
    """Per-frame maximizer of sum_i w_i U_i(share_i * peak_rate_i).

    Identical machinery to the unweighted allocator with every user's
    marginal scaled by its weight; a zero-weight user never receives share
    while any positively weighted user has a positive rate.
    """
    weights = np.asarray(weights, dtype=float)
    if abs(weights.sum() - 1.0) > 1e-9:
        raise ValueError("weights must sum to 1")
    return allocate_ts(peak_rates, utilities, weights=weights)


def average_utilities(peak_rate_samples, utilities, weights) -> np.ndarray:
    """Mean per-user utility under weighted allocation over a sample set.

    The weights shape the allocation only; the reported utilities are
    unweighted.
    """
    samples = np.asarray(peak_rate_samples, dtype=float)
    n, nu = samples.shape
    utils = _as_utility_list(utilities, nu)
    totals = np.zeros(nu)
    for i in range(n):
        shares, _ = weighted_allocate(samples[i], utils, weights)
        for j, u in enumerate(utils):
            totals[j] += u.value(shares[j] * samples[i, j])
    return totals / n


def adapt_weights(
    model: ChannelModel,
    utilities,
    link: LinkBudget,
    tolerance: float = 1e-3,
    n_samples: int = 2000,
    seed: int = 0,
    step: float = 0.5,
    max_iterations: int = 50,
):
    """Tune weights until all users' average utilities agree within tolerance.

    Iterates: estimate each user's average utility under the current
    weighted allocation, then push weights multiplicatively toward the
    underperforming users, w_i <- w_i * exp(step * (mean - avg_i)), and
    renormalize.

    Returns
    -------
    (weights, FairnessReport)

    Raises
    ------
    ConvergenceError
        If the spread never falls below ``tolerance``; the best-so-far
        report rides along in ``diagnostics``.
    """
    if tolerance <= 0:
        raise ValueError("tolerance must be > 0")
    nu = model.n_users
    utils = _as_utility_list(utilities, nu)
    gains = np.stack([sample_gains(model, seed, t) for t in range(n_samples)])
    rates = achievable_rate(gains, link.transmit_power, link)

    weights = np.full(nu, 1.0 / nu)
    best = None
    for it in range(max_iterations + 1):
        avg = average_utilities(rates, utils, weights)
        spread = float(avg.max() - avg.min())
        report = FairnessReport(avg, float(avg.mean()), spread, it)
        if best is None or spread < best[1].spread:
            best = (weights.copy(), report)
        if spread <= tolerance:
            return weights, report
        weights = weights * np.exp(step * (avg.mean() - avg))
        weights /= weights.sum()
    raise ConvergenceError(
        f"utility spread {best[1].spread:.3g} > tolerance {tolerance:.3g} "
        f"after {max_iterations} weight updates",
        diagnostics=best[1],
    )
