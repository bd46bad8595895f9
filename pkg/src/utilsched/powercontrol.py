"""Joint time-sharing and power control under average-power budgets.

The continuous-state problem (maximize expected aggregate utility over share
and energy policies) is discretized by sample-average approximation: a fixed
set of channel draws stands in for the gain distribution, expectations become
sample means, and the solve is fully deterministic.

The solver is nonlinear Gauss-Seidel block coordinate ascent on the jointly
concave objective in (shares, energies), where energy = share * power:

1. initialize with uniform shares and per-frame energies equal to the budgets
2. per sample, re-optimize shares given energies (simplex water filling)
3. record the sample-average objective
4. per user, re-optimize energies given shares: a water-filling multiplier is
   bisected until the sample-average energy meets the power budget
5. repeat 2-4 until the objective increment drops below the threshold

The uplink constrains each user's average energy separately; the downlink
variant pools everything under one total-power multiplier.  Because every
block update is an exact maximization, the recorded objective sequence is
nondecreasing, which the tests assert directly.

All inner solves are bisections vectorized across the whole sample grid;
users sharing one utility are sliced into a single vectorized call.
"""

from dataclasses import dataclass, field

import numpy as np

from .channel import LinkBudget, achievable_rate
from .errors import ConvergenceError, DegenerateBudgetError
from .timeshare import _as_utility_list, allocate_ts, aggregate_utility

__all__ = [
    "PowerPolicy",
    "IterationTrace",
    "solve_uplink",
    "solve_downlink",
    "update_shares",
    "update_energies",
    "sample_objective",
    "apply_policy",
    "constant_power_objective",
]

SHARE_BISECT = 50
INNER_BISECT = 46
ENERGY_BISECT = 56


@dataclass
class IterationTrace:
    """Objective values per Gauss-Seidel iteration plus the stop threshold."""

    objectives: list = field(default_factory=list)
    threshold: float = 1e-6
    converged: bool = False

    @property
    def iterations(self) -> int:
        return len(self.objectives)


@dataclass
class PowerPolicy:
    """Converged per-sample shares and energies plus the fixed multipliers.

    ``multipliers`` are the energy water levels: one per user for the uplink,
    a single scalar for the downlink.  They define the policy on gains
    outside the sample set (see ``apply_policy``).
    """

    gains: np.ndarray
    shares: np.ndarray
    energies: np.ndarray
    budgets: np.ndarray
    multipliers: np.ndarray
    pooled: bool = False

    def powers(self) -> np.ndarray:
        """Per-sample transmit powers energy/share, 0 where the share is 0."""
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(
                self.shares > 0, self.energies / np.where(self.shares > 0, self.shares, 1.0), 0.0
            )


# ---------------------------------------------------------------------------
# vectorized marginals over a (n_samples, n_users) grid


def _user_groups(utils):
    """Group user columns by utility so symmetric grids need one call."""
    groups = []
    seen = {}
    for j, u in enumerate(utils):
        try:
            key = hash(u), u
        except TypeError:
            key = id(u)
        if key in seen:
            groups[seen[key]][1].append(j)
        else:
            seen[key] = len(groups)
            groups.append((u, [j]))
    return [(u, np.array(idx)) for u, idx in groups]


def _share_marginals(groups, share, energies, gains, link, out=None):
    if out is None:
        out = np.empty_like(energies)
    for u, idx in groups:
        out[:, idx] = u.marginal_share_with_energy(
            share[:, idx], energies[:, idx], gains[:, idx], link
        )
    return out


def _energy_marginals(groups, shares, energy, gains, link, out=None):
    if out is None:
        out = np.empty_like(energy)
    for u, idx in groups:
        out[:, idx] = u.marginal_energy(shares[:, idx], energy[:, idx], gains[:, idx], link)
    return out


def _group_values(groups, shares, energies, gains, link):
    out = np.empty_like(energies)
    for u, idx in groups:
        out[:, idx] = u.value_with_energy(shares[:, idx], energies[:, idx], gains[:, idx], link)
    return out


def update_shares(gains, energies, utilities, link: LinkBudget) -> np.ndarray:
    """Optimal per-sample shares given fixed per-sample energies.

    For each sample the simplex multiplier is bisected; each candidate
    multiplier is inverted through the (strictly decreasing) share marginal
    by an inner bisection on [0, 1].  With two users the simplex collapses
    to one dimension and the marginals are equalized directly.  Users with
    zero energy or zero gain in a sample get zero share there; samples where
    nobody can transmit fall back to uniform shares.
    """
    gains = np.asarray(gains, dtype=float)
    energies = np.asarray(energies, dtype=float)
    n, nu = gains.shape
    utils = _as_utility_list(utilities, nu)
    groups = _user_groups(utils)
    active = (energies > 0) & (gains > 0)

    if nu == 1:
        return np.ones((n, 1))
    if nu == 2:
        return _update_shares_pair(groups, gains, energies, link, active)
    return _update_shares_general(groups, gains, energies, link, active)


def _update_shares_pair(groups, gains, energies, link, active):
    """Equalize the two marginals by bisection on the first user's share."""
    n = gains.shape[0]
    lo = np.zeros(n)
    hi = np.ones(n)
    rho = np.empty((n, 2))
    for _ in range(SHARE_BISECT):
        mid = 0.5 * (lo + hi)
        rho[:, 0] = mid
        rho[:, 1] = 1.0 - mid
        m = _share_marginals(groups, rho, energies, gains, link)
        grow = m[:, 0] > m[:, 1]
        lo = np.where(grow, mid, lo)
        hi = np.where(grow, hi, mid)
    first = 0.5 * (lo + hi)
    # single-transmitter and dead samples override the interior solution
    first = np.where(active[:, 0] & ~active[:, 1], 1.0, first)
    first = np.where(active[:, 1] & ~active[:, 0], 0.0, first)
    first = np.where(~active.any(axis=1), 0.5, first)
    return np.column_stack([first, 1.0 - first])


def _update_shares_general(groups, gains, energies, link, active):
    n, nu = gains.shape
    live = active.any(axis=1)

    ones = np.ones((n, nu))
    m_low = _share_marginals(groups, ones / nu, energies, gains, link)
    m_one = _share_marginals(groups, ones, energies, gains, link)

    hi = np.where(active, m_low, 0.0).max(axis=1)
    lo = np.where(active, m_one, np.inf).min(axis=1)
    lo = np.where(live, lo, 1.0)
    hi = np.maximum(hi, lo)

    def shares_at(lam):
        rho_lo = np.zeros((n, nu))
        rho_hi = np.ones((n, nu))
        at_cap = active & (m_one >= lam[:, None])
        for _ in range(INNER_BISECT):
            mid = 0.5 * (rho_lo + rho_hi)
            m = _share_marginals(groups, mid, energies, gains, link)
            grow = m > lam[:, None]
            rho_lo = np.where(grow, mid, rho_lo)
            rho_hi = np.where(grow, rho_hi, mid)
        rho = 0.5 * (rho_lo + rho_hi)
        rho = np.where(at_cap, 1.0, rho)
        return np.where(active, rho, 0.0)

    for _ in range(SHARE_BISECT):
        lam = 0.5 * (lo + hi)
        total = shares_at(lam).sum(axis=1)
        over = total > 1.0
        lo = np.where(over, lam, lo)
        hi = np.where(over, hi, lam)

    shares = shares_at(0.5 * (lo + hi))
    total = shares.sum(axis=1)
    shares[live] /= total[live, None]
    shares[~live] = 1.0 / nu
    return shares


def _waterfill_energies(groups, gains, shares, link, multiplier, m_zero=None):
    """Per-entry energies solving marginal_energy == multiplier, clamped at 0.

    ``multiplier`` broadcasts over the (n_samples, n_users) grid.
    """
    n, nu = gains.shape
    zeros = np.zeros((n, nu))
    if m_zero is None:
        m_zero = _energy_marginals(groups, shares, zeros, gains, link)
    active = (shares > 0) & (gains > 0) & (m_zero > multiplier)
    if not active.any():
        return zeros

    s_hi = np.ones((n, nu))
    for _ in range(120):
        m = _energy_marginals(groups, shares, np.where(active, s_hi, 0.0), gains, link)
        need = active & (m >= multiplier)
        if not need.any():
            break
        s_hi = np.where(need, 2.0 * s_hi, s_hi)

    s_lo = np.zeros((n, nu))
    for _ in range(INNER_BISECT):
        mid = 0.5 * (s_lo + s_hi)
        m = _energy_marginals(groups, shares, np.where(active, mid, 0.0), gains, link)
        grow = active & (m > multiplier)
        s_lo = np.where(grow, mid, s_lo)
        s_hi = np.where(grow, s_hi, mid)
    return np.where(active, 0.5 * (s_lo + s_hi), 0.0)


def update_energies(gains, shares, utilities, budgets, link: LinkBudget):
    """Optimal per-sample energies given fixed shares, meeting each budget.

    For each user a positive multiplier is bisected until the sample-average
    energy equals the budget; per-sample energies are the water-filling
    inverse of the energy marginal at that multiplier.

    Returns
    -------
    (energies, multipliers) : (ndarray (n, N), ndarray (N,))

    Raises
    ------
    DegenerateBudgetError
        If a user's budget cannot be met (all gains or shares zero).
    """
    gains = np.asarray(gains, dtype=float)
    shares = np.asarray(shares, dtype=float)
    n, nu = gains.shape
    utils = _as_utility_list(utilities, nu)
    groups = _user_groups(utils)
    budgets = np.broadcast_to(np.asarray(budgets, dtype=float), (nu,)).copy()
    if np.any(budgets <= 0):
        raise ValueError("power budgets must be > 0")

    m_zero = _energy_marginals(groups, shares, np.zeros((n, nu)), gains, link)
    peak = m_zero.max(axis=0)
    if np.any(peak <= 0):
        bad = np.flatnonzero(peak <= 0)
        raise DegenerateBudgetError(
            f"users {bad.tolist()} cannot spend any energy (zero gains or shares)"
        )

    def averages(lam):
        s = _waterfill_energies(groups, gains, shares, link, lam[None, :], m_zero)
        return s.mean(axis=0)

    hi = peak.copy()
    lo = peak.copy()
    for _ in range(200):
        short = averages(lo) < budgets
        if not short.any():
            break
        lo = np.where(short, lo / 2.0, lo)
    else:
        raise DegenerateBudgetError("budget unreachable while lowering the water level")

    for _ in range(ENERGY_BISECT):
        lam = 0.5 * (lo + hi)
        over = averages(lam) > budgets
        # spending too much means the multiplier is too low
        lo = np.where(over, lam, lo)
        hi = np.where(over, hi, lam)

    lam = 0.5 * (lo + hi)
    energies = _waterfill_energies(groups, gains, shares, link, lam[None, :], m_zero)
    # absorb the last bisection gap so the sample-average meets the budget exactly
    scale = budgets / energies.mean(axis=0)
    return energies * scale[None, :], lam


def update_energies_pooled(gains, shares, utilities, total_budget, link: LinkBudget):
    """Downlink variant: one multiplier, sample-average total energy budget."""
    gains = np.asarray(gains, dtype=float)
    shares = np.asarray(shares, dtype=float)
    n, nu = gains.shape
    utils = _as_utility_list(utilities, nu)
    groups = _user_groups(utils)
    if total_budget <= 0:
        raise ValueError("total power budget must be > 0")

    m_zero = _energy_marginals(groups, shares, np.zeros((n, nu)), gains, link)
    peak = float(m_zero.max())
    if peak <= 0:
        raise DegenerateBudgetError("no user can spend any energy (zero gains or shares)")

    def average_total(lam):
        s = _waterfill_energies(groups, gains, shares, link, lam, m_zero)
        return s.sum(axis=1).mean()

    hi = peak
    lo = peak
    for _ in range(200):
        if average_total(lo) >= total_budget:
            break
        lo /= 2.0
    else:
        raise DegenerateBudgetError("budget unreachable while lowering the water level")

    for _ in range(ENERGY_BISECT):
        lam = 0.5 * (lo + hi)
        if average_total(lam) > total_budget:
            lo = lam
        else:
            hi = lam

    lam = 0.5 * (lo + hi)
    energies = _waterfill_energies(groups, gains, shares, link, lam, m_zero)
    energies *= total_budget / energies.sum(axis=1).mean()
    return energies, lam


def sample_objective(gains, shares, energies, utilities, link: LinkBudget) -> float:
    """Sample-average aggregate utility of a (shares, energies) policy."""
    gains = np.asarray(gains, dtype=float)
    groups = _user_groups(_as_utility_list(utilities, gains.shape[1]))
    values = _group_values(groups, np.asarray(shares, float), np.asarray(energies, float), gains, link)
    return float(values.sum(axis=1).mean())


def _solve(gains, utilities, budgets, link, threshold, max_iterations, pooled):
    gains = np.asarray(gains, dtype=float)
    if gains.ndim != 2 or gains.shape[0] < 1:
        raise ValueError("need a nonempty (n_samples, n_users) gain matrix")
    n, nu = gains.shape
    utils = _as_utility_list(utilities, nu)

    if pooled:
        total_budget = float(budgets)
        per_user = np.full(nu, total_budget / nu)
    else:
        per_user = np.broadcast_to(np.asarray(budgets, dtype=float), (nu,)).copy()

    shares = np.full((n, nu), 1.0 / nu)
    energies = np.tile(per_user, (n, 1))
    multipliers = None
    trace = IterationTrace(threshold=threshold)

    for _ in range(max_iterations):
        shares = update_shares(gains, energies, utils, link)
        trace.objectives.append(sample_objective(gains, shares, energies, utils, link))
        if len(trace.objectives) >= 2 and trace.objectives[-1] - trace.objectives[-2] < threshold:
            trace.converged = True
            break
        if pooled:
            energies, multipliers = update_energies_pooled(gains, shares, utils, total_budget, link)
        else:
            energies, multipliers = update_energies(gains, shares, utils, per_user, link)
    else:
        raise ConvergenceError(
            f"objective still improving after {max_iterations} iterations", diagnostics=trace
        )

    policy = PowerPolicy(
        gains=gains,
        shares=shares,
        energies=energies,
        budgets=np.array([total_budget]) if pooled else per_user,
        multipliers=np.asarray(multipliers),
        pooled=pooled,
    )
    return policy, trace


def solve_uplink(gains, utilities, budgets, link: LinkBudget, threshold=1e-6, max_iterations=100):
    """Jointly optimize shares and energies under per-user average budgets.

    Parameters
    ----------
    gains : ndarray (n_samples, n_users)
        Fixed channel sample set standing in for the gain distribution.
    budgets : array_like (n_users,) or scalar
        Average power budget per user.
    threshold : float
        Stop once the objective improves by less than this per iteration.

    Returns
    -------
    (PowerPolicy, IterationTrace)

    Raises
    ------
    ConvergenceError
        If the increment never drops below ``threshold``; the partial trace
        rides along in ``diagnostics``.
    """
    return _solve(gains, utilities, budgets, link, threshold, max_iterations, pooled=False)


def solve_downlink(gains, utilities, total_budget, link: LinkBudget, threshold=1e-6, max_iterations=100):
    """Same iteration with a single sample-average total-power constraint."""
    return _solve(gains, utilities, total_budget, link, threshold, max_iterations, pooled=True)


def apply_policy(policy: PowerPolicy, frame_gains, utilities, link: LinkBudget,
                 tol=1e-11, max_rounds=300):
    """Evaluate the converged policy on fresh gain vectors.

    The training multipliers stay fixed; per-frame shares and energies are
    re-solved against them by alternating the two block updates, which is
    coordinate ascent on each frame's multiplier-penalized utility.  On a
    training sample this reproduces the stored allocation.

    ``frame_gains`` may be one frame (N,) or a batch (n_frames, N); the
    result matches the input's shape.
    """
    g = np.asarray(frame_gains, dtype=float)
    single = g.ndim == 1
    if single:
        g = g[None, :]
    n, nu = g.shape
    utils = _as_utility_list(utilities, nu)
    groups = _user_groups(utils)
    lam = policy.multipliers if policy.pooled else policy.multipliers[None, :]

    shares = np.full((n, nu), 1.0 / nu)
    energies = _waterfill_energies(groups, g, shares, link, lam)
    for _ in range(max_rounds):
        new_shares = update_shares(g, energies, utils, link)
        new_energies = _waterfill_energies(groups, g, new_shares, link, lam)
        drift = np.abs(new_shares - shares).max() + np.abs(new_energies - energies).max()
        shares, energies = new_shares, new_energies
        if drift <= tol:
            break
    if single:
        return shares[0], energies[0]
    return shares, energies


def constant_power_objective(gains, utilities, budgets, link: LinkBudget) -> float:
    """Sample-average utility of share-only allocation at constant power.

    Each user transmits at its budget power whenever scheduled, so its
    average consumed power never exceeds the budget; shares are per-sample
    optimal.  This is the feasible share-only baseline any joint solve must
    dominate.
    """
    gains = np.asarray(gains, dtype=float)
    n, nu = gains.shape
    utils = _as_utility_list(utilities, nu)
    budgets = np.broadcast_to(np.asarray(budgets, dtype=float), (nu,))
    total = 0.0
    for i in range(n):
        rates = achievable_rate(gains[i], budgets, link)
        shares, _ = allocate_ts(rates, utils)
        total += aggregate_utility(shares, rates, utils)
    return total / n
