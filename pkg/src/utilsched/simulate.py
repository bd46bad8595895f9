"""Monte Carlo harness: run any policy over seeded frames and collect stats.

One experiment = a channel model, a link budget, a policy and a frame count.
Each frame draws gains (counter-based, so results are independent of
evaluation order), applies the policy to get shares (and, for the joint
power-control policy, energies), and accumulates per-user rates r_i =
share_i * rate_i.  Reported statistics are the time-averaged aggregate
utility (`taur`), per-user mean rate and rate standard deviation, and mean
occupancy.
"""

from dataclasses import dataclass

import numpy as np

from .channel import ChannelModel, LinkBudget, Quantizer, achievable_rate, quantize, sample_gains
from .gradsched import GradientSchedulerState, select_user, update_state
from .powercontrol import apply_policy, solve_uplink
from .quantized import QuantizedScheduler
from .timeshare import _as_utility_list, allocate_ts
from .utility import LogUtility

__all__ = ["ExperimentConfig", "SimStats", "SweepEntry", "run_experiment", "sweep"]

POLICIES = ("ts", "gs", "jtpc", "qtsl", "weighted_ts")

# frame indices at and above this offset are reserved for training draws
TRAINING_FRAME_OFFSET = 2**32


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce one experiment bit for bit.

    ``mean_snr_db``, ``concavity`` and ``power_budget`` accept a scalar
    (symmetric users) or one value per user.  Policy-specific knobs are
    ignored by the other policies.
    """

    n_users: int
    mean_snr_db: object = 10.0
    snr_gap_db: float = 8.2
    concavity: object = 0.1
    policy: str = "ts"
    n_frames: int = 10_000
    seed: int = 0
    # gradient scheduler
    smoothing: float = 0.01
    initial_avg_rate: float = 0.0
    # joint power control
    power_budget: object = 1.0
    delta: float = 1e-6
    training_samples: int = 10_000
    max_iterations: int = 100
    # quantized time sharing
    n_slots: int = 0  # 0 means one slot per user
    feedback_bits: int = 3
    # weighted time sharing
    weights: object = None

    def __post_init__(self):
        if self.n_users < 1:
            raise ValueError("n_users must be >= 1")
        if self.n_frames < 1:
            raise ValueError("n_frames must be >= 1")
        if self.policy not in POLICIES:
            raise ValueError(f"unknown policy {self.policy!r}; choose from {POLICIES}")

    def link(self) -> LinkBudget:
        return LinkBudget(noise_power=1.0, snr_gap_db=self.snr_gap_db, transmit_power=1.0)

    def channel(self) -> ChannelModel:
        snr = np.broadcast_to(np.asarray(self.mean_snr_db, dtype=float), (self.n_users,))
        return ChannelModel.from_snr_db(snr, self.link())

    def utilities(self):
        a = np.broadcast_to(np.asarray(self.concavity, dtype=float), (self.n_users,))
        return [LogUtility(float(ai)) for ai in a]


@dataclass
class SimStats:
    """Summary statistics of one experiment."""

    taur: float
    mean_rate: np.ndarray
    rate_std: np.ndarray
    occupancy: np.ndarray
    mean_utility: np.ndarray
    n_frames: int
    degenerate_frames: int = 0


def _policy_shares(config: ExperimentConfig, model, link, utils):
    """Return a frame iterator yielding (gains, shares, rates) triples."""
    n = config.n_users

    if config.policy == "gs":
        state = GradientSchedulerState.initial(n, config.smoothing, config.initial_avg_rate)
        for t in range(config.n_frames):
            gains = sample_gains(model, config.seed, t)
            rates = achievable_rate(gains, link.transmit_power, link)
            chosen = select_user(state, rates, utils)
            shares = np.zeros(n)
            shares[chosen] = 1.0
            state = update_state(state, chosen, rates[chosen])
            yield gains, shares, rates
        return

    if config.policy == "jtpc":
        budgets = np.broadcast_to(np.asarray(config.power_budget, dtype=float), (n,))
        training = np.stack(
            [
                sample_gains(model, config.seed, TRAINING_FRAME_OFFSET + t)
                for t in range(config.training_samples)
            ]
        )
        policy, _ = solve_uplink(
            training, utils, budgets, link,
            threshold=config.delta, max_iterations=config.max_iterations,
        )
        all_gains = np.stack(
            [sample_gains(model, config.seed, t) for t in range(config.n_frames)]
        )
        all_shares, all_energies = apply_policy(policy, all_gains, utils, link)
        with np.errstate(divide="ignore", invalid="ignore"):
            powers = np.where(
                all_shares > 0, all_energies / np.where(all_shares > 0, all_shares, 1.0), 0.0
            )
        all_rates = achievable_rate(all_gains, powers, link)
        for t in range(config.n_frames):
            yield all_gains[t], all_shares[t], all_rates[t]
        return

    if config.policy == "qtsl":
        n_slots = config.n_slots or n
        quantizers = [
            Quantizer.equal_probability(m, config.feedback_bits) for m in model.mean_gains
        ]
        scheduler = QuantizedScheduler(utils, quantizers, model.mean_gains, link, n_slots)
        for t in range(config.n_frames):
            gains = sample_gains(model, config.seed, t)
            states = np.array([quantize(g, q) for g, q in zip(gains, quantizers)])
            shares = scheduler.shares(scheduler.greedy_allocate(states))
            rates = achievable_rate(gains, link.transmit_power, link)
            yield gains, shares, rates
        return

    weights = None
    if config.policy == "weighted_ts":
        if config.weights is None:
            raise ValueError("weighted_ts needs a weights vector")
        weights = np.asarray(config.weights, dtype=float)

    for t in range(config.n_frames):
        gains = sample_gains(model, config.seed, t)
        rates = achievable_rate(gains, link.transmit_power, link)
        shares, _ = allocate_ts(rates, utils, weights=weights)
        yield gains, shares, rates


def run_experiment(config: ExperimentConfig) -> SimStats:
    """Run one experiment; fully deterministic given the config's seed."""
    link = config.link()
    model = config.channel()
    utils = config.utilities()
    n = config.n_users

    rate_sum = np.zeros(n)
    rate_sq_sum = np.zeros(n)
    share_sum = np.zeros(n)
    util_sum = np.zeros(n)
    degenerate = 0

    for t, (gains, shares, rates) in enumerate(_policy_shares(config, model, link, utils)):
        total = shares.sum()
        if abs(total - 1.0) > 1e-9:
            raise AssertionError(f"frame {t}: shares sum to {total}, not 1")
        if not np.any(rates > 0):
            degenerate += 1
        r = shares * rates
        rate_sum += r
        rate_sq_sum += r * r
        share_sum += shares
        util_sum += np.array([u.value(ri) for u, ri in zip(utils, r)])

    frames = config.n_frames
    mean_rate = rate_sum / frames
    variance = np.maximum(rate_sq_sum / frames - mean_rate**2, 0.0)
    mean_utility = util_sum / frames
    return SimStats(
        taur=float(mean_utility.sum()),
        mean_rate=mean_rate,
        rate_std=np.sqrt(variance),
        occupancy=share_sum / frames,
        mean_utility=mean_utility,
        n_frames=frames,
        degenerate_frames=degenerate,
    )


@dataclass
class SweepEntry:
    """One sweep point: its config and either stats or the error it raised."""

    config: ExperimentConfig
    stats: SimStats = None
    error: Exception = None


def sweep(configs) -> list:
    """Run experiments in order, collecting per-entry failures instead of
    aborting the remaining points."""
    configs = list(configs)
    if not configs:
        raise ValueError("sweep needs at least one config")
    entries = []
    for config in configs:
        try:
            entries.append(SweepEntry(config, stats=run_experiment(config)))
        except Exception as exc:  # collected per entry, reported by the caller
            entries.append(SweepEntry(config, error=exc))
    return entries
