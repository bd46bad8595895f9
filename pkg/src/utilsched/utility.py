"""Concave rate utilities and the marginals the allocators consume.

A utility maps an instantaneous rate r >= 0 to satisfaction U(r); it must be
increasing, differentiable and strictly concave.  The allocators never touch
a concrete functional form: everything is expressed through ``value``, the
derivative U'(r) and its inverse.  The shipped implementation is the
logarithmic family U(r) = ln(1 + r/A), where smaller A means stronger
concavity (earlier saturation).

Two parameterizations appear throughout:

* share form: the user holds a fraction ``share`` of the frame at fixed
  full-frame rate ``peak_rate``, so r = share * peak_rate;
* energy form: the user holds ``share`` of the frame and spends energy
  ``energy`` on it, so its in-slot power is energy/share and
  r = share * log2(1 + energy * gain / (share * gap * noise)).
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from .channel import LN2, LinkBudget

__all__ = ["Utility", "LogUtility"]


class Utility(ABC):
    """Increasing, differentiable, strictly concave utility of rate."""

    @abstractmethod
    def value(self, rate):
        """U(rate); ``rate`` must be >= 0 (scalar or ndarray)."""

    @abstractmethod
    def derivative(self, rate):
        """U'(rate), strictly positive and strictly decreasing."""

    @abstractmethod
    def inverse_derivative(self, slope):
        """The rate r with U'(r) == slope, for 0 < slope <= U'(0)."""

    # -- share form -------------------------------------------------------

    def marginal_share(self, peak_rate, share):
        """d/d(share) of U(share * peak_rate)."""
        return self.derivative(np.multiply(share, peak_rate)) * peak_rate

    def inverse_marginal_share(self, peak_rate, multiplier):
        """Share solving marginal_share == multiplier, clamped below at 0.

        Returns 0 when ``peak_rate`` is 0 or when the marginal at zero share
        already falls below ``multiplier``.
        """
        if np.any(np.asarray(multiplier) <= 0):
            raise ValueError("multiplier must be > 0")
        shape = np.broadcast(np.asarray(peak_rate), np.asarray(multiplier)).shape
        pr = np.atleast_1d(np.broadcast_to(np.asarray(peak_rate, dtype=float), shape))
        mult = np.atleast_1d(np.broadcast_to(np.asarray(multiplier, dtype=float), shape))
        out = np.zeros(pr.shape)
        active = (pr > 0) & (self.derivative(0.0) * pr > mult)
        out[active] = self.inverse_derivative(mult[active] / pr[active]) / pr[active]
        return out.reshape(shape) if shape else float(out[0])

    # -- energy form ------------------------------------------------------

    def value_with_energy(self, share, energy, gain, link: LinkBudget):
        """U of the rate produced by (share, energy) on gain; 0 at share=0."""
        return self.value(_rate_from_energy(share, energy, gain, link))

    def marginal_energy(self, share, energy, gain, link: LinkBudget):
        """d/d(energy) of value_with_energy at fixed share.

        Zero-share entries must carry zero energy (energy with no transmit
        time is undefined); gain 0 gives marginal 0.
        """
        share = np.asarray(share, dtype=float)
        energy = np.asarray(energy, dtype=float)
        if np.any((share == 0) & (energy > 0)):
            raise ValueError("energy > 0 with share == 0 is undefined")
        snr = np.asarray(gain, dtype=float) / link.effective_noise
        with np.errstate(divide="ignore", invalid="ignore"):
            x = np.where(share > 0, energy * snr / np.where(share > 0, share, 1.0), 0.0)
        rate = share * np.log1p(x) / LN2
        out = np.where(share > 0, self.derivative(rate) * snr / (LN2 * (1.0 + x)), 0.0)
        return out if out.ndim else float(out)

    def marginal_share_with_energy(self, share, energy, gain, link: LinkBudget):
        """d/d(share) of value_with_energy at fixed energy.

        At share == 0 this returns the one-sided limit: +inf when the user
        has energy and gain to spend (any sliver of time helps), else 0.
        """
        share = np.asarray(share, dtype=float)
        if np.any(share < 0):
            raise ValueError("share must be >= 0")
        snr = np.multiply(energy, gain) / link.effective_noise
        pos = share > 0
        with np.errstate(divide="ignore", invalid="ignore"):
            x = np.where(pos, snr / np.where(pos, share, 1.0), 0.0)
        full = np.log1p(x) / LN2
        rate = share * full
        out = self.derivative(rate) * (full - x / (LN2 * (1.0 + x)))
        out = np.where(pos, out, np.where(snr > 0, np.inf, 0.0))
        return out if out.ndim else float(out)


def _rate_from_energy(share, energy, gain, link: LinkBudget):
    share = np.asarray(share, dtype=float)
    snr = np.multiply(energy, gain) / link.effective_noise
    with np.errstate(divide="ignore", invalid="ignore"):
        x = np.where(share > 0, snr / np.where(share > 0, share, 1.0), 0.0)
    return share * np.log1p(x) / LN2


@dataclass(frozen=True)
class LogUtility(Utility):
    """U(r) = ln(1 + r/concavity); small concavity saturates early."""

    concavity: float = 0.1

    def __post_init__(self):
        if self.concavity <= 0:
            raise ValueError(f"concavity must be > 0, got {self.concavity}")

    def value(self, rate):
        if np.any(np.asarray(rate) < 0):
            raise ValueError("rate must be >= 0")
        return np.log1p(np.asarray(rate, dtype=float) / self.concavity)

    def derivative(self, rate):
        return 1.0 / (self.concavity + np.asarray(rate, dtype=float))

    def inverse_derivative(self, slope):
        return 1.0 / np.asarray(slope, dtype=float) - self.concavity

    def inverse_marginal_share(self, peak_rate, multiplier):
        # closed form [1/multiplier - concavity/peak_rate]^+, 0 when rate is 0
        if np.any(np.asarray(multiplier) <= 0):
            raise ValueError("multiplier must be > 0")
        peak_rate = np.asarray(peak_rate, dtype=float)
        with np.errstate(divide="ignore"):
            raw = 1.0 / np.asarray(multiplier, dtype=float) - np.where(
                peak_rate > 0, self.concavity / np.where(peak_rate > 0, peak_rate, 1.0), np.inf
            )
        out = np.maximum(raw, 0.0)
        return out if out.ndim else float(out)
