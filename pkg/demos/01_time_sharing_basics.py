"""Walk through one frame of utility-optimal time sharing.

Three users see different channel gains this frame.  The allocator splits
the frame so that every scheduled user sits at the same marginal utility
(the water level); users whose marginal at zero share is already below the
level stay silent.
"""

import numpy as np

from utilsched import LinkBudget, LogUtility, achievable_rate, allocate_ts, aggregate_utility


def main():
    link = LinkBudget(snr_gap_db=8.2)
    utility = LogUtility(concavity=0.1)

    gains = np.array([4.0, 1.2, 0.02])
    rates = achievable_rate(gains, link.transmit_power, link)
    print("full-frame rates (bits/s/Hz):", np.round(rates, 4))

    shares, solve = allocate_ts(rates, utility)
    print("optimal shares:", np.round(shares, 4), "| sum =", shares.sum())
    print(f"water level (multiplier): {solve.multiplier:.4f}")

    for i, (rate, share) in enumerate(zip(rates, shares)):
        marginal = utility.marginal_share(rate, share)
        status = "active" if share > 0 else "silent"
        print(
            f"  user {i}: share {share:.4f} ({status}); "
            f"marginal at its share {marginal:.4f}, at zero {utility.marginal_share(rate, 0.0):.4f}"
        )

    print(f"frame aggregate utility: {aggregate_utility(shares, rates, utility):.4f}")
    print("\nNaive equal split for comparison:",
          f"{aggregate_utility(np.full(3, 1 / 3), rates, utility):.4f}")


if __name__ == "__main__":
    main()
