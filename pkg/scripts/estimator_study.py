#!/usr/bin/env python3
"""Bias and spread of the channel estimators as the number of rounds grows."""
import argparse

import numpy as np

from cvqkd4.channel import ChannelParams
from cvqkd4.estimation import estimate_channel, estimate_covariance, key_rate_from_data
from cvqkd4.montecarlo import RunConfig, simulate
from cvqkd4.security import key_rate
from cvqkd4.states import ModulationParams


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--eta", type=float, default=0.5)
    ap.add_argument("--epsilon", type=float, default=0.01)
    ap.add_argument("--alpha", type=float, default=0.5)
    ap.add_argument("--beta", type=float, default=20.0)
    ap.add_argument("--sizes", type=lambda s: [int(float(v)) for v in s.split(",")],
                    default=[10 ** 5, 4 * 10 ** 5, 1_600_000])
    ap.add_argument("--replicates", type=int, default=8)
    ap.add_argument("--workers", type=int, default=4)
    args = ap.parse_args()

    mod = ModulationParams(args.alpha, args.beta)
    ch = ChannelParams(args.eta, args.epsilon)
    k_ref = key_rate(mod, ch).k_rate
    print(f"truth eta={ch.eta} eps={ch.epsilon}  analytic k={k_ref:.5f}")
    print(f"{'n':>9} {'eta bias':>10} {'eta se':>9} {'eps bias':>10} {'eps se':>9} {'k - k_ref':>10}")
    for n in args.sizes:
        eta_b, eps_b, k_d, eta_se, eps_se = [], [], [], [], []
        for rep in range(args.replicates):
            recs = simulate(RunConfig("beamsplitter", n, mod, ch, seed=1000 * rep + 1), args.workers)
            est = estimate_channel(estimate_covariance(recs, mod), mod)
            eta_b.append(est.eta_hat - ch.eta)
            eps_b.append(est.epsilon_hat - ch.epsilon)
            eta_se.append(est.eta_stderr)
            eps_se.append(est.epsilon_stderr)
            k_d.append(key_rate_from_data(recs, mod).k_rate - k_ref)
        print(f"{n:9d} {np.mean(eta_b):10.2e} {np.mean(eta_se):9.2e} "
              f"{np.mean(eps_b):10.2e} {np.mean(eps_se):9.2e} {np.mean(k_d):10.2e}")


if __name__ == "__main__":
    main()
