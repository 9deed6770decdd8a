"""Empirical comparison-lemma constants and Gronwall checks for the toy materials."""

from __future__ import annotations

import argparse
import json

import numpy as np

from lorentz_decay import lyapunov_ledger as ll
from lorentz_decay.material import drude_toy, lorentz_toy


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--n-states", type=int, default=20)
    args = parser.parse_args()
    for name, m in (("drude", drude_toy()), ("lorentz", lorentz_toy())):
        sweep = ll.lemma_sweep(m, n_states=args.n_states, seed=args.seed)
        order, _ = ll.lemma_order_and_weight(m, (0.0, 0.0, 1.0))
        holds = [
            ll.gronwall_certificate(m, k, s0, sigma_star=sweep.sigma_star).bound_holds
            for k, s0 in ll.sweep_cases(m, sweep.knorms, args.n_states, args.seed)
        ]
        per_k = sweep.sups.max(axis=1)
        print(
            json.dumps(
                {
                    "material": name,
                    "order": order,
                    "constant": sweep.constant,
                    "spread": sweep.spread,
                    "sigma_star": sweep.sigma_star,
                    "gronwall_holds": f"{sum(holds)}/{len(holds)}",
                    "per_k_sup": {f"{k:.4g}": float(v) for k, v in zip(sweep.knorms, per_k)},
                }
            )
        )
    raw = ll.lemma_sweep(lorentz_toy(), np.array([0.05, 1.0]), args.n_states, args.seed, weighted=False)
    small, one = raw.sups.max(axis=1)
    print(json.dumps({"unweighted_lorentz_ratio": {"k=0.05": small, "k=1": one, "contrast": small / one}}))


if __name__ == "__main__":
    main()
