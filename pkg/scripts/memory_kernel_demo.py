"""Convolution-kernel identities on single modes and the kernel sign conditions."""

from __future__ import annotations

import argparse

import numpy as np

from lorentz_decay import memory_kernel_lab as ml
from lorentz_decay.material import drude_toy, lorentz_toy


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--tmax", type=float, default=20.0)
    parser.add_argument("--n", type=int, default=201)
    args = parser.parse_args()
    t = np.linspace(0.0, args.tmax, args.n)
    kernels = {
        "2 - exp(-t)": (ml.saturating_kernel(), ml.saturating_kernel()),
        "t (lossless Drude)": (ml.linear_kernel(), ml.linear_kernel()),
        "Drude toy": (ml.material_kernel(drude_toy(), "electric"), ml.material_kernel(drude_toy(), "magnetic")),
        "Lorentz toy": (ml.material_kernel(lorentz_toy(), "electric"), ml.material_kernel(lorentz_toy(), "magnetic")),
    }
    print(f"{'kernel':20s} {'residual':>10s} {'L(T)/L(0)':>11s} {'monotone':>9s} {'beta':>8s}")
    for name, (ke, km) in kernels.items():
        tr = ml.simulate_convolution_mode(ke, km, (0.3, 0.0, 1.0), [1, 0, 0], [0, 1, 0])
        res = ml.general_lyapunov_identity(ke, km, tr, t)
        signs = ml.sign_condition_check(ke, t)
        print(f"{name:20s} {res.residual:10.2e} {res.L[-1] / res.L[0]:11.3e} {str(signs.conds_26):>9s} {signs.beta:8.4f}")
    u = ml.ScalarTrajectory.from_function(np.linspace(0, 10, 201), np.sin, np.cos)
    print(f"Q-form residual, k = exp(-t), u = sin t: {ml.q_form_identity_residual(ml.exponential_kernel(), u):.2e}")


if __name__ == "__main__":
    main()
