"""Fit the polynomial decay exponents of the total energy for the reference runs.

Prints one line per run with the fitted exponent, its window and the expected
value; pass ``--out DIR`` to also keep the curves as CSV.
"""

from __future__ import annotations

import argparse
import csv
from pathlib import Path

import numpy as np

from lorentz_decay import decay_analysis as da
from lorentz_decay.material import MaterialParams, drude_toy, lorentz_toy

MIXED = MaterialParams(1.0, 1.0, ((1.0, 0.0, 1.0),), ((1.0, 1.0, 0.5),))


def runs(nodes: int):
    quad = da.QuadratureConfig(n_nodes=nodes)
    t = np.geomspace(1.0, 1e4, 41)
    yield "lorentz_gaussian", -1.5, (1e2, 1e4), da.total_energy_curve(
        lorentz_toy(), da.InitialDataSpec(da.gaussian()), t, quad
    )
    yield "lorentz_k2_gaussian", -3.5, (1e2, 1e4), da.total_energy_curve(
        lorentz_toy(), da.InitialDataSpec(da.power_gaussian(2), p=2), t, quad
    )
    yield "drude_sobolev_m1", -1.0, None, da.total_energy_curve(
        drude_toy(), da.InitialDataSpec(da.sobolev_tail(1), m=1), t, quad
    )
    yield "mixed_gaussian", -1.5, (1e2, 1e4), da.total_energy_curve(
        MIXED, da.InitialDataSpec(da.gaussian()), t, quad
    )
    t3 = np.geomspace(1.0, 1e3, 31)
    yield "cavity_m1", -1.0, (1e2, 1e3), da.discrete_spectrum_curve(lorentz_toy(), da.cavity_spectrum(200, 1), t3)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--nodes", type=int, default=256, help="radial quadrature nodes")
    parser.add_argument("--out", type=Path, default=None, help="directory for curve CSVs")
    args = parser.parse_args()
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
    for name, expected, window, curve in runs(args.nodes):
        fit = da.fit_decay_exponent(curve, window)
        lo, hi = fit.window
        print(f"{name:22s} exponent {fit.exponent:+.4f}  expected {expected:+.1f}  window [{lo:g}, {hi:g}]  R^2 {fit.r_squared:.5f}")
        if args.out:
            values = curve.total if isinstance(curve, da.EnergyCurve) else curve.values
            with open(args.out / f"{name}.csv", "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["t", "L"])
                w.writerows((repr(float(a)), repr(float(b))) for a, b in zip(curve.times, values))


if __name__ == "__main__":
    main()
