"""Independent reference computations.

None of these reuse the closed forms or propagators under test: kernels come
from integrating the oscillator ODE, trajectories from an adaptive
Runge-Kutta scheme, and total energies from a Cartesian k-grid.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import solve_ivp

from lorentz_decay.mode_dynamics import ModeState, build_generator, energy_curve

RTOL = 1e-12
ATOL = 1e-14


def impulse_response(omega0: float, alpha: float, t, derivative: int = 0) -> np.ndarray:
    """``x(t)`` (or ``x'``) for ``x'' + alpha x' + omega0^2 x = 0``, ``x(0) = 0``, ``x'(0) = 1``."""
    t = np.asarray(t, dtype=float)

    def rhs(_, y):
        return [y[1], -alpha * y[1] - omega0**2 * y[0]]

    sol = solve_ivp(rhs, (0.0, float(t[-1])), [0.0, 1.0], method="DOP853", t_eval=t, rtol=RTOL, atol=ATOL)
    return sol.y[derivative]


def ode_polarization(omega0: float, alpha: float, drive, t) -> np.ndarray:
    """``P(t)`` solving ``P'' + alpha P' + omega0^2 P = drive(t)`` from rest."""
    t = np.asarray(t, dtype=float)

    def rhs(s, y):
        return [y[1], drive(s) - alpha * y[1] - omega0**2 * y[0]]

    sol = solve_ivp(rhs, (0.0, float(t[-1])), [0.0, 0.0], method="DOP853", t_eval=t, rtol=RTOL, atol=ATOL)
    return sol.y[0]


def rk_evolve(matrix: np.ndarray, u0, t: float) -> np.ndarray:
    """``exp(t G) u0`` by DOP853 on the real-split system."""
    G = np.asarray(matrix)
    n = G.shape[0]
    R = np.block([[G.real, -G.imag], [G.imag, G.real]])
    y0 = np.concatenate([np.real(u0), np.imag(u0)])
    sol = solve_ivp(lambda _, y: R @ y, (0.0, t), y0, method="DOP853", rtol=RTOL, atol=ATOL)
    y = sol.y[:, -1]
    return y[:n] + 1j * y[n:]


def _transverse_pair(k: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal ``(a, k_hat x a)`` with ``a`` orthogonal to ``k``."""
    khat = k / np.linalg.norm(k)
    ref = np.array([1.0, 0.0, 0.0]) if abs(khat[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    a = np.cross(ref, khat)
    a /= np.linalg.norm(a)
    return a, np.cross(khat, a)


def brute_force_total_energy(material, profile, times, kmax: float = 5.0, n_axis: int = 32, split: float = 0.6):
    """``int L_k(t) dk`` on a tensor Gauss-Legendre grid over the positive octant, times 8.

    Each axis is split into ``[0, split]`` and ``[split, kmax]`` with
    ``n_axis`` nodes per piece. The initial fields at ``k`` are
    ``f(|k|) a`` and ``f(|k|) k_hat x a`` with no rotational shortcut; every
    node gets its own full generator.
    """
    x, w = np.polynomial.legendre.leggauss(n_axis)
    pieces = [(0.0, split), (split, kmax)]
    nodes = np.concatenate([0.5 * (b - a) * x + 0.5 * (b + a) for a, b in pieces])
    weights = np.concatenate([0.5 * (b - a) * w for a, b in pieces])
    times = np.asarray(times, dtype=float)
    total = np.zeros_like(times)
    for i, kx in enumerate(nodes):
        for j, ky in enumerate(nodes):
            for l, kz in enumerate(nodes):
                k = np.array([kx, ky, kz])
                f = float(profile(np.linalg.norm(k)))
                if f == 0.0:
                    continue
                a, b = _transverse_pair(k)
                u0 = ModeState.from_fields(f * a, f * b, material.n_e, material.n_m).to_vector()
                total += weights[i] * weights[j] * weights[l] * energy_curve(build_generator(material, k), u0, times)
    return 8.0 * total
