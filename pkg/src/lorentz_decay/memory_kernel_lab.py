"""Convolution (memory-kernel) form of the constitutive laws.

The polarization is ``P_tot(t) = eps0 int_0^t chi_e(t - s) E(s) ds``.  This
module checks the kernel/ODE equivalence, the quadratic-form lemma

    Re int_0^t k'(t-s) u(s) conj(u'(t)) ds
        = 1/2 d/dt [ (k(t) - k(0)) |u(t)|^2 - int_0^t k'(t-s) |u(s) - u(t)|^2 ds ]
          - 1/2 k'(t) |u(t)|^2 + 1/2 int_0^t k''(t-s) |u(s) - u(t)|^2 ds

(valid for ``u(0) = 0``), and the general energy identity
``dL/dt + D = 0`` with ``L = E + E_ad`` built from ``chi'``, ``chi''``,
``chi'''`` and the time primitives ``E_p = int_0^t E``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg
from scipy.interpolate import make_interp_spline

from .errors import (
    GridTooCoarse,
    KernelMaterialMismatch,
    KernelNotC3,
    NegativeTime,
    NonzeroInitialValue,
)
from .material import MaterialParams, Oscillator, susceptibility_kernel
from .mode_dynamics import cross_matrix

DEFAULT_GAUSS = 6
POINTS_PER_PERIOD = 8


@dataclass(frozen=True)
class Realization:
    """State-space form ``chi'(t) = c . expm(A t) b`` of a kernel's derivative.

    With ``z' = A z + b u``, ``z(0) = 0`` one has
    ``int_0^t chi'(t - s) u(s) ds = c . z(t)``.
    """

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray

    @staticmethod
    def direct_sum(parts: Sequence["Realization"]) -> "Realization":
        return Realization(
            scipy.linalg.block_diag(*[p.A for p in parts]),
            np.concatenate([p.b for p in parts]),
            np.concatenate([p.c for p in parts]),
        )


@dataclass(frozen=True)
class KernelFunction:
    """Kernel ``chi`` with evaluators for its derivatives.

    ``derivatives[j]`` evaluates ``chi^(j)`` on an array of non-negative
    times; entries may be ``None`` when an order is unavailable.
    """

    derivatives: tuple
    label: str = ""
    realization: Realization | None = None
    period: float | None = None

    def __call__(self, t, order: int = 0):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise NegativeTime("kernels are evaluated at t >= 0")
        if order >= len(self.derivatives) or self.derivatives[order] is None:
            raise KernelNotC3(f"{self.label}: derivative of order {order} unavailable")
        return self.derivatives[order](t)

    @property
    def max_order(self) -> int:
        n = 0
        while n < len(self.derivatives) and self.derivatives[n] is not None:
            n += 1
        return n - 1

    def derivative_kernel(self) -> "KernelFunction":
        """The kernel ``chi'`` with derivatives shifted by one order."""
        return KernelFunction(tuple(self.derivatives[1:]), f"({self.label})'", None, self.period)


def oscillator_kernel(osc: Oscillator, weight: float = 1.0) -> KernelFunction:
    """``weight * chi_j`` for one oscillator (use ``weight = Omega**2`` for the physical term)."""
    ders = tuple((lambda t, j=j: weight * susceptibility_kernel(osc, t, j)) for j in range(5))
    A = np.array([[0.0, 1.0], [-osc.omega0**2, -osc.alpha]])
    real = Realization(A, np.array([0.0, 1.0]), np.array([0.0, weight]))
    D = osc.discriminant
    period = 4.0 * np.pi / np.sqrt(-D) if D < 0 else None
    return KernelFunction(ders, f"osc({osc.Omega},{osc.omega0},{osc.alpha})", real, period)


def material_kernel(material: MaterialParams, branch: str) -> KernelFunction:
    """``chi = sum_j Omega_j**2 chi_j`` for one branch of ``material``."""
    parts = [oscillator_kernel(o, o.Omega**2) for o in material.branch(branch)]
    ders = tuple((lambda t, j=j: sum(p.derivatives[j](t) for p in parts)) for j in range(5))
    periods = [p.period for p in parts if p.period is not None]
    return KernelFunction(
        ders,
        f"{branch} kernel",
        Realization.direct_sum([p.realization for p in parts]),
        min(periods) if periods else None,
    )


def drude_kernel(alpha: float) -> KernelFunction:
    """Coupling-free Drude kernel ``(1 - exp(-alpha t)) / alpha`` (``t`` when ``alpha = 0``)."""
    return oscillator_kernel(Oscillator(1.0, 0.0, alpha))


def lorentz_kernel(alpha: float, omega0: float) -> KernelFunction:
    return oscillator_kernel(Oscillator(1.0, omega0, alpha))


def saturating_kernel() -> KernelFunction:
    """``chi(t) = 2 - exp(-t)``: every sign condition holds with ``beta = 1``."""
    e = lambda t: np.exp(-t)  # noqa: E731
    ders = (lambda t: 2.0 - e(t), e, lambda t: -e(t), e, lambda t: -e(t))
    real = Realization(np.array([[-1.0]]), np.array([1.0]), np.array([1.0]))
    return KernelFunction(ders, "2 - exp(-t)", real)


def linear_kernel(Omega: float = 1.0) -> KernelFunction:
    """Non-dissipative Drude kernel ``Omega**2 t``."""
    W = Omega**2
    zero = lambda t: np.zeros_like(t)  # noqa: E731
    ders = (lambda t: W * t, lambda t: W + zero(t), zero, zero, zero)
    real = Realization(np.array([[0.0]]), np.array([1.0]), np.array([W]))
    return KernelFunction(ders, f"{W} t", real)


def exponential_kernel(rate: float = 1.0) -> KernelFunction:
    """``exp(-rate t)``; used as the ``k`` of the quadratic-form lemma."""
    ders = tuple((lambda t, j=j: (-rate) ** j * np.exp(-rate * t)) for j in range(5))
    return KernelFunction(ders, f"exp(-{rate} t)")


def tabulated_kernel(t, chi, label: str = "table") -> KernelFunction:
    """Quintic interpolating spline through tabulated ``chi`` values."""
    spl = make_interp_spline(np.asarray(t, float), np.asarray(chi, float), k=5)
    ders = tuple((lambda s, j=j: spl(s, nu=j)) for j in range(5))
    return KernelFunction(ders, label)


def constant_kernel(value: float = 1.0) -> KernelFunction:
    zero = lambda t: np.zeros_like(t)  # noqa: E731
    return KernelFunction((lambda t: value + zero(t), zero, zero, zero, zero), f"{value}")


# ---------------------------------------------------------------------------
# scalar trajectories and quadrature


@dataclass(frozen=True)
class ScalarTrajectory:
    """Samples ``u(t_i)`` on a grid starting at 0.

    ``evaluator`` and ``derivative`` are optional exact callables; when
    missing, values off the grid come from a quintic spline through the samples.
    """

    times: np.ndarray
    values: np.ndarray
    evaluator: Callable | None = None
    derivative: Callable | None = None

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or t.size < 2 or t[0] != 0.0 or np.any(np.diff(t) <= 0):
            raise ValueError("grid must start at 0 and increase strictly")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", np.asarray(self.values))

    @classmethod
    def from_function(cls, times, fn: Callable, dfn: Callable | None = None) -> "ScalarTrajectory":
        times = np.asarray(times, dtype=float)
        return cls(times, fn(times), fn, dfn)

    def _spline(self):
        v = self.values
        if np.iscomplexobj(v):
            re = make_interp_spline(self.times, v.real, k=5)
            im = make_interp_spline(self.times, v.imag, k=5)
            return lambda s, nu=0: re(s, nu=nu) + 1j * im(s, nu=nu)
        spl = make_interp_spline(self.times, v, k=5)
        return lambda s, nu=0: spl(s, nu=nu)

    def at(self, s) -> np.ndarray:
        if self.evaluator is not None:
            return self.evaluator(np.asarray(s, float))
        return self._spline()(s)

    def rate(self, s) -> np.ndarray:
        if self.derivative is not None:
            return self.derivative(np.asarray(s, float))
        return self._spline()(s, 1)


def gauss_nodes(times: np.ndarray, n_gauss: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes on every grid interval.

    Returns ``(nodes, weights, interval_index)`` flattened interval by interval.
    """
    x, w = np.polynomial.legendre.leggauss(n_gauss)
    a, b = times[:-1, None], times[1:, None]
    nodes = 0.5 * (b - a) * x + 0.5 * (b + a)
    weights = 0.5 * (b - a) * w
    idx = np.repeat(np.arange(times.size - 1), n_gauss)
    return nodes.ravel(), weights.ravel(), idx


def _history_sums(times, nodes, weights, idx, integrand: Callable[[int, np.ndarray], np.ndarray]) -> np.ndarray:
    """``int_0^{t_i} f_i(s) ds`` for every grid time ``t_i``.

    ``integrand(i, sel)`` returns ``f_i`` at ``nodes[sel]`` (shape ``(n_sel,) + extra``).
    """
    out = []
    for i in range(times.size):
        sel = idx < i
        if not np.any(sel):
            out.append(None)
            continue
        out.append(np.tensordot(weights[sel], integrand(i, sel), axes=(0, 0)))
    proto = next(o for o in out if o is not None) if any(o is not None for o in out) else 0.0
    return np.array([np.zeros_like(proto) if o is None else o for o in out])


def _check_resolution(kernel: KernelFunction, times: np.ndarray) -> None:
    if kernel.period is not None and np.max(np.diff(times)) > kernel.period / POINTS_PER_PERIOD:
        raise GridTooCoarse(f"step exceeds 1/{POINTS_PER_PERIOD} of the kernel period {kernel.period:.4g}")


def convolve_kernel(kernel: KernelFunction, drive: ScalarTrajectory, n_gauss: int = DEFAULT_GAUSS) -> ScalarTrajectory:
    """``P(t_i) = int_0^{t_i} chi(t_i - s) u(s) ds`` by Gauss-Legendre on each interval.

    Raises
    ------
    GridTooCoarse
        Fewer than 8 grid points per oscillation period of the kernel.
    """
    t = drive.times
    _check_resolution(kernel, t)
    nodes, weights, idx = gauss_nodes(t, n_gauss)
    u = drive.at(nodes)
    P = _history_sums(t, nodes, weights, idx, lambda i, sel: kernel(t[i] - nodes[sel]) * u[sel])
    return ScalarTrajectory(t, P)


def q_form_sides(kernel: KernelFunction, u: ScalarTrajectory, n_gauss: int = DEFAULT_GAUSS):
    """Left- and right-hand sides of the quadratic-form lemma on the grid of ``u``.

    The left side is the quadrature of its definition; the right side expands
    the time derivative of the bracket by the product and Leibniz rules.
    """
    t = u.times
    u0 = u.at(np.array([0.0]))[0]
    scale = max(float(np.max(np.abs(u.values))), 1e-300)
    if abs(u0) > 1e-12 * scale:
        raise NonzeroInitialValue(f"u(0) = {u0} must vanish")
    nodes, weights, idx = gauss_nodes(t, n_gauss)
    us = u.at(nodes)
    ut, dut = u.at(t), u.rate(t)

    conv = _history_sums(t, nodes, weights, idx, lambda i, sel: kernel(t[i] - nodes[sel], 1) * us[sel])
    lhs = np.real(conv * np.conj(dut))

    def diff2(i, sel, order):
        return kernel(t[i] - nodes[sel], order) * np.abs(us[sel] - ut[i]) ** 2

    I2 = _history_sums(t, nodes, weights, idx, lambda i, sel: diff2(i, sel, 2))
    J1 = _history_sums(t, nodes, weights, idx, lambda i, sel: kernel(t[i] - nodes[sel], 1) * (us[sel] - ut[i]))
    k0 = kernel(np.array([0.0]))[0]
    kt, k1t = kernel(t), kernel(t, 1)
    u2 = np.abs(ut) ** 2
    # d/dt of the bracket; the k'(0) |u(t) - u(t)|^2 boundary term vanishes
    dbracket = k1t * u2 + (kt - k0) * 2.0 * np.real(ut * np.conj(dut)) - I2 + 2.0 * np.real(J1 * np.conj(dut))
    rhs = 0.5 * dbracket - 0.5 * k1t * u2 + 0.5 * I2
    return lhs, rhs


def q_form_identity_residual(kernel: KernelFunction, u: ScalarTrajectory, n_gauss: int = DEFAULT_GAUSS) -> float:
    """``max |LHS - RHS|`` of the quadratic-form lemma over the grid.

    Raises
    ------
    NonzeroInitialValue
    """
    lhs, rhs = q_form_sides(kernel, u, n_gauss)
    return float(np.max(np.abs(lhs - rhs)))


# ---------------------------------------------------------------------------
# single-mode convolution Maxwell system


@dataclass(frozen=True)
class ModeTrajectory:
    """Exact single-mode trajectory of the convolution Maxwell system.

    The system ``eps0 E' = i k x H - eps0 (chi_e(0) E + int chi_e'(t-s) E(s) ds)``
    (and its magnetic twin) is closed with the kernels' state-space
    realizations and augmented with the primitives ``E_p``, ``H_p``; one
    matrix exponential then gives every quantity at any time.
    """

    matrix: np.ndarray
    x0: np.ndarray
    k: np.ndarray
    eps0: float
    mu0: float
    chi_e: KernelFunction
    chi_m: KernelFunction
    n_ze: int
    n_zm: int

    def evaluate(self, times) -> dict:
        ts = np.atleast_1d(np.asarray(times, dtype=float))
        X = scipy.linalg.expm(ts[:, None, None] * self.matrix[None]) @ self.x0
        dX = X @ self.matrix.T
        ze = 6 + 3 * self.n_ze
        zm = ze + 3 * self.n_zm
        return {
            "E": X[:, 0:3],
            "H": X[:, 3:6],
            "Edot": dX[:, 0:3],
            "Hdot": dX[:, 3:6],
            "Ep": X[:, zm : zm + 3],
            "Hp": X[:, zm + 3 : zm + 6],
        }


def _require_realization(kernel: KernelFunction) -> Realization:
    if kernel.realization is None:
        raise KernelNotC3(f"{kernel.label}: no state-space realization to simulate with")
    return kernel.realization


def simulate_convolution_mode(
    chi_e: KernelFunction,
    chi_m: KernelFunction,
    k,
    E0,
    H0,
    eps0: float = 1.0,
    mu0: float = 1.0,
) -> ModeTrajectory:
    """Build the exact propagator of one Fourier mode for given kernels."""
    re, rm = _require_realization(chi_e), _require_realization(chi_m)
    ne, nm = re.A.shape[0], rm.A.shape[0]
    I3 = np.eye(3)
    K = cross_matrix(k)
    n = 6 + 3 * ne + 3 * nm + 6
    G = np.zeros((n, n), dtype=complex)
    sE, sH = slice(0, 3), slice(3, 6)
    sze = slice(6, 6 + 3 * ne)
    szm = slice(6 + 3 * ne, 6 + 3 * ne + 3 * nm)
    sEp = slice(n - 6, n - 3)
    sHp = slice(n - 3, n)
    c0e = float(chi_e(np.array([0.0]))[0])
    c0m = float(chi_m(np.array([0.0]))[0])
    G[sE, sH] = (1j / eps0) * K
    G[sH, sE] = (-1j / mu0) * K
    G[sE, sE] = -c0e * I3
    G[sH, sH] = -c0m * I3
    G[sE, sze] = -np.kron(re.c[None, :], I3)
    G[sH, szm] = -np.kron(rm.c[None, :], I3)
    G[sze, sze] = np.kron(re.A, I3)
    G[szm, szm] = np.kron(rm.A, I3)
    G[sze, sE] = np.kron(re.b[:, None], I3)
    G[szm, sH] = np.kron(rm.b[:, None], I3)
    G[sEp, sE] = I3
    G[sHp, sH] = I3
    x0 = np.zeros(n, dtype=complex)
    x0[sE] = E0
    x0[sH] = H0
    return ModeTrajectory(G, x0, np.asarray(k, float), eps0, mu0, chi_e, chi_m, ne, nm)


def material_mode_trajectory(material: MaterialParams, k, E0, H0) -> ModeTrajectory:
    """Trajectory of the Drude-Lorentz mode with oscillators initially at rest."""
    return simulate_convolution_mode(
        material_kernel(material, "electric"),
        material_kernel(material, "magnetic"),
        k,
        E0,
        H0,
        material.eps0,
        material.mu0,
    )


@dataclass(frozen=True)
class GeneralIdentityResult:
    times: np.ndarray
    L: np.ndarray
    D: np.ndarray
    dLdt: np.ndarray
    E_ad: np.ndarray
    max_abs_residual: float
    residual: float  # relative to max(L(0), floor)

    @property
    def pointwise(self) -> np.ndarray:
        return self.dLdt + self.D


def _kernels_match(a: KernelFunction, b: KernelFunction, grid: np.ndarray) -> bool:
    for j in range(4):
        va, vb = a(grid, j), b(grid, j)
        if not np.allclose(va, vb, rtol=1e-10, atol=1e-12 * max(1.0, float(np.max(np.abs(vb))))):
            return False
    return True


def general_lyapunov_identity(
    chi_e: KernelFunction,
    chi_m: KernelFunction,
    trajectory: ModeTrajectory,
    times,
    n_gauss: int = DEFAULT_GAUSS,
) -> GeneralIdentityResult:
    """Assemble ``L``, ``D`` and ``dL/dt`` of the convolution energy identity.

    Per mode, with ``E_p = int_0^t E``:

    * ``E_ad = eps0/2 chi_e'(t)|E_p|^2 - eps0/2 int chi_e''(t-s)|E_p(t) - E_p(s)|^2 ds`` + magnetic
    * ``D = eps0 chi_e(0)|E|^2 - eps0/2 chi_e''(t)|E_p|^2 + eps0/2 int chi_e'''(t-s)|E_p(t) - E_p(s)|^2 ds`` + magnetic

    ``dL/dt`` is expanded analytically (product and Leibniz rules) with
    ``dE/dt`` from the trajectory, so the residual measures the memory
    integrals' quadrature error only.

    Raises
    ------
    KernelNotC3, KernelMaterialMismatch
    """
    t = np.asarray(times, dtype=float)
    if t[0] != 0.0 or np.any(np.diff(t) <= 0):
        raise ValueError("times must start at 0 and increase strictly")
    for ker in (chi_e, chi_m):
        if ker.max_order < 3:
            raise KernelNotC3(f"{ker.label}: need chi, chi', chi'', chi'''")
        vals = [ker(t, j) for j in range(4)]
        if not all(np.all(np.isfinite(v)) for v in vals):
            raise KernelNotC3(f"{ker.label}: non-finite derivative on the grid")
    probe = np.linspace(0.0, t[-1], 97)
    if not (_kernels_match(chi_e, trajectory.chi_e, probe) and _kernels_match(chi_m, trajectory.chi_m, probe)):
        raise KernelMaterialMismatch("kernels differ from the ones that generated the trajectory")

    nodes, weights, idx = gauss_nodes(t, n_gauss)
    at_t = trajectory.evaluate(t)
    at_s = trajectory.evaluate(nodes)

    L = np.zeros(t.size)
    D = np.zeros(t.size)
    dL = np.zeros(t.size)
    E_ad = np.zeros(t.size)
    for ker, vac, F, Fd, Fp in (
        (chi_e, trajectory.eps0, "E", "Edot", "Ep"),
        (chi_m, trajectory.mu0, "H", "Hdot", "Hp"),
    ):
        f, fd, fp = at_t[F], at_t[Fd], at_t[Fp]
        ps = at_s[Fp]
        c0 = float(ker(np.array([0.0]))[0])
        c1, c2, c3 = ker(t, 1), ker(t, 2), ker(t, 3)
        fp2 = np.sum(np.abs(fp) ** 2, axis=1)

        def sq(i, sel, order):
            return ker(t[i] - nodes[sel], order) * np.sum(np.abs(fp[i] - ps[sel]) ** 2, axis=1)

        def cross(i, sel):
            return ker(t[i] - nodes[sel], 2) * np.real(np.sum((fp[i] - ps[sel]) * np.conj(f[i]), axis=1))

        I2 = _history_sums(t, nodes, weights, idx, lambda i, sel: sq(i, sel, 2))
        I3 = _history_sums(t, nodes, weights, idx, lambda i, sel: sq(i, sel, 3))
        J2 = _history_sums(t, nodes, weights, idx, cross)

        ad = 0.5 * vac * c1 * fp2 - 0.5 * vac * I2
        E_ad += ad
        L += 0.5 * vac * np.sum(np.abs(f) ** 2, axis=1) + ad
        D += vac * c0 * np.sum(np.abs(f) ** 2, axis=1) - 0.5 * vac * c2 * fp2 + 0.5 * vac * I3
        dL += (
            vac * np.real(np.sum(f * np.conj(fd), axis=1))
            + 0.5 * vac * c2 * fp2
            + vac * c1 * np.real(np.sum(fp * np.conj(f), axis=1))
            - 0.5 * vac * I3
            - vac * J2
        )
    res = float(np.max(np.abs(dL + D)))
    return GeneralIdentityResult(t, L, D, dL, E_ad, res, res / max(float(L[0]), 1e-30))


# ---------------------------------------------------------------------------
# sign conditions


@dataclass(frozen=True)
class SignConditionReport:
    chi0_nonneg: bool
    chi1_nonneg: bool
    chi2_nonpos: bool
    chi3_nonneg: bool
    beta: float
    chi0_positive: bool
    ineq_first: bool
    ineq_second: bool

    @property
    def conds_26(self) -> bool:
        return self.chi0_nonneg and self.chi1_nonneg and self.chi2_nonpos and self.chi3_nonneg

    @property
    def conds_27(self) -> bool:
        return self.chi0_positive and self.ineq_first and self.ineq_second and self.beta > 0

    def as_dict(self) -> dict:
        return {
            "chi(0)>=0": self.chi0_nonneg,
            "chi'>=0": self.chi1_nonneg,
            "chi''<=0": self.chi2_nonpos,
            "chi'''>=0": self.chi3_nonneg,
            "monotone_conditions": self.conds_26,
            "chi(0)>0": self.chi0_positive,
            "-chi''>=beta chi'": self.ineq_first,
            "chi'''>=-beta chi''": self.ineq_second,
            "beta": self.beta,
            "exponential_conditions": self.conds_27,
        }


def sign_condition_check(kernel: KernelFunction, grid) -> SignConditionReport:
    """Pointwise sign tests on ``grid`` and the best constant ``beta``.

    ``beta`` is the infimum over the grid of ``-chi''/chi'`` (where
    ``chi' > 0``) and ``chi'''/(-chi'')`` (where ``chi'' < 0``), or 0 when
    no positive value works.
    """
    g = np.asarray(grid, dtype=float)
    c0 = float(kernel(np.array([0.0]))[0])
    c1, c2, c3 = kernel(g, 1), kernel(g, 2), kernel(g, 3)
    ok1 = bool(np.all(c1 >= 0))
    ok2 = bool(np.all(c2 <= 0))
    ok3 = bool(np.all(c3 >= 0))
    with np.errstate(divide="ignore", invalid="ignore"):
        r1 = np.where(c1 > 0, -c2 / c1, np.inf)
        r2 = np.where(c2 < 0, c3 / (-c2), np.inf)
    # where a denominator vanishes the inequality needs the numerator's sign
    feasible = bool(np.all((c1 > 0) | (c2 <= 0))) and bool(np.all((c2 < 0) | (c3 >= 0)))
    beta = float(min(np.min(r1), np.min(r2))) if feasible else 0.0
    if not np.isfinite(beta) or beta <= 0:
        beta = 0.0
    slack = 1.0 - 1e-12  # beta sits exactly on the binding ratio
    first = bool(np.all(-c2 >= slack * beta * c1)) and beta > 0
    second = bool(np.all(c3 >= -slack * beta * c2)) and beta > 0
    return SignConditionReport(c0 >= 0, ok1, ok2, ok3, beta, c0 > 0, first, second)


@dataclass(frozen=True)
class ExponentialDecayFit:
    """``delta_min = min D/L`` along a trajectory and the least-squares slope of ``log L``."""

    delta_min: float
    rate: float
    r_squared: float


def exponential_decay_fit(result: GeneralIdentityResult, floor: float = 1e-13) -> ExponentialDecayFit:
    """Check ``D >= delta L`` and fit ``L ~ C exp(-rate t)`` where ``L > floor L(0)``."""
    L, D, t = result.L, result.D, result.times
    keep = L > floor * L[0]
    if np.count_nonzero(keep) < 3:
        raise ValueError("fewer than 3 samples above the floor")
    logL = np.log(L[keep])
    slope, icept = np.polyfit(t[keep], logL, 1)
    pred = slope * t[keep] + icept
    ss_tot = float(np.sum((logL - logL.mean()) ** 2))
    r2 = 1.0 - float(np.sum((logL - pred) ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return ExponentialDecayFit(float(np.min(D[keep] / L[keep])), float(-slope), r2)
