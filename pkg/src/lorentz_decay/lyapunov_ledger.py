"""Energy, Lyapunov and decay densities of orders 0-2 and their certification.

The order-``j`` densities are the order-0 formulas evaluated on the ``j``-th
time derivative of the state:

    E_j      = 0.5 (eps0 |d^j E|^2 + mu0 |d^j H|^2)
    EOmega_j = 0.5 sum eps0 Omega^2 (|d^j Pdot|^2 + omega0^2 |d^j P|^2) + magnetic
    D_j      = sum eps0 alpha Omega^2 |d^j Pdot|^2 + magnetic
    L_j      = E_j + EOmega_j

and the cumulated forms weight order ``j`` by ``<k>^(-2j)``.  Along any
trajectory ``dL_j/dt + D_j = 0``; the derivative of ``L_j`` is evaluated as
``Re <U_j, U_{j+1}>_w`` from the exact derivative ladder.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EmptyTimeGrid,
    LadderTooShort,
    NotStronglyDissipative,
    ZeroDecayDensity,
    ZeroInitialData,
    ZeroWaveVectorForLorentz,
)
from ._parallel import parallel_map
from .material import MaterialParams, classify_dissipation
from .mode_dynamics import (
    Generator,
    ModeState,
    build_generator,
    ladder_vectors,
    propagate,
    random_state,
    sample_times,
)

RESIDUAL_FLOOR = 1e-30
# Samples with L^(n)(t) below this fraction of L^(n)(0) sit at the roundoff
# floor of the propagator and are excluded from ratio statistics.
RATIO_FLOOR = 1e-22
DEFAULT_GRID_POINTS = 64
DEFAULT_HORIZON = 50.0
DEFAULT_SWEEP_KNORMS = np.geomspace(0.05, 20.0, 30)


@dataclass(frozen=True)
class DensityLedger:
    """All densities of one mode at one time.

    Arrays are indexed by order ``j = 0, 1, 2``; the ``*_cum`` arrays by
    cumulation order ``n = 0, 1, 2`` (``n = 0`` repeats order 0).
    """

    k: np.ndarray
    t: float
    E: np.ndarray
    EOmega: np.ndarray
    L: np.ndarray
    D: np.ndarray
    E_cum: np.ndarray
    EOmega_cum: np.ndarray
    L_cum: np.ndarray
    D_cum: np.ndarray


def _split_densities(gen: Generator, U: np.ndarray):
    """Field energy, oscillator energy and decay density of flat states ``U``."""
    a2 = np.abs(U) ** 2
    wf = np.where(gen.field_mask, gen.weights, 0.0)
    wo = np.where(gen.field_mask, 0.0, gen.weights)
    return 0.5 * a2 @ wf, 0.5 * a2 @ wo, a2 @ gen.decay_weights


def cumulate(values: np.ndarray, kbracket: float) -> np.ndarray:
    """``X_cum[n] = sum_{j<=n} <k>^(-2j) X[j]`` along the first axis."""
    w = kbracket ** (-2.0 * np.arange(values.shape[0]))
    return np.cumsum(w.reshape((-1,) + (1,) * (values.ndim - 1)) * values, axis=0)


def densities(material: MaterialParams, k, ladder, t: float = 0.0) -> DensityLedger:
    """Densities of orders 0-2 from a derivative ladder ``[U, dU, d2U, ...]``.

    Parameters
    ----------
    ladder : sequence of ModeState or array of flat vectors
        At least three entries.
    """
    if len(ladder) < 3:
        raise LadderTooShort("need the state and its first two time derivatives")
    gen = build_generator(material, k)
    U = np.array([s.to_vector() if isinstance(s, ModeState) else s for s in ladder[:3]])
    E, EO, D = _split_densities(gen, U)
    kb = gen.kbracket
    return DensityLedger(
        k=gen.k,
        t=float(t),
        E=E,
        EOmega=EO,
        L=E + EO,
        D=D,
        E_cum=cumulate(E, kb),
        EOmega_cum=cumulate(EO, kb),
        L_cum=cumulate(E + EO, kb),
        D_cum=cumulate(D, kb),
    )


@dataclass
class LedgerTrajectory:
    """Densities along a time grid, arrays of shape ``(3, n_times)``."""

    times: np.ndarray
    L: np.ndarray
    D: np.ndarray
    dLdt: np.ndarray
    kbracket: float

    def cumulated(self, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(L^(n), D^(n), dL^(n)/dt)`` on the grid."""
        return (
            cumulate(self.L, self.kbracket)[n],
            cumulate(self.D, self.kbracket)[n],
            cumulate(self.dLdt, self.kbracket)[n],
        )


def ledger_trajectory(gen: Generator, state0: ModeState, times) -> LedgerTrajectory:
    """Orders 0-2 of ``L``, ``D`` and ``dL/dt`` along the exact trajectory."""
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        raise EmptyTimeGrid("time grid is empty")
    U = propagate(gen, state0.to_vector(), times)
    lad = ladder_vectors(gen, U, 3)  # (4, n_times, dim)
    a2 = np.abs(lad[:3]) ** 2
    L = 0.5 * a2 @ gen.weights
    D = a2 @ gen.decay_weights
    dL = np.real(np.sum(np.conj(lad[:3]) * gen.weights * lad[1:], axis=-1))
    return LedgerTrajectory(times, L, D, dL, gen.kbracket)


@dataclass(frozen=True)
class IdentityReport:
    """Residuals of ``dL/dt + D = 0`` for orders 0, 1, 2 and the cumulated forms.

    Keys are ``"0"``, ``"1"``, ``"2"``, ``"cum1"``, ``"cum2"``.
    """

    times: np.ndarray
    max_abs_residual: dict
    normalizer: dict

    @property
    def relative(self) -> dict:
        return {key: self.max_abs_residual[key] / self.normalizer[key] for key in self.max_abs_residual}

    @property
    def worst(self) -> float:
        return max(self.relative.values())


def identity_residual(material: MaterialParams, k, state0: ModeState, times) -> IdentityReport:
    """Check the three energy identities and their cumulated combinations.

    Raises
    ------
    EmptyTimeGrid
    """
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        raise EmptyTimeGrid("time grid is empty")
    if np.any(np.diff(times) <= 0) or times[0] < 0:
        raise ValueError("times must be non-negative and strictly increasing")
    traj = ledger_trajectory(build_generator(material, k), state0, times)
    res, norm = {}, {}
    for j in range(3):
        res[str(j)] = float(np.max(np.abs(traj.dLdt[j] + traj.D[j])))
        norm[str(j)] = max(float(traj.L[j, 0]), RESIDUAL_FLOOR)
    for n in (1, 2):
        L, D, dL = traj.cumulated(n)
        res[f"cum{n}"] = float(np.max(np.abs(dL + D)))
        norm[f"cum{n}"] = max(float(L[0]), RESIDUAL_FLOOR)
    return IdentityReport(times, res, norm)


# ---------------------------------------------------------------------------
# comparison lemmas


def lemma_order_and_weight(material: MaterialParams, k) -> tuple[int, float]:
    """Cumulation order ``n`` and weight ``w(k)`` of the comparison lemma.

    Pure Drude materials use ``n = 1`` and ``w = <k>^2``; anything with a
    Lorentz term uses ``n = 2`` and ``w = <k>^2 + |k|^-2``.
    """
    k = np.asarray(k, dtype=float)
    kk = float(np.dot(k, k))
    if material.is_pure_drude:
        return 1, 1.0 + kk
    if kk == 0.0:
        raise ZeroWaveVectorForLorentz("the Lorentz weight <k>^2 + |k|^-2 is infinite at k = 0")
    return 2, 1.0 + kk + 1.0 / kk


def _require_strong(material: MaterialParams) -> None:
    cls = classify_dissipation(material)
    if not cls.strong:
        raise NotStronglyDissipative(f"material is {cls.tag.value}; every alpha must be > 0")


def default_times(material: MaterialParams, k, n_points: int = DEFAULT_GRID_POINTS) -> np.ndarray:
    """``0`` plus log-spaced points up to ``DEFAULT_HORIZON * w(k)``."""
    _, w = lemma_order_and_weight(material, k)
    return sample_times(DEFAULT_HORIZON * w, n_points)


@dataclass(frozen=True)
class RatioTrace:
    """Time series behind ``lemma_ratio``."""

    times: np.ndarray
    L: np.ndarray
    D: np.ndarray
    order: int
    weight: float
    valid: np.ndarray

    @property
    def ratio(self) -> np.ndarray:
        return self.L / (self.weight * self.D)

    @property
    def sup(self) -> float:
        return float(np.max(self.ratio[self.valid]))


def lemma_trace(material: MaterialParams, k, state0: ModeState, times=None, weighted: bool = True) -> RatioTrace:
    """Cumulated ``L^(n)`` and ``D^(n)`` along a trajectory.

    With ``weighted=False`` the Lorentz weight drops its ``|k|^-2`` term
    (only ``<k>^2`` is kept), which exposes the small-``k`` blow-up.
    """
    _require_strong(material)
    n, w = lemma_order_and_weight(material, k)
    if not weighted:
        w = 1.0 + float(np.dot(k, k))
    if times is None:
        times = default_times(material, k)
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        raise EmptyTimeGrid("time grid is empty")
    traj = ledger_trajectory(build_generator(material, k), state0, times)
    L, D, _ = traj.cumulated(n)
    if not np.any(L > 0):
        raise ZeroDecayDensity("zero state")
    valid = (L > RATIO_FLOOR * L[0]) & (D > 0)
    if not np.any(valid):
        raise ZeroDecayDensity("decay density vanishes on the whole grid")
    return RatioTrace(times, L, D, n, w, valid)


def lemma_ratio(material: MaterialParams, k, state0: ModeState, times=None) -> float:
    """``sup_t L^(n)(t) / (w(k) D^(n)(t))`` over the time grid.

    Raises
    ------
    NotStronglyDissipative, ZeroWaveVectorForLorentz, ZeroDecayDensity
    """
    return lemma_trace(material, k, state0, times).sup


def initial_bound_ratio(material: MaterialParams, k, E0, H0) -> float:
    """``L^(2)(0) / (|E0|^2 + |H0|^2)`` for data with oscillators at rest.

    Raises
    ------
    ZeroInitialData
    """
    E0 = np.asarray(E0, dtype=complex)
    H0 = np.asarray(H0, dtype=complex)
    norm = float(np.sum(np.abs(E0) ** 2) + np.sum(np.abs(H0) ** 2))
    if norm == 0.0:
        raise ZeroInitialData("E0 and H0 are both zero")
    gen = build_generator(material, k)
    u0 = ModeState.from_fields(E0, H0, material.n_e, material.n_m).to_vector()
    lad = ladder_vectors(gen, u0, 2)
    L = 0.5 * (np.abs(lad) ** 2) @ gen.weights
    return float(cumulate(L, gen.kbracket)[2] / norm)


# ---------------------------------------------------------------------------
# empirical constants and the Gronwall certificate


@dataclass(frozen=True)
class LemmaSweep:
    """Per-(k, state) suprema of the lemma ratio."""

    knorms: np.ndarray
    sups: np.ndarray  # shape (n_k, n_states)
    seed: int

    @property
    def constant(self) -> float:
        return float(np.max(self.sups))

    @property
    def spread(self) -> float:
        """``max / median`` of all suprema."""
        return float(np.max(self.sups) / np.median(self.sups))

    @property
    def sigma_star(self) -> float:
        return 1.0 / self.constant


def sweep_directions(n: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal((n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def sweep_cases(material: MaterialParams, knorms, n_states: int = 20, seed: int = 0) -> list[tuple[np.ndarray, ModeState]]:
    """The ``(k, state)`` pairs of a lemma sweep, in sweep order.

    Each ``|k|`` gets one random direction; states are random transverse
    fields with random oscillator components.  The stream is Philox keyed by
    ``seed``: directions first, then states ``|k|`` by ``|k|``.
    """
    from .sampling import make_rng

    knorms = np.asarray(knorms, dtype=float)
    rng = make_rng(seed)
    dirs = sweep_directions(knorms.size, rng)
    cases = []
    for kn, d in zip(knorms, dirs):
        k = kn * d
        cases.extend((k, random_state(rng, material.n_e, material.n_m, k)) for _ in range(n_states))
    return cases


def lemma_sweep(
    material: MaterialParams,
    knorms=None,
    n_states: int = 20,
    seed: int = 0,
    weighted: bool = True,
) -> LemmaSweep:
    """Empirical lemma constant over a ``|k|`` grid and random transverse states.

    Raises
    ------
    NotStronglyDissipative, ZeroWaveVectorForLorentz, ZeroDecayDensity
    """
    _require_strong(material)
    if knorms is None:
        knorms = DEFAULT_SWEEP_KNORMS
    knorms = np.asarray(knorms, dtype=float)
    cases = sweep_cases(material, knorms, n_states, seed)
    sups = parallel_map(lambda c: lemma_trace(material, c[0], c[1], weighted=weighted).sup, cases)
    return LemmaSweep(knorms, np.array(sups).reshape(knorms.size, n_states), seed)


@functools.lru_cache(maxsize=32)
def certified_sigma(material: MaterialParams, seed: int = 0) -> float:
    """``sigma* = 1 / C`` with ``C`` the default-sweep lemma constant (cached)."""
    return lemma_sweep(material, seed=seed).sigma_star


@dataclass(frozen=True)
class GronwallCertificate:
    sigma_fit: float
    bound_holds: bool
    sigma_star: float
    weight: float
    order: int
    max_excess: float  # max of L(t) / bound(t); <= 1 when the bound holds


def gronwall_certificate(
    material: MaterialParams,
    k,
    state0: ModeState,
    times=None,
    sigma_star: float | None = None,
    tail_fraction: float = 0.25,
    rtol: float = 1e-9,
) -> GronwallCertificate:
    """Check ``L^(n)(t) <= L^(n)(0) exp(-sigma* t / w(k))`` on the grid.

    ``sigma_fit`` is ``w(k)`` times minus the least-squares slope of
    ``log L^(n)`` over the last ``tail_fraction`` of the valid samples.

    Raises
    ------
    NotStronglyDissipative, ZeroWaveVectorForLorentz, ZeroDecayDensity
    """
    tr = lemma_trace(material, k, state0, times)
    if sigma_star is None:
        sigma_star = certified_sigma(material)
    bound = tr.L[0] * np.exp(-sigma_star * tr.times / tr.weight)
    # samples below the roundoff floor are compared against the floor itself
    floor = RATIO_FLOOR * tr.L[0]
    excess = tr.L / np.maximum(bound, floor)
    holds = bool(np.all(tr.L <= np.maximum(bound, floor) * (1.0 + rtol)))
    idx = np.flatnonzero(tr.valid & (tr.times > 0))
    tail = idx[-max(2, int(np.ceil(tail_fraction * idx.size))) :]
    slope = np.polyfit(tr.times[tail], np.log(tr.L[tail]), 1)[0]
    return GronwallCertificate(
        sigma_fit=float(-slope * tr.weight),
        bound_holds=holds,
        sigma_star=float(sigma_star),
        weight=tr.weight,
        order=tr.order,
        max_excess=float(np.max(excess)),
    )
