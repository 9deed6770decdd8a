"""Total energy curves by radial quadrature and polynomial decay fits.

For isotropic transverse data the per-mode Lyapunov density depends on ``k``
only through ``|k|``: a rotation maps ``(k, E0, H0)`` to the canonical
representative ``k = (0, 0, kappa)`` with polarizations in the ``xy`` plane.
The total energy is then the one-dimensional integral

    L(t) = int_0^inf 4 pi kappa^2 L_kappa(t) dkappa

evaluated with composite Gauss-Legendre rules on log-spaced panels.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._parallel import parallel_map
from .errors import (
    DeclaredMomentMismatch,
    DegenerateWindow,
    EmptyQuadrature,
    NonPositiveCurveValues,
    NonTransversePolarization,
    QuadratureDoesNotStraddleOne,
    ZeroModeIncluded,
)
from .material import MaterialParams
from .mode_dynamics import ModeState, build_generator, energy_curve

KAPPA_MIN = 1e-4
SOBOLEV_DELTA = 0.05


# ---------------------------------------------------------------------------
# initial data


@dataclass(frozen=True)
class Profile:
    """Radial spectral amplitude ``f(kappa)`` of the initial fields.

    Kinds
    -----
    ``power_gaussian``
        ``kappa**p exp(-kappa**2)``; ``p = 0`` is the plain Gaussian.
    ``power_exponential``
        ``kappa**p exp(-kappa)``.
    ``sobolev_tail``
        ``kappa**p (1 + kappa**2)**(-(p + m + 3/2 + delta)/2)``: behaves like
        ``kappa**p`` at 0 and like ``kappa**-(m + 3/2 + delta)`` at infinity,
        so the data are in ``H^m`` but not in ``H^(m + delta)``.

    Every kind is evaluated at ``scale * kappa``.
    """

    kind: str
    p: int = 0
    m: int | None = None
    delta: float = SOBOLEV_DELTA
    amplitude: float = 1.0
    scale: float = 1.0

    def __call__(self, kappa):
        x = self.scale * np.asarray(kappa, dtype=float)
        if self.kind == "power_gaussian":
            f = x**self.p * np.exp(-(x**2))
        elif self.kind == "power_exponential":
            f = x**self.p * np.exp(-x)
        elif self.kind == "sobolev_tail":
            f = x**self.p * (1.0 + x**2) ** (-0.5 * (self.p + self.m + 1.5 + self.delta))
        else:
            raise ValueError(f"unknown profile kind {self.kind!r}")
        return self.amplitude * f

    @property
    def default_kappa_max(self) -> float:
        if self.kind == "power_gaussian":
            return (8.0 + np.sqrt(self.p)) / self.scale
        if self.kind == "power_exponential":
            return (60.0 + 2.0 * self.p) / self.scale
        return 1e4 / self.scale

    def label(self) -> str:
        if self.kind == "sobolev_tail":
            return f"sobolev_tail(m={self.m}, delta={self.delta}, p={self.p})"
        return f"{self.kind}(p={self.p})"


def gaussian(amplitude: float = 1.0) -> Profile:
    return Profile("power_gaussian", p=0, amplitude=amplitude)


def power_gaussian(p: int, amplitude: float = 1.0) -> Profile:
    return Profile("power_gaussian", p=p, amplitude=amplitude)


def power_exponential(p: int, amplitude: float = 1.0) -> Profile:
    return Profile("power_exponential", p=p, amplitude=amplitude)


def sobolev_tail(m: int, delta: float = SOBOLEV_DELTA, p: int = 0, amplitude: float = 1.0) -> Profile:
    return Profile("sobolev_tail", p=p, m=m, delta=delta, amplitude=amplitude)


POLARIZATIONS = {
    "e": ((1.0, 0.0, 0.0), (0.0, 0.0, 0.0)),
    "h": ((0.0, 0.0, 0.0), (0.0, 1.0, 0.0)),
    "eh": ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0)),
}


@dataclass(frozen=True)
class InitialDataSpec:
    """Isotropic initial data ``E0(k) = f(|k|) R_k e``, ``H0(k) = f(|k|) R_k h``.

    ``e`` and ``h`` are polarization vectors in the canonical frame where
    ``k`` points along ``z``; ``R_k`` is a rotation taking ``z`` to ``k/|k|``.
    Oscillator fields start at rest.

    Parameters
    ----------
    profile : Profile
    p : int
        Declared vanishing order of the spectrum at ``k = 0``.
    m : int or None
        Declared Sobolev order (``None`` for smooth, rapidly decaying data).
    polarization : str or pair of 3-vectors
        ``"e"``, ``"h"``, ``"eh"`` or explicit ``(e, h)``.
    """

    profile: Profile
    p: int = 0
    m: int | None = None
    polarization: object = "eh"

    def canonical_vectors(self) -> tuple[np.ndarray, np.ndarray]:
        pol = self.polarization
        e, h = POLARIZATIONS[pol] if isinstance(pol, str) else pol
        e = np.asarray(e, dtype=complex)
        h = np.asarray(h, dtype=complex)
        if e.shape != (3,) or h.shape != (3,) or e[2] != 0 or h[2] != 0:
            raise NonTransversePolarization("canonical polarizations must lie in the xy plane")
        if not (np.any(e) or np.any(h)):
            raise NonTransversePolarization("both polarization vectors vanish")
        return e, h

    def fields_at(self, kappa: float) -> tuple[np.ndarray, np.ndarray]:
        e, h = self.canonical_vectors()
        f = float(self.profile(kappa))
        return f * e, f * h


def moment_order_check(spec: InitialDataSpec, lo: float = 1e-4, hi: float = 1e-2) -> int:
    """Leading power of the profile at 0, from the log-log slope on ``[lo, hi]``.

    Raises
    ------
    DeclaredMomentMismatch
        If the measured order differs from ``spec.p``.
    """
    x = np.geomspace(lo, hi, 33)
    slope = np.polyfit(np.log(x), np.log(np.abs(spec.profile(x))), 1)[0]
    p_actual = int(round(slope))
    if p_actual != spec.p:
        raise DeclaredMomentMismatch(f"declared p={spec.p}, measured slope {slope:.4f}")
    return p_actual


# ---------------------------------------------------------------------------
# quadrature


@dataclass(frozen=True)
class QuadratureConfig:
    n_nodes: int = 256
    kappa_min: float = KAPPA_MIN
    kappa_max: float | None = None
    nodes_per_panel: int = 8


@dataclass(frozen=True)
class RadialQuadrature:
    """Nodes ``kappa_i`` and weights that already include ``4 pi kappa**2``."""

    nodes: np.ndarray
    weights: np.ndarray
    dkappa: np.ndarray  # plain Gauss-Legendre weights, without the shell factor


def radial_quadrature(config: QuadratureConfig, kappa_max: float) -> RadialQuadrature:
    """Composite Gauss-Legendre rule on log-spaced panels.

    Panels never cross ``kappa = 1`` so the rule splits exactly into a low-
    and a high-frequency part.
    """
    if config.n_nodes < config.nodes_per_panel:
        raise EmptyQuadrature("fewer nodes than one panel")
    lo, hi = config.kappa_min, kappa_max
    if not (0 < lo < hi):
        raise EmptyQuadrature(f"empty radial interval [{lo}, {hi}]")
    n_panels = config.n_nodes // config.nodes_per_panel
    if lo < 1.0 < hi:
        dec_lo, dec_hi = np.log10(1.0 / lo), np.log10(hi)
        n_lo = int(np.clip(round(n_panels * dec_lo / (dec_lo + dec_hi)), 1, n_panels - 1))
        edges = np.concatenate([np.geomspace(lo, 1.0, n_lo + 1), np.geomspace(1.0, hi, n_panels - n_lo + 1)[1:]])
    else:
        edges = np.geomspace(lo, hi, n_panels + 1)
    x, w = np.polynomial.legendre.leggauss(config.nodes_per_panel)
    a, b = edges[:-1, None], edges[1:, None]
    nodes = (0.5 * (b - a) * x + 0.5 * (b + a)).ravel()
    dk = (0.5 * (b - a) * w).ravel()
    return RadialQuadrature(nodes, 4.0 * np.pi * nodes**2 * dk, dk)


# ---------------------------------------------------------------------------
# curves


@dataclass(frozen=True)
class Curve:
    times: np.ndarray
    values: np.ndarray
    label: str = ""


@dataclass(frozen=True)
class EnergyCurve:
    """Total energy plus the per-node contributions behind it.

    ``contributions[i, j]`` is ``weight_i * L_{kappa_i}(t_j)``.
    """

    times: np.ndarray
    nodes: np.ndarray
    contributions: np.ndarray
    label: str = ""
    total: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "total", np.sum(self.contributions, axis=0))

    @property
    def curve(self) -> Curve:
        return Curve(self.times, self.total, self.label)


def _mode_energy(material: MaterialParams, kappa: float, E0, H0, times) -> np.ndarray:
    gen = build_generator(material, (0.0, 0.0, kappa))
    u0 = ModeState.from_fields(E0, H0, material.n_e, material.n_m).to_vector()
    return energy_curve(gen, u0, times)


def total_energy_curve(
    material: MaterialParams,
    spec: InitialDataSpec,
    times,
    quad: QuadratureConfig | None = None,
) -> EnergyCurve:
    """``L(t) = sum_i w_i L_{kappa_i}(t)`` on the canonical representatives.

    Raises
    ------
    EmptyQuadrature, NonTransversePolarization
    """
    quad = quad or QuadratureConfig()
    kmax = quad.kappa_max if quad.kappa_max is not None else spec.profile.default_kappa_max
    rule = radial_quadrature(quad, kmax)
    times = np.asarray(times, dtype=float)
    spec.canonical_vectors()

    def one(i: int) -> np.ndarray:
        E0, H0 = spec.fields_at(rule.nodes[i])
        return _mode_energy(material, rule.nodes[i], E0, H0, times)

    rows = parallel_map(one, range(rule.nodes.size))
    contrib = rule.weights[:, None] * np.array(rows)
    return EnergyCurve(times, rule.nodes, contrib, label=spec.profile.label())


def initial_energy(material: MaterialParams, spec: InitialDataSpec, quad: QuadratureConfig | None = None) -> float:
    """``0.5 int (eps0 |E0|^2 + mu0 |H0|^2) dk`` on the same radial rule."""
    quad = quad or QuadratureConfig()
    kmax = quad.kappa_max if quad.kappa_max is not None else spec.profile.default_kappa_max
    rule = radial_quadrature(quad, kmax)
    e, h = spec.canonical_vectors()
    f2 = spec.profile(rule.nodes) ** 2
    dens = 0.5 * (material.eps0 * np.sum(np.abs(e) ** 2) + material.mu0 * np.sum(np.abs(h) ** 2)) * f2
    return float(np.sum(rule.weights * dens))


def hf_lf_split(curve: EnergyCurve) -> tuple[Curve, Curve]:
    """Partial curves over ``|k| >= 1`` (high) and ``|k| < 1`` (low frequency).

    Raises
    ------
    QuadratureDoesNotStraddleOne
    """
    hi = curve.nodes >= 1.0
    if hi.all() or not hi.any():
        raise QuadratureDoesNotStraddleOne("radial nodes lie on one side of |k| = 1")
    hf = np.sum(curve.contributions[hi], axis=0)
    lf = np.sum(curve.contributions[~hi], axis=0)
    return Curve(curve.times, hf, curve.label + " |k|>=1"), Curve(curve.times, lf, curve.label + " |k|<1")


@dataclass(frozen=True)
class DecayFit:
    exponent: float
    window: tuple[float, float]
    r_squared: float
    n_points: int
    label: str = ""

    def as_dict(self) -> dict:
        return {
            "exponent": self.exponent,
            "window": list(self.window),
            "r_squared": self.r_squared,
            "n_points": self.n_points,
            "label": self.label,
        }


def last_decade(times) -> tuple[float, float]:
    t_hi = float(np.max(times))
    return t_hi / 10.0, t_hi


def fit_decay_exponent(curve, window=None) -> DecayFit:
    """Least-squares slope of ``log L`` against ``log t`` on ``window``.

    ``curve`` is a ``Curve``, an ``EnergyCurve`` or a ``(times, values)``
    pair; ``window`` defaults to the last simulated decade.

    Raises
    ------
    DegenerateWindow, NonPositiveCurveValues
    """
    if isinstance(curve, EnergyCurve):
        curve = curve.curve
    if isinstance(curve, Curve):
        times, values, label = curve.times, curve.values, curve.label
    else:
        times, values = curve
        label = ""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    lo, hi = window if window is not None else last_decade(times)
    if not (0 < lo < hi):
        raise DegenerateWindow(f"window [{lo}, {hi}] is empty or touches t = 0")
    sel = (times >= lo * (1 - 1e-12)) & (times <= hi * (1 + 1e-12))
    if np.unique(times[sel]).size < 2:
        raise DegenerateWindow(f"fewer than two samples in [{lo}, {hi}]")
    if np.any(values[sel] <= 0):
        raise NonPositiveCurveValues("log-log fit needs positive values")
    x, y = np.log(times[sel]), np.log(values[sel])
    slope, icpt = np.polyfit(x, y, 1)
    ss_res = float(np.sum((y - (slope * x + icpt)) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return DecayFit(float(slope), (float(lo), float(hi)), float(np.clip(r2, 0.0, 1.0)), int(sel.sum()), label)


def hf_envelope_constant(m: float, sigma: float) -> float:
    """``sup_{r>0} r**m exp(-sigma r) = (m / (sigma e))**m``."""
    return float((m / (sigma * np.e)) ** m)


# ---------------------------------------------------------------------------
# bounded domains


@dataclass(frozen=True)
class DiscreteMode:
    k: float
    weight: float = 1.0
    amplitude: float = 1.0


def cavity_spectrum(n_max: int, m: int, delta: float = SOBOLEV_DELTA) -> list[DiscreteMode]:
    """Modes ``k_n = n`` with amplitudes ``n**-(m + 1/2 + delta)``.

    Then ``sum_n n**(2m) |a_n|**2`` converges while the same sum with
    ``m + delta`` diverges, the discrete analogue of ``sobolev_tail``.
    """
    n = np.arange(1, n_max + 1, dtype=float)
    return [DiscreteMode(float(k), 1.0, float(k ** -(m + 0.5 + delta))) for k in n]


def discrete_spectrum_curve(
    material: MaterialParams,
    modes: Sequence[DiscreteMode],
    times,
    polarization="eh",
) -> Curve:
    """``L(t) = sum_n weight_n L_{k_n}(t)`` for a user-supplied spectrum.

    Raises
    ------
    ZeroModeIncluded
        For any ``k_n = 0`` (the kernel of the curl is excluded).
    """
    if len(modes) == 0:
        raise EmptyQuadrature("empty mode list")
    ks = np.array([md.k for md in modes], dtype=float)
    if np.any(ks < 0):
        raise ValueError("mode wavenumbers must be >= 0")
    if np.any(ks == 0):
        raise ZeroModeIncluded("k_n = 0 lies in the kernel of the curl")
    spec = InitialDataSpec(gaussian(), polarization=polarization)
    e, h = spec.canonical_vectors()
    times = np.asarray(times, dtype=float)

    def one(i: int) -> np.ndarray:
        md = modes[i]
        return md.weight * _mode_energy(material, md.k, md.amplitude * e, md.amplitude * h, times)

    rows = parallel_map(one, range(len(modes)))
    return Curve(times, np.sum(np.array(rows), axis=0), "discrete spectrum")
