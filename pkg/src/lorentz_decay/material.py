"""Generalized Drude-Lorentz material models.

A material is described by vacuum constants ``eps0``, ``mu0`` and two lists of
oscillators (electric and magnetic branch).  Each oscillator ``(Omega, omega0,
alpha)`` contributes

    -Omega**2 / (omega**2 + 1j*alpha*omega - omega0**2)

to the relative susceptibility, and its time-domain kernel is the impulse
response of ``x'' + alpha x' + omega0**2 x = 0`` with ``x(0) = 0, x'(0) = 1``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Literal, Mapping, Sequence

import numpy as np

from .errors import (
    DuplicateOscillator,
    EmptyBranch,
    GridInLowerHalfPlane,
    NegativeDamping,
    NegativeResonance,
    NegativeTime,
    NonPositiveCoupling,
    NonPositiveVacuumConstant,
    PoleHit,
)

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib

Branch = Literal["electric", "magnetic"]
BRANCHES: tuple[str, str] = ("electric", "magnetic")

# Relative width of the band around alpha = 2*omega0 in which the kernel is
# evaluated by the critical formula plus a first-order correction.
NEAR_CRITICAL_REL = 1e-8

# Relative roundoff budget for the Herglotz sign test.
TOL_HERGLOTZ = 1e-12


@dataclass(frozen=True)
class Oscillator:
    """One Drude (``omega0 == 0``) or Lorentz (``omega0 > 0``) term.

    Parameters
    ----------
    Omega : float
        Coupling strength, must be positive.
    omega0 : float
        Resonance frequency, non-negative.
    alpha : float
        Damping rate, non-negative.
    """

    Omega: float
    omega0: float
    alpha: float

    @property
    def is_drude(self) -> bool:
        return self.omega0 == 0.0

    @property
    def discriminant(self) -> float:
        """``alpha**2 - 4*omega0**2``, factored to limit cancellation."""
        return (self.alpha - 2.0 * self.omega0) * (self.alpha + 2.0 * self.omega0)


@dataclass(frozen=True)
class MaterialParams:
    """Full coefficient set of a generalized Drude-Lorentz medium.

    Oscillator lists are stored as tuples so instances are hashable.
    """

    eps0: float = 1.0
    mu0: float = 1.0
    electric: tuple[Oscillator, ...] = field(default_factory=tuple)
    magnetic: tuple[Oscillator, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "eps0", float(self.eps0))
        object.__setattr__(self, "mu0", float(self.mu0))
        object.__setattr__(self, "electric", tuple(_as_oscillator(o) for o in self.electric))
        object.__setattr__(self, "magnetic", tuple(_as_oscillator(o) for o in self.magnetic))

    def branch(self, name: str) -> tuple[Oscillator, ...]:
        if name == "electric":
            return self.electric
        if name == "magnetic":
            return self.magnetic
        raise ValueError(f"unknown branch {name!r}")

    def vacuum(self, name: str) -> float:
        return self.eps0 if name == "electric" else self.mu0

    @property
    def n_e(self) -> int:
        return len(self.electric)

    @property
    def n_m(self) -> int:
        return len(self.magnetic)

    @property
    def oscillators(self) -> tuple[Oscillator, ...]:
        return self.electric + self.magnetic

    @property
    def is_pure_drude(self) -> bool:
        """True when every oscillator in both branches has ``omega0 == 0``."""
        return all(o.is_drude for o in self.oscillators)


def _as_oscillator(obj) -> Oscillator:
    if isinstance(obj, Oscillator):
        return obj
    if isinstance(obj, Mapping):
        return Oscillator(float(obj["Omega"]), float(obj["omega0"]), float(obj["alpha"]))
    Omega, omega0, alpha = obj
    return Oscillator(float(Omega), float(omega0), float(alpha))


def validate_material(raw: MaterialParams) -> MaterialParams:
    """Check the coefficient hypotheses and return ``raw`` unchanged.

    Raises
    ------
    NonPositiveVacuumConstant, NonPositiveCoupling, NegativeDamping,
    NegativeResonance, DuplicateOscillator, EmptyBranch
    """
    if not (np.isfinite(raw.eps0) and raw.eps0 > 0.0 and np.isfinite(raw.mu0) and raw.mu0 > 0.0):
        raise NonPositiveVacuumConstant(f"eps0={raw.eps0}, mu0={raw.mu0} must be positive")
    for name in BRANCHES:
        oscs = raw.branch(name)
        if len(oscs) == 0:
            raise EmptyBranch(f"{name} branch needs at least one oscillator")
        seen = set()
        for j, o in enumerate(oscs):
            if not (np.isfinite(o.Omega) and o.Omega > 0.0):
                raise NonPositiveCoupling(f"{name}[{j}]: Omega={o.Omega} must be > 0")
            if not (np.isfinite(o.alpha) and o.alpha >= 0.0):
                raise NegativeDamping(f"{name}[{j}]: alpha={o.alpha} must be >= 0")
            if not (np.isfinite(o.omega0) and o.omega0 >= 0.0):
                raise NegativeResonance(f"{name}[{j}]: omega0={o.omega0} must be >= 0")
            key = (o.alpha, o.omega0)
            if key in seen:
                raise DuplicateOscillator(f"{name}[{j}]: (alpha, omega0)={key} repeated")
            seen.add(key)
    return raw


# ---------------------------------------------------------------------------
# frequency domain


def _denominators(oscs: Sequence[Oscillator], omega: np.ndarray) -> np.ndarray:
    """``omega**2 + i alpha omega - omega0**2`` with shape ``(n_osc,) + omega.shape``."""
    alpha = np.array([o.alpha for o in oscs])[(...,) + (None,) * omega.ndim]
    w0 = np.array([o.omega0 for o in oscs])[(...,) + (None,) * omega.ndim]
    return omega**2 + 1j * alpha * omega - w0**2


def complex_response(material: MaterialParams, branch: Branch, omega):
    """Permittivity ``eps(omega)`` or permeability ``mu(omega)``.

    ``eps(omega) = eps0 * (1 - sum_j Omega_j**2 / (omega**2 + i alpha_j omega - omega0_j**2))``.
    Real ``omega`` is accepted as long as no denominator vanishes.

    Raises
    ------
    PoleHit
        If ``omega`` sits exactly on a pole (undamped resonance or ``omega = 0``
        with a Drude term).
    """
    oscs = material.branch(branch)
    w = np.asarray(omega, dtype=complex)
    den = _denominators(oscs, w)
    if np.any(den == 0):
        raise PoleHit(f"omega hits a pole of the {branch} response")
    Om2 = np.array([o.Omega**2 for o in oscs])[(...,) + (None,) * w.ndim]
    out = material.vacuum(branch) * (1.0 - np.sum(Om2 / den, axis=0))
    return out if w.ndim else complex(out)


def gamma(material: MaterialParams, branch: Branch, omega):
    """Boundary value ``gamma(omega) = Im(omega chi_hat(omega))`` on the real axis.

    ``gamma(omega) = sum_j alpha_j Omega_j**2 omega**2 / |omega**2 + i alpha_j omega - omega0_j**2|**2``.
    """
    w = np.asarray(omega, dtype=float)
    out = np.zeros_like(w)
    for o in material.branch(branch):
        if o.omega0 == 0.0:
            # omega**2 cancels against the Drude denominator omega (omega + i alpha)
            if o.alpha > 0:
                out = out + o.alpha * o.Omega**2 / (w**2 + o.alpha**2)
            continue
        den = np.abs(w**2 + 1j * o.alpha * w - o.omega0**2) ** 2
        if np.any(den == 0):
            raise PoleHit(f"omega hits an undamped resonance of the {branch} branch")
        out = out + o.alpha * o.Omega**2 * w**2 / den
    return out if w.ndim else float(out)


@dataclass(frozen=True)
class HerglotzReport:
    """Minima of ``Im(omega eps(omega))`` and ``Im(omega mu(omega))`` over a grid."""

    min_im_eps: float
    min_im_mu: float
    min_rel_eps: float
    min_rel_mu: float
    n_points: int
    tol: float = TOL_HERGLOTZ

    @property
    def passed(self) -> bool:
        return self.min_rel_eps >= -self.tol and self.min_rel_mu >= -self.tol


def herglotz_scan(material: MaterialParams, grid) -> HerglotzReport:
    """Sample the Herglotz property of ``omega eps`` and ``omega mu``.

    The relative minima divide by ``|omega * response|`` so that the verdict
    is a pure roundoff budget.
    """
    w = np.asarray(grid, dtype=complex).ravel()
    if w.size == 0 or np.any(w.imag <= 0):
        raise GridInLowerHalfPlane("every grid point needs Im(omega) > 0")
    vals = {}
    for name in BRANCHES:
        z = w * complex_response(material, name, w)
        im = z.imag
        rel = im / np.maximum(np.abs(z), 1e-300)
        vals[name] = (float(im.min()), float(rel.min()))
    return HerglotzReport(
        min_im_eps=vals["electric"][0],
        min_im_mu=vals["magnetic"][0],
        min_rel_eps=vals["electric"][1],
        min_rel_mu=vals["magnetic"][1],
        n_points=int(w.size),
    )


def default_herglotz_grid(n: int = 50, re_max: float = 10.0, im_max: float = 10.0) -> np.ndarray:
    """``n x n`` grid, linear in ``Re omega`` and log-spaced in ``Im omega``."""
    re = np.linspace(-re_max, re_max, n)
    im = np.geomspace(im_max * 1e-6, im_max, n)
    return (re[:, None] + 1j * im[None, :]).ravel()


# ---------------------------------------------------------------------------
# time domain


def _check_time(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise NegativeTime("kernels are defined for t >= 0")
    return t


def _impulse_and_rate(osc: Oscillator, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Impulse response ``g`` and its derivative ``g'``."""
    a, w0 = osc.alpha, osc.omega0
    D = osc.discriminant
    if abs(a - 2.0 * w0) < NEAR_CRITICAL_REL * max(a, 2.0 * w0, 1.0):
        # g = e^{-a t/2} S(t), S = sinh(sqrt(D) t/2)/(sqrt(D)/2) = t (1 + D t^2/24 + ...)
        e = np.exp(-0.5 * a * t)
        S = t * (1.0 + D * t**2 / 24.0)
        dS = 1.0 + D * t**2 / 8.0
        return e * S, e * (dS - 0.5 * a * S)
    if D > 0:
        # overdamped: rates r1 = (a - d)/2 <= r2 = (a + d)/2
        d = np.sqrt(D)
        r1 = 2.0 * w0**2 / (a + d)
        r2 = 0.5 * (a + d)
        e1 = np.exp(-r1 * t)
        q = np.expm1(-d * t) / d
        return -e1 * q, e1 * (1.0 + r2 * q)
    d = np.sqrt(-D)
    e = np.exp(-0.5 * a * t)
    s, c = np.sin(0.5 * d * t), np.cos(0.5 * d * t)
    return e * 2.0 * s / d, e * (c - (a / d) * s)


def susceptibility_kernel(osc: Oscillator, t, derivative: int = 0):
    """Time-domain kernel ``chi(t)`` of one oscillator, or one of its derivatives.

    Three regimes, with ``delta = sqrt(|alpha**2 - 4 omega0**2|)``:

    * ``alpha > 2 omega0``: ``2/delta sinh(delta t/2) exp(-alpha t/2)``
    * ``alpha < 2 omega0``: ``2/delta sin(delta t/2) exp(-alpha t/2)``
    * ``alpha = 2 omega0``: ``t exp(-alpha t/2)``

    Near the critical line the third form is used with a first-order
    correction in ``delta**2``.  Derivatives of order >= 2 follow from the
    oscillator equation ``g'' = -alpha g' - omega0**2 g``.

    Parameters
    ----------
    osc : Oscillator
    t : float or array_like
        Non-negative times.
    derivative : int
        Order of the time derivative, 0 to 4.
    """
    tt = _check_time(t)
    g, dg = _impulse_and_rate(osc, tt)
    ders = [g, dg]
    for _ in range(2, derivative + 1):
        ders.append(-osc.alpha * ders[-1] - osc.omega0**2 * ders[-2])
    out = ders[derivative]
    return out if tt.ndim else float(out)


def total_kernel(material: MaterialParams, branch: Branch, t, derivative: int = 0):
    """``chi(t) = sum_j Omega_j**2 chi_j(t)`` for one branch."""
    tt = _check_time(t)
    out = np.zeros_like(tt)
    for o in material.branch(branch):
        out = out + o.Omega**2 * susceptibility_kernel(o, tt, derivative)
    return out if tt.ndim else float(out)


# ---------------------------------------------------------------------------
# dissipation classes


class DissipationTag(str, enum.Enum):
    NON_DISSIPATIVE = "NonDissipative"
    WEAK_ONLY = "WeakOnly"
    STRONG = "Strong"


class FigotinCase(str, enum.Enum):
    ALL_ALPHA_ZERO = "AllAlphaZero"
    DRUDE_TERM_DAMPED = "DrudeTermDamped"
    NO_DAMPED_DRUDE_TERM = "NoDampedDrudeTerm"


@dataclass(frozen=True)
class DissipationClass:
    tag: DissipationTag
    figotin: bool
    figotin_case: FigotinCase

    @property
    def strong(self) -> bool:
        return self.tag is DissipationTag.STRONG

    @property
    def weak(self) -> bool:
        return self.tag is not DissipationTag.NON_DISSIPATIVE

    def as_dict(self) -> dict:
        return {"tag": self.tag.value, "figotin": self.figotin, "figotin_case": self.figotin_case.value}


def classify_dissipation(material: MaterialParams) -> DissipationClass:
    """Strong / weak dissipation tag plus the low-frequency case of ``gamma_e``.

    The case split looks at the electric branch: no damped term at all,
    a damped Drude term (``gamma_e`` bounded below near 0), or damping only
    on Lorentz terms (``gamma_e ~ C omega**2`` near 0).
    """
    alphas = [o.alpha for o in material.oscillators]
    if all(a > 0 for a in alphas):
        tag = DissipationTag.STRONG
    elif any(a > 0 for a in alphas):
        tag = DissipationTag.WEAK_ONLY
    else:
        tag = DissipationTag.NON_DISSIPATIVE
    damped = [o for o in material.electric if o.alpha > 0]
    if not damped:
        case = FigotinCase.ALL_ALPHA_ZERO
    elif any(o.omega0 == 0 for o in damped):
        case = FigotinCase.DRUDE_TERM_DAMPED
    else:
        case = FigotinCase.NO_DAMPED_DRUDE_TERM
    return DissipationClass(tag, case is FigotinCase.DRUDE_TERM_DAMPED, case)


# ---------------------------------------------------------------------------
# construction and IO


def drude_toy() -> MaterialParams:
    """Single damped Drude term in each branch, all coefficients 1."""
    return MaterialParams(1.0, 1.0, (Oscillator(1.0, 0.0, 1.0),), (Oscillator(1.0, 0.0, 1.0),))


def lorentz_toy(omega0: float = 1.0, alpha: float = 0.5, Omega: float = 1.0) -> MaterialParams:
    """Single damped Lorentz term in each branch."""
    osc = Oscillator(Omega, omega0, alpha)
    return MaterialParams(1.0, 1.0, (osc,), (osc,))


def material_from_dict(data: Mapping) -> MaterialParams:
    """Build and validate a material from a mapping (parsed TOML, JSON, ...)."""
    mat = MaterialParams(
        eps0=float(data.get("eps0", 1.0)),
        mu0=float(data.get("mu0", 1.0)),
        electric=tuple(_as_oscillator(o) for o in data.get("electric", ())),
        magnetic=tuple(_as_oscillator(o) for o in data.get("magnetic", ())),
    )
    return validate_material(mat)


def material_to_dict(material: MaterialParams) -> dict:
    def osc(o: Oscillator) -> dict:
        return {"Omega": o.Omega, "omega0": o.omega0, "alpha": o.alpha}

    return {
        "eps0": material.eps0,
        "mu0": material.mu0,
        "electric": [osc(o) for o in material.electric],
        "magnetic": [osc(o) for o in material.magnetic],
    }


def load_material(path) -> MaterialParams:
    """Read a TOML material file::

        eps0 = 1.0
        mu0 = 1.0
        electric = [{Omega = 1.0, omega0 = 0.0, alpha = 1.0}]
        magnetic = [{Omega = 1.0, omega0 = 0.0, alpha = 1.0}]
    """
    with open(Path(path), "rb") as fh:
        data = tomllib.load(fh)
    return material_from_dict(data)


def dumps_material(material: MaterialParams) -> str:
    """TOML text for ``material`` (inverse of ``load_material``)."""

    def row(o: Oscillator) -> str:
        return f"{{Omega = {o.Omega!r}, omega0 = {o.omega0!r}, alpha = {o.alpha!r}}}"

    def arr(oscs: Iterable[Oscillator]) -> str:
        return "[" + ", ".join(row(o) for o in oscs) + "]"

    return (
        f"eps0 = {material.eps0!r}\nmu0 = {material.mu0!r}\n"
        f"electric = {arr(material.electric)}\nmagnetic = {arr(material.magnetic)}\n"
    )
