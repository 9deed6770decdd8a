"""Exact per-wavevector evolution of the Fourier-space Drude-Lorentz system.

For a fixed wavevector ``k`` the fields obey the linear ODE ``dU/dt = G U``
with

    dE/dt      = (i/eps0) k x H - sum_j Omega_j**2 Pdot_j
    dH/dt      = -(i/mu0) k x E - sum_l Omega_l**2 Mdot_l
    dP_j/dt    = Pdot_j
    dPdot_j/dt = E - alpha_j Pdot_j - omega0_j**2 P_j

and the analogous magnetic oscillator equations.  The flat state vector is
ordered ``E, H, P_1..P_Ne, Pdot_1..Pdot_Ne, M_1..M_Nm, Mdot_1..Mdot_Nm``, each
entry a complex 3-vector, so the dimension is ``6 + 6 Ne + 6 Nm``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import EigensolveFailure, NegativeTime, NonFiniteTime, StateShapeMismatch
from .material import MaterialParams

TOL_SPEC = 1e-10
# Eigenvector condition number above which energy curves fall back to expm.
_EIG_COND_MAX = 1e6


def cross_matrix(k) -> np.ndarray:
    """Matrix ``K`` with ``K @ v == np.cross(k, v)``."""
    k1, k2, k3 = np.asarray(k, dtype=float)
    return np.array([[0.0, -k3, k2], [k3, 0.0, -k1], [-k2, k1, 0.0]])


def bracket_k(k) -> float:
    """Japanese bracket ``<k> = sqrt(1 + |k|**2)``."""
    return float(np.sqrt(1.0 + np.dot(k, k)))


@dataclass(frozen=True)
class ModeState:
    """Complex fields of one Fourier mode.

    ``P``, ``Pdot`` have shape ``(Ne, 3)`` and ``M``, ``Mdot`` shape ``(Nm, 3)``.
    """

    E: np.ndarray
    H: np.ndarray
    P: np.ndarray
    Pdot: np.ndarray
    M: np.ndarray
    Mdot: np.ndarray

    def __post_init__(self):
        for name in ("E", "H"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=complex).reshape(3))
        for name in ("P", "Pdot", "M", "Mdot"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=complex).reshape(-1, 3))
        if self.P.shape != self.Pdot.shape or self.M.shape != self.Mdot.shape:
            raise StateShapeMismatch("oscillator field counts disagree")

    @property
    def n_e(self) -> int:
        return self.P.shape[0]

    @property
    def n_m(self) -> int:
        return self.M.shape[0]

    @classmethod
    def zeros(cls, n_e: int, n_m: int) -> "ModeState":
        z3 = np.zeros(3, complex)
        return cls(z3, z3, np.zeros((n_e, 3)), np.zeros((n_e, 3)), np.zeros((n_m, 3)), np.zeros((n_m, 3)))

    @classmethod
    def from_fields(cls, E0, H0, n_e: int, n_m: int) -> "ModeState":
        """State with the given fields and all oscillator fields at rest."""
        z = cls.zeros(n_e, n_m)
        return cls(E0, H0, z.P, z.Pdot, z.M, z.Mdot)

    def to_vector(self) -> np.ndarray:
        return np.concatenate(
            [self.E, self.H, self.P.ravel(), self.Pdot.ravel(), self.M.ravel(), self.Mdot.ravel()]
        )

    @classmethod
    def from_vector(cls, vec, n_e: int, n_m: int) -> "ModeState":
        v = np.asarray(vec, dtype=complex)
        if v.shape != (6 + 6 * n_e + 6 * n_m,):
            raise StateShapeMismatch(f"vector of shape {v.shape} does not fit Ne={n_e}, Nm={n_m}")
        i = 6
        P = v[i : i + 3 * n_e].reshape(n_e, 3)
        i += 3 * n_e
        Pd = v[i : i + 3 * n_e].reshape(n_e, 3)
        i += 3 * n_e
        M = v[i : i + 3 * n_m].reshape(n_m, 3)
        i += 3 * n_m
        Md = v[i : i + 3 * n_m].reshape(n_m, 3)
        return cls(v[0:3], v[3:6], P, Pd, M, Md)

    def to_real(self) -> np.ndarray:
        """Flat real vector with real and imaginary parts interleaved."""
        v = self.to_vector()
        return np.column_stack([v.real, v.imag]).ravel()

    @classmethod
    def from_real(cls, flat, n_e: int, n_m: int) -> "ModeState":
        r = np.asarray(flat, dtype=float).reshape(-1, 2)
        return cls.from_vector(r[:, 0] + 1j * r[:, 1], n_e, n_m)

    def fields(self) -> list[np.ndarray]:
        """All 3-vector components in storage order."""
        return [self.E, self.H, *self.P, *self.Pdot, *self.M, *self.Mdot]

    def scaled(self, c: complex) -> "ModeState":
        return ModeState(c * self.E, c * self.H, c * self.P, c * self.Pdot, c * self.M, c * self.Mdot)


@dataclass(frozen=True)
class Layout:
    """Index bookkeeping for the flat state vector."""

    n_e: int
    n_m: int

    @property
    def dim(self) -> int:
        return 6 + 6 * self.n_e + 6 * self.n_m

    @property
    def n_blocks(self) -> int:
        return self.dim // 3

    def E(self) -> slice:
        return slice(0, 3)

    def H(self) -> slice:
        return slice(3, 6)

    def P(self, j: int) -> slice:
        s = 6 + 3 * j
        return slice(s, s + 3)

    def Pdot(self, j: int) -> slice:
        s = 6 + 3 * self.n_e + 3 * j
        return slice(s, s + 3)

    def M(self, l: int) -> slice:
        s = 6 + 6 * self.n_e + 3 * l
        return slice(s, s + 3)

    def Mdot(self, l: int) -> slice:
        s = 6 + 6 * self.n_e + 3 * self.n_m + 3 * l
        return slice(s, s + 3)


@dataclass(frozen=True)
class Generator:
    """Dense complex generator ``G`` of one Fourier mode, ``dU/dt = G U``.

    Attributes
    ----------
    matrix : ndarray, shape (dim, dim)
    k : ndarray, shape (3,)
    material : MaterialParams
    weights : ndarray, shape (dim,)
        Energy weights: ``L = 0.5 * sum(weights * |U|**2)``.
    decay_weights : ndarray, shape (dim,)
        Dissipation weights: ``D = sum(decay_weights * |U|**2)``.
    field_mask : ndarray of bool
        Entries belonging to ``E`` and ``H``.
    inert : ndarray of bool
        Drude polarization/magnetization positions.  They carry no energy and
        no other equation reads them.
    """

    matrix: np.ndarray
    k: np.ndarray
    material: MaterialParams
    weights: np.ndarray
    decay_weights: np.ndarray
    field_mask: np.ndarray
    inert: np.ndarray

    @property
    def layout(self) -> Layout:
        return Layout(self.material.n_e, self.material.n_m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def kbracket(self) -> float:
        return bracket_k(self.k)

    @property
    def knorm(self) -> float:
        return float(np.linalg.norm(self.k))


def build_generator(material: MaterialParams, k) -> Generator:
    """Assemble ``G`` for ``material`` at wavevector ``k``."""
    k = np.asarray(k, dtype=float).reshape(3)
    lay = Layout(material.n_e, material.n_m)
    n = lay.dim
    G = np.zeros((n, n), dtype=complex)
    w = np.zeros(n)
    d = np.zeros(n)
    inert = np.zeros(n, dtype=bool)
    I3 = np.eye(3)
    K = cross_matrix(k)
    eps0, mu0 = material.eps0, material.mu0

    G[lay.E(), lay.H()] = (1j / eps0) * K
    G[lay.H(), lay.E()] = (-1j / mu0) * K
    w[lay.E()] = eps0
    w[lay.H()] = mu0
    for src, vac, oscs, Pslice, Pdslice in (
        (lay.E(), eps0, material.electric, lay.P, lay.Pdot),
        (lay.H(), mu0, material.magnetic, lay.M, lay.Mdot),
    ):
        for j, o in enumerate(oscs):
            P, Pd = Pslice(j), Pdslice(j)
            G[src, Pd] = -(o.Omega**2) * I3
            G[P, Pd] = I3
            G[Pd, src] = I3
            G[Pd, Pd] = -o.alpha * I3
            G[Pd, P] = -(o.omega0**2) * I3
            w[Pd] = vac * o.Omega**2
            w[P] = vac * o.Omega**2 * o.omega0**2
            d[Pd] = vac * o.alpha * o.Omega**2
            inert[P] = o.omega0 == 0.0
    field_mask = np.zeros(n, dtype=bool)
    field_mask[:6] = True
    for arr in (G, w, d, field_mask, inert):
        arr.setflags(write=False)
    return Generator(G, k, material, w, d, field_mask, inert)


def _check_times(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t)):
        raise NonFiniteTime("time must be finite")
    if np.any(t < 0):
        raise NegativeTime("time must be >= 0")
    return t


def propagate(gen: Generator, u0, times, method: str = "expm") -> np.ndarray:
    """Flat state vectors ``exp(t G) u0`` for every ``t`` in ``times``.

    Returns an array of shape ``(len(times), dim)``.
    """
    ts = np.atleast_1d(_check_times(times))
    u0 = np.asarray(u0, dtype=complex)
    if method == "expm":
        props = scipy.linalg.expm(ts[:, None, None] * gen.matrix[None, :, :])
        return props @ u0
    if method == "eig":
        lam, V = np.linalg.eig(gen.matrix)
        c = np.linalg.solve(V, u0)
        return (np.exp(ts[:, None] * lam[None, :]) * c[None, :]) @ V.T
    raise ValueError(f"unknown method {method!r}")


def evolve(gen: Generator, state0: ModeState, t: float, method: str = "expm") -> ModeState:
    """Exact solution ``exp(t G) U0`` (scaling-and-squaring by default).

    Raises
    ------
    NonFiniteTime, NegativeTime
    """
    t = float(_check_times(t))
    u = propagate(gen, state0.to_vector(), [t], method)[0]
    return ModeState.from_vector(u, gen.material.n_e, gen.material.n_m)


def ladder_vectors(gen: Generator, u, n: int) -> np.ndarray:
    """``[u, G u, ..., G^n u]`` stacked along the first axis.

    ``u`` may carry leading batch axes; the result has shape ``(n+1,) + u.shape``.
    """
    u = np.asarray(u, dtype=complex)
    out = [u]
    for _ in range(n):
        out.append(out[-1] @ gen.matrix.T)
    return np.stack(out)


def derivative_ladder(gen: Generator, state: ModeState, n: int) -> list[ModeState]:
    """Time derivatives ``d^j U/dt^j = G^j U`` for ``j = 0..n``, ``n <= 3``."""
    if n not in (0, 1, 2, 3):
        raise ValueError("ladder order must be 0, 1, 2 or 3")
    vecs = ladder_vectors(gen, state.to_vector(), n)
    return [ModeState.from_vector(v, gen.material.n_e, gen.material.n_m) for v in vecs]


def transverse_basis(k) -> np.ndarray:
    """Orthonormal ``3 x 2`` basis of the plane orthogonal to ``k`` (``I`` at ``k = 0``)."""
    k = np.asarray(k, dtype=float)
    nk = np.linalg.norm(k)
    if nk == 0.0:
        return np.eye(3)
    q, _ = np.linalg.qr(np.column_stack([k / nk, np.eye(3)]))
    return q[:, 1:3]


def _subspace_matrix(gen: Generator, subspace: str) -> np.ndarray:
    """Generator restricted to the active (non-inert) part of ``subspace``."""
    B = transverse_basis(gen.k) if subspace == "transverse" else np.eye(3)
    if subspace not in ("full", "transverse"):
        raise ValueError(f"unknown subspace {subspace!r}")
    nb = gen.dim // 3
    keep_blocks = ~gen.inert.reshape(nb, 3).any(axis=1)
    Q = np.kron(np.eye(nb)[:, keep_blocks], B)
    return Q.conj().T @ gen.matrix @ Q


def spectrum(gen: Generator, subspace: str = "full") -> np.ndarray:
    """Eigenvalues of the active block of ``G`` on ``subspace``.

    Drude polarization positions are excluded: their columns of ``G`` vanish,
    so each contributes an exact zero eigenvalue that carries no energy.
    """
    A = _subspace_matrix(gen, subspace)
    try:
        lam = scipy.linalg.eigvals(A)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigensolveFailure(str(exc)) from exc
    if not np.all(np.isfinite(lam)):
        raise EigensolveFailure("non-finite eigenvalues")
    return lam


def spectral_abscissa(gen: Generator, subspace: str = "full") -> float:
    """``max Re(lambda)`` over the active spectrum on ``subspace``."""
    return float(np.max(spectrum(gen, subspace).real))


def divergence_residual(state: ModeState, k, floor: float = 1e-300) -> float:
    """``max |k . f| / (|k| |f| + floor)`` over every field ``f`` of ``state``."""
    k = np.asarray(k, dtype=float)
    nk = np.linalg.norm(k)
    if nk == 0.0:
        return 0.0
    F = np.array(state.fields())
    num = np.abs(F @ k)
    den = nk * np.linalg.norm(F, axis=1) + floor
    return float(np.max(num / den))


def energy(gen: Generator, u) -> np.ndarray:
    """Lyapunov density ``0.5 * sum(w |u|^2)`` of flat state(s) ``u``."""
    return 0.5 * np.sum(gen.weights * np.abs(u) ** 2, axis=-1)


def energy_curve(gen: Generator, u0, times) -> np.ndarray:
    """``L_k(t)`` along the trajectory from ``u0``, for every ``t`` in ``times``.

    Works in energy-normalized coordinates on the active block, where the
    conservative part of ``G`` is skew-Hermitian, and propagates through an
    eigendecomposition when it is well conditioned.  Near exceptional points
    it falls back to the matrix exponential.
    """
    ts = np.atleast_1d(_check_times(times))
    act = ~gen.inert
    s = np.sqrt(gen.weights[act])
    A = (s[:, None] * gen.matrix[np.ix_(act, act)]) / s[None, :]
    x0 = s * np.asarray(u0, dtype=complex)[act]
    lam, V = np.linalg.eig(A)
    if np.all(np.isfinite(lam)) and np.linalg.cond(V) < _EIG_COND_MAX:
        c = np.linalg.solve(V, x0)
        # Re(lam) <= 0 up to roundoff; clip so late times cannot blow up
        lam = np.minimum(lam.real, 0.0) + 1j * lam.imag
        X = (np.exp(ts[:, None] * lam[None, :]) * c[None, :]) @ V.T
    else:
        X = scipy.linalg.expm(ts[:, None, None] * A[None, :, :]) @ x0
    return 0.5 * np.sum(np.abs(X) ** 2, axis=-1)


def random_state(
    rng: np.random.Generator,
    n_e: int,
    n_m: int,
    k=None,
    transverse: bool = True,
    oscillators: bool = True,
) -> ModeState:
    """Complex Gaussian state, optionally projected onto the plane orthogonal to ``k``.

    With ``oscillators=False`` the polarization and magnetization fields are zero.
    """
    nb = 2 + 2 * n_e + 2 * n_m
    z = rng.standard_normal((nb, 3)) + 1j * rng.standard_normal((nb, 3))
    if not oscillators:
        z[2:] = 0.0
    if transverse and k is not None and np.linalg.norm(k) > 0:
        B = transverse_basis(k)
        z = z @ B @ B.T
    return ModeState.from_vector(z.ravel(), n_e, n_m)


def sample_times(t_max: float, n: int, t_min_frac: float = 1e-3) -> np.ndarray:
    """``0`` followed by ``n-1`` log-spaced points ending at ``t_max``."""
    return np.concatenate([[0.0], np.geomspace(t_max * t_min_frac, t_max, n - 1)])


def stack_states(states: Sequence[ModeState]) -> np.ndarray:
    return np.array([s.to_vector() for s in states])
