import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import rk_evolve

from lorentz_decay.errors import NegativeTime, NonFiniteTime, StateShapeMismatch
from lorentz_decay.material import MaterialParams, Oscillator, drude_toy, lorentz_toy
from lorentz_decay.mode_dynamics import (
    TOL_SPEC,
    ModeState,
    build_generator,
    derivative_ladder,
    divergence_residual,
    energy,
    energy_curve,
    evolve,
    propagate,
    random_state,
    spectral_abscissa,
    spectrum,
)
from lorentz_decay.sampling import make_rng, random_material

seeds = st.integers(0, 2**32 - 1)

LOSSLESS = MaterialParams(1.5, 0.7, ((1.0, 0.0, 0.0), (0.6, 1.3, 0.0)), ((0.8, 2.0, 0.0),))


def case(seed, kind="mixed"):
    rng = make_rng(seed)
    m = random_material(rng, kind)
    k = rng.uniform(-3, 3, 3)
    return m, k, random_state(rng, m.n_e, m.n_m, k)


# ----------------------------------------------------------------- generator


def test_k0_drude_block():
    g = build_generator(drude_toy(), (0.0, 0.0, 0.0))
    lay = g.layout
    for c in range(3):
        e, pd = lay.E().start + c, lay.Pdot(0).start + c
        block = g.matrix[np.ix_([e, pd], [e, pd])]
        assert np.array_equal(block, np.array([[0, -1], [1, -1]]))


def test_generator_reproduces_mode_equations():
    m = MaterialParams(1.3, 0.7, ((1.1, 0.6, 0.2),), ((0.9, 0.0, 0.4),))
    k = np.array([0.3, -0.2, 1.1])
    s = random_state(make_rng(3), 1, 1, k)
    d = derivative_ladder(build_generator(m, k), s, 1)[1]
    (oe,), (om,) = m.electric, m.magnetic
    assert np.allclose(m.eps0 * d.E - 1j * np.cross(k, s.H) + m.eps0 * oe.Omega**2 * s.Pdot[0], 0, atol=1e-14)
    assert np.allclose(m.mu0 * d.H + 1j * np.cross(k, s.E) + m.mu0 * om.Omega**2 * s.Mdot[0], 0, atol=1e-14)
    assert np.allclose(d.Pdot[0] + oe.alpha * s.Pdot[0] + oe.omega0**2 * s.P[0] - s.E, 0, atol=1e-14)
    assert np.allclose(d.Mdot[0] + om.alpha * s.Mdot[0] + om.omega0**2 * s.M[0] - s.H, 0, atol=1e-14)
    assert np.allclose(d.P, s.Pdot) and np.allclose(d.M, s.Mdot)


def test_conservative_spectrum_is_imaginary():
    for k in [(0, 0, 0), (1, 0, 0), (0.3, -2.0, 0.5)]:
        lam = spectrum(build_generator(LOSSLESS, k))
        assert np.max(np.abs(lam.real)) <= 1e-10
        assert abs(spectral_abscissa(build_generator(LOSSLESS, k))) <= 1e-10


def test_drude_transverse_abscissa():
    # dense eigensolve, frozen
    a = spectral_abscissa(build_generator(drude_toy(), (1, 0, 0)), "transverse")
    assert a == pytest.approx(-0.25706586412167653, rel=1e-10)


def test_lorentz_abscissa_closes_at_k0():
    # no damped Drude term: the slowest transverse rate tends to 0 like |k|^2
    m = lorentz_toy(alpha=0.1)
    vals = [spectral_abscissa(build_generator(m, (0, 0, kk)), "transverse") for kk in (1e-1, 1e-2, 1e-3)]
    assert all(v < 0 for v in vals)
    assert vals[2] == pytest.approx(-1.2499998400297268e-08, rel=1e-6)
    assert vals[1] / vals[2] == pytest.approx(100.0, rel=1e-3)
    drude = spectral_abscissa(build_generator(drude_toy(), (0, 0, 1e-3)), "transverse")
    assert drude < -0.4


@settings(max_examples=200)
@given(seeds, st.floats(0.0, 10.0))
def test_spectral_containment(seed, knorm):
    rng = make_rng(seed)
    m = random_material(rng, rng.choice(["mixed", "drude", "lorentz"]), damped=bool(rng.integers(2)))
    d = rng.standard_normal(3)
    g = build_generator(m, knorm * d / np.linalg.norm(d))
    assert spectral_abscissa(g) <= TOL_SPEC
    assert spectral_abscissa(g, "transverse") <= TOL_SPEC


# ---------------------------------------------------------------- evolution


def test_evolve_matches_rk_oracle():
    g = build_generator(drude_toy(), (1, 0, 0))
    s0 = ModeState.from_fields([0, 1, 0], [0, 0, 1], 1, 1)
    ref = rk_evolve(g.matrix, s0.to_vector(), 5.0)
    for method in ("expm", "eig"):
        out = evolve(g, s0, 5.0, method).to_vector()
        assert np.max(np.abs(out - ref)) <= 1e-9
    # frozen from the oracle
    assert evolve(g, s0, 5.0).E[1] == pytest.approx(0.08989972 - 0.19590898j, abs=1e-8)


def test_evolve_trivial_cases():
    m, k, s0 = case(1)
    g = build_generator(m, k)
    assert np.array_equal(evolve(g, s0, 0.0).to_vector(), s0.to_vector())
    z = ModeState.zeros(m.n_e, m.n_m)
    assert not np.any(evolve(g, z, 3.0).to_vector())
    with pytest.raises(NonFiniteTime):
        evolve(g, s0, np.inf)
    with pytest.raises(NegativeTime):
        evolve(g, s0, -1.0)


@given(seeds, st.floats(0.0, 5.0), st.floats(0.0, 5.0))
def test_semigroup(seed, t1, t2):
    m, k, s0 = case(seed)
    g = build_generator(m, k)
    a = evolve(g, s0, t1 + t2).to_vector()
    b = evolve(g, evolve(g, s0, t1), t2).to_vector()
    assert np.linalg.norm(a - b) <= 1e-10 * max(np.linalg.norm(a), np.linalg.norm(s0.to_vector()))


@given(seeds)
def test_contraction_and_transversality(seed):
    m, k, s0 = case(seed)
    g = build_generator(m, k)
    t = np.linspace(0, 20, 41)
    U = propagate(g, s0.to_vector(), t)
    L = energy(g, U)
    assert np.all(L <= L[0] * (1 + 1e-10))
    assert np.all(np.diff(L) <= 1e-10 * L[0])
    for u in U:
        assert divergence_residual(ModeState.from_vector(u, m.n_e, m.n_m), k) <= 1e-10


@given(seeds)
def test_energy_curve_methods_agree(seed):
    m, k, s0 = case(seed)
    g = build_generator(m, k)
    t = np.concatenate([[0.0], np.geomspace(1e-2, 50, 20)])
    ref = energy(g, propagate(g, s0.to_vector(), t))
    assert np.allclose(energy_curve(g, s0.to_vector(), t), ref, rtol=1e-8, atol=1e-12 * ref[0])


def test_conservative_energy_constant():
    rng = make_rng(11)
    for _ in range(5):
        k = rng.uniform(-4, 4, 3)
        s0 = random_state(rng, LOSSLESS.n_e, LOSSLESS.n_m, k)
        g = build_generator(LOSSLESS, k)
        L = energy(g, propagate(g, s0.to_vector(), np.linspace(0, 100, 51)))
        assert np.max(np.abs(L / L[0] - 1)) <= 1e-10


# ------------------------------------------------------------------ ladder


def test_ladder_at_rest():
    m = lorentz_toy()
    g = build_generator(m, (0.2, 0.5, -1.0))
    s0 = ModeState.from_fields([1, 2j, 0], [0, 1, 1], 1, 1)
    lad = derivative_ladder(g, s0, 3)
    assert len(lad) == 4 and np.array_equal(lad[0].to_vector(), s0.to_vector())
    # dP/dt = Pdot = 0 at rest, and d2P/dt2 = E - alpha Pdot - omega0^2 P = E
    assert not np.any(lad[1].P) and not np.any(lad[1].M)
    assert np.allclose(lad[2].P[0], s0.E) and np.allclose(lad[2].M[0], s0.H)
    assert len(derivative_ladder(g, s0, 0)) == 1
    with pytest.raises(ValueError):
        derivative_ladder(g, s0, 4)


def test_ladder_matches_finite_differences():
    m, k, s0 = case(5)
    g = build_generator(m, k)
    t, h = 1.3, 1e-3
    ts = t + h * np.arange(-2, 3)
    U = propagate(g, s0.to_vector(), ts)
    lad = [s.to_vector() for s in derivative_ladder(g, evolve(g, s0, t), 3)]
    fd = [
        (-U[4] + 8 * U[3] - 8 * U[1] + U[0]) / (12 * h),
        (-U[4] + 16 * U[3] - 30 * U[2] + 16 * U[1] - U[0]) / (12 * h**2),
    ]
    for j, approx in enumerate(fd, start=1):
        assert np.linalg.norm(approx - lad[j]) <= 1e-6 * np.linalg.norm(lad[j])


# -------------------------------------------------------------- state layout


def test_real_interleaving_roundtrip():
    m, k, s0 = case(9)
    r = s0.to_real()
    v = s0.to_vector()
    assert r.shape == (2 * (6 + 6 * m.n_e + 6 * m.n_m),)
    assert r[0] == v[0].real and r[1] == v[0].imag
    assert np.array_equal(ModeState.from_real(r, m.n_e, m.n_m).to_vector(), v)
    with pytest.raises(StateShapeMismatch):
        ModeState.from_vector(v[:-1], m.n_e, m.n_m)


def test_divergence_residual_conventions():
    s = ModeState.from_fields([1, 0, 0], [0, 1, 0], 1, 1)
    assert divergence_residual(s, (0, 0, 0)) == 0.0
    assert divergence_residual(s, (2, 0, 0)) == pytest.approx(1.0)
    assert divergence_residual(s, (0, 0, 3)) == 0.0
