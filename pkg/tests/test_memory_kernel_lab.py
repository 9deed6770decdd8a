import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from oracles import ode_polarization

from lorentz_decay import memory_kernel_lab as ml
from lorentz_decay.errors import GridTooCoarse, KernelMaterialMismatch, KernelNotC3, NegativeTime, NonzeroInitialValue
from lorentz_decay.material import Oscillator, drude_toy, lorentz_toy

T20 = np.linspace(0.0, 20.0, 401)
K = (0.0, 0.0, 1.0)
E0, H0 = [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]


def drive(s):
    return np.sin(s) * np.exp(-0.1 * s)


def mode(ke, km, k=K):
    return ml.simulate_convolution_mode(ke, km, k, E0, H0)


def primitive_trajectory(tr, t, comp=0):
    # u = E_p with its exact derivative E
    return ml.ScalarTrajectory(
        t, tr.evaluate(t)["Ep"][:, comp], lambda s: tr.evaluate(s)["Ep"][:, comp], lambda s: tr.evaluate(s)["E"][:, comp]
    )


def saturating_family(a, b, r):
    """``a - b exp(-r t)`` with ``b, r >= 0``, ``a >= b``: every monotone sign condition holds."""
    e = lambda t: np.exp(-r * t)  # noqa: E731
    ders = tuple([lambda t: a - b * e(t)] + [(lambda t, j=j: -b * (-r) ** j * e(t)) for j in range(1, 5)])
    real = ml.Realization(np.array([[-r]]), np.array([1.0]), np.array([b * r]))
    return ml.KernelFunction(ders, "family", real)


# --------------------------------------------------------------- convolution


@pytest.mark.parametrize("omega0, alpha", [(1.0, 0.5), (0.0, 1.0), (1.0, 3.0), (1.0, 2.0), (2.0, 0.0)])
def test_convolution_matches_ode(omega0, alpha):
    ker = ml.oscillator_kernel(Oscillator(1.0, omega0, alpha))
    P = ml.convolve_kernel(ker, ml.ScalarTrajectory.from_function(T20, drive)).values
    ref = ode_polarization(omega0, alpha, drive, T20)
    assert np.max(np.abs(P - ref)) <= 1e-7 * np.max(np.abs(ref))


def test_drude_constant_drive_closed_form():
    a = 0.7
    P = ml.convolve_kernel(ml.drude_kernel(a), ml.ScalarTrajectory.from_function(T20, np.ones_like)).values
    assert np.max(np.abs(P - (T20 / a - (1 - np.exp(-a * T20)) / a**2))) <= 1e-8


def test_convolution_trivial_and_errors():
    ker = ml.lorentz_kernel(0.5, 1.0)
    assert not np.any(ml.convolve_kernel(ker, ml.ScalarTrajectory(T20, np.zeros_like(T20))).values)
    with pytest.raises(GridTooCoarse):
        ml.convolve_kernel(ml.lorentz_kernel(0.1, 5.0), ml.ScalarTrajectory.from_function(np.linspace(0, 20, 41), drive))
    with pytest.raises(NegativeTime):
        ker(-1.0)
    with pytest.raises(ValueError):
        ml.ScalarTrajectory(np.array([0.5, 1.0]), np.zeros(2))


def test_convolution_convergence_order():
    ker = ml.lorentz_kernel(0.5, 1.0)
    ref = ode_polarization(1.0, 0.5, drive, np.array([0.0, 10.0]))[-1]
    errs = []
    for n in (21, 41, 81):
        t = np.linspace(0, 10, n)
        errs.append(abs(ml.convolve_kernel(ker, ml.ScalarTrajectory.from_function(t, drive), n_gauss=2).values[-1] - ref))
    assert np.log2(errs[0] / errs[1]) >= 3.5 and np.log2(errs[1] / errs[2]) >= 3.5


# -------------------------------------------------------------------- Q-form


def test_qform_constant_kernel_vanishes():
    u = ml.ScalarTrajectory.from_function(np.linspace(0, 10, 101), np.sin, np.cos)
    lhs, rhs = ml.q_form_sides(ml.constant_kernel(2.0), u)
    assert not np.any(lhs) and np.max(np.abs(rhs)) <= 1e-15


def test_qform_exponential_kernel():
    u = ml.ScalarTrajectory.from_function(np.linspace(0, 10, 201), np.sin, np.cos)
    assert ml.q_form_identity_residual(ml.exponential_kernel(), u) <= 1e-7


def test_qform_drude_kernel_on_mode_primitive():
    m = drude_toy()
    tr = ml.material_mode_trajectory(m, K, E0, H0)
    u = primitive_trajectory(tr, np.linspace(0, 10, 201))
    assert ml.q_form_identity_residual(ml.material_kernel(m, "electric").derivative_kernel(), u) <= 1e-6


def test_qform_spline_samples():
    t = np.linspace(0, 10, 401)
    u = ml.ScalarTrajectory(t, np.sin(t) + 1j * np.sin(2 * t) ** 2)
    assert ml.q_form_identity_residual(ml.exponential_kernel(0.5), u) <= 1e-5


def test_qform_convergence_order():
    res = []
    for n in (51, 101, 201):
        u = ml.ScalarTrajectory.from_function(np.linspace(0, 10, n), np.sin, np.cos)
        res.append(ml.q_form_identity_residual(ml.exponential_kernel(), u, n_gauss=2))
    assert np.log2(res[0] / res[1]) >= 3.5 and np.log2(res[1] / res[2]) >= 3.5


def test_qform_requires_zero_start():
    with pytest.raises(NonzeroInitialValue):
        ml.q_form_identity_residual(ml.exponential_kernel(), ml.ScalarTrajectory.from_function(T20, np.cos))


# ----------------------------------------------------------- general identity


@pytest.mark.parametrize(
    "name, ker_e, ker_m, tol",
    [
        ("saturating", ml.saturating_kernel(), ml.saturating_kernel(), 1e-6),
        ("linear", ml.linear_kernel(1.3), ml.linear_kernel(0.8), 1e-7),
        ("lorentz", ml.material_kernel(lorentz_toy(), "electric"), ml.material_kernel(lorentz_toy(), "magnetic"), 1e-6),
        ("drude", ml.material_kernel(drude_toy(), "electric"), ml.material_kernel(drude_toy(), "magnetic"), 1e-6),
    ],
)
def test_general_identity(name, ker_e, ker_m, tol):
    tr = mode(ker_e, ker_m, (0.3, 0.0, 1.0))
    t = np.linspace(0, 20, 201)
    assert ml.general_lyapunov_identity(ker_e, ker_m, tr, t).residual <= tol
    # with 2-point rules the residual is pure quadrature error
    coarse = ml.general_lyapunov_identity(ker_e, ker_m, tr, np.linspace(0, 20, 101), n_gauss=2).max_abs_residual
    fine = ml.general_lyapunov_identity(ker_e, ker_m, tr, t, n_gauss=2).max_abs_residual
    assert fine <= max(coarse / 8, 1e-13)


def test_linear_kernel_adjoint_energy_is_quadratic():
    W = 1.3**2
    ker = ml.linear_kernel(1.3)
    tr = mode(ker, ker)
    t = np.linspace(0, 10, 51)
    res = ml.general_lyapunov_identity(ker, ker, tr, t)
    ev = tr.evaluate(t)
    expected = 0.5 * W * (np.sum(np.abs(ev["Ep"]) ** 2, axis=1) + np.sum(np.abs(ev["Hp"]) ** 2, axis=1))
    assert np.allclose(res.E_ad, expected, rtol=1e-12, atol=1e-14)
    assert np.allclose(res.L, res.L[0], rtol=1e-12)


def test_mode_trajectory_matches_oscillator_form():
    # memory form of the Lorentz toy reproduces the auxiliary-field evolution
    from lorentz_decay.mode_dynamics import ModeState, build_generator, evolve

    m = lorentz_toy()
    k = (0.2, 0.0, 1.0)
    tr = ml.material_mode_trajectory(m, k, E0, H0)
    s = evolve(build_generator(m, k), ModeState.from_fields(E0, H0, 1, 1), 7.0)
    ev = tr.evaluate([7.0])
    assert np.allclose(ev["E"][0], s.E, atol=1e-12) and np.allclose(ev["H"][0], s.H, atol=1e-12)


def test_general_identity_errors():
    s = ml.saturating_kernel()
    tr = mode(s, s)
    t = np.linspace(0, 5, 51)
    with pytest.raises(KernelMaterialMismatch):
        ml.general_lyapunov_identity(ml.linear_kernel(), s, tr, t)
    short = ml.KernelFunction(s.derivatives[:3], "c2 only", s.realization)
    with pytest.raises(KernelNotC3):
        ml.general_lyapunov_identity(short, s, tr, t)
    with pytest.raises(KernelNotC3):
        ml.simulate_convolution_mode(ml.exponential_kernel(), s, K, E0, H0)


# ------------------------------------------------------------ sign conditions


def test_saturating_kernel_signs_and_decay():
    s = ml.saturating_kernel()
    rep = ml.sign_condition_check(s, np.linspace(0, 20, 401))
    assert rep.conds_26 and rep.conds_27
    assert rep.beta == pytest.approx(1.0, abs=1e-9)
    res = ml.general_lyapunov_identity(s, s, mode(s, s), np.linspace(0, 20, 201))
    fit = ml.exponential_decay_fit(res)
    assert fit.delta_min > 0 and fit.rate > 0.5 and fit.r_squared > 0.99
    assert np.all(res.L[-1] <= res.L[0] * np.exp(-fit.delta_min * 20.0) * (1 + 1e-6))


def test_linear_kernel_boundary_case():
    rep = ml.sign_condition_check(ml.linear_kernel(2.0), np.linspace(0, 20, 101))
    assert rep.conds_26 and not rep.conds_27 and rep.beta == 0.0


def test_dissipative_lorentz_fails_monotone_conditions():
    rep = ml.sign_condition_check(ml.material_kernel(lorentz_toy(), "electric"), np.linspace(0, 20, 401))
    assert not rep.conds_26 and not rep.chi1_nonneg
    assert set(rep.as_dict()) >= {"monotone_conditions", "exponential_conditions", "beta"}


@given(
    st.floats(0.0, 3.0),
    st.floats(0.0, 2.0),
    st.floats(0.1, 3.0),
    st.floats(0.1, 3.0),
)
def test_monotone_conditions_imply_nonincreasing_energy(extra, b, r, kz):
    ker = saturating_family(b + extra, b, r)
    assert ml.sign_condition_check(ker, np.linspace(0, 10, 201)).conds_26
    res = ml.general_lyapunov_identity(ker, ker, mode(ker, ker, (0.0, 0.0, kz)), np.linspace(0, 10, 101))
    assert np.all(np.diff(res.L) <= 1e-9 * res.L[0])
