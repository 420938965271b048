import numpy as np
import pytest

from kirchdecay.model import (
    ModelError,
    ModelParams,
    PhaseState,
    hyperbolic_rhs,
    parabolic_rhs,
    scalar_parabolic_exact,
)
from kirchdecay.spectral import SpectralOperator


def test_params_validation():
    with pytest.raises(ModelError):
        ModelParams(epsilon=0.0, p=0.0, gamma=1.0)
    with pytest.raises(ModelError):
        ModelParams(epsilon=1.0, p=-0.1, gamma=1.0)
    with pytest.raises(ModelError):
        ModelParams(epsilon=1.0, p=0.0, gamma=0.0)


def test_prototype_damping_is_one_at_t0():
    for p in (0.0, 0.5, 2.0):
        assert ModelParams(epsilon=1.0, p=p, gamma=1.0).damping(0.0) == 1.0


def test_hyperbolic_rhs_examples():
    op = SpectralOperator([1.0])
    params = ModelParams(epsilon=0.5, p=0.0, gamma=1.0)
    du, dv = hyperbolic_rhs(params, op, PhaseState(0.0, [1.0], [0.0]))
    assert du[0] == 0.0
    assert dv[0] == pytest.approx(-2.0)

    dz, dvz = hyperbolic_rhs(params, op, PhaseState(3.0, [0.0], [0.0]))
    assert dz[0] == 0.0 and dvz[0] == 0.0

    op2 = SpectralOperator([1.0, 4.0])
    params2 = ModelParams(epsilon=1.0, p=1.0, gamma=1.0)
    du, dv = hyperbolic_rhs(params2, op2, PhaseState(1.0, [1.0, 0.0], [0.0, 1.0]))
    assert np.allclose(du, [0.0, 1.0])
    assert dv[0] == pytest.approx(-1.0)
    assert dv[1] == pytest.approx(-0.5)


def test_parabolic_rhs_examples():
    op = SpectralOperator([1.0])
    params = ModelParams(epsilon=1.0, p=0.0, gamma=1.0)
    assert parabolic_rhs(params, op, 0.0, [1.0])[0] == pytest.approx(-1.0)
    assert parabolic_rhs(params, op, 5.0, [0.0])[0] == 0.0

    op2 = SpectralOperator([2.0])
    params2 = ModelParams(epsilon=1.0, p=1.0, gamma=2.0)
    assert parabolic_rhs(params2, op2, 1.0, [1.0])[0] == pytest.approx(-16.0)


def test_parabolic_rhs_rejects_nonpositive_damping():
    op = SpectralOperator([1.0])
    params = ModelParams(epsilon=1.0, p=0.0, gamma=1.0, b=lambda t: 1.0 - t)
    with pytest.raises(ModelError):
        parabolic_rhs(params, op, 2.0, [1.0])


def test_scalar_parabolic_exact_values():
    # separable closed form: w = 1/(1+2t) for gamma=1, lam=1, p=0
    assert scalar_parabolic_exact(1.0, 1.0, 1.0, 0.0, 1.0) == pytest.approx(1 / 3, rel=1e-15)
    assert scalar_parabolic_exact(2.5, 3.0, 0.7, 1.3, 0.0) == 2.5
    # p=1 case: 1/w = 1 + ((1+t)^2 - 1) evaluates to 1e-4 at t=99
    assert scalar_parabolic_exact(1.0, 1.0, 1.0, 1.0, 99.0) == pytest.approx(1e-4, rel=1e-13)


def test_scalar_parabolic_exact_solves_its_ode():
    # finite differences on the closed form vs the stated right-hand side
    w0, lam, gamma, p = 0.8, 1.7, 1.4, 0.6
    for t in (0.0, 0.5, 3.0, 40.0):
        h = 1e-6 * (1.0 + t)
        wm = scalar_parabolic_exact(w0, lam, gamma, p, t - h if t > h else t)
        wp = scalar_parabolic_exact(w0, lam, gamma, p, t + h)
        dw = (wp - wm) / (2 * h) if t > h else (wp - scalar_parabolic_exact(w0, lam, gamma, p, t)) / h
        w = scalar_parabolic_exact(w0, lam, gamma, p, t)
        rhs = -2.0 * (1.0 + t) ** p * lam ** (gamma + 1.0) * w ** (gamma + 1.0)
        assert dw == pytest.approx(rhs, rel=1e-5)


def test_scalar_parabolic_exact_requires_positive_w0():
    with pytest.raises(ValueError):
        scalar_parabolic_exact(0.0, 1.0, 1.0, 0.0, 1.0)


def test_general_matches_prototype_bitwise():
    gamma, p = 1.3, 0.7
    proto = ModelParams(epsilon=0.25, p=p, gamma=gamma)
    general = ModelParams(
        epsilon=0.25,
        p=p,
        gamma=gamma,
        m=lambda sigma: sigma**gamma,
        b=lambda t: (1.0 + t) ** (-p),
    )
    op = SpectralOperator([0.5, 2.0, 7.0])
    state = PhaseState(1.7, [0.3, -1.2, 0.4], [0.1, 0.0, -2.0])
    du_p, dv_p = hyperbolic_rhs(proto, op, state)
    du_g, dv_g = hyperbolic_rhs(general, op, state)
    assert np.array_equal(du_p, du_g)
    assert np.array_equal(dv_p, dv_g)
    assert np.array_equal(
        parabolic_rhs(proto, op, 1.7, state.u), parabolic_rhs(general, op, 1.7, state.u)
    )


def test_invariant_subspace_of_rhs():
    op = SpectralOperator([1.0, 4.0, 9.0])
    params = ModelParams(epsilon=0.1, p=0.5, gamma=2.0)
    state = PhaseState(2.0, [1.0, 0.0, 0.0], [0.5, 0.0, 0.0])
    du, dv = hyperbolic_rhs(params, op, state)
    assert du[1] == du[2] == 0.0
    assert dv[1] == dv[2] == 0.0


def test_gamma_below_one_at_degenerate_sigma():
    params = ModelParams(epsilon=1.0, p=0.0, gamma=0.5)
    assert params.stiffness(0.0) == 0.0
    assert params.stiffness(4.0) == pytest.approx(2.0)


def test_phase_state_dimension_check():
    with pytest.raises(ValueError):
        PhaseState(0.0, [1.0, 2.0], [1.0])
