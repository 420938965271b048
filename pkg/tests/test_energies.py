import math

import numpy as np
import pytest

from kirchdecay.energies import (
    check_apriori,
    compute_constants,
    energy_snapshot,
    h_potential,
)
from kirchdecay.integrate import IntegrationSpec, LogGrid, integrate_hyperbolic
from kirchdecay.model import ModelParams, PhaseState
from kirchdecay.spectral import SpectralOperator


def test_snapshot_one_d_example():
    op = SpectralOperator([1.0])
    params = ModelParams(epsilon=0.1, p=0.0, gamma=1.0)
    s = energy_snapshot(params, op, PhaseState(0.0, [2.0], [0.0]))
    assert s.norm_a12u2 == 4.0
    assert s.F == pytest.approx(4.0)
    assert s.P == pytest.approx(1.0)  # first summand exactly zero in 1-D
    assert s.Q == 0.0
    assert s.R == pytest.approx(1.0)
    assert s.H == pytest.approx(8.0)
    assert s.D == pytest.approx(2.0)
    assert s.k_ratio == 0.0
    assert not s.degenerate


def test_snapshot_degenerate():
    op = SpectralOperator([1.0])
    params = ModelParams(epsilon=0.1, p=0.0, gamma=1.0)
    s = energy_snapshot(params, op, PhaseState(0.0, [0.0], [0.0]))
    assert s.degenerate
    assert s.H == 0.0
    assert s.D == 0.0
    for name in ("F", "P", "Q", "R", "Dhat", "G", "k_ratio"):
        assert math.isnan(getattr(s, name))


def test_snapshot_two_d_values():
    # u=(1,1), v=(1,-1), lam=(1,4): w=5, n=5, a=17, g=-3, q=2
    op = SpectralOperator([1.0, 4.0])
    params = ModelParams(epsilon=1.0, p=0.0, gamma=1.0)
    s = energy_snapshot(params, op, PhaseState(0.0, [1.0, 1.0], [1.0, -1.0]))
    assert s.norm_a12u2 == pytest.approx(5.0)
    assert s.norm_a12v2 == pytest.approx(5.0)
    assert s.norm_au2 == pytest.approx(17.0)
    assert s.inner_au_v == pytest.approx(-3.0)
    # first summand of P: (w n - g^2)/w^(gamma+2) = (25 - 9)/125
    assert s.P == pytest.approx(16.0 / 125.0 + 17.0 / 5.0, rel=1e-14)
    assert s.F == pytest.approx(1.0 * 5.0 / 5.0 + 17.0)
    assert s.Q == pytest.approx(2.0 / 125.0)
    assert s.R == pytest.approx(5.0 / 25.0 + 17.0 / 5.0)
    assert s.H == pytest.approx(2.0 + 25.0 / 2.0)
    assert s.k_ratio == pytest.approx(0.6)
    # Cauchy-Schwarz keeps P's first summand nonnegative
    assert s.P >= s.norm_au2 / s.norm_a12u2


def test_q_and_scaling_identities():
    rng = np.random.default_rng(77)
    for _ in range(100):
        n = rng.integers(1, 6)
        op = SpectralOperator(rng.uniform(0.1, 5.0, n))
        gamma = float(rng.uniform(0.4, 2.5))
        params = ModelParams(epsilon=float(rng.uniform(0.01, 1.0)), p=0.5, gamma=gamma)
        u = rng.standard_normal(n)
        v = rng.standard_normal(n)
        s = energy_snapshot(params, op, PhaseState(0.0, u, v))
        # Q * w^(2 gamma + 1) recovers |u'|^2
        assert s.Q * s.norm_a12u2 ** (2 * gamma + 1) == pytest.approx(
            s.norm_v2, rel=1e-10
        )
        # scaling the state by c > 0 scales Q by c^(-4 gamma), leaves k_ratio
        c = float(rng.uniform(0.5, 3.0))
        s2 = energy_snapshot(params, op, PhaseState(0.0, c * u, c * v))
        assert s2.Q == pytest.approx(s.Q * c ** (-4.0 * gamma), rel=1e-10)
        assert s2.k_ratio == pytest.approx(s.k_ratio, rel=1e-12)


def test_h_potential_general_m_matches_prototype():
    gamma = 1.5
    proto = ModelParams(epsilon=1.0, p=0.0, gamma=gamma)
    general = ModelParams(epsilon=1.0, p=0.0, gamma=gamma, m=lambda s: s**gamma)
    for w in (0.0, 0.3, 2.0, 11.0):
        assert h_potential(general, w) == pytest.approx(h_potential(proto, w), rel=1e-9)


def test_compute_constants_reference_values():
    op = SpectralOperator([1.0])
    params = ModelParams(epsilon=1e-3, p=0.0, gamma=1.0)
    c = compute_constants(params, op, np.array([1.0]), np.array([0.0]), "coercive")
    assert c.P1_0 == pytest.approx(1.0)
    assert c.Q1_0 == 0.0
    assert c.R1_0 == pytest.approx(1.0)
    assert c.sigma1 == pytest.approx(0.25)
    assert c.sigma2 == pytest.approx(2.0)
    assert c.K == pytest.approx(4.04)
    # sigma0 = 0 + 1.5*(0 + 2*1) + 5*(1 + 2*(K+1)*1)
    assert c.sigma0 == pytest.approx(3.0 + 5.0 * (1.0 + 2.0 * 5.04))
    # eps0 is limited by the sigma0 smallness condition: min(1/4, 1/2)/sigma0
    assert c.eps0 == pytest.approx(0.25 / c.sigma0)
    assert c.beta == pytest.approx(1.0)


def test_compute_constants_mode_errors():
    op = SpectralOperator([1.0])
    params = ModelParams(epsilon=0.1, p=0.0, gamma=1.0)
    with pytest.raises(ValueError):
        compute_constants(params, op, np.array([0.0]), np.array([0.0]), "coercive")
    with pytest.raises(ValueError):
        compute_constants(
            ModelParams(epsilon=0.1, p=0.0, gamma=0.5),
            op,
            np.array([1.0]),
            np.array([0.0]),
            "noncoercive",
        )
    with pytest.raises(ValueError):
        compute_constants(
            ModelParams(epsilon=0.1, p=1.5, gamma=1.0),
            op,
            np.array([1.0]),
            np.array([0.0]),
            "coercive",
        )
    with pytest.raises(ValueError):
        compute_constants(
            params, SpectralOperator([0.0, 1.0]), np.array([1.0, 0.0]),
            np.array([0.0, 0.0]), "coercive",
        )
    with pytest.raises(ValueError):
        compute_constants(params, op, np.array([1.0]), np.array([0.0]), "weird")


def test_noncoercive_constants_and_sixteenth_cap():
    op = SpectralOperator(1.0 / np.arange(1, 9) ** 2)
    params = ModelParams(epsilon=1e-4, p=0.5, gamma=1.0)
    n = op.dim
    u0 = np.full(n, 1.0 / math.sqrt(n))
    c = compute_constants(params, op, u0, np.zeros(n), "noncoercive")
    assert c.eps0 <= 1.0 / 16.0
    assert c.sigma3 > 0 and c.sigma4 >= 36.0
    # gamma = 1 collapses the first factor of the noncoercive K bound
    assert c.K == pytest.approx(1.01 * 4.0 * c.sigma4)


@pytest.fixture(scope="module")
def coercive_two_mode_run():
    op = SpectralOperator([1.0, 4.0])
    u0 = np.array([1.0, 0.5])
    u1 = np.zeros(2)
    params_probe = ModelParams(epsilon=1.0, p=0.5, gamma=1.0)
    consts = compute_constants(params_probe, op, u0, u1, "coercive")
    eps = 0.5 * consts.eps0
    params = ModelParams(epsilon=eps, p=0.5, gamma=1.0)
    spec = IntegrationSpec(t_end=1e3, sampling=LogGrid(301), abs_tol=1e-14)
    traj = integrate_hyperbolic(params, op, PhaseState(0.0, u0, u1), spec)
    return params, op, traj, compute_constants(params, op, u0, u1, "coercive")


def test_apriori_audit_two_mode(coercive_two_mode_run):
    params, op, traj, consts = coercive_two_mode_run
    report = check_apriori(params, op, traj, consts, "coercive")
    assert report.hypotheses_ok
    assert report.status == "pass"
    names = {it.name for it in report.items}
    assert names == {"est-F", "est-P", "est-Q", "est-R", "est-G", "est-la12", "est-ua12"}
    for it in report.items:
        assert it.passed, (it.name, it.max_violation)


def test_apriori_p_monotone_per_sample(coercive_two_mode_run):
    params, op, traj, consts = coercive_two_mode_run
    lam = op.eigenvalues
    w = np.einsum("j,ij->i", lam, traj.u**2)
    n = np.einsum("j,ij->i", lam, traj.v**2)
    a = np.einsum("j,ij->i", lam * lam, traj.u**2)
    g = np.einsum("j,ij->i", lam, traj.u * traj.v)
    P = params.epsilon * (w * n - g * g) / w ** (params.gamma + 2.0) + a / w
    assert np.all(np.diff(P) <= 1e-3 * np.abs(P[:-1]) + 1e-12)


def test_audit_flags_hypothesis_violation(coercive_two_mode_run):
    params, op, traj, consts = coercive_two_mode_run
    big_params = ModelParams(epsilon=10.0 * consts.eps0, p=params.p, gamma=params.gamma)
    u0 = traj.u[0]
    u1 = traj.v[0]
    spec = IntegrationSpec(t_end=100.0, sampling=LogGrid(101))
    bad = integrate_hyperbolic(big_params, op, PhaseState(0.0, u0, u1), spec)
    report = check_apriori(big_params, op, bad, consts, "coercive")
    assert not report.eps_ok
    assert report.status == "hypothesis-violated"
    assert not report.passed


def test_one_d_p_is_identically_lambda():
    op = SpectralOperator([1.0])
    params = ModelParams(epsilon=1e-3, p=0.5, gamma=1.0)
    spec = IntegrationSpec(t_end=100.0, sampling=LogGrid(201), abs_tol=1e-14)
    traj = integrate_hyperbolic(params, op, PhaseState(0.0, [1.0], [0.0]), spec)
    for i in range(traj.t.size):
        s = energy_snapshot(params, op, traj.state(i))
        assert abs(s.P - 1.0) <= 1e-12
