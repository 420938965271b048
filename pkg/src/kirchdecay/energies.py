"""Energy functionals, theorem constants, and a-priori inequality audits.

Notation used throughout, for a state (t, u, u') in eigencoordinates:

    w = |A^(1/2)u|^2,  n = |A^(1/2)u'|^2,  a = |Au|^2,
    q = |u'|^2,        g = <Au, u'>,       beta = (p+1)/gamma.

Powers of the norm |A^(1/2)u| are expressed through w: |A^(1/2)u|^(2k) = w^k.
The eight functionals, with eps the singular-perturbation parameter:

    F = eps n / w^gamma + a
    P = eps (w n - g^2) / w^(gamma+2) + a / w      (first summand >= 0 by
                                                    Cauchy-Schwarz, == 0 in 1-D)
    Q = q / w^(2 gamma + 1)
    R = eps n / w^(gamma+1) + a / w
    H = eps q + integral of m over [0, w]          (= eps q + w^(gamma+1)/(gamma+1)
                                                    for the prototype)
    D    = eps (1+t)^p <u', u> + (1/2)(1 - eps p (1+t)^(p-1)) |u|^2
    Dhat = eps (1+t)^(2 beta - 1) g / w^gamma
    G    = (1+t)^beta q / w^(2 gamma)

and the ratio k_ratio = |g| / w whose bound K/(1+t)^p is the standing
hypothesis of the a-priori estimates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy.integrate import quad

from .integrate import Trajectory
from .model import ModelParams, PhaseState
from .spectral import SpectralOperator

__all__ = [
    "EnergySnapshot",
    "TheoremConstants",
    "AuditItem",
    "AuditReport",
    "energy_snapshot",
    "h_potential",
    "compute_constants",
    "check_apriori",
]

DEGENERACY_FLOOR = 1e-240


@dataclass(frozen=True)
class EnergySnapshot:
    """All norms and functionals at one time.  When |A^(1/2)u|^2 is below the
    degeneracy floor the fields that divide by it (F, P, Q, R, Dhat, G,
    k_ratio) are NaN and ``degenerate`` is set."""

    t: float
    norm_u2: float
    norm_a12u2: float
    norm_au2: float
    norm_v2: float
    norm_a12v2: float
    inner_au_v: float
    F: float
    P: float
    Q: float
    R: float
    H: float
    D: float
    Dhat: float
    G: float
    k_ratio: float
    degenerate: bool


@dataclass(frozen=True)
class TheoremConstants:
    """Constants entering the global-existence and decay machinery.

    ``P1_0``/``Q1_0``/``R1_0`` are evaluated at eps = 1 (that is what their
    subscript means); the remaining time-zero energies use the run's eps.
    ``K`` strictly exceeds both of its required lower bounds by ``k_margin``.
    ``eps0`` is the largest value satisfying every smallness inequality for
    the requested mode.  ``sigma2`` is None when the operator is not coercive.
    """

    mode: str
    sigma0: float
    sigma1: float
    sigma2: Optional[float]
    sigma3: float
    sigma4: float
    K: float
    k_margin: float
    eps0: float
    beta: float
    P1_0: float
    Q1_0: float
    R1_0: float
    F_0: float
    H_0: float
    D_0: float
    Dhat_0: float
    G_0: float

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        return d


def _moments(op: SpectralOperator, u: np.ndarray, v: np.ndarray):
    lam = op.eigenvalues
    uu = u * u
    vv = v * v
    w = float(np.dot(lam, uu))
    n = float(np.dot(lam, vv))
    a = float(np.dot(lam * lam, uu))
    g = float(np.dot(lam, u * v))
    q = float(np.sum(vv))
    u2 = float(np.sum(uu))
    uv = float(np.dot(u, v))
    return w, n, a, g, q, u2, uv


def h_potential(params: ModelParams, w: float) -> float:
    """Integral of m over [0, w]; closed form for the prototype, adaptive
    quadrature otherwise."""
    if params.m is None:
        return w ** (params.gamma + 1.0) / (params.gamma + 1.0)
    if w == 0.0:
        return 0.0
    val, _ = quad(params.m, 0.0, w, epsrel=1e-10, epsabs=0.0, limit=200)
    return float(val)


def energy_snapshot(
    params: ModelParams,
    op: SpectralOperator,
    s: PhaseState,
    degeneracy_floor: float = DEGENERACY_FLOOR,
) -> EnergySnapshot:
    """Evaluate every functional at one phase-space point."""
    u, v = op._check(s.u, s.v)
    w, n, a, g, q, u2, uv = _moments(op, u, v)
    eps = params.epsilon
    gamma = params.gamma
    p = params.p
    t = s.t
    beta = (p + 1.0) / gamma

    H = eps * q + h_potential(params, w)
    D = eps * (1.0 + t) ** p * uv + 0.5 * (1.0 - eps * p * (1.0 + t) ** (p - 1.0)) * u2

    degenerate = w < degeneracy_floor
    if degenerate:
        F = P = Q = R = Dhat = G = k_ratio = math.nan
    else:
        F = eps * n / w**gamma + a
        P = eps * (w * n - g * g) / w ** (gamma + 2.0) + a / w
        Q = q / w ** (2.0 * gamma + 1.0)
        R = eps * n / w ** (gamma + 1.0) + a / w
        Dhat = eps * (1.0 + t) ** (2.0 * beta - 1.0) * g / w**gamma
        G = (1.0 + t) ** beta * q / w ** (2.0 * gamma)
        k_ratio = abs(g) / w

    return EnergySnapshot(
        t=t,
        norm_u2=u2,
        norm_a12u2=w,
        norm_au2=a,
        norm_v2=q,
        norm_a12v2=n,
        inner_au_v=g,
        F=F,
        P=P,
        Q=Q,
        R=R,
        H=H,
        D=D,
        Dhat=Dhat,
        G=G,
        k_ratio=k_ratio,
        degenerate=degenerate,
    )


def compute_constants(
    params: ModelParams,
    op: SpectralOperator,
    u0: np.ndarray,
    u1: np.ndarray,
    mode: str,
    k_margin: float = 0.01,
) -> TheoremConstants:
    """Evaluate sigma0..sigma4, K, eps0 and the time-zero energies.

    ``mode`` is 'coercive' or 'noncoercive'.  Coercive mode needs nu > 0;
    noncoercive mode needs gamma >= 1 (its K formula requires it).  K is fixed
    at (1 + k_margin) times the larger of its two lower bounds, so that the
    strict inequalities are realized reproducibly; K is computed first because
    sigma0 depends on it, and eps0 last.
    """
    if mode not in ("coercive", "noncoercive"):
        raise ValueError(f"unknown mode {mode!r}")
    u0, u1 = op._check(u0, u1)
    gamma = params.gamma
    p = params.p
    nu = op.nu
    if not 0.0 <= p <= 1.0:
        raise ValueError("constants require p in [0, 1]")
    if mode == "coercive" and not nu > 0.0:
        raise ValueError("coercive mode requires a strictly positive spectrum")
    if mode == "noncoercive" and gamma < 1.0:
        raise ValueError("noncoercive mode requires gamma >= 1")

    w0, n1, a0, g0, q1, u02, _ = _moments(op, u0, u1)
    if not w0 > 0.0:
        raise ValueError("mild degeneracy requires |A^(1/2)u0| > 0")

    state0 = PhaseState(0.0, u0, u1)
    snap1 = energy_snapshot(replace(params, epsilon=1.0), op, state0)
    snap_eps = energy_snapshot(params, op, state0)
    P1_0, Q1_0, R1_0 = snap1.P, snap1.Q, snap1.R

    beta = (p + 1.0) / gamma
    sigma1 = w0 * (1.0 + 3.0 * gamma * P1_0 * w0**gamma / (p + 1.0)) ** (-1.0 / gamma)
    sigma2 = (
        w0 * max(2.0, (p + 1.0) / (nu * gamma * w0**gamma)) ** (1.0 / gamma)
        if nu > 0.0
        else None
    )
    sigma3 = 16.0 * (gamma + 1.0) * (q1 + w0 ** (gamma + 1.0) + 2.0 * u02)
    sigma4 = (
        2.0 * n1 / w0**gamma
        + 2.0 * a0
        + 0.5 * abs(g0) / w0**gamma
        + 36.0 * sigma1 ** (1.0 - gamma)
    )

    k_low1 = abs(g0) / w0
    if mode == "coercive":
        pq = math.sqrt(P1_0 * Q1_0) + 2.0 * P1_0
        k_low2 = pq * sigma2**gamma
    else:
        k_low2 = ((1.0 + gamma) * sigma3) ** ((gamma - 1.0) / (gamma + 1.0)) * (
            math.sqrt(q1) * math.sqrt(sigma4) / w0**gamma + 4.0 * sigma4
        )
    K = (1.0 + k_margin) * max(k_low1, k_low2)

    sigma0 = (
        abs(g0) / w0 ** (gamma + 1.0)
        + 1.5 * (math.sqrt(P1_0 * Q1_0) + 2.0 * P1_0)
        + (2.0 * gamma + 3.0) * (R1_0 + 2.0 * (K + 1.0) * P1_0)
    )

    smallness = min(1.0 / (4.0 * gamma * w0**gamma), P1_0 / (2.0 * (p + 1.0)))
    bounds = [0.25, 1.0 / (4.0 * K * (gamma + 1.0)), smallness / sigma0]
    if mode == "coercive":
        bounds.append(
            min(nu / (2.0 * (p + 1.0)), 1.0 / (4.0 * gamma * w0**gamma)) / sigma0
        )
    else:
        bounds.append(1.0 / 16.0)
    eps0 = min(bounds)

    return TheoremConstants(
        mode=mode,
        sigma0=sigma0,
        sigma1=sigma1,
        sigma2=sigma2,
        sigma3=sigma3,
        sigma4=sigma4,
        K=K,
        k_margin=k_margin,
        eps0=eps0,
        beta=beta,
        P1_0=P1_0,
        Q1_0=Q1_0,
        R1_0=R1_0,
        F_0=snap_eps.F,
        H_0=snap_eps.H,
        D_0=snap_eps.D,
        Dhat_0=snap_eps.Dhat,
        G_0=snap_eps.G,
    )


# ---------------------------------------------------------------------------
# A-priori inequality audit
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AuditItem:
    name: str
    max_violation: float
    worst_t: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "max_violation": self.max_violation,
            "worst_t": self.worst_t,
            "passed": self.passed,
        }


@dataclass(frozen=True)
class AuditReport:
    """Per-inequality maximum relative violations along a trajectory.

    The standing hypotheses (eps below eps0 and k_ratio below K/(1+t)^p) are
    checked first; when one fails the report flags it and the inequality
    results are informational, since the estimates are not claimed there.
    """

    mode: str
    audit_tol: float
    items: tuple[AuditItem, ...]
    eps_ok: bool
    eps_ratio: float
    hyp_k_ok: bool
    hyp_k_margin: float
    n_samples: int
    n_degenerate: int

    @property
    def hypotheses_ok(self) -> bool:
        return self.eps_ok and self.hyp_k_ok

    @property
    def status(self) -> str:
        if not self.hypotheses_ok:
            return "hypothesis-violated"
        return "pass" if all(it.passed for it in self.items) else "fail"

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def item(self, name: str) -> AuditItem:
        for it in self.items:
            if it.name == name:
                return it
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "status": self.status,
            "audit_tol": self.audit_tol,
            "eps_ok": self.eps_ok,
            "eps_ratio": self.eps_ratio,
            "hyp_k_ok": self.hyp_k_ok,
            "hyp_k_margin": self.hyp_k_margin,
            "n_samples": self.n_samples,
            "n_degenerate": self.n_degenerate,
            "items": [it.to_dict() for it in self.items],
        }


def _cumtrapz(t: np.ndarray, f: np.ndarray) -> np.ndarray:
    out = np.zeros_like(f)
    if t.size > 1:
        out[1:] = np.cumsum(0.5 * np.diff(t) * (f[1:] + f[:-1]))
    return out


def check_apriori(
    params: ModelParams,
    op: SpectralOperator,
    traj: Trajectory,
    consts: TheoremConstants,
    mode: Optional[str] = None,
    audit_tol: float = 1e-3,
    degeneracy_floor: float = DEGENERACY_FLOOR,
) -> AuditReport:
    """Audit the a-priori estimates along a hyperbolic trajectory.

    Integrals are trapezoid sums on the trajectory samples, so ``audit_tol``
    absorbs quadrature error on top of integration error.  Degenerate samples
    are excluded and counted.  A violation is (LHS - RHS) / max(|RHS|, tiny)
    maximized over samples; for lower bounds the roles are swapped.
    """
    if traj.kind != "hyperbolic":
        raise ValueError("a-priori audit applies to hyperbolic trajectories")
    mode = mode or consts.mode
    lam = op.eigenvalues
    eps = params.epsilon
    gamma = params.gamma
    p = params.p
    beta = (p + 1.0) / gamma

    t_all = traj.t
    if t_all.size == 0:
        raise ValueError("empty trajectory")
    w_all = np.einsum("j,ij->i", lam, traj.u * traj.u)
    keep = w_all >= degeneracy_floor
    n_degenerate = int(np.sum(~keep))
    t = t_all[keep]
    U = traj.u[keep]
    V = traj.v[keep]
    if t.size < 2 or t[0] != 0.0:
        raise ValueError("audit needs a non-degenerate sample at t = 0")

    uu = U * U
    vv = V * V
    w = np.einsum("j,ij->i", lam, uu)
    n = np.einsum("j,ij->i", lam, vv)
    a = np.einsum("j,ij->i", lam * lam, uu)
    g = np.einsum("j,ij->i", lam, U * V)
    q = np.einsum("ij->i", vv)
    u2 = np.einsum("ij->i", uu)
    one_t = 1.0 + t
    bvals = np.array([params.damping(float(ti)) for ti in t])
    mvals = np.array([params.stiffness(float(wi)) for wi in w])

    F = eps * n / w**gamma + a
    P = eps * (w * n - g * g) / w ** (gamma + 2.0) + a / w
    Q = q / w ** (2.0 * gamma + 1.0)
    R = eps * n / w ** (gamma + 1.0) + a / w
    G = one_t**beta * q / w ** (2.0 * gamma)
    if params.m is None:
        Hpot = w ** (gamma + 1.0) / (gamma + 1.0)
    else:
        Hpot = np.array([h_potential(params, float(wi)) for wi in w])
    H = eps * q + Hpot

    F0, P0, Q0, R0, G0 = F[0], P[0], Q[0], R[0], G[0]
    K = consts.K

    # standing hypotheses
    eps_ratio = eps / consts.eps0
    eps_ok = eps_ratio <= 1.0 + 1e-12
    k_margin = float(np.max(np.abs(g) / w * one_t**p)) / K
    hyp_k_ok = k_margin <= 1.0 + 1e-12

    # u'' reconstructed from the equation: <u'', Au> = -(b g + m a)/eps
    ddot_au = -(bvals * g + mvals * a) / eps

    I_F = _cumtrapz(t, one_t ** (-p) * n / w**gamma)
    I_R = _cumtrapz(t, one_t**p * n / w ** (gamma + 1.0))
    I_G = _cumtrapz(t, one_t**p * ddot_au / w ** (gamma + 1.0))

    tiny = 1e-300
    items = []

    def push(name, lhs, rhs):
        viol = (lhs - rhs) / np.maximum(np.abs(rhs), tiny)
        i = int(np.argmax(viol))
        items.append(
            AuditItem(
                name=name,
                max_violation=float(viol[i]),
                worst_t=float(t[i]),
                passed=bool(viol[i] <= audit_tol),
            )
        )

    push("est-F", F + I_F, np.full_like(t, F0))
    push("est-P", P, np.full_like(t, P0))
    push("est-Q", Q, Q0 + 4.0 * P0 * one_t ** (2.0 * p))
    push(
        "est-R",
        one_t ** (2.0 * p) * R + I_R,
        (R0 + 2.0 * (K + 1.0) * P0) * one_t ** (p + 1.0),
    )
    push("est-G", np.abs(I_G), consts.sigma0 * one_t ** (p + 1.0))
    push("est-la12", consts.sigma1 * one_t ** (-beta), w)

    if mode == "coercive":
        if consts.sigma2 is None:
            raise ValueError("coercive audit needs sigma2 (nu > 0)")
        push("est-ua12", w, consts.sigma2 * one_t ** (-beta))
    else:
        I_H = _cumtrapz(t, one_t * q)
        I_fep = _cumtrapz(t, one_t ** (2.0 * beta - p) * n / w**gamma)
        push(
            "est-hep",
            one_t ** (p + 1.0) * H + u2 + I_H,
            np.full_like(t, consts.sigma3),
        )
        push(
            "est-fep",
            one_t**beta * F + 0.5 * one_t ** (-beta) * I_fep,
            np.full_like(t, consts.sigma4),
        )
        push("est-gep", G, G0 + 16.0 * consts.sigma4 * one_t ** (2.0 * p))

    return AuditReport(
        mode=mode,
        audit_tol=audit_tol,
        items=tuple(items),
        eps_ok=eps_ok,
        eps_ratio=eps_ratio,
        hyp_k_ok=hyp_k_ok,
        hyp_k_margin=k_margin,
        n_samples=int(t.size),
        n_degenerate=n_degenerate,
    )
