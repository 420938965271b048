"""Right-hand sides of the damped Kirchhoff system and its parabolic limit.

Second-order problem (in eigencoordinates of A):

    eps * u'' + b(t) * u' + m(|A^(1/2)u|^2) * A u = 0,
    u(0) = u0,  u'(0) = u1,

with the prototype nonlinearity m(sigma) = sigma^gamma and prototype damping
b(t) = (1+t)^(-p).  Setting eps = 0 formally gives the first-order limit

    b(t) * u' + m(|A^(1/2)u|^2) * A u = 0,  u(0) = u0.

All right-hand sides are pure: m is evaluated at sigma = |A^(1/2)u|^2 computed
fresh on every call, which keeps step-size searches and property tests honest.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .spectral import SpectralOperator


class ModelError(ValueError):
    """Invalid model parameters or damping evaluating out of range."""


@dataclass(frozen=True)
class ModelParams:
    """Parameters (eps, p, gamma) plus optional general nonlinearity/damping.

    When ``m`` is None the prototype m(sigma) = sigma^gamma is used; when ``b``
    is None the prototype b(t) = (1+t)^(-p) is used.  General callables must be
    locally Lipschitz on the ranges visited (caller contract; not enforceable).
    ``mu`` records the degeneracy bound inf m for a general ``m``.
    """

    epsilon: float
    p: float
    gamma: float
    m: Optional[Callable[[float], float]] = None
    b: Optional[Callable[[float], float]] = None
    mu: float = 0.0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ModelError("epsilon must be positive")
        if self.p < 0:
            raise ModelError("p must be nonnegative")
        if not self.gamma > 0:
            raise ModelError("gamma must be positive")

    def stiffness(self, sigma: float) -> float:
        """m evaluated at sigma = |A^(1/2)u|^2."""
        if self.m is not None:
            return self.m(sigma)
        return sigma**self.gamma

    def damping(self, t: float) -> float:
        """b(t); the prototype evaluates to 1 at t = 0."""
        if self.b is not None:
            return self.b(t)
        return (1.0 + t) ** (-self.p)

    @property
    def is_prototype(self) -> bool:
        return self.m is None and self.b is None


@dataclass(frozen=True)
class PhaseState:
    """One point (t, u, u') of a second-order trajectory."""

    t: float
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        v = np.asarray(self.v, dtype=float)
        if u.shape != v.shape:
            raise ValueError("u and v must have the same dimension")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)


def hyperbolic_rhs(
    params: ModelParams, op: SpectralOperator, s: PhaseState
) -> tuple[np.ndarray, np.ndarray]:
    """First-order form of the second-order problem.

    du_k = v_k,
    dv_k = -(1/eps) * [ b(t) v_k + m(|A^(1/2)u|^2) lam_k u_k ].
    """
    u, v = op._check(s.u, s.v)
    lam = op.eigenvalues
    sigma = float(np.dot(lam, u * u))
    mval = params.stiffness(sigma)
    bval = params.damping(s.t)
    dv = -(bval * v + mval * (lam * u)) / params.epsilon
    return v.copy(), dv


def parabolic_rhs(
    params: ModelParams, op: SpectralOperator, t: float, u: np.ndarray
) -> np.ndarray:
    """First-order limit: du_k = -(1/b(t)) m(|A^(1/2)u|^2) lam_k u_k."""
    (u,) = op._check(u)
    bval = params.damping(t)
    if not bval > 0.0:
        raise ModelError(f"damping b({t}) = {bval} is not positive")
    lam = op.eigenvalues
    sigma = float(np.dot(lam, u * u))
    mval = params.stiffness(sigma)
    return -(mval / bval) * (lam * u)


def scalar_parabolic_exact(
    w0: float, lam: float, gamma: float, p: float, t: float
) -> float:
    """Closed-form solution of w' = -2 (1+t)^p lam^(gamma+1) w^(gamma+1), w(0) = w0:

        w(t) = w0 [1 + 2 gamma lam^(gamma+1) w0^gamma ((1+t)^(p+1) - 1)/(p+1)]^(-1/gamma).

    For the 1-D prototype limit problem with eigenvalue lam this is the exact
    evolution of the plain squared norm |u|^2 started from w0 = |u(0)|^2; with
    lam = 1 it equals |A^(1/2)u|^2 as well.  Serves as the integration oracle.
    """
    if not w0 > 0:
        raise ValueError("w0 must be positive")
    phi = ((1.0 + t) ** (p + 1.0) - 1.0) / (p + 1.0)
    return w0 * (1.0 + 2.0 * gamma * lam ** (gamma + 1.0) * w0**gamma * phi) ** (
        -1.0 / gamma
    )
