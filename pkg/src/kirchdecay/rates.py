"""Decay-exponent estimation and comparison against the predicted rates.

A quantity q(t) ~ C (1+t)^(-alpha) is fitted by least squares of log q
against log(1+t).  Envelope mode first reduces the window to per-decade
maxima, which is how an oscillatory |u'|^2 is read: its prediction is an
upper bound, so acceptance only ever checks that the envelope decays at
least at the predicted rate.

Predicted exponents (exact rational arithmetic):

  coercive, gamma > 0, p in [0,1]:
      |A^(1/2)u|^2 and |Au|^2 decay exactly like (p+1)/gamma,
      |u'|^2 at least like 2 + (p+1)/gamma.

  noncoercive, gamma >= 1, p in [0, (gamma^2+1)/(gamma^2+2 gamma-1)]:
      |A^(1/2)u|^2 realizes an exponent in [(p+1)/(gamma+1), (p+1)/gamma],
      |Au|^2 at least (p+1)/gamma,
      |u'|^2 at least (2 gamma^2 + (1-p) gamma + p + 1)/(gamma^2 + gamma).

The realized noncoercive rate depends on the initial data within its window,
so only interval membership is ever asserted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import quad

from .energies import h_potential
from .integrate import Trajectory
from .model import ModelParams
from .spectral import SpectralOperator

__all__ = [
    "DecayFit",
    "RatePrediction",
    "NondecayResult",
    "DataError",
    "ApplicabilityError",
    "fit_power_law",
    "theoretical_exponents",
    "nondecay_check",
]


class DataError(ValueError):
    """Fit input unusable (too few samples, nonpositive values)."""


class ApplicabilityError(ValueError):
    """A theorem hypothesis fails for the requested scenario."""


@dataclass(frozen=True)
class DecayFit:
    exponent: float
    amplitude: float
    window: tuple[float, float]
    residual: float
    mode: str
    n_points: int

    def to_dict(self) -> dict:
        return {
            "exponent": self.exponent,
            "amplitude": self.amplitude,
            "window": list(self.window),
            "residual": self.residual,
            "mode": self.mode,
            "n_points": self.n_points,
        }


@dataclass(frozen=True)
class RatePrediction:
    """Closed interval of realizable decay exponents for one quantity.

    For quantities with only an upper decay bound the interval is one-sided:
    upper_exp is +inf and lower_exp is the minimum guaranteed exponent.
    """

    quantity: str
    lower_exp: float
    upper_exp: float

    def __post_init__(self):
        if not self.lower_exp <= self.upper_exp:
            raise ValueError("lower_exp must not exceed upper_exp")


def fit_power_law(
    samples,
    window: Optional[tuple[float, float]] = None,
    mode: str = "point",
) -> DecayFit:
    """Least-squares power-law fit of (t, q) samples inside ``window``.

    ``samples`` is either a pair of arrays (t, q) or a sequence of (t, q)
    pairs.  Exact on pure power laws in (1+t).  mode 'envelope' keeps only
    the per-decade maxima before fitting.
    """
    if mode not in ("point", "envelope"):
        raise ValueError(f"unknown fit mode {mode!r}")
    if isinstance(samples, tuple) and len(samples) == 2:
        t = np.asarray(samples[0], dtype=float)
        q = np.asarray(samples[1], dtype=float)
    else:
        arr = np.asarray(list(samples), dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise DataError("samples must be (t, q) pairs")
        t, q = arr[:, 0], arr[:, 1]
    if window is None:
        window = (float(t.min()), float(t.max()))
    t_lo, t_hi = float(window[0]), float(window[1])
    if not t_lo < t_hi:
        raise DataError("window must satisfy t_lo < t_hi")
    mask = (t >= t_lo) & (t <= t_hi)
    t, q = t[mask], q[mask]
    if t.size < 8:
        raise DataError(f"need >= 8 samples in window, have {t.size}")
    if np.any(q <= 0.0) or not np.all(np.isfinite(q)):
        raise DataError("nonpositive or non-finite values in fit window")

    if mode == "envelope":
        decade = np.floor(np.log10((1.0 + t) / (1.0 + t_lo)) * (1.0 - 1e-12))
        t_env, q_env = [], []
        for d in np.unique(decade):
            sel = decade == d
            i = np.argmax(q[sel])
            t_env.append(t[sel][i])
            q_env.append(q[sel][i])
        t, q = np.array(t_env), np.array(q_env)
        if t.size < 2:
            raise DataError("envelope mode needs samples spanning >= 2 decades")

    x = np.log(1.0 + t)
    y = np.log(q)
    coeffs, *_ = np.polynomial.polynomial.polyfit(x, y, 1, full=True)
    intercept, slope = float(coeffs[0]), float(coeffs[1])
    resid = y - (intercept + slope * x)
    return DecayFit(
        exponent=-slope,
        amplitude=math.exp(intercept),
        window=(t_lo, t_hi),
        residual=float(np.sqrt(np.mean(resid * resid))),
        mode=mode,
        n_points=int(t.size),
    )


def theoretical_exponents(params: ModelParams, mode: str) -> list[RatePrediction]:
    """Predicted decay-exponent intervals for |A^(1/2)u|^2, |Au|^2, |u'|^2."""
    if mode not in ("coercive", "noncoercive"):
        raise ValueError(f"unknown mode {mode!r}")
    p = Fraction(params.p)
    gamma = Fraction(params.gamma)
    base = (p + 1) / gamma

    if mode == "coercive":
        if not 0 <= p <= 1:
            raise ApplicabilityError(
                "coercive decay rates require p in [0, 1] (global-existence hypothesis)"
            )
        return [
            RatePrediction("a12u2", float(base), float(base)),
            RatePrediction("au2", float(base), float(base)),
            RatePrediction("v2", float(2 + base), float(2 + base)),
        ]

    if gamma < 1:
        raise ApplicabilityError("noncoercive decay rates require gamma >= 1")
    p_max = (gamma**2 + 1) / (gamma**2 + 2 * gamma - 1)
    if not 0 <= p <= p_max:
        raise ApplicabilityError(
            f"noncoercive decay rates require p in [0, {float(p_max):g}] "
            "(admissible dissipation range)"
        )
    v2_exp = (2 * gamma**2 + (1 - p) * gamma + p + 1) / (gamma**2 + gamma)
    return [
        RatePrediction("a12u2", float((p + 1) / (gamma + 1)), float(base)),
        RatePrediction("au2", float(base), math.inf),
        RatePrediction("v2", float(v2_exp), math.inf),
    ]


@dataclass(frozen=True)
class NondecayResult:
    floor: float
    threshold: float
    h0: float
    b_total: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "floor": self.floor,
            "threshold": self.threshold,
            "h0": self.h0,
            "b_total": self.b_total,
            "passed": self.passed,
        }


def nondecay_check(
    params: ModelParams,
    op: SpectralOperator,
    traj: Trajectory,
    tail_fraction: float = 0.25,
) -> NondecayResult:
    """Check that |u'|^2 + |A^(1/2)u|^2 stays bounded away from zero.

    Applicability: the damping must be integrable on [0, inf) (prototype:
    p > 1) and the initial energy eps|u1|^2 + int_0^{w0} m must be positive.
    The floor is the minimum of |u'|^2 + |A^(1/2)u|^2 over the trailing
    ``tail_fraction`` of the samples; it must reach at least half of the
    guaranteed limit H(0) exp(-(2/eps) int_0^inf b).
    """
    if not 0.0 < tail_fraction <= 1.0:
        raise ValueError("tail_fraction must lie in (0, 1]")
    if params.b is None:
        if params.p <= 1.0:
            raise ApplicabilityError(
                f"prototype damping with p = {params.p:g} is not integrable"
            )
        b_total = 1.0 / (params.p - 1.0)
    else:
        val, err = quad(params.b, 0.0, np.inf, limit=500)
        if not math.isfinite(val) or err > 1e-6 * max(abs(val), 1.0):
            raise ApplicabilityError("damping integral on [0, inf) did not converge")
        b_total = float(val)

    lam = op.eigenvalues
    u0, v0 = traj.u[0], traj.v[0]
    w0 = float(np.dot(lam, u0 * u0))
    h0 = params.epsilon * float(np.dot(v0, v0)) + h_potential(params, w0)
    if not h0 > 0.0:
        raise ApplicabilityError("initial energy vanishes (zero data)")

    n_tail = max(1, int(math.ceil(tail_fraction * traj.t.size)))
    U = traj.u[-n_tail:]
    V = traj.v[-n_tail:]
    w = np.einsum("j,ij->i", lam, U * U)
    q = np.einsum("ij->i", V * V)
    floor = float(np.min(q + w))
    threshold = 0.5 * h0 * math.exp(-2.0 / params.epsilon * b_total)
    return NondecayResult(
        floor=floor,
        threshold=threshold,
        h0=h0,
        b_total=b_total,
        passed=floor >= threshold,
    )
