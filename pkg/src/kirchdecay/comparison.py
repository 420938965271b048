"""Scalar differential-inequality comparison bounds and their ODE oracles.

Two results are implemented as evaluatable bounds.

First, for f >= 0 of class C^1 satisfying

    f'(t) <= -c1 (1+t)^(-p) f(t) + c2 sqrt(f(t))     on [0, T],

the bound  f(t) <= f(0) + (c2/c1)^2 (1+t)^(2p).

Second, for w > 0 with w(0) = w0 and a continuous perturbation f whose
weighted integral is small,

    | int_0^t (1+s)^p f(s) ds | <= min{ 1/(4 gamma w0^gamma),
                                        alpha/(2(p+1)) } (1+t)^(p+1),

the differential inequalities

    w' <= -2 (1+t)^p w^(1+gamma) (alpha + f)   and   w' >= (same right side)

imply the two-sided algebraic envelope

    upper(t) = w0 [max{2, (p+1)/(alpha gamma w0^gamma)}]^(1/gamma) (1+t)^(-(p+1)/gamma),
    lower(t) = w0 [1 + 3 alpha gamma w0^gamma/(p+1)]^(-1/gamma)    (1+t)^(-(p+1)/gamma).

The proof substance is the change of time Phi(t) = alpha((1+t)^(p+1)-1)/(p+1)
+ int_0^t (1+s)^p f ds, under which z(t) = w0 (1 + 2 gamma w0^gamma
Phi(t))^(-1/gamma) solves z' = -2 (1+t)^p z^(gamma+1) (alpha + f), z(0) = w0
exactly.  The suite integrates that Cauchy problem numerically, cross-checks
the closed form, and brackets randomized sub/supersolutions by the envelope.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad

from .integrate import IntegrationError, dopri5_scalar

__all__ = [
    "ComparisonProblem",
    "FConditionResult",
    "ComparisonSolution",
    "lemma1_bound",
    "phi",
    "check_f_condition",
    "lemma2_upper",
    "lemma2_lower",
    "integrate_comparison_ode",
    "LemmaSuiteReport",
    "verify_lemma_suites",
    "run_lemma1_instance",
    "run_lemma2_instance",
]


class DomainError(ValueError):
    """Closed form leaves its domain (the f-smallness condition fails hard)."""


@dataclass(frozen=True)
class ComparisonProblem:
    """Data for the comparison bounds on [0, horizon]."""

    w0: float
    alpha: float
    gamma: float
    p: float
    f: Optional[Callable[[float], float]] = None
    c1: float = 1.0
    c2: float = 0.0
    horizon: float = 10.0

    def __post_init__(self):
        if not self.w0 > 0:
            raise ValueError("w0 must be positive")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if self.p < 0:
            raise ValueError("p must be nonnegative")
        if not self.c1 > 0:
            raise ValueError("c1 must be positive")
        if self.c2 < 0:
            raise ValueError("c2 must be nonnegative")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")

    def f_value(self, s: float) -> float:
        return 0.0 if self.f is None else self.f(s)

    def f_smallness_cap(self) -> float:
        return min(
            1.0 / (4.0 * self.gamma * self.w0**self.gamma),
            self.alpha / (2.0 * (self.p + 1.0)),
        )


def lemma1_bound(f0: float, c1: float, c2: float, p: float, t: float) -> float:
    """f(0) + (c2/c1)^2 (1+t)^(2p)."""
    if not c1 > 0:
        raise ValueError("c1 must be positive")
    if t < 0:
        raise ValueError("t must be nonnegative")
    return f0 + (c2 / c1) ** 2 * (1.0 + t) ** (2.0 * p)


def phi(problem: ComparisonProblem, t: float) -> float:
    """Phi(t) = alpha((1+t)^(p+1)-1)/(p+1) + int_0^t (1+s)^p f(s) ds.

    The integral uses adaptive quadrature at relative tolerance 1e-10.
    """
    if not 0.0 <= t <= problem.horizon:
        raise ValueError("t must lie in [0, horizon]")
    base = problem.alpha * ((1.0 + t) ** (problem.p + 1.0) - 1.0) / (problem.p + 1.0)
    if problem.f is None or t == 0.0:
        return base
    val, err = quad(
        lambda s: (1.0 + s) ** problem.p * problem.f(s),
        0.0,
        t,
        epsrel=1e-10,
        epsabs=1e-14,
        limit=1000,
    )
    if not math.isfinite(val) or (abs(val) > 1e-8 and err > 1e-6 * abs(val)):
        raise ArithmeticError("quadrature for Phi did not converge")
    return base + float(val)


@dataclass(frozen=True)
class FConditionResult:
    satisfied: bool
    margin: float


def check_f_condition(problem: ComparisonProblem, n_grid: int = 4097) -> FConditionResult:
    """Verify the integral-smallness condition on a dense grid over [0, T].

    margin is the maximum of |int_0^t (1+s)^p f ds| over its allowance
    cap * (1+t)^(p+1); satisfied iff margin <= 1.
    """
    if problem.f is None:
        return FConditionResult(satisfied=True, margin=0.0)
    ts = np.linspace(0.0, problem.horizon, n_grid)
    fv = np.array([problem.f(float(s)) for s in ts])
    integrand = (1.0 + ts) ** problem.p * fv
    cum = np.zeros(n_grid)
    cum[1:] = np.cumsum(0.5 * np.diff(ts) * (integrand[1:] + integrand[:-1]))
    allowance = problem.f_smallness_cap() * (1.0 + ts) ** (problem.p + 1.0)
    margin = float(np.max(np.abs(cum) / allowance))
    return FConditionResult(satisfied=margin <= 1.0, margin=margin)


def lemma2_upper(problem: ComparisonProblem, t: float) -> float:
    if t < 0:
        raise ValueError("t must be nonnegative")
    w0, alpha, gamma, p = problem.w0, problem.alpha, problem.gamma, problem.p
    amp = max(2.0, (p + 1.0) / (alpha * gamma * w0**gamma)) ** (1.0 / gamma)
    return w0 * amp / (1.0 + t) ** ((p + 1.0) / gamma)


def lemma2_lower(problem: ComparisonProblem, t: float) -> float:
    if t < 0:
        raise ValueError("t must be nonnegative")
    w0, alpha, gamma, p = problem.w0, problem.alpha, problem.gamma, problem.p
    amp = (1.0 + 3.0 * alpha * gamma * w0**gamma / (p + 1.0)) ** (-1.0 / gamma)
    return w0 * amp / (1.0 + t) ** ((p + 1.0) / gamma)


@dataclass(frozen=True)
class ComparisonSolution:
    t: np.ndarray
    z_numeric: np.ndarray
    z_closed: np.ndarray
    max_rel_err: float


def _log_times(T: float, n: int) -> np.ndarray:
    ts = np.power(1.0 + T, np.linspace(0.0, 1.0, n)) - 1.0
    ts[0] = 0.0
    ts[-1] = T
    return np.unique(ts)


def integrate_comparison_ode(
    problem: ComparisonProblem,
    n_out: int = 65,
    rtol: float = 1e-11,
) -> ComparisonSolution:
    """Integrate z' = -2 (1+t)^p z^(gamma+1) (alpha + f(t)), z(0) = w0, and
    cross-check against the closed form z = w0 (1 + 2 gamma w0^gamma
    Phi)^(-1/gamma).

    The weighted integral of f inside Phi is accumulated by the same adaptive
    scheme (it is an independent linear quadrature, so the comparison pits the
    nonlinear flow against the algebraic formula).  Raises DomainError when
    the closed form hits its singularity.
    """
    w0, alpha, gamma, p = problem.w0, problem.alpha, problem.gamma, problem.p
    ts = _log_times(problem.horizon, n_out)
    fv = problem.f if problem.f is not None else (lambda s: 0.0)

    gamma1 = gamma + 1.0

    def rhs(t, z):
        zz = max(z, 0.0)
        return -2.0 * (1.0 + t) ** p * zz**gamma1 * (alpha + fv(t))

    z_num = np.array(dopri5_scalar(rhs, w0, ts, rtol=rtol, atol=1e-300))

    if problem.f is None:
        integral_f = np.zeros_like(ts)
    else:
        integral_f = np.array(
            dopri5_scalar(
                lambda t, _y: (1.0 + t) ** p * fv(t), 0.0, ts, rtol=rtol, atol=1e-13
            )
        )
    phi_vals = alpha * ((1.0 + ts) ** (p + 1.0) - 1.0) / (p + 1.0) + integral_f
    radicand = 1.0 + 2.0 * gamma * w0**gamma * phi_vals
    if np.any(radicand <= 0.0):
        raise DomainError("closed form singular: 1 + 2 gamma w0^gamma Phi <= 0")
    z_closed = w0 * radicand ** (-1.0 / gamma)

    rel = np.abs(z_num - z_closed) / np.abs(z_closed)
    return ComparisonSolution(
        t=ts, z_numeric=z_num, z_closed=z_closed, max_rel_err=float(np.max(rel))
    )


# ---------------------------------------------------------------------------
# Randomized oracle suites
# ---------------------------------------------------------------------------


def run_lemma1_instance(inst: dict, rtol: float = 1e-9) -> float:
    """Integrate the worst-case ODE f' = -c1 (1+t)^(-p) f + c2 sqrt(f) and
    return max f(t)/bound(t) over the run (must stay <= 1 + tolerance)."""
    c1, c2, p, f0, T = inst["c1"], inst["c2"], inst["p"], inst["f0"], inst["T"]
    ts = _log_times(T, 33)

    def rhs(t, f):
        fpos = max(f, 0.0)
        return -c1 * (1.0 + t) ** (-p) * fpos + c2 * math.sqrt(fpos)

    fvals = dopri5_scalar(rhs, f0, ts, rtol=rtol, atol=1e-13)
    margin = 0.0
    for t, f in zip(ts, fvals):
        bound = lemma1_bound(f0, c1, c2, p, float(t))
        if bound > 0.0:
            margin = max(margin, f / bound)
    return margin


def _lemma2_f(inst: dict) -> Callable[[float], float]:
    A, omega, r = inst["A"], inst["omega"], inst["r"]
    return lambda s: A * math.sin(omega * s) * (1.0 + s) ** (-r)


def run_lemma2_instance(inst: dict, rtol: float = 1e-9) -> dict:
    """Run one randomized envelope instance and return its margins.

    Margins at every output time: the numeric z and a subsolution against the
    upper envelope (ratio <= 1), the numeric z and a supersolution against
    the lower envelope (inverse ratio <= 1), and the closed-form agreement.
    Deterministic in the instance numbers, so serialized instances replay to
    bitwise-identical margins.
    """
    problem = ComparisonProblem(
        w0=inst["w0"],
        alpha=inst["alpha"],
        gamma=inst["gamma"],
        p=inst["p"],
        f=_lemma2_f(inst),
        horizon=inst["T"],
    )
    w0, alpha, gamma, p = problem.w0, problem.alpha, problem.gamma, problem.p
    fv = problem.f
    ts = _log_times(problem.horizon, 33)

    sol = integrate_comparison_ode(problem, n_out=33, rtol=rtol)
    upper = np.array([lemma2_upper(problem, float(t)) for t in ts])
    lower = np.array([lemma2_lower(problem, float(t)) for t in ts])

    gamma1 = gamma + 1.0

    def rhs_shift(delta):
        def rhs(t, ww):
            wpos = max(ww, 0.0)
            return -2.0 * (1.0 + t) ** p * wpos**gamma1 * (alpha + fv(t)) + delta * ww

        return rhs

    # the envelope checks tolerate 1e-7, so the bracketing runs can be looser
    rtol_bounds = max(rtol, 1e-7)
    w_sub = np.array(
        dopri5_scalar(
            rhs_shift(-inst["delta_sub"]), w0, ts, rtol=rtol_bounds, atol=1e-300
        )
    )
    w_super = np.array(
        dopri5_scalar(
            rhs_shift(inst["delta_super"]), w0, ts, rtol=rtol_bounds, atol=1e-300
        )
    )

    return {
        "closed_rel_err": sol.max_rel_err,
        "z_upper_margin": float(np.max(sol.z_numeric / upper)),
        "z_lower_margin": float(np.max(lower / sol.z_numeric)),
        "sub_upper_margin": float(np.max(w_sub / upper)),
        "super_lower_margin": float(np.max(lower / w_super)),
        "envelope_order_ok": bool(np.all(upper >= lower)),
    }


def _draw_lemma1(rng: np.random.Generator) -> dict:
    return {
        "c1": float(rng.uniform(0.5, 5.0)),
        "c2": float(rng.uniform(0.0, 2.0)),
        "p": float(rng.uniform(0.0, 1.5)),
        "f0": float(rng.uniform(0.0, 5.0)),
        "T": float(np.exp(rng.uniform(np.log(1.0), np.log(100.0)))),
    }


def _draw_lemma2(rng: np.random.Generator) -> dict:
    inst = {
        "w0": float(np.exp(rng.uniform(np.log(0.1), np.log(10.0)))),
        "alpha": float(np.exp(rng.uniform(np.log(0.1), np.log(10.0)))),
        "gamma": float(rng.uniform(0.3, 3.0)),
        "p": float(rng.uniform(0.0, 1.5)),
        "T": float(np.exp(rng.uniform(np.log(1.0), np.log(100.0)))),
        "A": 0.0,
        "omega": float(rng.uniform(0.5, 20.0)),
        "r": float(rng.uniform(0.0, 2.0)),
        "delta_sub": float(rng.uniform(0.0, 2.0)),
        "delta_super": 0.0,
    }
    inst["delta_super"] = float(rng.uniform(0.0, 2.0 / inst["T"]))
    # oscillatory perturbation, then scaled so the integral condition holds
    # with margin <= 0.9 (the margin is linear in A)
    A_raw = float(rng.uniform(0.1, 1.0)) * inst["alpha"]
    inst["A"] = A_raw
    margin = _f_condition_margin_vec(inst)
    if margin > 0.9:
        inst["A"] = A_raw * 0.9 / margin
    return inst


def _f_condition_margin_vec(inst: dict, n_grid: int = 2049) -> float:
    # same quadrature as check_f_condition, vectorized for the suite's
    # oscillatory f family
    ts = np.linspace(0.0, inst["T"], n_grid)
    fv = inst["A"] * np.sin(inst["omega"] * ts) * (1.0 + ts) ** (-inst["r"])
    integrand = (1.0 + ts) ** inst["p"] * fv
    cum = np.zeros(n_grid)
    cum[1:] = np.cumsum(0.5 * np.diff(ts) * (integrand[1:] + integrand[:-1]))
    cap = min(
        1.0 / (4.0 * inst["gamma"] * inst["w0"] ** inst["gamma"]),
        inst["alpha"] / (2.0 * (inst["p"] + 1.0)),
    )
    allowance = cap * (1.0 + ts) ** (inst["p"] + 1.0)
    return float(np.max(np.abs(cum) / allowance))


@dataclass
class LemmaSuiteReport:
    seed: int
    count: int
    rel_tol: float
    lemma1_worst_margin: float
    lemma2_worst: dict
    n_violations: int
    violations: list
    passed: bool

    def to_dict(self) -> dict:
        return asdict(self)


def verify_lemma_suites(
    seed: int, count: int, rel_tol: float = 1e-7, rtol_ode: float = 1e-9
) -> LemmaSuiteReport:
    """Run ``count`` randomized instances of each comparison suite.

    Zero bound violations beyond ``rel_tol`` are expected; any violating
    instance is serialized in the report for bitwise replay.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    tol = 1.0 + rel_tol

    lemma1_worst = 0.0
    violations: list = []
    for i in range(count):
        inst = _draw_lemma1(rng)
        margin = run_lemma1_instance(inst, rtol=rtol_ode)
        lemma1_worst = max(lemma1_worst, margin)
        if margin > tol:
            violations.append({"lemma": 1, "index": i, "instance": inst, "margin": margin})

    worst2 = {
        "closed_rel_err": 0.0,
        "z_upper_margin": 0.0,
        "z_lower_margin": 0.0,
        "sub_upper_margin": 0.0,
        "super_lower_margin": 0.0,
    }
    for i in range(count):
        inst = _draw_lemma2(rng)
        margins = run_lemma2_instance(inst, rtol=rtol_ode)
        for key in worst2:
            worst2[key] = max(worst2[key], margins[key])
        bad = (
            margins["closed_rel_err"] > rel_tol
            or margins["z_upper_margin"] > tol
            or margins["z_lower_margin"] > tol
            or margins["sub_upper_margin"] > tol
            or margins["super_lower_margin"] > tol
            or not margins["envelope_order_ok"]
        )
        if bad:
            violations.append(
                {"lemma": 2, "index": i, "instance": inst, "margins": margins}
            )

    return LemmaSuiteReport(
        seed=seed,
        count=count,
        rel_tol=rel_tol,
        lemma1_worst_margin=lemma1_worst,
        lemma2_worst=worst2,
        n_violations=len(violations),
        violations=violations,
        passed=not violations,
    )
