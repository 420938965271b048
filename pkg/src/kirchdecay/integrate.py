"""Adaptive long-horizon time integration of the second-order system and its
first-order limit.

Method: explicit embedded Dormand-Prince 5(4) pair with PI step-size control.
The stiffness encountered here is either oscillatory (frequency of order
sqrt(m * lam / eps)) or a fast damping layer of rate b(t)/eps; in both regimes
the step size self-limits and then grows as the solution decays, so an
explicit adaptive pair stays efficient over horizons up to 1e6.

Two line integrals are accumulated online along hyperbolic runs, ``int_b`` of
b(s) and ``int_bq`` of b(s)|u'(s)|^2, which the energy-identity and
exponential-floor audits consume.  Each is accumulated two ways per accepted
step: trapezoid on the step endpoints, and a fifth-order rule that reuses the
integrator's own stage values with the propagating weights (equivalent to
augmenting the state with the integral).  The stage-weighted values are the
default for audits; the trapezoid values are kept for comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .model import ModelParams, PhaseState, ModelError, parabolic_rhs
from .spectral import SpectralOperator

__all__ = [
    "LogGrid",
    "Uniform",
    "IntegrationSpec",
    "Termination",
    "IntegrationStats",
    "Trajectory",
    "IntegrationError",
    "integrate_hyperbolic",
    "integrate_parabolic",
    "measure_perturbation_gap",
]


class IntegrationError(RuntimeError):
    """Integration could not satisfy its contract (bad spec, step underflow
    recovery failure, or a violated post-check)."""


# ---------------------------------------------------------------------------
# Dormand-Prince 5(4) tableau
# ---------------------------------------------------------------------------

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = (
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
)
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0
# PI controller exponents (factor ~ err^-KI * facold^KP); this pair kills the
# accept/reject chatter that plain I-control shows at the stability boundary
# of the damping layer (rate b(t)/eps)
_KI = 0.14
_KP = 0.08


# ---------------------------------------------------------------------------
# Specification / result types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LogGrid:
    """Output times log-spaced in (1+t): t_i = (1+t_end)^(i/(n-1)) - 1."""

    points: int = 401

    def times(self, t_end: float) -> np.ndarray:
        if self.points < 2:
            raise IntegrationError("LogGrid needs at least 2 points")
        expo = np.linspace(0.0, 1.0, self.points)
        ts = np.power(1.0 + t_end, expo) - 1.0
        ts[0] = 0.0
        ts[-1] = t_end
        return np.unique(ts)


@dataclass(frozen=True)
class Uniform:
    """Output times 0, dt, 2dt, ..., t_end."""

    dt: float

    def times(self, t_end: float) -> np.ndarray:
        if not self.dt > 0:
            raise IntegrationError("Uniform sampling needs dt > 0")
        n = int(math.floor(t_end / self.dt + 1e-9))
        ts = np.arange(n + 1) * self.dt
        if ts[-1] < t_end:
            ts = np.append(ts, t_end)
        else:
            ts[-1] = t_end
        return np.unique(ts)


@dataclass(frozen=True)
class IntegrationSpec:
    t_end: float
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    sampling: Union[LogGrid, Uniform] = LogGrid(401)
    max_steps: int = 5_000_000
    degeneracy_floor: float = 1e-240
    blowup_ceiling: float = 1e12
    require_mild_degeneracy: bool = True

    def __post_init__(self):
        if not self.t_end > 0:
            raise IntegrationError("t_end must be positive")
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise IntegrationError("tolerances must be positive")


@dataclass(frozen=True)
class Termination:
    """Why the run stopped: 'reached_end', 'degenerate', 'blowup' or
    'step_limit'.  ``t`` is the time at which the condition was detected."""

    reason: str
    t: float


@dataclass(frozen=True)
class IntegrationStats:
    steps: int
    rejected: int
    nfev: int


@dataclass(frozen=True)
class Trajectory:
    """Sampled run.  ``u``/``v`` are (n_samples, N) arrays aligned with ``t``.

    For hyperbolic runs the cumulative integrals of b and b|u'|^2 at the
    sample times are attached (``int_b``, ``int_bq`` via the fifth-order
    stage rule; ``*_trap`` via trapezoid).  Parabolic runs carry None.
    """

    kind: str
    t: np.ndarray
    u: np.ndarray
    v: np.ndarray
    termination: Termination
    stats: IntegrationStats
    params: ModelParams
    op: SpectralOperator
    spec: IntegrationSpec
    int_b: Optional[np.ndarray] = None
    int_bq: Optional[np.ndarray] = None
    int_b_trap: Optional[np.ndarray] = None
    int_bq_trap: Optional[np.ndarray] = None

    @property
    def samples(self) -> list[PhaseState]:
        return [
            PhaseState(float(ti), self.u[i], self.v[i])
            for i, ti in enumerate(self.t)
        ]

    def state(self, i: int) -> PhaseState:
        return PhaseState(float(self.t[i]), self.u[i], self.v[i])


# ---------------------------------------------------------------------------
# Core stepper
# ---------------------------------------------------------------------------


def _initial_step(f, t0, y0, f0, rtol, atol, t_end):
    """Hairer's starting-step heuristic."""
    scale = atol + rtol * np.abs(y0)
    d0 = _rms(y0 / scale)
    d1 = _rms(f0 / scale)
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    h0 = min(h0, t_end - t0)
    y1 = y0 + h0 * f0
    f1 = f(t0 + h0, y1)
    d2 = _rms((f1 - f0) / scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100.0 * h0, h1, t_end - t0)


def _rms(x: np.ndarray) -> float:
    return float(np.sqrt(np.mean(x * x)))


def _integrate_core(
    f: Callable[[float, np.ndarray], np.ndarray],
    t0: float,
    y0: np.ndarray,
    out_ts: np.ndarray,
    rtol: float,
    atol: float,
    max_steps: int,
    aux_fn: Optional[Callable[[float, np.ndarray], tuple]] = None,
    n_aux: int = 0,
    stop_check: Optional[Callable[[float, np.ndarray], Optional[str]]] = None,
):
    """Drive the DOPRI5 pair from t0 through the output grid.

    Steps are clipped to land exactly on output times.  ``aux_fn`` returns a
    tuple of ``n_aux`` scalar integrands, accumulated online per accepted step
    (stage-weighted and trapezoid); cumulative values are recorded at each
    output time.  ``stop_check`` runs on every accepted step; returning a
    reason string terminates the run there.
    """
    out_list = [float(x) for x in out_ts]  # plain floats keep stage times cheap
    t_end = out_list[-1]
    y = np.array(y0, dtype=float)
    aux_rk = [0.0] * n_aux
    aux_tr = [0.0] * n_aux

    ts_rec: list[float] = []
    ys_rec: list[np.ndarray] = []
    aux_rk_rec: list[list[float]] = []
    aux_tr_rec: list[list[float]] = []

    def record(t):
        ts_rec.append(t)
        ys_rec.append(y.copy())
        aux_rk_rec.append(list(aux_rk))
        aux_tr_rec.append(list(aux_tr))

    t = float(t0)
    nfev = 1
    k1 = f(t, y)
    g1 = aux_fn(t, y) if aux_fn is not None else ()

    i_out = 0
    if out_list[0] == t:
        record(t)
        i_out = 1

    h = float(_initial_step(f, t, y, k1, rtol, atol, t_end))
    nfev += 1
    n_acc = 0
    n_rej = 0
    facold = 1e-4
    just_rejected = False
    K = np.empty((7, y.size))
    termination = None

    while t < t_end:
        if n_acc + n_rej >= max_steps:
            termination = Termination("step_limit", t)
            break
        if h < 1e-14 * max(1.0, abs(t)):
            termination = Termination("step_limit", t)
            break

        t_next = out_list[i_out]
        hit_output = False
        if t + h >= t_next:
            h = t_next - t
            hit_output = True

        K[0] = k1
        g_stage = [g1]
        for i in range(1, 7):
            yi = y + h * (_A[i - 1] @ K[:i])
            K[i] = f(t + _C[i] * h, yi)
            if aux_fn is not None:
                g_stage.append(aux_fn(t + _C[i] * h, yi))
        nfev += 6
        y_new = yi  # stage 7 state equals the 5th-order solution
        k_new = K[6]

        err_vec = h * (_E @ K)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = _rms(err_vec / scale)

        if err <= 1.0:
            t_new = t_next if hit_output else t + h
            for j in range(n_aux):
                aux_rk[j] += h * (
                    _B5[0] * g_stage[0][j]
                    + _B5[2] * g_stage[2][j]
                    + _B5[3] * g_stage[3][j]
                    + _B5[4] * g_stage[4][j]
                    + _B5[5] * g_stage[5][j]
                )
                aux_tr[j] += 0.5 * h * (g_stage[0][j] + g_stage[6][j])
            t, y, k1 = t_new, y_new, k_new
            if aux_fn is not None:
                g1 = g_stage[6]
            n_acc += 1

            if hit_output:
                record(t)
                i_out += 1

            if stop_check is not None:
                reason = stop_check(t, y)
                if reason is not None:
                    termination = Termination(reason, t)
                    break

            if err == 0.0:
                factor = _MAX_FACTOR
            else:
                factor = _SAFETY * err ** (-_KI) * facold**_KP
                factor = min(_MAX_FACTOR, max(_MIN_FACTOR, factor))
            if just_rejected:
                factor = min(1.0, factor)
                just_rejected = False
            facold = max(err, 1e-4)
            h = h * factor
        else:
            n_rej += 1
            just_rejected = True
            h = h * max(_MIN_FACTOR, _SAFETY * err ** (-0.2))

    if termination is None:
        termination = Termination("reached_end", t)

    return (
        np.array(ts_rec),
        np.array(ys_rec) if ys_rec else np.empty((0, y.size)),
        np.array(aux_rk_rec) if n_aux else None,
        np.array(aux_tr_rec) if n_aux else None,
        IntegrationStats(steps=n_acc, rejected=n_rej, nfev=nfev),
        termination,
    )


# ---------------------------------------------------------------------------
# Drivers
# ---------------------------------------------------------------------------


def _require_mild_degeneracy(op: SpectralOperator, u0: np.ndarray, spec: IntegrationSpec):
    if spec.require_mild_degeneracy:
        w0 = float(np.dot(op.eigenvalues, u0 * u0))
        if not w0 > 0.0:
            raise IntegrationError(
                "mild degeneracy requires |A^(1/2)u0| > 0 "
                "(disable with require_mild_degeneracy=False)"
            )


def integrate_hyperbolic(
    params: ModelParams,
    op: SpectralOperator,
    init: PhaseState,
    spec: IntegrationSpec,
) -> Trajectory:
    """Integrate eps u'' + b(t) u' + m(|A^(1/2)u|^2) A u = 0 from ``init``.

    Terminates early with 'degenerate' when |A^(1/2)u|^2 drops below the
    degeneracy floor and with 'blowup' when |A^(1/2)u'|^2 + |Au|^2 exceeds the
    ceiling, mirroring the continuation alternative of the maximal solution.
    """
    u0, v0 = op._check(init.u, init.v)
    _require_mild_degeneracy(op, u0, spec)

    lam = op.eigenvalues
    lam2 = lam * lam
    n = lam.size
    eps_inv = 1.0 / params.epsilon
    gamma = params.gamma
    neg_p = -params.p
    prototype = params.is_prototype
    m_fn = params.m
    b_fn = params.b

    def damping(t):
        return (1.0 + t) ** neg_p if b_fn is None else b_fn(t)

    def f(t, y):
        u = y[:n]
        v = y[n:]
        sigma = float(np.dot(lam, u * u))
        if prototype:
            mval = sigma**gamma
            bval = (1.0 + t) ** neg_p
        else:
            mval = sigma**gamma if m_fn is None else m_fn(sigma)
            bval = damping(t)
        out = np.empty(2 * n)
        out[:n] = v
        out[n:] = -(bval * v + mval * (lam * u)) * eps_inv
        return out

    def aux(t, y):
        v = y[n:]
        bval = (1.0 + t) ** neg_p if b_fn is None else b_fn(t)
        return (bval * float(np.dot(v, v)), bval)

    floor = spec.degeneracy_floor
    ceiling = spec.blowup_ceiling

    def stop_check(t, y):
        u = y[:n]
        v = y[n:]
        uu = u * u
        if float(np.dot(lam, uu)) < floor:
            return "degenerate"
        if float(np.dot(lam, v * v) + np.dot(lam2, uu)) > ceiling:
            return "blowup"
        return None

    out_ts = spec.sampling.times(spec.t_end)
    y0 = np.concatenate([u0, v0])
    ts, ys, aux_rk, aux_tr, stats, term = _integrate_core(
        f,
        0.0,
        y0,
        out_ts,
        spec.rel_tol,
        spec.abs_tol,
        spec.max_steps,
        aux_fn=aux,
        n_aux=2,
        stop_check=stop_check,
    )
    return Trajectory(
        kind="hyperbolic",
        t=ts,
        u=ys[:, :n],
        v=ys[:, n:],
        termination=term,
        stats=stats,
        params=params,
        op=op,
        spec=spec,
        int_bq=aux_rk[:, 0] if aux_rk is not None else None,
        int_b=aux_rk[:, 1] if aux_rk is not None else None,
        int_bq_trap=aux_tr[:, 0] if aux_tr is not None else None,
        int_b_trap=aux_tr[:, 1] if aux_tr is not None else None,
    )


def integrate_parabolic(
    params: ModelParams,
    op: SpectralOperator,
    u0: np.ndarray,
    spec: IntegrationSpec,
) -> Trajectory:
    """Integrate the first-order limit b(t) u' + m(|A^(1/2)u|^2) A u = 0.

    The returned velocity samples are the parabolic u' evaluated from the
    right-hand side.  |A^(1/2)u|^2 must be nonincreasing sample to sample;
    a violation indicates a step-size failure and raises IntegrationError.
    """
    (u0,) = op._check(u0)
    _require_mild_degeneracy(op, u0, spec)

    lam = op.eigenvalues
    n = lam.size
    gamma = params.gamma
    p = params.p
    prototype = params.is_prototype
    m_fn = params.m
    b_fn = params.b

    def f(t, u):
        sigma = float(np.dot(lam, u * u))
        if prototype:
            rate = sigma**gamma * (1.0 + t) ** p
        else:
            bval = (1.0 + t) ** (-p) if b_fn is None else b_fn(t)
            if not bval > 0.0:
                raise ModelError(f"damping b({t}) = {bval} is not positive")
            mval = sigma**gamma if m_fn is None else m_fn(sigma)
            rate = mval / bval
        return -rate * (lam * u)

    floor = spec.degeneracy_floor

    def stop_check(t, u):
        if float(np.dot(lam, u * u)) < floor:
            return "degenerate"
        return None

    out_ts = spec.sampling.times(spec.t_end)
    ts, ys, _, _, stats, term = _integrate_core(
        f, 0.0, u0, out_ts, spec.rel_tol, spec.abs_tol, spec.max_steps,
        stop_check=stop_check,
    )

    w = np.einsum("j,ij->i", lam, ys * ys)
    drift = w[1:] - w[:-1] * (1.0 + 1e-9) - 1e-300
    if drift.size and float(drift.max()) > 0.0:
        i_bad = int(np.argmax(drift)) + 1
        raise IntegrationError(
            f"parabolic monotonicity post-check failed at t = {ts[i_bad]:g}"
        )

    vs = np.array([f(ts[i], ys[i]) for i in range(ts.size)]) if ts.size else ys
    return Trajectory(
        kind="parabolic",
        t=ts,
        u=ys,
        v=vs,
        termination=term,
        stats=stats,
        params=params,
        op=op,
        spec=spec,
    )


def measure_perturbation_gap(
    params: ModelParams,
    op: SpectralOperator,
    init: PhaseState,
    spec: IntegrationSpec,
) -> list[tuple[float, float]]:
    """Gap |u_eps(t) - u(t)| between matched hyperbolic and parabolic runs
    started from the same u0, on the common output grid.

    Exploratory: no decay rate in eps is claimed, only the values.
    """
    hyper = integrate_hyperbolic(params, op, init, spec)
    para = integrate_parabolic(params, op, init.u, spec)
    for traj in (hyper, para):
        if traj.termination.reason != "reached_end":
            raise IntegrationError(
                f"{traj.kind} run terminated early: {traj.termination.reason} "
                f"at t = {traj.termination.t:g}"
            )
    diff = hyper.u - para.u
    gaps = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    return [(float(t), float(g)) for t, g in zip(hyper.t, gaps)]


# ---------------------------------------------------------------------------
# Scalar fast path (used by the comparison-lemma suites)
# ---------------------------------------------------------------------------


def dopri5_scalar(
    f: Callable[[float, float], float],
    y0: float,
    out_ts: Sequence[float],
    rtol: float = 1e-11,
    atol: float = 1e-300,
    max_steps: int = 2_000_000,
) -> list[float]:
    """Scalar DOPRI5 on plain floats; same pair and controller as the vector
    path, stripped of numpy overhead.  Returns y at ``out_ts`` (out_ts[0] is
    the initial time)."""
    out_list = [float(x) for x in out_ts]  # keep the loop on plain floats
    t = out_list[0]
    t_end = out_list[-1]
    y = float(y0)
    ys = [y]
    k1 = f(t, y)
    h = min(1e-4 * (1.0 + abs(t_end)), t_end - t) if t_end > t else 0.0
    facold = 1e-4
    just_rejected = False
    i_out = 1
    steps = 0

    while t < t_end:
        steps += 1
        if steps > max_steps or h < 1e-15 * max(1.0, abs(t)):
            raise IntegrationError("scalar integration step limit reached")
        t_next = out_list[i_out]
        hit = False
        if t + h >= t_next:
            h = t_next - t
            hit = True

        k2 = f(t + h / 5, y + h * (k1 / 5))
        k3 = f(t + 3 * h / 10, y + h * (3 * k1 / 40 + 9 * k2 / 40))
        k4 = f(t + 4 * h / 5, y + h * (44 * k1 / 45 - 56 * k2 / 15 + 32 * k3 / 9))
        k5 = f(
            t + 8 * h / 9,
            y
            + h
            * (
                19372 * k1 / 6561
                - 25360 * k2 / 2187
                + 64448 * k3 / 6561
                - 212 * k4 / 729
            ),
        )
        k6 = f(
            t + h,
            y
            + h
            * (
                9017 * k1 / 3168
                - 355 * k2 / 33
                + 46732 * k3 / 5247
                + 49 * k4 / 176
                - 5103 * k5 / 18656
            ),
        )
        y_new = y + h * (
            35 * k1 / 384
            + 500 * k3 / 1113
            + 125 * k4 / 192
            - 2187 * k5 / 6784
            + 11 * k6 / 84
        )
        k7 = f(t + h, y_new)
        err_abs = abs(
            h
            * (
                71 * k1 / 57600
                - 71 * k3 / 16695
                + 71 * k4 / 1920
                - 17253 * k5 / 339200
                + 22 * k6 / 525
                - k7 / 40
            )
        )
        scale = atol + rtol * max(abs(y), abs(y_new))
        err = err_abs / scale

        if err <= 1.0:
            t = t_next if hit else t + h
            y = y_new
            k1 = k7
            if hit:
                ys.append(y)
                i_out += 1
            factor = (
                _MAX_FACTOR
                if err == 0.0
                else min(_MAX_FACTOR, max(_MIN_FACTOR, _SAFETY * err**-_KI * facold**_KP))
            )
            if just_rejected:
                factor = min(1.0, factor)
                just_rejected = False
            facold = max(err, 1e-4)
            h *= factor
        else:
            just_rejected = True
            h *= max(_MIN_FACTOR, _SAFETY * err**-0.2)

    return ys
