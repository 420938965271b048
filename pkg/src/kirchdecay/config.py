"""Scenario configuration: a flat, diff-able ``key = value`` text format.

One assignment per line; ``#`` starts a comment; lists are bracketed and
comma-separated.  Example::

    mode = hyperbolic
    epsilon = 1e-3
    p = 0.5
    gamma = 1
    spectrum = power 2 8          # lam_k = k^2, 8 modes
    u0 = first_mode
    u1 = zero
    t_end = 1e5
    sampling = log 401
    audit = true
    theorem_mode = coercive
    fit = [a12u2, au2, v2]
    output_dir = runs/coercive

Sweep configs add ``sweep_<param> = [v1, v2, ...]`` lines (param one of
epsilon, p, gamma, t_end); the grid is the cross product in file order.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np

from .integrate import IntegrationSpec, LogGrid, Uniform
from .model import ModelParams
from .spectral import SpectralOperator


class ConfigError(ValueError):
    """Malformed or incomplete configuration; message names the key/line."""


_MODES = ("hyperbolic", "parabolic", "both")
_THEOREM_MODES = ("auto", "coercive", "noncoercive")
_FIT_QUANTITIES = ("u2", "a12u2", "au2", "v2", "a12v2")
_SWEEPABLE = ("epsilon", "p", "gamma", "t_end")


@dataclass(frozen=True)
class SpectrumSpec:
    """Either an explicit eigenvalue list or a generator.

    kind 'power' gives lam_k = k^exponent, 'inverse_power' lam_k = k^(-exponent)
    (the standard desk model of a spectrum accumulating at zero), k = 1..count.
    """

    kind: str
    values: tuple[float, ...] = ()
    exponent: float = 0.0
    count: int = 0

    def eigenvalues(self) -> np.ndarray:
        if self.kind == "explicit":
            return np.array(self.values, dtype=float)
        k = np.arange(1, self.count + 1, dtype=float)
        expo = self.exponent if self.kind == "power" else -self.exponent
        return k**expo

    def echo(self) -> str:
        if self.kind == "explicit":
            return "[" + ", ".join(repr(v) for v in self.values) + "]"
        return f"{self.kind} {self.exponent!r} {self.count}"


@dataclass(frozen=True)
class InitSpec:
    """Preset name (first_mode, uniform, zero, random <seed>) or explicit list."""

    preset: str = ""
    values: tuple[float, ...] = ()
    seed: int = 0

    def build(self, n: int) -> np.ndarray:
        if self.preset == "":
            vals = np.array(self.values, dtype=float)
            if vals.size != n:
                raise ConfigError(
                    f"initial vector has {vals.size} entries, spectrum has {n}"
                )
            return vals
        if self.preset == "first_mode":
            out = np.zeros(n)
            out[0] = 1.0
            return out
        if self.preset == "uniform":
            return np.full(n, 1.0 / np.sqrt(n))
        if self.preset == "zero":
            return np.zeros(n)
        if self.preset == "random":
            rng = np.random.default_rng(self.seed)
            vec = rng.standard_normal(n)
            return vec / np.linalg.norm(vec)
        raise ConfigError(f"unknown initial-data preset {self.preset!r}")

    def echo(self) -> str:
        if self.preset == "random":
            return f"random {self.seed}"
        if self.preset:
            return self.preset
        return "[" + ", ".join(repr(v) for v in self.values) + "]"


@dataclass(frozen=True)
class ScenarioConfig:
    mode: str
    p: float
    gamma: float
    spectrum: SpectrumSpec
    u0: InitSpec
    t_end: float
    epsilon: Optional[float] = None
    u1: InitSpec = InitSpec(preset="zero")
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    sampling: Union[LogGrid, Uniform] = LogGrid(401)
    max_steps: int = 5_000_000
    degeneracy_floor: float = 1e-240
    blowup_ceiling: float = 1e12
    audit: bool = False
    theorem_mode: str = "auto"
    audit_tol: float = 1e-3
    fit: tuple[str, ...] = ()
    fit_window: Optional[tuple[float, float]] = None
    envelope: tuple[str, ...] = ("v2",)
    plots: bool = False
    output_dir: str = "run"
    seed: int = 0
    sweep: tuple[tuple[str, tuple[float, ...]], ...] = ()

    # -- builders ----------------------------------------------------------

    def operator(self) -> SpectralOperator:
        return SpectralOperator(self.spectrum.eigenvalues())

    def params(self) -> ModelParams:
        eps = self.epsilon if self.epsilon is not None else 1.0
        return ModelParams(epsilon=eps, p=self.p, gamma=self.gamma)

    def integration_spec(self) -> IntegrationSpec:
        return IntegrationSpec(
            t_end=self.t_end,
            rel_tol=self.rel_tol,
            abs_tol=self.abs_tol,
            sampling=self.sampling,
            max_steps=self.max_steps,
            degeneracy_floor=self.degeneracy_floor,
            blowup_ceiling=self.blowup_ceiling,
        )

    def resolve_theorem_mode(self, op: SpectralOperator) -> str:
        if self.theorem_mode != "auto":
            return self.theorem_mode
        return "coercive" if op.nu > 0 else "noncoercive"

    def sweep_cells(self) -> list[dict]:
        """Cross product of the sweep axes, in file order."""
        if not self.sweep:
            raise ConfigError("sweep requires at least one sweep_<param> key")
        cells = [dict()]
        for param, values in self.sweep:
            if not values:
                raise ConfigError(f"sweep_{param} list is empty")
            cells = [dict(c, **{param: v}) for c in cells for v in values]
        return cells

    def with_overrides(self, **kwargs) -> "ScenarioConfig":
        return replace(self, sweep=(), **kwargs)

    # -- canonical echo ----------------------------------------------------

    def echo(self) -> str:
        """Normalized text that re-parses to this configuration bit-for-bit."""
        lines = [f"mode = {self.mode}"]
        if self.epsilon is not None:
            lines.append(f"epsilon = {self.epsilon!r}")
        lines += [
            f"p = {self.p!r}",
            f"gamma = {self.gamma!r}",
            f"spectrum = {self.spectrum.echo()}",
            f"u0 = {self.u0.echo()}",
            f"u1 = {self.u1.echo()}",
            f"t_end = {self.t_end!r}",
            f"rel_tol = {self.rel_tol!r}",
            f"abs_tol = {self.abs_tol!r}",
        ]
        if isinstance(self.sampling, LogGrid):
            lines.append(f"sampling = log {self.sampling.points}")
        else:
            lines.append(f"sampling = uniform {self.sampling.dt!r}")
        lines += [
            f"max_steps = {self.max_steps}",
            f"degeneracy_floor = {self.degeneracy_floor!r}",
            f"blowup_ceiling = {self.blowup_ceiling!r}",
            f"audit = {'true' if self.audit else 'false'}",
            f"theorem_mode = {self.theorem_mode}",
            f"audit_tol = {self.audit_tol!r}",
            f"fit = [{', '.join(self.fit)}]",
        ]
        if self.fit_window is not None:
            lines.append(
                f"fit_window = [{self.fit_window[0]!r}, {self.fit_window[1]!r}]"
            )
        lines += [
            f"envelope = [{', '.join(self.envelope)}]",
            f"plots = {'true' if self.plots else 'false'}",
            f"output_dir = {self.output_dir}",
            f"seed = {self.seed}",
        ]
        for param, values in self.sweep:
            lines.append(f"sweep_{param} = [{', '.join(repr(v) for v in values)}]")
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def _parse_number(text: str, key: str, lineno: int) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"line {lineno}: key {key!r}: not a number: {text!r}")


def _parse_list(text: str, key: str, lineno: int) -> list[str]:
    inner = text.strip()[1:-1].strip()
    if not inner:
        return []
    return [item.strip() for item in inner.split(",")]


def _parse_init(text: str, key: str, lineno: int) -> InitSpec:
    text = text.strip()
    if text.startswith("["):
        vals = tuple(
            _parse_number(item, key, lineno) for item in _parse_list(text, key, lineno)
        )
        return InitSpec(values=vals)
    parts = text.split()
    if parts[0] == "random":
        if len(parts) != 2:
            raise ConfigError(f"line {lineno}: {key!r}: expected 'random <seed>'")
        return InitSpec(preset="random", seed=int(parts[1]))
    if len(parts) == 1 and parts[0] in ("first_mode", "uniform", "zero"):
        return InitSpec(preset=parts[0])
    raise ConfigError(f"line {lineno}: {key!r}: unknown initial-data spec {text!r}")


def _parse_spectrum(text: str, key: str, lineno: int) -> SpectrumSpec:
    text = text.strip()
    if text.startswith("["):
        vals = tuple(
            _parse_number(item, key, lineno) for item in _parse_list(text, key, lineno)
        )
        if not vals:
            raise ConfigError(f"line {lineno}: spectrum list is empty")
        return SpectrumSpec(kind="explicit", values=vals)
    parts = text.split()
    if len(parts) == 3 and parts[0] in ("power", "inverse_power"):
        expo = _parse_number(parts[1], key, lineno)
        count = int(parts[2])
        if count < 1:
            raise ConfigError(f"line {lineno}: spectrum count must be >= 1")
        return SpectrumSpec(kind=parts[0], exponent=expo, count=count)
    raise ConfigError(
        f"line {lineno}: spectrum must be a bracketed list or "
        f"'power|inverse_power <exponent> <count>', got {text!r}"
    )


def parse_config(text: str) -> ScenarioConfig:
    """Parse the flat text format; raise ConfigError naming line and key."""
    raw: dict[str, tuple[str, int]] = {}
    sweep: list[tuple[str, tuple[float, ...]]] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in stripped.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key.startswith("sweep_"):
            param = key[len("sweep_") :]
            if param not in _SWEEPABLE:
                raise ConfigError(
                    f"line {lineno}: cannot sweep {param!r} (allowed: {_SWEEPABLE})"
                )
            if not value.startswith("["):
                raise ConfigError(f"line {lineno}: {key!r} must be a bracketed list")
            vals = tuple(
                _parse_number(item, key, lineno)
                for item in _parse_list(value, key, lineno)
            )
            sweep.append((param, vals))
            continue
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = (value, lineno)

    def take(key, required=False, default=None):
        if key in raw:
            return raw.pop(key)
        if required:
            raise ConfigError(f"missing required key {key!r}")
        return (default, 0)

    mode, ln = take("mode", required=True)
    if mode not in _MODES:
        raise ConfigError(f"line {ln}: mode must be one of {_MODES}, got {mode!r}")

    eps_raw, eps_ln = take("epsilon")
    epsilon = None
    if eps_raw is not None:
        epsilon = _parse_number(eps_raw, "epsilon", eps_ln)
        if not epsilon > 0:
            raise ConfigError(f"line {eps_ln}: epsilon must be positive")
    elif mode in ("hyperbolic", "both"):
        raise ConfigError(f"missing required key 'epsilon' (mode = {mode})")

    p_raw, ln = take("p", required=True)
    gamma_raw, gln = take("gamma", required=True)
    spec_raw, sln = take("spectrum", required=True)
    u0_raw, u0ln = take("u0", required=True)
    t_end_raw, tln = take("t_end", required=True)

    u1_raw, u1ln = take("u1", default="zero")
    sampling_raw, smln = take("sampling", default="log 401")
    parts = sampling_raw.split()
    if parts[0] == "log" and len(parts) == 2:
        sampling: Union[LogGrid, Uniform] = LogGrid(int(parts[1]))
    elif parts[0] == "uniform" and len(parts) == 2:
        sampling = Uniform(_parse_number(parts[1], "sampling", smln))
    else:
        raise ConfigError(
            f"line {smln}: sampling must be 'log <points>' or 'uniform <dt>'"
        )

    def take_number(key, default):
        v, ln2 = take(key, default=None)
        return default if v is None else _parse_number(v, key, ln2)

    def take_bool(key, default):
        v, ln2 = take(key, default=None)
        if v is None:
            return default
        if v not in ("true", "false"):
            raise ConfigError(f"line {ln2}: {key!r} must be true or false")
        return v == "true"

    def take_words(key, default, allowed):
        v, ln2 = take(key, default=None)
        if v is None:
            return default
        words = tuple(_parse_list(v, key, ln2)) if v.startswith("[") else tuple(v.split())
        for word in words:
            if word not in allowed:
                raise ConfigError(
                    f"line {ln2}: {key!r}: unknown quantity {word!r} (allowed: {allowed})"
                )
        return words

    fit_window_raw, fwln = take("fit_window")
    fit_window = None
    if fit_window_raw is not None:
        vals = [
            _parse_number(x, "fit_window", fwln)
            for x in _parse_list(fit_window_raw, "fit_window", fwln)
        ]
        if len(vals) != 2 or not vals[0] < vals[1]:
            raise ConfigError(f"line {fwln}: fit_window must be [t_lo, t_hi]")
        fit_window = (vals[0], vals[1])

    theorem_mode, tmln = take("theorem_mode", default="auto")
    if theorem_mode not in _THEOREM_MODES:
        raise ConfigError(
            f"line {tmln}: theorem_mode must be one of {_THEOREM_MODES}"
        )

    out_dir, _ = take("output_dir", default="run")
    seed_raw, _ = take("seed", default="0")

    cfg = ScenarioConfig(
        mode=mode,
        epsilon=epsilon,
        p=_parse_number(p_raw, "p", ln),
        gamma=_parse_number(gamma_raw, "gamma", gln),
        spectrum=_parse_spectrum(spec_raw, "spectrum", sln),
        u0=_parse_init(u0_raw, "u0", u0ln),
        u1=_parse_init(u1_raw, "u1", u1ln),
        t_end=_parse_number(t_end_raw, "t_end", tln),
        rel_tol=take_number("rel_tol", 1e-9),
        abs_tol=take_number("abs_tol", 1e-12),
        sampling=sampling,
        max_steps=int(take_number("max_steps", 5_000_000)),
        degeneracy_floor=take_number("degeneracy_floor", 1e-240),
        blowup_ceiling=take_number("blowup_ceiling", 1e12),
        audit=take_bool("audit", False),
        theorem_mode=theorem_mode,
        audit_tol=take_number("audit_tol", 1e-3),
        fit=take_words("fit", (), _FIT_QUANTITIES),
        fit_window=fit_window,
        envelope=take_words("envelope", ("v2",), _FIT_QUANTITIES),
        plots=take_bool("plots", False),
        output_dir=out_dir,
        seed=int(seed_raw),
        sweep=tuple(sweep),
    )
    if raw:
        key = next(iter(raw))
        raise ConfigError(f"line {raw[key][1]}: unknown key {key!r}")
    if not cfg.t_end > 0:
        raise ConfigError("t_end must be positive")
    if not cfg.gamma > 0:
        raise ConfigError("gamma must be positive")
    if cfg.p < 0:
        raise ConfigError("p must be nonnegative")
    return cfg


def load_config(path: str) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())
