"""Scenario execution: integrate, snapshot, fit, audit, persist.

Each run writes into its output directory:

  trajectory_hyperbolic.csv / trajectory_parabolic.csv
      fixed column order
      t, norm_u2, norm_a12u2, norm_au2, norm_v2, norm_a12v2, inner_au_v,
      F, P, Q, R, H, D, Dhat, G, k_ratio, degenerate
      (UTF-8, header row, 17 significant digits, degenerate as 0/1)
  gap.csv          when mode = both: t, gap
  data/*.dat       two-column plot series per quantity + plots.gp script
  figures/*.png    rendered when plots = true
  manifest.json    config echo, constants, termination, fits, audit summary,
                   invariant residuals, wall-clock stats (stable key order)

The manifest's config echo re-parses to the same scenario, and identical
configs produce bit-identical CSV output.  Exit-status contract: a scenario
is ok iff every integration reached t_end, every requested fit computed, and
every requested audit passed.
"""

from __future__ import annotations

import json
import math
import os
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .config import ConfigError, ScenarioConfig, parse_config
from .energies import EnergySnapshot, check_apriori, compute_constants, energy_snapshot
from .integrate import (
    IntegrationError,
    Trajectory,
    integrate_hyperbolic,
    integrate_parabolic,
)
from .model import ModelParams, PhaseState, scalar_parabolic_exact
from .plotting import render_figures, write_plot_data
from .rates import DataError, fit_power_law
from .spectral import SpectralOperator

OUTPUT_ROOT_ENV = "KIRCHDECAY_OUTPUT_ROOT"

CSV_COLUMNS = (
    "t",
    "norm_u2",
    "norm_a12u2",
    "norm_au2",
    "norm_v2",
    "norm_a12v2",
    "inner_au_v",
    "F",
    "P",
    "Q",
    "R",
    "H",
    "D",
    "Dhat",
    "G",
    "k_ratio",
    "degenerate",
)

COLUMN_OF_QUANTITY = {
    "u2": "norm_u2",
    "a12u2": "norm_a12u2",
    "au2": "norm_au2",
    "v2": "norm_v2",
    "a12v2": "norm_a12v2",
}


def resolve_output_dir(cfg: ScenarioConfig, output_root: Optional[str] = None) -> Path:
    root = output_root or os.environ.get(OUTPUT_ROOT_ENV) or "."
    return Path(root) / cfg.output_dir


def _fmt(x: float) -> str:
    return format(x, ".17g")


def snapshots_for(
    params: ModelParams, op: SpectralOperator, traj: Trajectory
) -> list[EnergySnapshot]:
    floor = traj.spec.degeneracy_floor
    return [
        energy_snapshot(params, op, traj.state(i), degeneracy_floor=floor)
        for i in range(traj.t.size)
    ]


def write_trajectory_csv(path: Path, snaps: list[EnergySnapshot]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for s in snaps:
            row = [
                _fmt(s.t),
                _fmt(s.norm_u2),
                _fmt(s.norm_a12u2),
                _fmt(s.norm_au2),
                _fmt(s.norm_v2),
                _fmt(s.norm_a12v2),
                _fmt(s.inner_au_v),
                _fmt(s.F),
                _fmt(s.P),
                _fmt(s.Q),
                _fmt(s.R),
                _fmt(s.H),
                _fmt(s.D),
                _fmt(s.Dhat),
                _fmt(s.G),
                _fmt(s.k_ratio),
                "1" if s.degenerate else "0",
            ]
            fh.write(",".join(row) + "\n")


def read_trajectory_csv(path) -> dict[str, np.ndarray]:
    """Read a trajectory CSV back into column arrays."""
    data = np.genfromtxt(path, delimiter=",", names=True)
    if data.ndim == 0:
        data = data.reshape(1)
    return {name: np.atleast_1d(data[name]) for name in data.dtype.names}


def _identity_residuals(traj: Trajectory, snaps: list[EnergySnapshot]) -> dict:
    """Residuals of the dissipation identity H(t) - H(0) + 2 int b|u'|^2 = 0
    and of the exponential floor H >= H(0) exp(-(2/eps) int b)."""
    H = np.array([s.H for s in snaps])
    h0 = H[0]
    scale = max(abs(h0), 1.0)
    identity = np.abs(H - h0 + 2.0 * traj.int_bq) / scale
    floor = h0 * np.exp(-2.0 / traj.params.epsilon * traj.int_b) - H
    return {
        "energy_identity_max_residual": float(np.max(identity)),
        "exponential_floor_max_deficit": float(np.max(floor)),
    }


@dataclass
class RunResult:
    manifest: dict
    ok: bool
    out_dir: Path
    trajectories: dict


def run_scenario(cfg: ScenarioConfig, output_root: Optional[str] = None) -> RunResult:
    """Execute one scenario and persist its outputs."""
    out_dir = resolve_output_dir(cfg, output_root)
    out_dir.mkdir(parents=True, exist_ok=True)

    op = cfg.operator()
    params = cfg.params()
    spec = cfg.integration_spec()
    n = op.dim
    u0 = cfg.u0.build(n)
    u1 = cfg.u1.build(n)

    manifest: dict = {
        "version": __version__,
        "config_echo": cfg.echo(),
        "seed": cfg.seed,
        "spectrum_size": n,
        "nu": op.nu,
        "outputs": {},
        "wall_seconds": {},
    }
    ok = True
    trajectories: dict[str, Trajectory] = {}
    snaps_by_kind: dict[str, list[EnergySnapshot]] = {}

    constants = None
    theorem_mode = cfg.resolve_theorem_mode(op)
    manifest["theorem_mode"] = theorem_mode
    try:
        constants = compute_constants(params, op, u0, u1, theorem_mode)
        manifest["constants"] = constants.to_dict()
    except ValueError as exc:
        manifest["constants"] = {"error": str(exc)}

    def integrate_phase(kind):
        nonlocal ok
        t0 = time.perf_counter()
        try:
            if kind == "hyperbolic":
                traj = integrate_hyperbolic(params, op, PhaseState(0.0, u0, u1), spec)
            else:
                traj = integrate_parabolic(params, op, u0, spec)
        except (IntegrationError, ValueError) as exc:
            manifest[kind] = {"error": str(exc)}
            ok = False
            return None
        manifest["wall_seconds"][kind] = time.perf_counter() - t0
        snaps = snapshots_for(params, op, traj)
        csv_name = f"trajectory_{kind}.csv"
        write_trajectory_csv(out_dir / csv_name, snaps)
        info = {
            "termination": {"reason": traj.termination.reason, "t": traj.termination.t},
            "stats": {
                "steps": traj.stats.steps,
                "rejected": traj.stats.rejected,
                "nfev": traj.stats.nfev,
            },
            "csv": csv_name,
        }
        if kind == "hyperbolic":
            info["invariants"] = _identity_residuals(traj, snaps)
        manifest[kind] = info
        manifest["outputs"][kind] = csv_name
        if traj.termination.reason != "reached_end":
            ok = False
        trajectories[kind] = traj
        snaps_by_kind[kind] = snaps
        return traj

    if cfg.mode in ("hyperbolic", "both"):
        integrate_phase("hyperbolic")
    if cfg.mode in ("parabolic", "both"):
        integrate_phase("parabolic")

    # 1-D prototype parabolic runs are checked against the closed-form oracle
    if "parabolic" in trajectories and n == 1 and params.is_prototype and u0[0] != 0.0:
        traj = trajectories["parabolic"]
        lam = float(op.eigenvalues[0])
        w_num = lam * traj.u[:, 0] ** 2
        w_exact = np.array(
            [
                lam
                * scalar_parabolic_exact(
                    float(u0[0] ** 2), lam, params.gamma, params.p, float(t)
                )
                for t in traj.t
            ]
        )
        manifest["parabolic"]["oracle_max_rel_err"] = float(
            np.max(np.abs(w_num - w_exact) / np.abs(w_exact))
        )

    if cfg.mode == "both" and "hyperbolic" in trajectories and "parabolic" in trajectories:
        hyper, para = trajectories["hyperbolic"], trajectories["parabolic"]
        diff = hyper.u - para.u
        gaps = np.sqrt(np.einsum("ij,ij->i", diff, diff))
        with open(out_dir / "gap.csv", "w", encoding="utf-8", newline="\n") as fh:
            fh.write("t,gap\n")
            for t, gval in zip(hyper.t, gaps):
                fh.write(f"{_fmt(t)},{_fmt(gval)}\n")
        manifest["gap"] = {"sup": float(np.max(gaps)), "csv": "gap.csv"}
        manifest["outputs"]["gap"] = "gap.csv"

    primary_kind = "parabolic" if cfg.mode == "parabolic" else "hyperbolic"
    primary = trajectories.get(primary_kind)

    if cfg.audit:
        if primary_kind != "hyperbolic" or "hyperbolic" not in trajectories:
            manifest["audit"] = {"error": "audit requires a hyperbolic trajectory"}
            ok = False
        elif constants is None:
            manifest["audit"] = {"error": "constants unavailable"}
            ok = False
        else:
            report = check_apriori(
                params,
                op,
                trajectories["hyperbolic"],
                constants,
                mode=theorem_mode,
                audit_tol=cfg.audit_tol,
                degeneracy_floor=cfg.degeneracy_floor,
            )
            manifest["audit"] = report.to_dict()
            if not report.passed:
                ok = False

    if cfg.fit and primary is not None:
        window = cfg.fit_window or (cfg.t_end / 100.0, cfg.t_end)
        snaps = snaps_by_kind[primary_kind]
        t = np.array([s.t for s in snaps])
        fits = {}
        for quantity in cfg.fit:
            col = COLUMN_OF_QUANTITY[quantity]
            series = np.array([getattr(s, col) for s in snaps])
            fit_mode = "envelope" if quantity in cfg.envelope else "point"
            try:
                fit = fit_power_law((t, series), window=window, mode=fit_mode)
                fits[quantity] = fit.to_dict()
            except DataError as exc:
                fits[quantity] = {"error": str(exc)}
                ok = False
        manifest["fits"] = fits
    elif cfg.fit:
        ok = False

    if primary is not None:
        entries = write_plot_data(out_dir, snaps_by_kind, manifest.get("gap"))
        manifest["outputs"]["plot_data"] = entries
        if cfg.plots:
            figures = render_figures(out_dir, snaps_by_kind, manifest)
            manifest["outputs"]["figures"] = figures

    manifest["ok"] = ok
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return RunResult(manifest=manifest, ok=ok, out_dir=out_dir, trajectories=trajectories)


@dataclass
class SweepResult:
    rows: list[dict]
    ok: bool
    out_dir: Path


def sweep_scenario(cfg: ScenarioConfig, output_root: Optional[str] = None) -> SweepResult:
    """Run every cell of the sweep grid; cells are independent and
    deterministic, failures are isolated, aggregation is ordered by cell
    index."""
    cells = cfg.sweep_cells()
    out_dir = resolve_output_dir(cfg, output_root)
    out_dir.mkdir(parents=True, exist_ok=True)
    swept_params = [param for param, _ in cfg.sweep]

    rows = []
    all_ok = True
    for idx, overrides in enumerate(cells):
        cell_dir = f"{cfg.output_dir}/cell_{idx:03d}"
        row: dict = {"cell": idx}
        row.update(overrides)
        try:
            cell_cfg = cfg.with_overrides(output_dir=cell_dir, **overrides)
            result = run_scenario(cell_cfg, output_root)
            row["status"] = "ok" if result.ok else "failed"
            primary_kind = "parabolic" if cfg.mode == "parabolic" else "hyperbolic"
            info = result.manifest.get(primary_kind, {})
            row["termination"] = info.get("termination", {}).get("reason", "error")
            traj = result.trajectories.get(primary_kind)
            if traj is not None and traj.t.size:
                lam = traj.op.eigenvalues
                uT, vT = traj.u[-1], traj.v[-1]
                row["t_final"] = float(traj.t[-1])
                row["tail_a12u2"] = float(np.dot(lam, uT * uT))
                row["tail_qplusw"] = row["tail_a12u2"] + float(np.dot(vT, vT))
            if "gap" in result.manifest:
                row["sup_gap"] = result.manifest["gap"]["sup"]
            for quantity, fit in result.manifest.get("fits", {}).items():
                if "exponent" in fit:
                    row[f"fit_{quantity}_exponent"] = fit["exponent"]
            if not result.ok:
                all_ok = False
        except (ConfigError, IntegrationError, ValueError) as exc:
            row["status"] = f"error: {exc}"
            all_ok = False
        rows.append(row)

    columns = ["cell"] + swept_params + [
        "status",
        "termination",
        "t_final",
        "tail_a12u2",
        "tail_qplusw",
        "sup_gap",
    ]
    columns += [f"fit_{q}_exponent" for q in cfg.fit]
    with open(out_dir / "sweep_summary.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            cells_text = []
            for col in columns:
                val = row.get(col, "")
                if isinstance(val, float):
                    cells_text.append(_fmt(val))
                else:
                    cells_text.append(str(val))
            fh.write(",".join(cells_text) + "\n")
    return SweepResult(rows=rows, ok=all_ok, out_dir=out_dir)


def rerun_from_manifest(manifest_path, output_root: Optional[str] = None) -> RunResult:
    """Re-execute the scenario echoed inside a manifest (reproduction path)."""
    with open(manifest_path, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    cfg = parse_config(manifest["config_echo"])
    return run_scenario(cfg, output_root)
