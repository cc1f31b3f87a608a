"""Experiment orchestration and run outputs.

Each experiment writes delimited tables plus a manifest. The manifest
is created first (so an aborted run still identifies itself), then
rewritten at the end with per-file checksums, metrics, and the final
status. Data tables are byte-reproducible for identical configs;
manifest timestamps are the one intentional exception.
"""

from __future__ import annotations

import datetime as _dt
import json
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from . import __version__
from .analytic import (
    free_packet_action,
    free_packet_asymptotic_velocity,
    free_packet_modulus,
    free_packet_trajectory,
    ho_action,
    spreading,
    time_for_u,
)
from .config import RunConfig, config_dict
from .errors import NumericalAbort, WkbohmError
from .hierarchy import (
    PolarFields,
    complex_velocity_residual,
    init_hierarchy,
    propagate_hierarchy,
    qhj_residual_from_series,
    reconstruct_polar,
)
from .numerics import ComplexField, Grid1D, RealField
from .potentials import Potential
from .tables import emit_table, sha256_of
from .trajectories import (
    FreePacketVelocityField,
    OscillatorVelocityField,
    fit_asymptotic_velocity,
    integrate_ensemble_positions,
    ks_distance,
    sample_initial_positions,
    Trajectory,
)

FIGURE_SHORT_U_MAX = 1.5
FIGURE_ASYMPTOTIC_U_MAX = 50.0
FIT_WINDOW_U = (20.0, 40.0)


@dataclass
class RunOutput:
    """What a run produced and where."""

    out_dir: Path
    manifest_path: Path
    files: dict = dc_field(default_factory=dict)
    metrics: dict = dc_field(default_factory=dict)
    status: str = "ok"
    error: str | None = None


def run_experiment(cfg: RunConfig, out_dir: str | None = None) -> RunOutput:
    """Execute the configured experiment under its output directory.

    Numerical aborts (caustic, CFL, window exits) are recorded in the
    manifest with any partial outputs retained; they do not raise.
    """
    base = Path(out_dir if out_dir is not None else cfg.output_dir)
    run_dir = base / cfg.experiment
    run_dir.mkdir(parents=True, exist_ok=True)
    manifest_path = run_dir / "manifest.json"
    out = RunOutput(out_dir=run_dir, manifest_path=manifest_path)

    started = _utc_now()
    _write_manifest(manifest_path, cfg, started, None, out, status="running")

    runner = {
        "figure1-short": _run_figure1_short,
        "figure1-asymptotic": _run_figure1_asymptotic,
        "hierarchy-convergence": _run_hierarchy_convergence,
        "equivariance": _run_equivariance,
        "residuals": _run_residuals,
    }[cfg.experiment]
    try:
        runner(cfg, run_dir, out)
    except NumericalAbort as exc:
        out.status = "aborted"
        out.error = f"{type(exc).__name__}: {exc}"
    _write_manifest(manifest_path, cfg, started, _utc_now(), out, status=out.status)
    return out


def _utc_now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _unit_note(cfg: RunConfig) -> str:
    if cfg.hbar == 1.0 and cfg.mass == 1.0 and (cfg.model == "harmonic" or cfg.sigma0 == 1.0):
        return "natural units (hbar = m = sigma0 = 1)"
    return "model units as configured (hbar={}, mass={})".format(cfg.hbar, cfg.mass)


def _write_manifest(path, cfg, started, finished, out: RunOutput, status: str) -> None:
    files = [
        {"name": name, "bytes": Path(p).stat().st_size, "sha256": sha256_of(p)}
        for name, p in sorted(out.files.items())
    ]
    doc = {
        "package": "wkbohm",
        "version": __version__,
        "created_utc": started,
        "finished_utc": finished,
        "status": status,
        "error": out.error,
        "units": _unit_note(cfg),
        "config": config_dict(cfg),
        "files": files,
        "metrics": out.metrics,
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _emit(out: RunOutput, run_dir: Path, name: str, columns, rows) -> None:
    path = emit_table(run_dir / name, columns, rows)
    out.files[name] = path


def _require_free(cfg: RunConfig) -> None:
    if cfg.model != "free":
        raise WkbohmError(f"experiment {cfg.experiment!r} is defined for the free model only")


# ---------------------------------------------------------------------------
# trajectory-fan figures

_TRAJ_COLUMNS = [("t", "time"), ("u", "1"), ("x", "length"), ("source", "-"), ("x0", "length")]


def _fan_rows(cfg: RunConfig, u_grid: np.ndarray):
    spec = cfg.packet()
    t_grid = u_grid * cfg.time_scale()
    rows = []
    for x0 in cfg.default_fan():
        xq = free_packet_trajectory(spec, float(x0), t_grid)
        xc = x0 + spec.v0 * t_grid
        for t, u, xa, xb in zip(t_grid, u_grid, xq, xc):
            rows.append([float(t), float(u), float(xa), "analytic-free", float(x0)])
            rows.append([float(t), float(u), float(xb), "classical", float(x0)])
    return spec, t_grid, rows


def _run_figure1_short(cfg: RunConfig, run_dir: Path, out: RunOutput) -> None:
    _require_free(cfg)
    u_grid = np.linspace(0.0, FIGURE_SHORT_U_MAX, 301)
    spec, _, rows = _fan_rows(cfg, u_grid)
    _emit(out, run_dir, "trajectories.csv", _TRAJ_COLUMNS, rows)
    center = [x0 for x0 in cfg.default_fan() if x0 == 0.0]
    out.metrics = {
        "members": len(cfg.default_fan()),
        "u_max": FIGURE_SHORT_U_MAX,
        "center_member_present": bool(center),
    }


def _run_figure1_asymptotic(cfg: RunConfig, run_dir: Path, out: RunOutput) -> None:
    _require_free(cfg)
    u_grid = np.linspace(0.0, FIGURE_ASYMPTOTIC_U_MAX, 1001)
    spec, t_grid, rows = _fan_rows(cfg, u_grid)
    _emit(out, run_dir, "trajectories.csv", _TRAJ_COLUMNS, rows)

    asym_rows = []
    fit_rows = []
    ts = cfg.time_scale()
    window = (FIT_WINDOW_U[0] * ts, FIT_WINDOW_U[1] * ts)
    rel_errors = []
    for x0 in cfg.default_fan():
        v_pred = free_packet_asymptotic_velocity(spec, float(x0))
        for t, u in zip(t_grid, u_grid):
            asym_rows.append([float(t), float(u), float(v_pred * t), float(x0)])
        traj = Trajectory(
            times=t_grid,
            positions=free_packet_trajectory(spec, float(x0), t_grid),
            x0=float(x0),
            source="analytic-free",
        )
        fit = fit_asymptotic_velocity(traj, window, packet=spec)
        err = abs(fit.velocity - v_pred) / abs(v_pred) if v_pred != 0 else abs(fit.velocity)
        rel_errors.append(err)
        fit_rows.append(
            [float(x0), fit.velocity, v_pred, err, fit.intercept, fit.residual, fit.n_samples]
        )
    _emit(
        out, run_dir, "asymptotes.csv",
        [("t", "time"), ("u", "1"), ("x", "length"), ("x0", "length")],
        asym_rows,
    )
    _emit(
        out, run_dir, "slopes.csv",
        [
            ("x0", "length"), ("fitted_velocity", "velocity"), ("predicted_velocity", "velocity"),
            ("rel_error", "1"), ("intercept", "length"), ("rms_residual", "length"),
            ("n_samples", "1"),
        ],
        fit_rows,
    )
    out.metrics = {
        "members": len(cfg.default_fan()),
        "u_max": FIGURE_ASYMPTOTIC_U_MAX,
        "fit_window_u": list(FIT_WINDOW_U),
        "max_rel_slope_error": max(rel_errors),
    }


# ---------------------------------------------------------------------------
# hierarchy convergence

def _model_polar(cfg: RunConfig, grid: Grid1D) -> PolarFields:
    x = grid.nodes
    if cfg.model == "free":
        spec = cfg.packet()
        r = free_packet_modulus(spec, x, 0.0)
        s = free_packet_action(spec, x, 0.0)
    else:
        osc = cfg.oscillator()
        r = np.abs(
            (2.0 * np.pi * osc.sigma0**2) ** (-0.25)
            * np.exp(-((x - osc.a) ** 2) / (4.0 * osc.sigma0**2))
        )
        s = ho_action(osc, x, 0.0)
    return PolarFields(R=RealField(grid, r, 0.0), S=RealField(grid, np.asarray(s, float), 0.0))


def _exact_polar(cfg: RunConfig, x: np.ndarray, t: float):
    if cfg.model == "free":
        spec = cfg.packet()
        return free_packet_modulus(spec, x, t), np.asarray(free_packet_action(spec, x, t), float)
    osc = cfg.oscillator()
    r = (2.0 * np.pi * osc.sigma0**2) ** (-0.25) * np.exp(
        -((x - osc.a * np.cos(osc.omega * t)) ** 2) / (4.0 * osc.sigma0**2)
    )
    return r, np.asarray(ho_action(osc, x, t), float)


def _default_grid(cfg: RunConfig, t_end: float) -> Grid1D:
    if cfg.grid_x_min is not None:
        return Grid1D(cfg.grid_x_min, cfg.grid_x_max, cfg.grid_points or 401)
    if cfg.model == "free":
        spec = cfg.packet()
        drift = abs(spec.v0) * t_end
        half = 10.0 * cfg.sigma0 + drift
    else:
        half = abs(cfg.a) + 10.0 * cfg.sigma0
    return Grid1D(-half, half, cfg.grid_points or 401)


def _comparison_window(cfg: RunConfig, x: np.ndarray, t: float) -> np.ndarray:
    if cfg.model == "free":
        spec = cfg.packet()
        s = spreading(spec, t)
        return np.abs(x - spec.v0 * t) <= 2.0 * s.sigma_t
    osc = cfg.oscillator()
    return np.abs(x - osc.a * np.cos(osc.omega * t)) <= 2.0 * osc.sigma0


def _potential_for(cfg: RunConfig) -> Potential:
    if cfg.model == "free":
        return Potential.free()
    return Potential.harmonic(cfg.mass, cfg.omega)


def _run_hierarchy_convergence(cfg: RunConfig, run_dir: Path, out: RunOutput) -> None:
    t_end = cfg.t_max if cfg.t_max is not None else 0.2 * cfg.time_scale()
    dt = cfg.dt_abs()
    n_steps = max(1, int(round(t_end / dt)))
    t_end = n_steps * dt
    grid = _default_grid(cfg, t_end)
    potential = _potential_for(cfg)
    params = cfg.phys_params()
    psi0 = _model_polar(cfg, grid)

    orders = sorted({1, cfg.order, cfg.order + 2})
    x = grid.nodes
    r_exact, s_exact = _exact_polar(cfg, x, t_end)
    window = _comparison_window(cfg, x, t_end)

    field_rows = []
    summary_rows = []
    errors = {}
    for order in orders:
        state = init_hierarchy(psi0, order)
        state = propagate_hierarchy(state, potential, dt, n_steps, params=params)
        polar = reconstruct_polar(state, params)
        ds = polar.S.values - s_exact
        err_s = float(np.max(np.abs(ds)[window]))
        err_s_offset_free = float(
            (np.max(ds[window]) - np.min(ds[window])) / 2.0
        )
        err_r = float(np.max(np.abs(polar.R.values - r_exact)[window]))
        summary_rows.append([order, err_s, err_s_offset_free, err_r])
        errors[str(order)] = {"S": err_s, "S_offset_free": err_s_offset_free, "R": err_r}
        for xi, sv, se, rv, re_ in zip(x, polar.S.values, s_exact, polar.R.values, r_exact):
            field_rows.append([order, float(xi), float(sv), float(se), float(rv), float(re_)])
        # Partial outputs survive an abort at a later (higher) order.
        _emit(
            out, run_dir, "fields.csv",
            [
                ("order", "1"), ("x", "length"), ("S_reconstructed", "action"),
                ("S_exact", "action"), ("R_reconstructed", "1/sqrt(length)"),
                ("R_exact", "1/sqrt(length)"),
            ],
            field_rows,
        )
        _emit(
            out, run_dir, "summary.csv",
            [
                ("order", "1"), ("max_err_S", "action"),
                ("max_err_S_offset_free", "action"), ("max_err_R", "1/sqrt(length)"),
            ],
            summary_rows,
        )
    out.metrics = {
        "t_end": t_end,
        "orders": orders,
        "window_halfwidth": "2 sigma_t around the packet center",
        "errors": errors,
    }


# ---------------------------------------------------------------------------
# equivariance

def _density_field(cfg: RunConfig, grid: Grid1D, t: float) -> RealField:
    x = grid.nodes
    if cfg.model == "free":
        rho = free_packet_modulus(cfg.packet(), x, t) ** 2
    else:
        osc = cfg.oscillator()
        c = osc.a * np.cos(osc.omega * t)
        rho = (2.0 * np.pi * osc.sigma0**2) ** (-0.5) * np.exp(-((x - c) ** 2) / (2.0 * osc.sigma0**2))
    return RealField(grid, rho, t)


def _run_equivariance(cfg: RunConfig, run_dir: Path, out: RunOutput) -> None:
    if cfg.model == "free":
        spec = cfg.packet()
        t_end = cfg.t_max if cfg.t_max is not None else time_for_u(spec, 1.0)
        provider = FreePacketVelocityField(spec)
        final_sigma = spec.sigma0 * float(np.sqrt(1.0 + (t_end / cfg.time_scale()) ** 2))
        half = abs(spec.v0) * t_end + 10.0 * final_sigma
    else:
        osc = cfg.oscillator()
        t_end = cfg.t_max if cfg.t_max is not None else osc.period
        provider = OscillatorVelocityField(osc)
        half = abs(osc.a) + 10.0 * osc.sigma0

    grid = (
        Grid1D(cfg.grid_x_min, cfg.grid_x_max, cfg.grid_points or 2001)
        if cfg.grid_x_min is not None
        else Grid1D(-half, half, cfg.grid_points or 2001)
    )
    x0s = sample_initial_positions(
        _density_field(cfg, grid, 0.0), cfg.ensemble_n, cfg.ensemble_mode, cfg.seed
    )

    dt = cfg.dt_abs()
    n_steps = max(4, int(round(t_end / dt)))
    t_grid = np.linspace(0.0, t_end, n_steps + 1)
    positions, n_valid = integrate_ensemble_positions(provider, x0s, t_grid)
    if int(n_valid.min()) < t_grid.size:
        raise NumericalAbort("an ensemble member left the velocity-field window")

    checkpoints = [0.25, 0.5, 0.75, 1.0]
    ks_rows = []
    ks_values = {}
    for frac in checkpoints:
        idx = int(round(frac * n_steps))
        t = float(t_grid[idx])
        density = _density_field(cfg, grid, t)
        ks = ks_distance(positions[:, idx], density)
        ks_rows.append([t, t / cfg.time_scale(), ks, cfg.ensemble_n])
        ks_values[f"{frac:.2f}"] = ks
    _emit(
        out, run_dir, "ks.csv",
        [("t", "time"), ("t_over_scale", "1"), ("ks", "1"), ("n", "1")],
        ks_rows,
    )
    _emit(
        out, run_dir, "positions.csv",
        [("member", "1"), ("x0", "length"), ("x_final", "length")],
        [[i, float(x0s[i]), float(positions[i, -1])] for i in range(cfg.ensemble_n)],
    )
    out.metrics = {
        "t_end": t_end,
        "n": cfg.ensemble_n,
        "mode": cfg.ensemble_mode,
        "seed": cfg.seed,
        "ks": ks_values,
        "ks_max": max(ks_values.values()),
    }


# ---------------------------------------------------------------------------
# residuals

def _complex_action_stack(cfg: RunConfig, grid: Grid1D, times: np.ndarray) -> list[ComplexField]:
    """Closed-form complex action S - i hbar ln R at several instants."""
    x = grid.nodes
    fields = []
    for t in times:
        r, s = _exact_polar(cfg, x, float(t))
        values = s - 1j * cfg.hbar * np.log(r)
        fields.append(ComplexField(grid, values, float(t)))
    return fields


def _run_residuals(cfg: RunConfig, run_dir: Path, out: RunOutput) -> None:
    params = cfg.phys_params()
    potential = _potential_for(cfg)
    t_eval = cfg.t_max if cfg.t_max is not None else (
        0.5 * cfg.time_scale() if cfg.model == "free" else 0.3 * cfg.time_scale()
    )
    grid = _default_grid(cfg, t_eval)
    delta = 1e-3 * cfg.time_scale()
    times = t_eval + delta * np.array([-2, -1, 0, 1, 2])
    stack = _complex_action_stack(cfg, grid, times)
    qhj = qhj_residual_from_series(stack, potential, params, delta)
    cv = complex_velocity_residual(stack, potential, params, delta)

    x = grid.nodes
    window = _comparison_window(cfg, x, t_eval)
    _emit(
        out, run_dir, "residuals.csv",
        [("x", "length"), ("qhj_residual", "energy"), ("velocity_residual", "acceleration")],
        [[float(xi), float(q), float(c)] for xi, q, c in zip(x, qhj.values, cv.values)],
    )

    # Order-0 plane-wave state: linear action, exactly stationary residual.
    p0 = cfg.p0 if cfg.model == "free" else 0.0
    e0 = p0**2 / (2.0 * cfg.mass)
    plane = [
        ComplexField(grid, (p0 * x - e0 * float(t)) + 0j, float(t)) for t in times
    ]
    plane_pot = Potential.free()
    plane_qhj = qhj_residual_from_series(plane, plane_pot, params, delta)
    plane_cv = complex_velocity_residual(plane, plane_pot, params, delta)

    out.metrics = {
        "t_eval": t_eval,
        "qhj_max_window": float(np.max(qhj.values[window])),
        "velocity_max_window": float(np.max(cv.values[window])),
        "plane_wave_qhj_max": float(np.max(plane_qhj.values)),
        "plane_wave_velocity_max": float(np.max(plane_cv.values)),
    }
