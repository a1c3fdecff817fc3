"""Scenario configuration, presets, CSV emission and the comparison harness.

Configuration is a flat INI-style text with sections [medium], [pulses],
[grid] and [run]; unset keys fall back to the entrance-dynamics defaults
(omega0T = 40, delta_p0 T = 40, delay 1.3 T, two-photon resonance).  All
outputs are plain CSV plus a sidecar echoing the fully resolved
configuration; given identical configuration the files are byte-identical
between runs.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import analytic as ana
from .domain import InputPulseSpec, MediumParams, SimulationGrid, gaussian_entrance, make_grid
from .errors import BstirapError, ConfigError
from .propagation import conservation_residuals, run

__all__ = [
    "ScenarioConfig",
    "ScenarioResult",
    "parse_config",
    "serialize_config",
    "run_scenario",
    "sweep",
    "compare",
    "preset_names",
    "load_preset",
]

SNAPSHOT_COLUMNS = [
    "tau",
    "omega_pT",
    "omega_sT",
    "phi_p",
    "phi_s",
    "P1",
    "P2",
    "P3",
    "proj_b1",
    "proj_b2",
    "proj_d",
    "theta",
    "psi",
    "n",
    "Q",
    "delta_eff",
]

_MODES = ("propagate", "analytic", "compare", "sweep")

#: L-inf agreement (radians) required between the numeric and analytic
#: mixing angle inside the overlap region for a PASS verdict.
THETA_AGREEMENT_RAD = 0.05

_DEFAULTS = {
    "medium": {"q": None, "q_s": "1.0", "delta_p0": "40.0", "delta_two0": "0.0"},
    "pulses": {
        "omega0T": "40.0",
        "delay_over_T": "1.3",
        "width_over_T": "1.0",
        "ordering": "intuitive",
        "peak_convention": "generalized",
    },
    "grid": {
        "tau_min": "-8.0",
        "tau_max": "8.0",
        "n_tau": "4096",
        "zeta_max": "20.0",
        "n_zeta": "4000",
    },
    "run": {
        "mode": "propagate",
        "snapshots": "0.0",
        "q_values": "",
        "zeta_values": "",
        "out_dir": "",
        "format": "csv",
    },
}


@dataclass(frozen=True)
class ScenarioConfig:
    medium: MediumParams
    pulses: InputPulseSpec
    grid: SimulationGrid
    snapshot_zetas: tuple[float, ...]
    mode: str = "propagate"
    q_values: tuple[float, ...] = ()
    zeta_values: tuple[float, ...] = ()
    out_dir: str = ""
    output_format: str = "csv"


def _parse_float(raw: str, key: str, line: int) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"malformed number {raw!r}", line=line, key=key) from None


def _parse_int(raw: str, key: str, line: int) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"malformed integer {raw!r}", line=line, key=key) from None


def _parse_float_list(raw: str, key: str, line: int) -> tuple[float, ...]:
    items = [s.strip() for s in raw.split(",") if s.strip()]
    return tuple(_parse_float(s, key, line) for s in items)


def parse_config(text: str) -> ScenarioConfig:
    """Parse configuration text into a validated :class:`ScenarioConfig`.

    Unknown sections or keys, malformed numbers and failed invariants raise
    :class:`ConfigError` naming the offending line and key.
    """
    values: dict[str, dict[str, str]] = {s: dict(d) for s, d in _DEFAULTS.items()}
    lines: dict[tuple[str, str], int] = {}
    section = None
    for lineno, rawline in enumerate(text.splitlines(), start=1):
        stripped = rawline.strip()
        if not stripped or stripped.startswith(("#", ";")):
            continue
        if stripped.startswith("[") and stripped.endswith("]"):
            section = stripped[1:-1].strip().lower()
            if section not in values:
                raise ConfigError(f"unknown section [{section}]", line=lineno)
            continue
        if "=" not in stripped:
            raise ConfigError(f"expected 'key = value', got {stripped!r}", line=lineno)
        if section is None:
            raise ConfigError("key outside of any section", line=lineno)
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key not in _DEFAULTS[section]:
            raise ConfigError(f"unknown key in [{section}]", line=lineno, key=key)
        values[section][key] = raw.strip()
        lines[(section, key)] = lineno

    def ln(section: str, key: str) -> int | None:
        return lines.get((section, key))

    med = values["medium"]
    if med["q"] is None:
        raise ConfigError("missing required oscillator-strength ratio", key="q")

    def build(section: str, key: str, ctor):
        return ctor(values[section][key], key, ln(section, key) or 0)

    try:
        medium = MediumParams(
            q=build("medium", "q", _parse_float),
            q_s=build("medium", "q_s", _parse_float),
            delta_p0=build("medium", "delta_p0", _parse_float),
            delta_two0=build("medium", "delta_two0", _parse_float),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc), key="q", line=ln("medium", "q")) from None

    try:
        pulses = InputPulseSpec(
            omega0T=build("pulses", "omega0T", _parse_float),
            delay_over_T=build("pulses", "delay_over_T", _parse_float),
            width_over_T=build("pulses", "width_over_T", _parse_float),
            ordering=values["pulses"]["ordering"],
            peak_convention=values["pulses"]["peak_convention"],
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc), line=ln("pulses", "omega0T")) from None

    try:
        grid = make_grid(
            build("grid", "tau_min", _parse_float),
            build("grid", "tau_max", _parse_float),
            build("grid", "n_tau", _parse_int),
            build("grid", "zeta_max", _parse_float),
            build("grid", "n_zeta", _parse_int),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc), line=ln("grid", "n_tau")) from None

    mode = values["run"]["mode"].strip().lower()
    if mode not in _MODES:
        raise ConfigError(
            f"mode must be one of {_MODES}", key="mode", line=ln("run", "mode")
        )
    fmt = values["run"]["format"].strip().lower()
    if fmt != "csv":
        raise ConfigError("only the 'csv' format is supported", key="format", line=ln("run", "format"))

    snapshots = _parse_float_list(values["run"]["snapshots"], "snapshots", ln("run", "snapshots") or 0)
    if not snapshots:
        snapshots = (0.0,)
    for z in snapshots:
        if z < 0.0 or z > grid.zeta_max + 1e-12:
            raise ConfigError(
                f"snapshot depth {z} outside [0, {grid.zeta_max}]",
                key="snapshots",
                line=ln("run", "snapshots"),
            )

    return ScenarioConfig(
        medium=medium,
        pulses=pulses,
        grid=grid,
        snapshot_zetas=snapshots,
        mode=mode,
        q_values=_parse_float_list(values["run"]["q_values"], "q_values", ln("run", "q_values") or 0),
        zeta_values=_parse_float_list(
            values["run"]["zeta_values"], "zeta_values", ln("run", "zeta_values") or 0
        ),
        out_dir=values["run"]["out_dir"],
        output_format=fmt,
    )


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return f"{x:.12g}"
    return str(x)


def serialize_config(cfg: ScenarioConfig) -> str:
    """Canonical text form of a configuration; parse(serialize(c)) == c."""
    m, p, g = cfg.medium, cfg.pulses, cfg.grid
    lines = [
        "[medium]",
        f"q = {_fmt(m.q)}",
        f"q_s = {_fmt(m.q_s)}",
        f"delta_p0 = {_fmt(m.delta_p0)}",
        f"delta_two0 = {_fmt(m.delta_two0)}",
        "",
        "[pulses]",
        f"omega0T = {_fmt(p.omega0T)}",
        f"delay_over_T = {_fmt(p.delay_over_T)}",
        f"width_over_T = {_fmt(p.width_over_T)}",
        f"ordering = {p.ordering}",
        f"peak_convention = {p.peak_convention}",
        "",
        "[grid]",
        f"tau_min = {_fmt(g.tau_min)}",
        f"tau_max = {_fmt(g.tau_max)}",
        f"n_tau = {g.n_tau}",
        f"zeta_max = {_fmt(g.zeta_max)}",
        f"n_zeta = {g.n_zeta}",
        "",
        "[run]",
        f"mode = {cfg.mode}",
        f"snapshots = {', '.join(_fmt(z) for z in cfg.snapshot_zetas)}",
        f"q_values = {', '.join(_fmt(q) for q in cfg.q_values)}",
        f"zeta_values = {', '.join(_fmt(z) for z in cfg.zeta_values)}",
        f"out_dir = {cfg.out_dir}",
        f"format = {cfg.output_format}",
    ]
    return "\n".join(lines) + "\n"


def _write_csv(path: Path, header, columns) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*columns):
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _snapshot_csv(path: Path, snap) -> None:
    p1, p2, p3 = snap.trajectory.populations
    cols = [
        snap.fields.tau,
        snap.fields.omega_p,
        snap.fields.omega_s,
        snap.fields.phi_p,
        snap.fields.phi_s,
        p1,
        p2,
        p3,
        snap.dressed.p_b1,
        snap.dressed.p_b2,
        snap.dressed.p_d,
        snap.diag.theta,
        snap.diag.psi,
        snap.diag.photon_density,
        snap.diag.two_photon_strength,
        snap.diag.delta_eff,
    ]
    _write_csv(path, SNAPSHOT_COLUMNS, cols)


@dataclass(frozen=True)
class ScenarioResult:
    ok: bool
    summary_lines: tuple[str, ...]
    files: tuple[str, ...]
    values: dict


def _ztag(z: float) -> str:
    return _fmt(float(z))


def _analytic_summary(profiles, params) -> tuple[list[str], dict]:
    curve = ana.transfer_curve_and_zmax(profiles, params)
    validity = ana.validity_lengths(profiles, params)
    brk = ana.breakdown_length(profiles, params)
    lines = [
        f"zeta_max = {_fmt(curve.zeta_max)}",
        f"photon_integral = {_fmt(curve.photon_integral)}",
        f"zeta_cond_general = {_fmt(validity.zeta_cond_general)}",
        f"zeta_cond_large_detuning = {_fmt(validity.zeta_cond_large_detuning)}",
        "breakdown_zeta = none"
        if brk is None
        else f"breakdown_zeta = {_fmt(brk.zeta_break)} (estimate {_fmt(brk.zeta_estimate)})",
    ]
    vals = {"zeta_max": curve.zeta_max, "validity": validity, "breakdown": brk, "curve": curve}
    return lines, vals


def _run_propagate(cfg: ScenarioConfig, out: Path, check_convergence: bool):
    record = run(cfg.pulses, cfg.medium, cfg.grid, cfg.snapshot_zetas)
    files = []
    lines = ["mode = propagate", f"q = {_fmt(cfg.medium.q)}"]
    effs = {}
    for snap in record.snapshots:
        name = f"snapshot_zeta{_ztag(snap.zeta)}.csv"
        _snapshot_csv(out / name, snap)
        files.append(name)
        effs[snap.zeta] = snap.efficiency
        lines.append(f"P3(zeta={_ztag(snap.zeta)}) = {_fmt(snap.efficiency)}")

    vals = {"record": record, "P3": effs}
    if len(record.snapshots) >= 2:
        res = conservation_residuals(record)
        lines.append(f"photon_law_residual_rel = {_fmt(res.photon_law_rel)}")
        lines.append(f"delta_law_residual = {_fmt(res.delta_law_linf)}")
        vals["residuals"] = res

    profiles = ana.entrance_profiles(gaussian_entrance(cfg.pulses, cfg.grid), cfg.medium)
    alines, avals = _analytic_summary(profiles, cfg.medium)
    lines += alines
    vals.update(avals)

    ok = True
    if check_convergence and max(cfg.snapshot_zetas) > 0:
        half = run(cfg.pulses, cfg.medium, cfg.grid, cfg.snapshot_zetas, dzeta=record.dzeta / 2)
        dmax = max(
            abs(a.efficiency - b.efficiency)
            for a, b in zip(record.snapshots, half.snapshots)
        )
        converged = dmax < 1e-3
        lines.append(
            f"convergence_check: max |dP3| = {_fmt(dmax)} under dzeta halving "
            f"({'converged' if converged else 'NOT CONVERGED'})"
        )
        vals["convergence_dmax"] = dmax
        ok = ok and converged
    return ok, lines, files, vals


def _run_analytic(cfg: ScenarioConfig, out: Path):
    qs = cfg.q_values or (cfg.medium.q,)
    files = []
    lines = ["mode = analytic"]
    vals = {"zeta_max": {}, "breakdown": {}}
    for q in qs:
        params = replace(cfg.medium, q=q)
        profiles = ana.entrance_profiles(gaussian_entrance(cfg.pulses, cfg.grid), params)
        sol = ana.solve_characteristics(cfg.snapshot_zetas, profiles, params)
        for k, z in enumerate(sol.zetas):
            name = f"analytic_q{_fmt(q)}_zeta{_ztag(z)}.csv"
            _write_csv(
                out / name,
                ["tau", "xi", "theta", "A", "dxi_dtau"],
                [sol.tau, sol.xi[k], sol.theta[k], sol.a_factor[k], sol.dxi_dtau[k]],
            )
            files.append(name)
        curve = ana.transfer_curve_and_zmax(profiles, params)
        name = f"zmax_q{_fmt(q)}.csv"
        _write_csv(out / name, ["tau", "zeta_complete"], [curve.tau, curve.zeta_complete])
        files.append(name)

        lines.append(f"q = {_fmt(q)}:")
        alines, avals = _analytic_summary(profiles, params)
        lines += ["  " + s for s in alines]
        vals["zeta_max"][q] = avals["zeta_max"]
        vals["breakdown"][q] = avals["breakdown"]
    return True, lines, files, vals


def compare(cfg: ScenarioConfig, out: Path | None = None):
    """Numeric-vs-analytic mixing-angle comparison at the snapshot depths.

    Agreement is measured in L-inf over the pulse-overlap region of the
    numeric slice; depths at or beyond the adiabaticity-breakdown length are
    excluded from the verdict and noted.
    """
    record = run(cfg.pulses, cfg.medium, cfg.grid, cfg.snapshot_zetas)
    profiles = ana.entrance_profiles(record.snapshots[0].fields, cfg.medium)
    brk = ana.breakdown_length(profiles, cfg.medium)
    omega0_sq_peak = float(np.max(profiles.omega0_sq))

    lines = ["mode = compare", f"q = {_fmt(cfg.medium.q)}"]
    rows_z, rows_t, rows_tn, rows_ta, rows_d, rows_a, rows_x = [], [], [], [], [], [], []
    verdict = True
    per_zeta = {}
    for snap in record.snapshots:
        z = snap.zeta
        theta_num = snap.diag.theta
        theta_ana_vals = ana.theta_analytic(z, record.grid.tau, profiles, cfg.medium)
        a_vals, _ = ana.factor_A(z, record.grid.tau, profiles, cfg.medium)
        xi = ana.solve_xi(z, record.grid.tau, profiles, cfg.medium)
        diff = np.abs(theta_num - theta_ana_vals)

        overlap = snap.fields.omega_p * snap.fields.omega_s > ana.OVERLAP_FLOOR_REL * omega0_sq_peak
        linf = float(np.nanmax(diff[overlap])) if np.any(overlap) else 0.0
        per_zeta[z] = linf

        rows_z.append(np.full(record.grid.n_tau, z))
        rows_t.append(record.grid.tau)
        rows_tn.append(theta_num)
        rows_ta.append(theta_ana_vals)
        rows_d.append(diff)
        rows_a.append(a_vals)
        rows_x.append(xi - record.grid.tau)

        steep = bool(np.any(np.asarray(a_vals)[overlap] < 0.2)) if np.any(overlap) else False
        # The adiabatic solution stops being comparable once its own
        # stretch factor collapses (A < 0.2) or past the breakdown depth.
        excluded = steep or (brk is not None and z >= brk.zeta_break)
        note = " [steep-slope region: A < 0.2]" if steep else ""
        note += " [adiabaticity breakdown, excluded from verdict]" if excluded else ""
        lines.append(f"zeta={_ztag(z)}: linf |dtheta| = {_fmt(linf)} rad{note}")
        if not excluded:
            verdict = verdict and (linf <= THETA_AGREEMENT_RAD)

    lines.append(f"verdict = {'PASS' if verdict else 'FAIL'}")
    files = []
    if out is not None:
        name = "comparison.csv"
        _write_csv(
            out / name,
            ["zeta", "tau", "theta_numeric", "theta_analytic", "abs_diff", "A", "xi_minus_tau"],
            [np.concatenate(c) for c in (rows_z, rows_t, rows_tn, rows_ta, rows_d, rows_a, rows_x)],
        )
        files.append(name)
    return verdict, lines, files, {"per_zeta_linf": per_zeta, "record": record, "verdict": verdict}


def sweep(cfg: ScenarioConfig, q_values=None, zeta_values=None, jobs: int | None = None):
    """Transfer-efficiency matrix P3(q, zeta); runs execute concurrently.

    Failed runs leave NaN cells with an error note instead of aborting the
    sweep.  Results are ordered by the input lists regardless of scheduling.
    """
    qs = tuple(q_values if q_values is not None else cfg.q_values)
    zs = tuple(zeta_values if zeta_values is not None else cfg.zeta_values)
    if not qs or not zs:
        raise ConfigError("sweep requires nonempty q_values and zeta_values")

    matrix = np.full((len(qs), len(zs)), np.nan)
    notes = []

    def one(idx_q: int):
        params = replace(cfg.medium, q=qs[idx_q])
        record = run(cfg.pulses, params, cfg.grid, zs)
        return [record.snapshot_at(z).efficiency for z in zs]

    workers = jobs or os.cpu_count() or 1
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {i: pool.submit(one, i) for i in range(len(qs))}
        for i in range(len(qs)):
            try:
                matrix[i, :] = futures[i].result()
            except BstirapError as exc:
                notes.append(f"q={_fmt(qs[i])}: failed: {exc}")
            except ValueError as exc:
                notes.append(f"q={_fmt(qs[i])}: failed: {exc}")
    return matrix, qs, zs, notes


def _run_sweep(cfg: ScenarioConfig, out: Path, jobs: int | None):
    matrix, qs, zs, notes = sweep(cfg, jobs=jobs)
    header = ["q"] + [f"P3_zeta{_ztag(z)}" for z in zs]
    cols = [np.asarray(qs)] + [matrix[:, j] for j in range(len(zs))]
    _write_csv(out / "sweep.csv", header, cols)
    lines = ["mode = sweep"]
    for i, q in enumerate(qs):
        vals = ", ".join(_fmt(v) for v in matrix[i])
        lines.append(f"q={_fmt(q)}: P3 = [{vals}]")
    lines += notes
    ok = not notes
    return ok, lines, ["sweep.csv"], {"matrix": matrix, "q_values": qs, "zeta_values": zs}


def run_scenario(
    cfg: ScenarioConfig,
    out_dir: str | os.PathLike | None = None,
    *,
    jobs: int | None = None,
    check_convergence: bool = False,
) -> ScenarioResult:
    """Execute a scenario, write its artifacts, and return a report."""
    out = Path(out_dir if out_dir is not None else (cfg.out_dir or "."))
    out.mkdir(parents=True, exist_ok=True)

    if cfg.mode == "propagate":
        ok, lines, files, vals = _run_propagate(cfg, out, check_convergence)
    elif cfg.mode == "analytic":
        ok, lines, files, vals = _run_analytic(cfg, out)
    elif cfg.mode == "compare":
        ok, lines, files, vals = compare(cfg, out)
    elif cfg.mode == "sweep":
        ok, lines, files, vals = _run_sweep(cfg, out, jobs)
    else:  # pragma: no cover - parse_config guards this
        raise ConfigError(f"unknown mode {cfg.mode!r}")

    with open(out / "config_resolved.ini", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize_config(cfg))
    with open(out / "summary.txt", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    files = list(files) + ["config_resolved.ini", "summary.txt"]
    return ScenarioResult(ok=ok, summary_lines=tuple(lines), files=tuple(files), values=vals)


def preset_names() -> list[str]:
    from importlib.resources import files

    root = files("bstirap") / "presets"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".ini"))


def load_preset(name: str) -> ScenarioConfig:
    from importlib.resources import files

    path = files("bstirap") / "presets" / f"{name}.ini"
    if not path.is_file():
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return parse_config(path.read_text(encoding="utf-8"))
