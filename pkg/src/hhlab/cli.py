"""Command-line interface: reproducible batch experiments with manifests.

Every run resolves its configuration (flags over an optional JSON config
file), executes exactly one task, writes delimited results plus optional
rendered figures to the output directory, and finishes with a manifest
recording the resolved configuration, package version, seed, and the list of
files produced.  Per-item soft failures (escaped orbits, points whose return
map never comes back) go to warnings.csv instead of aborting the batch.

Exit codes: 0 success, 2 validation error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, catalog, io, plots
from .diagnostics import classify_spectrum, largest_lyapunov, lyapunov_map, poincare_section
from .errors import AllClean, HHLabError, NotClosed, OffShell
from .sindy import (
    exact_model,
    find_dtc,
    model_diff,
    periodic_relation,
    reconstruct,
)
from .symmetry import advance_line, gamma0, periodic_ics, verify_periodic
from .system import (
    State,
    SystemParams,
    Trajectory,
    critical_energy,
    integrate,
    solve_momentum_on_shell,
    total_energy,
)


class ValidationError(Exception):
    """Bad flags or configuration; maps to exit code 2."""


# ---------------------------------------------------------------------------
# configuration resolution


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, help="polynomial order N of the family")
    p.add_argument("--mass", type=float, help="mass m (default 1)")
    p.add_argument("--omega", type=float, help="angular frequency (default 1)")
    p.add_argument("--energy", type=float, help="absolute total energy E")
    p.add_argument(
        "--energy-frac", type=float, help="energy as a fraction of E_c"
    )
    p.add_argument("--dt", type=float, help="integration / sampling step")
    p.add_argument("--t-end", type=float, help="integration time span")
    p.add_argument("--seed", type=int, help="seed for random initial conditions")
    p.add_argument("--out", type=str, help="output directory (default ./out)")
    p.add_argument("--workers", type=int, help="worker threads for grids")
    p.add_argument("--config", type=str, help="JSON config file; flags override")
    p.add_argument(
        "--plot", dest="plot", action="store_true", default=None,
        help="render figures next to the delimited output (default)",
    )
    p.add_argument("--no-plot", dest="plot", action="store_false")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hhlab",
        description="numerical laboratory for a generalized Henon-Heiles family",
    )
    sub = parser.add_subparsers(dest="task", required=True)

    p = sub.add_parser("simulate", help="integrate one orbit")
    _add_common(p)
    p.add_argument("--ic", type=str, help='initial state "x,y,px,py"')
    p.add_argument("--ic-key", type=str, help="catalog key for the initial state")

    p = sub.add_parser("poincare", help="oriented surface of section")
    _add_common(p)
    p.add_argument("--ic", type=str, action="append", help="explicit IC, repeatable")
    p.add_argument("--ic-set", type=str, help='"catalog" for all built-in entries')
    p.add_argument(
        "--grid", type=str,
        help='"K-random" for K seeded random on-shell ICs',
    )

    p = sub.add_parser("lyapmap", help="Lyapunov exponent over the section plane")
    _add_common(p)
    p.add_argument("--resolution", type=int, default=41, help="grid cells per axis")

    p = sub.add_parser("symmetry", help="symmetry-line periodic-orbit search")
    _add_common(p)
    p.add_argument("--samples", type=int, default=400, help="points along the base line")

    p = sub.add_parser("sindy", help="sparse model recovery from one orbit")
    _add_common(p)
    p.add_argument("--ic", type=str, help='initial state "x,y,px,py"')
    p.add_argument("--ic-key", type=str, help="catalog key for the initial state")
    p.add_argument("--degree", type=int, help="library degree K (default N)")
    p.add_argument("--threshold", type=float, default=0.05)

    p = sub.add_parser("dtc-scan", help="critical sampling step per orbit")
    _add_common(p)
    p.add_argument("--ic-set", type=str, help='"catalog" or comma-joined catalog keys')
    p.add_argument("--duration", type=float, default=200.0)

    p = sub.add_parser("relation", help="linear relation hidden in spurious terms")
    _add_common(p)
    p.add_argument("--ic", type=str, help='initial state "x,y,px,py"')
    p.add_argument("--ic-key", type=str, help="catalog key for the initial state")

    p = sub.add_parser("ics", help="dump the built-in initial-condition catalog")
    _add_common(p)
    return parser


def resolve_config(args: argparse.Namespace) -> dict:
    """Merge an optional JSON config under the explicit flags."""
    cfg: dict = {}
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise ValidationError(f"config file not found: {path}")
        cfg.update(json.loads(path.read_text(encoding="utf-8")))
    for key, value in vars(args).items():
        if key == "config" or value is None:
            continue
        cfg[key] = value
    cfg.setdefault("task", args.task)
    cfg.setdefault("n", 3)
    cfg.setdefault("mass", 1.0)
    cfg.setdefault("omega", 1.0)
    cfg.setdefault("out", "out")
    cfg.setdefault("plot", True)
    if cfg.get("energy") is not None and cfg.get("energy_frac") is not None:
        raise ValidationError("give either energy or energy_frac, not both")
    return cfg


def _params(cfg: dict) -> SystemParams:
    try:
        return SystemParams(m=cfg["mass"], omega=cfg["omega"], n=cfg["n"])
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc


def _energy(cfg: dict, params: SystemParams) -> float:
    if cfg.get("energy") is not None:
        return float(cfg["energy"])
    if cfg.get("energy_frac") is not None:
        frac = float(cfg["energy_frac"])
        if not 0.0 < frac <= 1.0:
            raise ValidationError("energy_frac must be in (0, 1]")
        return frac * critical_energy(params)
    raise ValidationError("an energy (or energy_frac) is required")


def _parse_ic(text: str) -> State:
    parts = [float(v) for v in text.split(",")]
    if len(parts) != 4:
        raise ValidationError('initial state must be "x,y,px,py"')
    return State(0.0, *parts)


def _pick_ic(cfg: dict, params: SystemParams) -> State:
    if cfg.get("ic") and cfg.get("ic_key"):
        raise ValidationError("give either ic or ic_key, not both")
    if cfg.get("ic"):
        return _parse_ic(cfg["ic"])
    if cfg.get("ic_key"):
        try:
            cat_params, state = catalog.initial_state(cfg["ic_key"])
        except KeyError as exc:
            raise ValidationError(f"unknown catalog key {cfg['ic_key']!r}") from exc
        if cat_params.n != params.n:
            raise ValidationError(
                f"catalog key {cfg['ic_key']!r} is for N={cat_params.n}"
            )
        return state
    raise ValidationError("an initial state (ic or ic_key) is required")


def _random_on_shell(
    params: SystemParams, energy: float, count: int, seed: int
) -> list[State]:
    """Seeded random section points (x=0, px>0) on the energy shell."""
    rng = np.random.Generator(np.random.Philox(seed))
    states: list[State] = []
    span = 2.0 * np.sqrt(2.0 * energy / params.m) / params.omega + 1.0
    while len(states) < count:
        y = rng.uniform(-span, span)
        py = rng.uniform(-span, span)
        try:
            px = solve_momentum_on_shell(params, energy, 0.0, y, py)
        except OffShell:
            continue
        states.append(State(0.0, 0.0, y, px, py))
    return states


# ---------------------------------------------------------------------------
# tasks


def _task_simulate(cfg: dict, outdir: Path, warn: list) -> list[Path]:
    params = _params(cfg)
    ic = _pick_ic(cfg, params)
    dt = cfg.get("dt", 1e-3)
    t_end = cfg.get("t_end", 100.0)
    traj = integrate(params, ic, t_end, dt)
    csv = outdir / "trajectory.csv"
    io.write_trajectory(csv, traj)
    outputs = [csv, csv.with_suffix(".csv.meta.json")]
    if len(traj) >= 1024:
        kind = classify_spectrum(traj)
        (outdir / "classification.json").write_text(
            json.dumps({"kind": kind}) + "\n", encoding="utf-8"
        )
        outputs.append(outdir / "classification.json")
    if cfg["plot"]:
        outputs.append(plots.plot_trajectory(outdir / "trajectory.png", traj))
    return outputs


def _gather_poincare_ics(
    cfg: dict, params: SystemParams, warn: list
) -> tuple[list[State], float]:
    states: list[State] = []
    if cfg.get("ic"):
        for text in cfg["ic"]:
            states.append(_parse_ic(text))
    if cfg.get("ic_set") == "catalog":
        for key in catalog.list_keys():
            entry = catalog.get(key)
            if entry.n == params.n:
                states.append(catalog.initial_state(key)[1])
    if cfg.get("grid"):
        spec = str(cfg["grid"])
        if not spec.endswith("-random"):
            raise ValidationError('grid spec must look like "70-random"')
        count = int(spec.split("-")[0])
        energy = _energy(cfg, params)
        seed = cfg.get("seed")
        if seed is None:
            raise ValidationError("random grids need a seed")
        states.extend(_random_on_shell(params, energy, count, seed))
    if not states:
        raise ValidationError("no initial conditions given")
    energy = total_energy(params, states[0])
    return states, energy


def _task_poincare(cfg: dict, outdir: Path, warn: list) -> list[Path]:
    params = _params(cfg)
    states, energy = _gather_poincare_ics(cfg, params, warn)
    t_end = cfg.get("t_end", 1000.0)
    dt = cfg.get("dt", 1e-2)
    sections = poincare_section(params, states, t_end, dt)
    for idx, reason in sections.failures:
        warn.append(("poincare", f"orbit {idx}", reason))
    csv = outdir / "sections.csv"
    io.write_section_set(csv, sections)
    outputs = [csv, csv.with_suffix(".csv.meta.json")]
    if cfg["plot"]:
        outputs.append(plots.plot_section(outdir / "sections.png", sections))
    return outputs


def _task_lyapmap(cfg: dict, outdir: Path, warn: list) -> list[Path]:
    params = _params(cfg)
    energy = _energy(cfg, params)
    res = int(cfg.get("resolution", 41))
    span = 2.0 * np.sqrt(2.0 * energy / params.m) / params.omega + 0.5
    ys = np.linspace(-span, span, res)
    pys = np.linspace(-span, span, res)
    if cfg.get("workers"):
        import numba

        numba.set_num_threads(int(cfg["workers"]))
    lmap = lyapunov_map(
        params, energy, ys, pys,
        t_total=cfg.get("t_end", 1000.0), dt=cfg.get("dt", 1e-2),
    )
    csv = outdir / "lyapmap.csv"
    io.write_lyapunov_map(csv, lmap, params)
    outputs = [csv, csv.with_suffix(".csv.meta.json")]
    if cfg["plot"]:
        outputs.append(plots.plot_lyapunov_map(outdir / "lyapmap.png", lmap))
    return outputs


def _task_symmetry(cfg: dict, outdir: Path, warn: list) -> list[Path]:
    params = _params(cfg)
    energy = _energy(cfg, params)
    samples = int(cfg.get("samples", 400))
    line0 = gamma0(params, energy, samples=samples)
    line2 = advance_line(params, energy, line0)
    if line2.dropped:
        warn.append(("symmetry", "line 2", f"{line2.dropped} points never returned"))
    hits = periodic_ics(params, energy, samples=samples)
    closures: list[float | None] = []
    for hit in hits:
        state = State(0.0, 0.0, hit.y, hit.px, hit.py)
        try:
            _, dist = verify_periodic(params, state, max_period=50.0)
            closures.append(dist)
        except NotClosed as exc:
            closures.append(None)
            warn.append(
                ("symmetry", f"periodic y={hit.y:.6g}", f"closure {exc.best_distance:.3g}")
            )
    lines_csv = outdir / "symmetry_lines.csv"
    io.write_symmetry_lines(lines_csv, [line0, line2])
    ics_json = outdir / "periodic_ics.json"
    io.write_periodic_ics(ics_json, hits, closures)
    outputs = [lines_csv, ics_json]
    if cfg["plot"]:
        outputs.append(
            plots.plot_symmetry(outdir / "symmetry.png", [line0, line2], hits)
        )
    return outputs


def _task_sindy(cfg: dict, outdir: Path, warn: list) -> list[Path]:
    params = _params(cfg)
    ic = _pick_ic(cfg, params)
    dt = cfg.get("dt", 1e-3)
    t_end = cfg.get("t_end", 100.0)
    degree = int(cfg.get("degree") or params.n)
    traj = integrate(params, ic, t_end, dt)
    model = reconstruct(traj, degree, threshold=cfg.get("threshold", 0.05))
    diff = model_diff(model, exact_model(params, degree))
    model_json = outdir / "model.json"
    io.write_sparse_model(model_json, model)
    diff_csv = outdir / "model_diff.csv"
    io.write_model_diff(diff_csv, diff)
    outputs = [model_json, diff_csv]
    sweep_dts = cfg.get("sweep_dts")
    if sweep_dts:
        sweep = []
        for sdt in sweep_dts:
            straj = integrate(params, ic, t_end, float(sdt))
            sweep.append(
                (float(sdt), model_diff(reconstruct(straj, degree), exact_model(params, degree)))
            )
        sweep_csv = outdir / "delta_c_sweep.csv"
        io.write_delta_c_sweep(sweep_csv, sweep)
        outputs.append(sweep_csv)
        if cfg["plot"]:
            outputs.append(plots.plot_delta_c_sweep(outdir / "delta_c.png", sweep))
    return outputs


def _task_dtc_scan(cfg: dict, outdir: Path, warn: list) -> list[Path]:
    params = _params(cfg)
    ic_set = cfg.get("ic_set") or "catalog"
    if ic_set == "catalog":
        keys = [k for k in catalog.list_keys() if catalog.get(k).n == params.n]
    else:
        keys = [k.strip() for k in str(ic_set).split(",")]
    if not keys:
        raise ValidationError("no catalog keys match the requested N")
    rows = ["key,kind,dt_c"]
    for key in keys:
        entry = catalog.get(key)
        p, state = catalog.initial_state(key)
        try:
            value = find_dtc(p, state, entry.n, duration=cfg.get("duration", 200.0))
            rows.append(f"{key},{entry.kind},{value:.6g}")
        except AllClean:
            rows.append(f"{key},{entry.kind},")
            warn.append(("dtc-scan", key, "no spurious terms on the scanned grid"))
    csv = outdir / "dtc.csv"
    csv.write_text("\n".join(rows) + "\n", encoding="utf-8", newline="\n")
    return [csv]


def _task_relation(cfg: dict, outdir: Path, warn: list) -> list[Path]:
    params = _params(cfg)
    ic = _pick_ic(cfg, params)
    dt = cfg.get("dt", 2e-5)
    t_end = cfg.get("t_end", 20.0)
    traj = integrate(params, ic, t_end, dt)
    model = reconstruct(traj, params.n)
    diff = model_diff(model, exact_model(params, params.n))
    report = periodic_relation(diff, traj)
    out = outdir / "relation.json"
    payload = {
        "slope_algebraic": report.slope_algebraic,
        "slope_fit": report.slope_fit,
        "terms": [
            {"monomial": list(m), "coefficient": c}
            for m, c in zip(report.monomials, report.coefficients)
        ],
    }
    out.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    return [out]


def _task_ics(cfg: dict, outdir: Path, warn: list) -> list[Path]:
    records = []
    for key in catalog.list_keys():
        e = catalog.get(key)
        records.append(
            {
                "key": e.key, "n": e.n, "kind": e.kind,
                "energy_fraction": e.energy_fraction,
                "ic": list(e.ic), "source": e.source,
            }
        )
    out = outdir / "catalog.json"
    out.write_text(json.dumps(records, indent=2) + "\n", encoding="utf-8")
    sys.stdout.write(json.dumps(records, indent=2) + "\n")
    return [out]


_TASKS = {
    "simulate": _task_simulate,
    "poincare": _task_poincare,
    "lyapmap": _task_lyapmap,
    "symmetry": _task_symmetry,
    "sindy": _task_sindy,
    "dtc-scan": _task_dtc_scan,
    "relation": _task_relation,
    "ics": _task_ics,
}


def run(cfg: dict) -> list[Path]:
    outdir = Path(cfg["out"])
    outdir.mkdir(parents=True, exist_ok=True)
    warn: list[tuple[str, str, str]] = []
    outputs = _TASKS[cfg["task"]](cfg, outdir, warn)
    if warn:
        warn_path = outdir / "warnings.csv"
        io.write_warnings(warn_path, warn)
        outputs.append(warn_path)
    manifest = {
        "version": __version__,
        "config": {k: v for k, v in sorted(cfg.items())},
        "outputs": [p.name for p in outputs],
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
    manifest_path = outdir / "manifest.json"
    manifest_path.write_text(
        json.dumps(manifest, indent=2, default=str) + "\n", encoding="utf-8"
    )
    outputs.append(manifest_path)
    return outputs


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        run(cfg)
    except ValidationError as exc:
        sys.stderr.write(f"error: validation: {exc}\n")
        return 2
    except HHLabError as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return 3
    except OSError as exc:
        sys.stderr.write(f"error: io: {exc}\n")
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
