"""Deterministic on-disk formats for every result type.

All delimited files are comma-separated with a header row, '.' decimal
separator, UTF-8 encoding and LF line endings; floats are written with up to
17 significant digits so identical inputs reproduce byte-identical payloads.
Structured metadata goes to JSON sidecars.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .diagnostics import LyapunovMap, SectionSet
from .sindy import (
    EQUATION_NAMES,
    ModelDiff,
    SparseModel,
    monomial_label,
)
from .symmetry import PeriodicIC, SymmetryLine
from .system import SystemParams, Trajectory


def _fmt(value: float) -> str:
    return "%.17g" % value


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _write_json(path: Path, payload: dict) -> None:
    _write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _params_block(params: SystemParams) -> dict:
    return {"m": params.m, "omega": params.omega, "N": params.n}


def write_trajectory(path: str | Path, trajectory: Trajectory) -> None:
    """CSV `t,x,y,px,py` plus a `<name>.meta.json` sidecar."""
    path = Path(path)
    times = trajectory.times
    lines = ["t,x,y,px,py"]
    for i in range(len(trajectory)):
        row = trajectory.data[i]
        lines.append(
            ",".join([_fmt(times[i])] + [_fmt(v) for v in row])
        )
    _write_text(path, "\n".join(lines) + "\n")
    meta = _params_block(trajectory.params)
    meta.update(
        {
            "dt": trajectory.dt,
            "E": trajectory.energy,
            "initial_state": list(map(float, trajectory.data[0])),
        }
    )
    _write_json(path.with_suffix(path.suffix + ".meta.json"), meta)


def read_trajectory(path: str | Path) -> Trajectory:
    path = Path(path)
    raw = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    meta = json.loads(
        path.with_suffix(path.suffix + ".meta.json").read_text(encoding="utf-8")
    )
    params = SystemParams(m=meta["m"], omega=meta["omega"], n=meta["N"])
    return Trajectory(
        dt=meta["dt"], t0=raw[0, 0], data=raw[:, 1:5], params=params,
        energy=meta["E"],
    )


def write_section_set(path: str | Path, sections: SectionSet) -> None:
    """CSV `orbit_id,t,y,py` plus params/energy sidecar."""
    path = Path(path)
    lines = ["orbit_id,t,y,py"]
    for orbit_id, orbit in enumerate(sections.orbits):
        for pt in orbit:
            lines.append(
                ",".join([str(orbit_id), _fmt(pt.t), _fmt(pt.y), _fmt(pt.py)])
            )
    _write_text(path, "\n".join(lines) + "\n")
    meta = _params_block(sections.params)
    meta.update(
        {
            "E": sections.energy,
            "n_orbits": len(sections.orbits),
            "failures": [
                {"orbit_id": idx, "reason": reason}
                for idx, reason in sections.failures
            ],
        }
    )
    _write_json(path.with_suffix(path.suffix + ".meta.json"), meta)


def write_lyapunov_map(
    path: str | Path, lmap: LyapunovMap, params: SystemParams
) -> None:
    """CSV `y,py,lambda,status` plus grid-spec sidecar."""
    path = Path(path)
    lines = ["y,py,lambda,status"]
    for i, y in enumerate(lmap.ys):
        for j, py in enumerate(lmap.pys):
            lines.append(
                ",".join(
                    [
                        _fmt(y),
                        _fmt(py),
                        _fmt(lmap.values[i, j]),
                        str(int(lmap.status[i, j])),
                    ]
                )
            )
    _write_text(path, "\n".join(lines) + "\n")
    meta = _params_block(params)
    meta.update(
        {
            "E": lmap.energy,
            "grid": {
                "y": [float(lmap.ys[0]), float(lmap.ys[-1]), len(lmap.ys)],
                "py": [float(lmap.pys[0]), float(lmap.pys[-1]), len(lmap.pys)],
            },
        }
    )
    _write_json(path.with_suffix(path.suffix + ".meta.json"), meta)


def write_symmetry_lines(path: str | Path, lines_: list[SymmetryLine]) -> None:
    """CSV `index,y,py`, one block per symmetry line."""
    rows = ["index,y,py"]
    for line in lines_:
        for y, py in line.points:
            rows.append(",".join([str(line.index), _fmt(y), _fmt(py)]))
    _write_text(Path(path), "\n".join(rows) + "\n")


def write_periodic_ics(
    path: str | Path,
    ics: list[PeriodicIC],
    closure_errors: list[float | None] | None = None,
) -> None:
    """JSON records {y, py, px_lifted, energy, period_divisor, closure_error}."""
    if closure_errors is None:
        closure_errors = [None] * len(ics)
    records = [
        {
            "y": ic.y,
            "py": ic.py,
            "px_lifted": ic.px,
            "energy": ic.energy,
            "period_divisor": ic.period_divisor,
            "closure_error": err,
        }
        for ic, err in zip(ics, closure_errors)
    ]
    _write_json(Path(path), {"periodic_ics": records})


def write_sparse_model(path: str | Path, model: SparseModel) -> None:
    """JSON {K, threshold, dt, columns: {eq: [{exponents, coefficient}]}}."""
    columns = {}
    for j, name in enumerate(EQUATION_NAMES):
        terms = []
        for i, mono in enumerate(model.library.monomials):
            c = model.xi[i, j]
            if c != 0.0:
                terms.append({"exponents": list(mono), "coefficient": c})
        columns[name] = terms
    _write_json(
        Path(path),
        {
            "K": model.library.degree,
            "threshold": model.threshold,
            "dt": model.dt,
            "rank_deficient": bool(model.rank_deficient),
            "columns": columns,
        },
    )


def write_model_diff(path: str | Path, diff: ModelDiff) -> None:
    """CSV `equation,monomial,exact,reconstructed,delta_c,flag`."""
    lines = ["equation,monomial,exact,reconstructed,delta_c,flag"]
    for e in diff.entries:
        dc = "" if e.delta_c is None else _fmt(e.delta_c)
        lines.append(
            ",".join(
                [
                    EQUATION_NAMES[e.equation],
                    monomial_label(e.monomial),
                    _fmt(e.exact),
                    _fmt(e.reconstructed),
                    dc,
                    e.flag,
                ]
            )
        )
    _write_text(Path(path), "\n".join(lines) + "\n")


def write_delta_c_sweep(
    path: str | Path, sweep: list[tuple[float, ModelDiff]]
) -> None:
    """CSV `dt,equation,monomial,delta_c` across a sampling-step sweep."""
    lines = ["dt,equation,monomial,delta_c"]
    for dt, diff in sweep:
        for e in diff.entries:
            if e.delta_c is None:
                continue
            lines.append(
                ",".join(
                    [
                        _fmt(dt),
                        EQUATION_NAMES[e.equation],
                        monomial_label(e.monomial),
                        _fmt(e.delta_c),
                    ]
                )
            )
    _write_text(Path(path), "\n".join(lines) + "\n")


def write_warnings(path: str | Path, rows: list[tuple[str, str, str]]) -> None:
    """CSV `task,item,reason` collecting per-item soft failures."""
    lines = ["task,item,reason"]
    for task, item, reason in rows:
        lines.append(",".join([task, item, reason]))
    _write_text(Path(path), "\n".join(lines) + "\n")
