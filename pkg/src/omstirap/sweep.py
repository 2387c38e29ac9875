"""Parallel 1-D/2-D parameter sweeps and iso-level contour extraction.

Each grid cell runs an independent scenario; results land in preallocated
slots keyed by cell index, so the aggregated grids are bitwise identical
for any worker count.  Failed cells record their error kind and leave NaN
in the grids instead of aborting the sweep.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import ConfigError, InvalidArgumentError
from .model import DriveSchedule, SystemParams, TWO_PI
from .protocols import Scenario, run_scenario
from .adiabatic import resonance_check

#: frequency-difference band (rad/s) below which the co-rotating cross
#: couplings are kept (picture 'bs'); the plain rotating-wave picture drops
#: terms at |w1 - w2|, which is only valid well outside this band.
NEAR_DEGENERATE_BAND = TWO_PI * 0.2e6

#: detuning tolerance (rad/s) for flagging the 2 w_j walk resonances, where
#: the two-mode-squeezing terms must be retained (picture 'full').
RESONANCE_TOL = TWO_PI * 2e3


@dataclass(frozen=True)
class SweepAxis:
    """One swept parameter: a path, its values, and optional linked rules.

    Paths: ``params.<field>``, ``schedule.<field>``, or the derived paths
    ``sigma`` (sets both pulse widths, and tau when ``tau_sigma_ratio`` is
    given), ``delta`` (mechanical frequency difference, moves omega2), and
    the shorthand ``alpha0``/``tau``/``kappa``/``temperature``.
    """

    path: str
    values: tuple
    scale: str = "linear"
    tau_sigma_ratio: float | None = None

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if len(vals) < 2:
            raise InvalidArgumentError("axis needs at least 2 values")
        diffs = np.diff(vals)
        if not (np.all(diffs > 0) or np.all(diffs < 0)):
            raise InvalidArgumentError("axis values must be strictly monotone")
        if self.scale not in ("linear", "log"):
            raise InvalidArgumentError(f"unknown scale {self.scale!r}")
        if self.scale == "log" and min(vals) <= 0:
            raise InvalidArgumentError("log axis needs positive values")
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class SweepResult:
    axes: tuple[SweepAxis, ...]
    fields: dict
    failures: tuple = ()


_SHORTHAND = {
    "alpha0": "schedule.alpha0",
    "tau": "schedule.tau",
    "kappa": "params.kappa",
    "temperature": "params.temperature",
    "omega1": "params.omega1",
    "omega2": "params.omega2",
}


def _retuned(params: SystemParams, **updates) -> SystemParams:
    """Replace params fields, keeping resonant detunings locked to omegas."""
    lock1 = params.delta1 == params.omega1
    lock2 = params.delta2 == params.omega2
    new = replace(params, **updates)
    relock = {}
    if lock1 and "delta1" not in updates:
        relock["delta1"] = new.omega1
    if lock2 and "delta2" not in updates:
        relock["delta2"] = new.omega2
    return replace(new, **relock) if relock else new


def apply_axis_value(scenario: Scenario, axis: SweepAxis, value: float) -> Scenario:
    """Bind one axis value onto a scenario, applying linked-parameter rules."""
    path = _SHORTHAND.get(axis.path, axis.path)
    if path == "sigma":
        updates = {"sigma1": value, "sigma2": value}
        if axis.tau_sigma_ratio is not None:
            updates["tau"] = value / axis.tau_sigma_ratio
        return replace(scenario, schedule=_update_schedules(scenario, updates))
    if path == "delta":
        params = _retuned(scenario.params, omega2=scenario.params.omega1 + value)
        return replace(scenario, params=params)
    if path.startswith("params."):
        name = path.split(".", 1)[1]
        if name not in SystemParams.__dataclass_fields__:
            raise ConfigError(f"unknown parameter path {axis.path!r}")
        return replace(scenario, params=_retuned(scenario.params, **{name: value}))
    if path.startswith("schedule."):
        name = path.split(".", 1)[1]
        if name not in DriveSchedule.__dataclass_fields__:
            raise ConfigError(f"unknown parameter path {axis.path!r}")
        return replace(scenario, schedule=_update_schedules(scenario, {name: value}))
    raise ConfigError(f"unknown parameter path {axis.path!r}")


def _update_schedules(scenario: Scenario, updates: dict):
    scheds = scenario.schedules()
    new = tuple(replace(s, **updates) for s in scheds)
    return new[0] if len(new) == 1 else new


def _validate_path(path: str) -> None:
    resolved = _SHORTHAND.get(path, path)
    if resolved in ("sigma", "delta"):
        return
    if resolved.startswith("params."):
        if resolved.split(".", 1)[1] in SystemParams.__dataclass_fields__:
            return
    if resolved.startswith("schedule."):
        if resolved.split(".", 1)[1] in DriveSchedule.__dataclass_fields__:
            return
    raise ConfigError(f"unknown parameter path {path!r}")


def pick_picture(scenario: Scenario) -> str:
    """Per-cell Hamiltonian picture.

    Near frequency degeneracy the rotating-wave picture is blind to the
    cross couplings that dominate the physics, so cells inside the
    near-degenerate band run with the beam-splitter-complete picture; cells
    on a 2 w_j walk resonance additionally need the two-mode-squeezing
    terms and run the full picture.  Elsewhere the plain rotating-wave
    picture is accurate and far cheaper.
    """
    p = scenario.params
    if resonance_check(p.delta1, p.delta2, p.omega1, p.omega2, RESONANCE_TOL) != "none":
        return "full"
    if abs(p.omega1 - p.omega2) < NEAR_DEGENERATE_BAND:
        return "bs"
    return "rwa"


_BLAS_LIMITER = None


def _limit_blas_threads():
    """Pin worker BLAS pools to one thread.

    Sweep cells multiply matrices far too small for intra-op threading;
    letting each worker spin a full BLAS pool multiplies CPU time without
    reducing wall time.
    """
    global _BLAS_LIMITER
    try:
        import threadpoolctl

        _BLAS_LIMITER = threadpoolctl.threadpool_limits(1)
    except ImportError:
        pass


def _run_cell(args):
    idx, base, bindings, metrics, auto_picture = args
    try:
        scenario = base
        for axis, value in bindings:
            scenario = apply_axis_value(scenario, axis, value)
        if auto_picture:
            scenario = replace(scenario, picture=pick_picture(scenario))
        summary = run_scenario(scenario).summary
        return idx, {m: summary.get(m, math.nan) for m in metrics}, None
    except Exception as exc:  # failed cells are recorded, not fatal
        return idx, None, type(exc).__name__


def run_sweep(
    base: Scenario,
    axes: Sequence[SweepAxis],
    metrics: Sequence[str] = ("final_n2",),
    worker_count: int = 1,
    auto_picture: bool = True,
) -> SweepResult:
    """Run a scenario grid over one or two axes.

    ``metrics`` are summary keys of :func:`run_scenario` (for example
    ``final_n2``, ``fidelity``, ``peak_negativity``).  Cells run fully
    isolated; aggregation order is deterministic regardless of worker
    scheduling.
    """
    axes = tuple(axes)
    if len(axes) not in (1, 2):
        raise InvalidArgumentError("sweeps support 1 or 2 axes")
    for axis in axes:
        # unknown parameter paths are config errors up front; value errors
        # inside a cell are recorded per-cell instead
        _validate_path(axis.path)
    shape = tuple(len(a.values) for a in axes)
    jobs = []
    for idx in np.ndindex(*shape):
        bindings = tuple((axis, axis.values[i]) for axis, i in zip(axes, idx))
        jobs.append((idx, base, bindings, tuple(metrics), auto_picture))

    grids = {m: np.full(shape, np.nan) for m in metrics}
    failures = []
    workers = min(worker_count, os.cpu_count() or 1)
    if workers > 1:
        chunk = max(1, len(jobs) // (8 * workers))
        with ProcessPoolExecutor(
            max_workers=workers, initializer=_limit_blas_threads
        ) as pool:
            outcomes = list(pool.map(_run_cell, jobs, chunksize=chunk))
    else:
        outcomes = [_run_cell(j) for j in jobs]
    for idx, values, error in outcomes:
        if error is not None:
            failures.append((idx, error))
            continue
        for m in metrics:
            grids[m][idx] = values[m]
    return SweepResult(axes=axes, fields=grids, failures=tuple(failures))


def degenerate_mode_diagnostics(scenario: Scenario):
    """Collective-population time series at exact frequency degeneracy.

    Requires omega1 == omega2.  Runs the scenario in the requested (by
    default full) picture with the collective metrics attached: the
    antisymmetric combination decouples from the cavity and its population
    stays constant, while the symmetric one Rabi-oscillates with the cavity
    and decays at the cavity linewidth.
    """
    p = scenario.params
    if p.omega1 != p.omega2:
        raise InvalidArgumentError("diagnostics require omega1 == omega2")
    metrics = tuple(dict.fromkeys(scenario.metrics + ("n_plus", "n_minus", "n1", "n2")))
    return run_scenario(replace(scenario, metrics=metrics))


# ---------------------------------------------------------------------------
# marching-squares contour extraction

_EDGES = {0: (0, 1), 1: (1, 2), 2: (2, 3), 3: (3, 0)}  # corner index pairs
_CASES = {
    1: [(3, 0)], 2: [(0, 1)], 3: [(3, 1)], 4: [(1, 2)],
    6: [(0, 2)], 7: [(3, 2)], 8: [(2, 3)], 9: [(2, 0)],
    11: [(2, 1)], 12: [(1, 3)], 13: [(1, 0)], 14: [(0, 3)],
}


def extract_contours(
    result: SweepResult, field_name: str, levels: Sequence[float]
) -> dict:
    """Iso-level polylines of a 2-D sweep field, in axis coordinates.

    Standard marching squares with linear interpolation (in log coordinates
    for log-scaled axes); saddle cells are disambiguated by the cell-center
    mean.  Returns {level: [polyline arrays of shape (k, 2)]}; polylines
    are closed loops or terminate on the grid boundary.  Cells touching a
    NaN are skipped.
    """
    if len(result.axes) != 2:
        raise InvalidArgumentError("contour extraction needs a 2-D sweep")
    if field_name not in result.fields:
        raise InvalidArgumentError(f"unknown field {field_name!r}")
    f = result.fields[field_name]
    xs = _axis_coords(result.axes[0])
    ys = _axis_coords(result.axes[1])
    out = {}
    for level in levels:
        segments = []
        for i in range(f.shape[0] - 1):
            for j in range(f.shape[1] - 1):
                corners = (
                    (xs[i], ys[j], f[i, j]),
                    (xs[i + 1], ys[j], f[i + 1, j]),
                    (xs[i + 1], ys[j + 1], f[i + 1, j + 1]),
                    (xs[i], ys[j + 1], f[i, j + 1]),
                )
                if any(math.isnan(c[2]) for c in corners):
                    continue
                segments.extend(_cell_segments(corners, level))
        out[level] = [_restore_scale(p, result.axes) for p in _chain(segments)]
    return out


def _axis_coords(axis: SweepAxis) -> np.ndarray:
    v = np.asarray(axis.values, dtype=float)
    return np.log(v) if axis.scale == "log" else v


def _restore_scale(polyline: np.ndarray, axes) -> np.ndarray:
    p = polyline.copy()
    if axes[0].scale == "log":
        p[:, 0] = np.exp(p[:, 0])
    if axes[1].scale == "log":
        p[:, 1] = np.exp(p[:, 1])
    return p


def _cell_segments(corners, level):
    case = 0
    for bit, (_, _, val) in enumerate(corners):
        if val >= level:
            case |= 1 << bit
    if case in (0, 15):
        return []
    if case in (5, 10):
        center = sum(c[2] for c in corners) / 4.0
        # center above the level connects the high corners diagonally
        if (center >= level) == (case == 5):
            pairs = [(3, 0), (1, 2)] if case == 5 else [(0, 1), (2, 3)]
        else:
            pairs = [(0, 1), (2, 3)] if case == 5 else [(3, 0), (1, 2)]
    else:
        pairs = _CASES[case]
    segs = []
    for e1, e2 in pairs:
        segs.append((_edge_point(corners, e1, level), _edge_point(corners, e2, level)))
    return segs


def _edge_point(corners, edge, level):
    i, j = _EDGES[edge]
    x1, y1, v1 = corners[i]
    x2, y2, v2 = corners[j]
    if v1 == v2:
        t = 0.5
    else:
        t = (level - v1) / (v2 - v1)
    t = min(1.0, max(0.0, t))
    return (x1 + t * (x2 - x1), y1 + t * (y2 - y1))


def _chain(segments) -> list[np.ndarray]:
    """Join segments into polylines by matching endpoints."""
    remaining = [tuple(map(tuple, s)) for s in segments]
    polylines = []
    tol = 1e-12

    def close(p, q):
        return abs(p[0] - q[0]) <= tol * (1 + abs(p[0])) and abs(p[1] - q[1]) <= tol * (
            1 + abs(p[1])
        )

    while remaining:
        a, b = remaining.pop(0)
        line = [a, b]
        grew = True
        while grew:
            grew = False
            for k, (p, q) in enumerate(remaining):
                if close(line[-1], p):
                    line.append(q)
                elif close(line[-1], q):
                    line.append(p)
                elif close(line[0], q):
                    line.insert(0, p)
                elif close(line[0], p):
                    line.insert(0, q)
                else:
                    continue
                remaining.pop(k)
                grew = True
                break
        polylines.append(np.asarray(line))
    return polylines
