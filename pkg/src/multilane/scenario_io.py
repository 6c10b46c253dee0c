"""JSON scenario files, bundled scenarios and CSV/manifest output.

Scenario file layout::

    {
      "name": "s31_2to3",
      "lanes": {"M": 3, "active_left": [1, 2], "active_right": [1, 2, 3],
                "cut_left": [2], "cut_right": []},
      "speeds": {"left": [1.5, 1.5, 1.5], "right": [1, 1, 1]},
      "initial": [{"lane": 1, "pieces": [{"from": null, "to": null, "rho": 0.7}]}, ...],
      "numerics": {"x_min": -2, "x_max": 2, "dx": 0.0025, "cfl_fraction": 1,
                   "T": 1, "snapshot_times": []}
    }

A speed entry is a number (linear law with that free-flow speed) or
``{"table": [[u, v], ...], "name": ...}`` (piecewise-linear law). A piece
with ``"rho": [ra, rb]`` is a linear ramp; ``null`` bounds mean unbounded.
"""

from __future__ import annotations

import json
import math
import os
from importlib import resources
from pathlib import Path

import numpy as np

from . import diagnostics
from .model import CustomSpeed, FluxProfile, LaneTopology, LinearSpeed, ModelError, SideProfiles
from .solver import RunResult, Scenario, ScenarioError, max_lambda, velocity_constants


class ScenarioFileError(ScenarioError):
    """A scenario file could not be parsed; the message names the location."""


# --------------------------------------------------------------------------
# Parsing
# --------------------------------------------------------------------------


def _need(obj: dict, key: str, where: str):
    if not isinstance(obj, dict):
        raise ScenarioFileError(f"{where}: expected an object")
    if key not in obj:
        raise ScenarioFileError(f"{where}.{key}: missing field")
    return obj[key]


def _number(x, where: str, allow_null: bool = False) -> float:
    if x is None and allow_null:
        return math.nan
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ScenarioFileError(f"{where}: expected a number, got {x!r}")
    return float(x)


def _int_list(x, where: str) -> list[int]:
    if not isinstance(x, list) or not all(isinstance(v, int) and not isinstance(v, bool) for v in x):
        raise ScenarioFileError(f"{where}: expected a list of lane indices")
    return x


def _speed(entry, where: str):
    if isinstance(entry, dict):
        table = _need(entry, "table", where)
        try:
            return CustomSpeed.from_table(table, name=entry.get("name", "table"))
        except ModelError as exc:
            raise ScenarioFileError(f"{where}: {exc}") from exc
    try:
        return LinearSpeed(_number(entry, where))
    except ModelError as exc:
        raise ScenarioFileError(f"{where}: {exc}") from exc


def scenario_from_dict(data: dict, source: str = "<scenario>") -> Scenario:
    lanes = _need(data, "lanes", source)
    M = lanes.get("M")
    if not isinstance(M, int) or isinstance(M, bool):
        raise ScenarioFileError(f"{source}.lanes.M: expected an integer")
    try:
        topo = LaneTopology(
            M,
            _int_list(_need(lanes, "active_left", f"{source}.lanes"), f"{source}.lanes.active_left"),
            _int_list(_need(lanes, "active_right", f"{source}.lanes"), f"{source}.lanes.active_right"),
            _int_list(lanes.get("cut_left", []), f"{source}.lanes.cut_left"),
            _int_list(lanes.get("cut_right", []), f"{source}.lanes.cut_right"),
        )
    except ModelError as exc:
        raise ScenarioFileError(f"{source}.lanes: {exc}") from exc

    speeds = _need(data, "speeds", source)
    sides = {}
    for side in ("left", "right"):
        entries = _need(speeds, side, f"{source}.speeds")
        if not isinstance(entries, list) or len(entries) != M:
            raise ScenarioFileError(f"{source}.speeds.{side}: expected {M} entries")
        try:
            sides[side] = [FluxProfile(_speed(e, f"{source}.speeds.{side}[{i}]"))
                           for i, e in enumerate(entries)]
        except ScenarioFileError:
            raise
        except ModelError as exc:
            raise ScenarioFileError(f"{source}.speeds.{side}: {exc}") from exc
    profiles = SideProfiles(sides["left"], sides["right"])

    initial_raw = _need(data, "initial", source)
    if not isinstance(initial_raw, list):
        raise ScenarioFileError(f"{source}.initial: expected a list")
    initial: list = [[] for _ in range(M)]
    for i, item in enumerate(initial_raw):
        where = f"{source}.initial[{i}]"
        lane = _need(item, "lane", where)
        if not isinstance(lane, int) or not 1 <= lane <= M:
            raise ScenarioFileError(f"{where}.lane: expected a lane index in 1..{M}")
        for p, piece in enumerate(_need(item, "pieces", where)):
            pw = f"{where}.pieces[{p}]"
            a = _number(piece.get("from"), f"{pw}.from", allow_null=True)
            b = _number(piece.get("to"), f"{pw}.to", allow_null=True)
            a = -math.inf if math.isnan(a) else a
            b = math.inf if math.isnan(b) else b
            rho = _need(piece, "rho", pw)
            if isinstance(rho, list):
                if len(rho) != 2:
                    raise ScenarioFileError(f"{pw}.rho: a ramp is [rho_from, rho_to]")
                initial[lane - 1].append((a, b, _number(rho[0], f"{pw}.rho[0]"),
                                          _number(rho[1], f"{pw}.rho[1]")))
            else:
                initial[lane - 1].append((a, b, _number(rho, f"{pw}.rho")))

    num = data.get("numerics", {})
    kwargs = {}
    for key in ("x_min", "x_max", "dx", "cfl_fraction", "T"):
        if key in num:
            kwargs[key] = _number(num[key], f"{source}.numerics.{key}")
    if "snapshot_times" in num:
        kwargs["snapshot_times"] = tuple(
            _number(t, f"{source}.numerics.snapshot_times[{i}]")
            for i, t in enumerate(num["snapshot_times"])
        )
    try:
        return Scenario(topo, profiles, initial, name=data.get("name", ""), **kwargs)
    except ModelError as exc:
        raise ScenarioFileError(f"{source}: {exc}") from exc


def parse_scenario(path) -> Scenario:
    """Read a scenario file (path or bundled name such as ``s31``)."""
    path = resolve_scenario(path)
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioFileError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return scenario_from_dict(data, source=Path(path).name)


def _bound(x: float):
    return None if math.isinf(x) else x


def scenario_to_dict(sc: Scenario) -> dict:
    topo = sc.topology

    def speed(p: FluxProfile):
        law = p.law
        if isinstance(law, LinearSpeed):
            return law.v_max
        if law.table is None:
            raise ModelError("only linear and table speed laws can be serialised")
        return {"table": [list(r) for r in law.table], "name": law.name}

    initial = []
    for j, pieces in enumerate(sc.initial, start=1):
        out = []
        for piece in pieces:
            rho = piece[2] if len(piece) == 3 else [piece[2], piece[3]]
            out.append({"from": _bound(piece[0]), "to": _bound(piece[1]), "rho": rho})
        initial.append({"lane": j, "pieces": out})
    return {
        "name": sc.name,
        "lanes": {
            "M": topo.M,
            "active_left": sorted(topo.active_left),
            "active_right": sorted(topo.active_right),
            "cut_left": sorted(topo.cut_left),
            "cut_right": sorted(topo.cut_right),
        },
        "speeds": {"left": [speed(p) for p in sc.profiles.left],
                   "right": [speed(p) for p in sc.profiles.right]},
        "initial": initial,
        "numerics": {
            "x_min": sc.x_min, "x_max": sc.x_max, "dx": sc.dx,
            "cfl_fraction": sc.cfl_fraction, "T": sc.T,
            "snapshot_times": list(sc.snapshot_times),
        },
    }


def write_scenario(sc: Scenario, path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(sc), indent=2) + "\n")


# --------------------------------------------------------------------------
# Bundled scenarios
# --------------------------------------------------------------------------


def bundled_dir():
    return resources.files("multilane") / "scenarios"


def list_bundled() -> list[str]:
    return sorted(p.name[:-5] for p in bundled_dir().iterdir() if p.name.endswith(".json"))


def resolve_scenario(name) -> str:
    """A path to an existing file, or a bundled scenario by full name or unique prefix."""
    name = os.fspath(name)
    if os.path.exists(name):
        return name
    stem = name[:-5] if name.endswith(".json") else name
    names = list_bundled()
    if stem in names:
        return str(bundled_dir() / f"{stem}.json")
    # prefix match; the shortest name is the base variant
    hits = sorted((n for n in names if n.startswith(stem)), key=len)
    if not hits:
        raise FileNotFoundError(f"no scenario file or bundled scenario named {name!r}")
    return str(bundled_dir() / f"{hits[0]}.json")


def load_bundled(name: str) -> Scenario:
    return parse_scenario(resolve_scenario(name))


# --------------------------------------------------------------------------
# Output
# --------------------------------------------------------------------------


def snapshot_csv(t: float, rho: np.ndarray, centers: np.ndarray) -> str:
    lines = ["t,x,lane,rho"]
    ts = f"{t:.17g}"
    xs = [f"{x:.17g}" for x in centers]
    for r, row in enumerate(rho, start=1):
        lines.extend(f"{ts},{x},{r},{v:.17g}" for x, v in zip(xs, row.tolist()))
    return "\n".join(lines) + "\n"


def run_summary(result: RunResult) -> dict:
    return {
        "bounds": diagnostics.bounds_check(result).as_dict(),
        "conservation": diagnostics.conservation_check(result).as_dict(),
        "fictive": diagnostics.fictive_check(result).as_dict(),
        "boundary_ok": result.boundary_ok,
        "boundary_tv_change": result.boundary_tv_change,
        "steps": len(result.records),
    }


def manifest(result: RunResult, files: list[str]) -> dict:
    g, sc = result.grid, result.scenario
    v_max, v_c1 = velocity_constants(sc.profiles)
    return {
        "scenario": scenario_to_dict(sc),
        "grid": {"x_min": g.x_min, "x_max": g.x_max, "dx": g.dx, "K": g.K,
                 "junction_interface": g.junction, "lambda": g.lam, "dt": g.dt},
        "constants": {"V_max": v_max, "V_C1": v_c1, "lambda_max": max_lambda(sc.profiles)},
        "snapshots": [{"index": i, "t": t, "file": f}
                      for i, ((t, _), f) in enumerate(zip(result.snapshots, files))],
        "diagnostics": run_summary(result),
    }


def write_run(result: RunResult, out_dir) -> list[Path]:
    """Write ``snapshot_<i>.csv`` files and ``manifest.json``; returns the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    centers = result.grid.centers
    paths = []
    for i, (t, rho) in enumerate(result.snapshots):
        p = out / f"snapshot_{i}.csv"
        with open(p, "w", newline="\n") as fh:
            fh.write(snapshot_csv(t, rho, centers))
        paths.append(p)
    man = out / "manifest.json"
    man.write_text(json.dumps(manifest(result, [p.name for p in paths]), indent=2) + "\n")
    return paths + [man]
