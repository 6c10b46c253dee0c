"""Scenario definition, initial projection and the split time loop."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from . import diagnostics
from .grid import Grid
from .model import DOMAIN_TOL, LaneTopology, ModelError, Side, SideProfiles
from .numerics import CFLViolation, interface_fluxes, source_step, transport_step

Piece = tuple  # (a, b, rho) or (a, b, rho_a, rho_b); constant pieces may be unbounded

DEFAULT_WINDOW = (-2.0, 2.0)
DEFAULT_DX = 1.0 / 400.0
_EDGE_CELLS = 5


class ScenarioError(ModelError):
    pass


class BoundaryInterference(UserWarning):
    """Waves reached the artificial window boundary."""


def velocity_constants(profiles: SideProfiles) -> tuple[float, float]:
    """Return ``(V_max, V)``: the sup-norm of all speeds and the C1 norm ``sup|v| + sup|v'|``."""
    laws = list(profiles.laws())
    v_max = max(law.sup_speed for law in laws)
    return v_max, v_max + max(law.derivative_bound for law in laws)


def max_lambda(profiles: SideProfiles) -> float:
    """Largest ``dt/dx`` allowed by ``lambda * V <= 1/2``."""
    return 1.0 / (2.0 * velocity_constants(profiles)[1])


@dataclass(frozen=True)
class Scenario:
    """Everything needed for one run.

    ``initial[j - 1]`` is the list of pieces of lane ``j``: ``(a, b, rho)``
    for a constant or ``(a, b, rho_a, rho_b)`` for a linear ramp on a
    bounded interval.
    Pieces only need to cover the sides where the lane is active; fictive
    sides are filled with 0 (left) or 1 (right) and may not be given any
    other value.
    """

    topology: LaneTopology
    profiles: SideProfiles
    initial: tuple
    T: float = 1.0
    x_min: float = DEFAULT_WINDOW[0]
    x_max: float = DEFAULT_WINDOW[1]
    dx: float = DEFAULT_DX
    cfl_fraction: float = 1.0
    snapshot_times: tuple = ()
    name: str = ""

    def __post_init__(self):
        object.__setattr__(
            self, "initial", tuple(tuple(tuple(float(v) for v in p) for p in lane)
                                   for lane in self.initial)
        )
        object.__setattr__(self, "snapshot_times", tuple(float(t) for t in self.snapshot_times))
        if self.profiles.M != self.topology.M:
            raise ScenarioError(
                f"topology has {self.topology.M} lanes but {self.profiles.M} speed laws were given"
            )
        if len(self.initial) != self.topology.M:
            raise ScenarioError(f"initial data given for {len(self.initial)} of {self.topology.M} lanes")
        if not (self.T >= 0 and math.isfinite(self.T)):
            raise ScenarioError(f"horizon T must be finite and >= 0, got {self.T}")
        if not (0.0 < self.cfl_fraction <= 1.0):
            raise CFLViolation(
                f"cfl_fraction={self.cfl_fraction} outside (0, 1]: the scheme requires lambda*V <= 1/2"
            )
        for t in self.snapshot_times:
            if not 0.0 <= t <= self.T:
                raise ScenarioError(f"snapshot time {t} outside [0, T={self.T}]")
        self.grid()  # validates the window
        for j in range(1, self.topology.M + 1):
            self.pieces(j)

    def grid(self) -> Grid:
        return Grid(self.x_min, self.x_max, self.dx, self.cfl_fraction * max_lambda(self.profiles))

    def pieces(self, j: int) -> list[Piece]:
        """Validated ``(a, b, rho_a, rho_b)`` pieces of lane ``j`` clipped to the window.

        Fictive sides are filled in; constant pieces have ``rho_a == rho_b``.
        """
        lo, hi = self.x_min, self.x_max
        halves = ((Side.LEFT, lo, 0.0), (Side.RIGHT, 0.0, hi))
        spans = [(a0, b0, side.fictive_value, side.fictive_value)
                 for side, a0, b0 in halves if not self.topology.is_active(side, j)]
        for piece in self.initial[j - 1]:
            a, b, va, vb = _normalise_piece(j, piece)
            for side, a0, b0 in halves:
                if self.topology.is_active(side, j) or min(b, b0) <= max(a, a0):
                    continue
                if not va == vb == side.fictive_value:
                    raise ScenarioError(
                        f"lane {j} is fictive on the {side.value} side and must be "
                        f"{side.fictive_value:g} there"
                    )
                a, b = (max(a, 0.0), b) if side is Side.LEFT else (a, min(b, 0.0))
            a_c, b_c = max(a, lo), min(b, hi)
            if a_c < b_c:
                spans.append((a_c, b_c, _interp(a, b, va, vb, a_c), _interp(a, b, va, vb, b_c)))
        spans.sort()
        x = lo
        for a, b, _, _ in spans:
            if a > x + 1e-12 * max(1.0, abs(x)):
                raise ScenarioError(f"lane {j}: initial data leave [{x}, {a}] uncovered")
            if a < x - 1e-12 * max(1.0, abs(x)):
                raise ScenarioError(f"lane {j}: overlapping pieces near x={a}")
            x = b
        if x < hi - 1e-12 * max(1.0, abs(hi)):
            raise ScenarioError(f"lane {j}: initial data leave [{x}, {hi}] uncovered")
        return spans

    def with_(self, **changes) -> "Scenario":
        return replace(self, **changes)


def _normalise_piece(j: int, piece) -> tuple:
    if len(piece) == 3:
        a, b, va = piece
        vb = va
    elif len(piece) == 4:
        a, b, va, vb = piece
        if va != vb and not (math.isfinite(a) and math.isfinite(b)):
            raise ScenarioError(f"lane {j}: a linear piece needs a bounded interval")
    else:
        raise ScenarioError(f"lane {j}: a piece is (a, b, rho) or (a, b, rho_a, rho_b), got {piece!r}")
    if not a < b:
        raise ScenarioError(f"lane {j}: empty piece [{a}, {b}]")
    for v in (va, vb):
        if not 0.0 <= v <= 1.0:
            raise ScenarioError(f"lane {j}: density {v} outside [0, 1]")
    return a, b, va, vb


def _interp(a, b, va, vb, x):
    if va == vb:
        return va
    return va + (vb - va) * (x - a) / (b - a)


def project_initial(scenario: Scenario, grid: Grid | None = None) -> np.ndarray:
    """Exact cell averages of the piecewise initial data, shape ``(M, K)``."""
    grid = scenario.grid() if grid is None else grid
    edges = grid.interfaces
    rho = np.zeros((scenario.topology.M, grid.K))
    for j in range(1, scenario.topology.M + 1):
        exact = []
        for a, b, va, vb in scenario.pieces(j):
            if va == vb:
                exact.append(((edges[:-1] >= a) & (edges[1:] <= b), va))
            left = np.maximum(edges[:-1], a)
            overlap = np.clip(np.minimum(edges[1:], b) - left, 0.0, None)
            if va == vb:
                rho[j - 1] += va * overlap
            else:
                # linear piece: integral = length * value at the midpoint
                mid = left + 0.5 * overlap
                rho[j - 1] += overlap * (va + (vb - va) * (mid - a) / (b - a))
        rho[j - 1] /= grid.dx
        # cells inside one constant piece take its value without rounding
        for mask, v in exact:
            rho[j - 1, mask] = v
    # fictive cells are set exactly, never through a division
    for side in Side:
        for j in scenario.topology.fictive(side):
            rho[j - 1, grid.side_slice(side)] = side.fictive_value
    return np.clip(rho, 0.0, 1.0)


@dataclass
class StepRecord:
    n: int
    t: float
    dt: float
    l1_active: float
    rho_min: float
    rho_max: float
    increment: float
    inflow: float
    fictive_bad: int = 0
    entropy: dict | None = None  # c -> (max residual, cells above tolerance)

    @property
    def entropy_max(self) -> float | None:
        if not self.entropy:
            return None
        return max(v[0] for v in self.entropy.values())


@dataclass
class StepData:
    """Intermediate levels of one split step."""

    rho_n: np.ndarray
    rho_half: np.ndarray
    rho_next: np.ndarray
    dt: float
    fluxes: np.ndarray
    raw_min: float
    raw_max: float


@dataclass
class RunResult:
    scenario: Scenario
    grid: Grid
    v_max: float
    v_c1: float
    initial: np.ndarray
    snapshots: list = field(default_factory=list)
    records: list = field(default_factory=list)
    history: list | None = None
    boundary_ok: bool = True
    boundary_tv_change: float = 0.0

    @property
    def initial_norm(self) -> float:
        return diagnostics.active_l1_norm(self.initial, self.grid, self.scenario.topology)

    @property
    def final(self) -> np.ndarray:
        return self.snapshots[-1][1]

    def snapshot_at(self, t: float) -> np.ndarray:
        times = np.array([s[0] for s in self.snapshots])
        return self.snapshots[int(np.argmin(np.abs(times - t)))][1]


def advance(rho: np.ndarray, grid: Grid, scenario: Scenario, dt: float | None = None) -> StepData:
    """One transport half-step followed by one source half-step, with clamping."""
    dt = grid.dt if dt is None else dt
    fluxes = interface_fluxes(rho, grid, scenario.profiles)
    half = transport_step(rho, grid, scenario.profiles, dt, fluxes=fluxes)
    raw = source_step(half, grid, scenario.topology, scenario.profiles, dt)
    lo, hi = float(raw.min()), float(raw.max())
    nxt = np.clip(raw, 0.0, 1.0)
    return StepData(rho, half, nxt, dt, fluxes, lo, hi)


def step(rho: np.ndarray, grid: Grid, scenario: Scenario, dt: float | None = None) -> np.ndarray:
    return advance(rho, grid, scenario, dt).rho_next


def _boundary_inflow(data: StepData, topology: LaneTopology) -> float:
    """Net vehicles entering the window through its two ends during the step (active lanes)."""
    f = data.fluxes
    left = [j - 1 for j in topology.active_left]
    right = [j - 1 for j in topology.active_right]
    return data.dt * (math.fsum(f[left, 0]) - math.fsum(f[right, -1]))


def _edge_tv(rho: np.ndarray) -> np.ndarray:
    return np.concatenate([np.abs(np.diff(rho[:, :_EDGE_CELLS], axis=1)).sum(axis=1),
                           np.abs(np.diff(rho[:, -_EDGE_CELLS:], axis=1)).sum(axis=1)])


def run(
    scenario: Scenario,
    *,
    keep_history: bool = False,
    entropy_c: Sequence[float] | None = None,
    observer: Callable[[StepData, int, float], None] | None = None,
) -> RunResult:
    """Integrate ``scenario`` up to ``T``.

    Snapshots are taken at ``t = 0``, at every requested time and at ``T``;
    the step preceding each of them is shortened to land exactly on it. With
    ``entropy_c`` the largest discrete entropy residual over those constants is
    logged per step. ``observer(data, n, t)`` sees every step.
    """
    grid = scenario.grid()
    topo = scenario.topology
    v_max, v_c1 = velocity_constants(scenario.profiles)
    rho = project_initial(scenario, grid)
    result = RunResult(scenario, grid, v_max, v_c1, rho.copy())
    result.snapshots.append((0.0, rho.copy()))
    if keep_history:
        result.history = [rho.copy()]
    edge0 = _edge_tv(rho)
    edge_change = 0.0
    cs = None if entropy_c is None else [float(c) for c in entropy_c]

    targets = sorted({t for t in scenario.snapshot_times if t > 0.0} | {scenario.T})
    t, n = 0.0, 0
    for target in targets:
        if target <= 0.0:
            continue
        seg_start, m = t, 0
        while t < target:
            remaining = target - t
            if remaining <= grid.dt * (1.0 + 1e-9):
                dt, t_new = remaining, target
            else:
                m += 1
                dt = grid.dt
                t_new = seg_start + m * grid.dt
            try:
                data = advance(rho, grid, scenario, dt)
            except ModelError as exc:
                raise type(exc)(f"step {n + 1} (t={t:.6g}): {exc}") from exc
            rec = StepRecord(
                n=n + 1,
                t=t_new,
                dt=dt,
                l1_active=diagnostics.active_l1_norm(data.rho_next, grid, topo),
                rho_min=data.raw_min,
                rho_max=data.raw_max,
                increment=diagnostics.active_l1_difference(data.rho_next, rho, grid, topo),
                inflow=_boundary_inflow(data, topo),
                fictive_bad=diagnostics.fictive_mismatches(data.rho_next, grid, topo),
            )
            if cs is not None:
                rec.entropy = {}
                for c in cs:
                    res = diagnostics.entropy_residuals(
                        data.rho_n, data.rho_half, data.rho_next, c, grid, scenario, dt)
                    rec.entropy[c] = (float(res.max()),
                                      int(np.count_nonzero(res > diagnostics.ENTROPY_TOL)))
            if observer is not None:
                observer(data, n + 1, t_new)
            rho = data.rho_next
            t, n = t_new, n + 1
            result.records.append(rec)
            if keep_history:
                result.history.append(rho.copy())
            edge_change = max(edge_change, float(np.max(np.abs(_edge_tv(rho) - edge0))))
        result.snapshots.append((t, rho.copy()))

    result.boundary_tv_change = edge_change
    result.boundary_ok = edge_change < 1e-8
    if not result.boundary_ok:
        warnings.warn(
            f"{scenario.name or 'scenario'}: total variation near the window edges changed by "
            f"{edge_change:.3g}; waves reached the artificial boundary",
            BoundaryInterference,
            stacklevel=2,
        )
    return result


def check_bounds(rho: np.ndarray, tol: float = DOMAIN_TOL) -> bool:
    return bool(rho.min() >= -tol and rho.max() <= 1.0 + tol)
