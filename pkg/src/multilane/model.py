"""Speed laws, flux profiles and lane topology.

Densities are normalised to [0, 1]. Each lane ``j`` (1-based) carries its
own speed law on each side of the junction at ``x = 0``; the flux is
``f(u) = u * v(u)`` and is assumed unimodal with its maximum at the critical
density ``theta``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

DOMAIN_TOL = 1e-12
_N_SAMPLES = 10_000
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class ModelError(ValueError):
    """Invalid model data (speed law, topology, profiles)."""


class DensityDomainError(ModelError):
    """A density fell outside [0, 1] beyond the rounding tolerance."""


class Side(enum.Enum):
    LEFT = "left"
    RIGHT = "right"

    @property
    def fictive_value(self) -> float:
        # empty padding lanes upstream, saturated ones downstream
        return 0.0 if self is Side.LEFT else 1.0


def check_density(u, tol: float = DOMAIN_TOL):
    """Return ``u`` clipped to [0, 1], raising if it is out of range by more than ``tol``."""
    arr = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DensityDomainError(f"non-finite density: {u!r}")
    if arr.size and (arr.min() < -tol or arr.max() > 1.0 + tol):
        raise DensityDomainError(
            f"density outside [0, 1]: min={arr.min():.17g}, max={arr.max():.17g}"
        )
    out = np.clip(arr, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


# --------------------------------------------------------------------------
# Speed laws
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class LinearSpeed:
    """Greenshields law ``v(u) = v_max * (1 - u)``."""

    v_max: float

    def __post_init__(self):
        if not (math.isfinite(self.v_max) and self.v_max > 0):
            raise ModelError(f"free-flow speed must be positive, got {self.v_max!r}")

    def __call__(self, u):
        return self.v_max * (1.0 - u)

    @property
    def sup_speed(self) -> float:
        return self.v_max

    @property
    def derivative_bound(self) -> float:
        return self.v_max


@dataclass(frozen=True, eq=False)
class CustomSpeed:
    """Arbitrary strictly decreasing speed law.

    ``func`` must accept numpy arrays. ``derivative_bound`` is an upper bound
    for ``|v'|`` on [0, 1]; it enters the CFL condition, so an optimistic
    value breaks the bounds guarantees of the scheme.
    """

    func: Callable[[np.ndarray], np.ndarray]
    derivative_bound: float
    name: str = "custom"
    table: tuple | None = field(default=None, compare=False)
    _sup: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (math.isfinite(self.derivative_bound) and self.derivative_bound >= 0):
            raise ModelError("derivative bound must be a finite nonnegative number")
        s = np.linspace(0.0, 1.0, _N_SAMPLES)
        v = np.asarray(self.func(s), dtype=float)
        if v.shape != s.shape or not np.all(np.isfinite(v)):
            raise ModelError(f"speed law {self.name!r} does not evaluate elementwise on [0, 1]")
        if not np.all(np.diff(v) < 0):
            raise ModelError(f"speed law {self.name!r} is not strictly decreasing")
        if abs(v[-1]) > DOMAIN_TOL:
            raise ModelError(f"speed law {self.name!r} must vanish at u=1, got {v[-1]!r}")
        if not v[0] > 0:
            raise ModelError(f"speed law {self.name!r} must be positive at u=0")
        object.__setattr__(self, "_sup", float(v[0]))

    def __call__(self, u):
        return self.func(u)

    def __eq__(self, other):
        if not isinstance(other, CustomSpeed):
            return NotImplemented
        if self.table is not None and other.table is not None:
            return self.table == other.table and self.name == other.name
        return self.func is other.func and self.derivative_bound == other.derivative_bound

    def __hash__(self):
        return hash((self.name, self.table if self.table is not None else id(self.func)))

    @property
    def sup_speed(self) -> float:
        return self._sup

    @classmethod
    def from_table(cls, points: Sequence[Sequence[float]], name: str = "table") -> "CustomSpeed":
        """Piecewise-linear law through ``(u, v)`` points; ``u`` must span [0, 1]."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
            raise ModelError("speed table must be a list of [u, v] pairs")
        us, vs = pts[:, 0], pts[:, 1]
        if us[0] != 0.0 or us[-1] != 1.0 or not np.all(np.diff(us) > 0):
            raise ModelError("speed table abscissae must increase from 0 to 1")
        slope = float(np.max(np.abs(np.diff(vs) / np.diff(us))))

        def interp(u, _us=us, _vs=vs):
            return np.interp(u, _us, _vs)

        return cls(interp, slope, name, table=tuple(map(tuple, pts.tolist())))


SpeedLaw = LinearSpeed | CustomSpeed


def eval_speed(law: SpeedLaw, u):
    return law(check_density(u))


# --------------------------------------------------------------------------
# Flux profiles
# --------------------------------------------------------------------------


def _golden_max(f, a: float, b: float, tol: float = 1e-12) -> float:
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


@dataclass(frozen=True)
class FluxProfile:
    """Flux ``f(u) = u v(u)`` of one lane on one side, with its critical density."""

    law: SpeedLaw
    theta: float = field(init=False)
    f_max: float = field(init=False)

    def __post_init__(self):
        if isinstance(self.law, LinearSpeed):
            theta = 0.5
        else:
            theta = _critical_density_numeric(self.law)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "f_max", float(self(theta)))

    def __call__(self, u):
        return u * self.law(u)


def _critical_density_numeric(law: SpeedLaw) -> float:
    s = np.linspace(0.0, 1.0, _N_SAMPLES)
    f = s * np.asarray(law(s), dtype=float)
    i = int(np.argmax(f))
    # tiny slack for rounding on flat stretches
    slack = 1e-14 * max(1.0, float(f[i]))
    if np.any(np.diff(f[: i + 1]) < -slack) or np.any(np.diff(f[i:]) > slack):
        raise ModelError("flux u*v(u) is not unimodal on [0, 1]")
    lo, hi = s[max(i - 1, 0)], s[min(i + 1, len(s) - 1)]
    return _golden_max(lambda x: float(x * law(x)), float(lo), float(hi))


def eval_flux(profile: FluxProfile, u):
    return profile(check_density(u))


def critical_density(profile: FluxProfile) -> float:
    return profile.theta


def side_of_cell(k: int) -> Side:
    """Side of cell ``k``, where cell ``k`` spans ``[k dx, (k+1) dx]`` and ``x = 0`` is an interface."""
    return Side.LEFT if k <= -1 else Side.RIGHT


# --------------------------------------------------------------------------
# Lane topology
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class LaneTopology:
    """Lane count, active lanes per side and coupling cuts per side.

    A cut ``j`` on a side sets the lane-change rate between lanes ``j`` and
    ``j + 1`` to zero on that side. Fictive lanes must be cut off from the
    active ones, otherwise the padding would leak vehicles.
    """

    M: int
    active_left: frozenset
    active_right: frozenset
    cut_left: frozenset = frozenset()
    cut_right: frozenset = frozenset()

    def __post_init__(self):
        for name in ("active_left", "active_right", "cut_left", "cut_right"):
            object.__setattr__(self, name, frozenset(int(j) for j in getattr(self, name)))
        if self.M < 1:
            raise ModelError(f"lane count must be >= 1, got {self.M}")
        lanes = set(range(1, self.M + 1))
        for side in Side:
            active = self.active(side)
            if not active:
                raise ModelError(f"no active lane on the {side.value} side")
            if not active <= lanes:
                raise ModelError(f"active_{side.value} {sorted(active)} not within 1..{self.M}")
            cuts = self.cuts(side)
            if not cuts <= set(range(1, self.M)):
                raise ModelError(f"cut_{side.value} {sorted(cuts)} not within 1..{self.M - 1}")
            for j in range(1, self.M):
                if (j in active) != (j + 1 in active) and j not in cuts:
                    raise ModelError(
                        f"lanes {j} and {j + 1} on the {side.value} side join an active "
                        f"and a fictive lane; add {j} to cut_{side.value}"
                    )

    def active(self, side: Side) -> frozenset:
        return self.active_left if side is Side.LEFT else self.active_right

    def cuts(self, side: Side) -> frozenset:
        return self.cut_left if side is Side.LEFT else self.cut_right

    def is_active(self, side: Side, j: int) -> bool:
        return j in self.active(side)

    def fictive(self, side: Side) -> list[int]:
        return [j for j in range(1, self.M + 1) if j not in self.active(side)]


@dataclass(frozen=True)
class SideProfiles:
    """Per-lane flux profiles left and right of the junction (index 0 is lane 1)."""

    left: tuple
    right: tuple

    def __post_init__(self):
        object.__setattr__(self, "left", tuple(self.left))
        object.__setattr__(self, "right", tuple(self.right))
        if len(self.left) != len(self.right) or not self.left:
            raise ModelError("left and right profile lists must be nonempty and of equal length")

    @property
    def M(self) -> int:
        return len(self.left)

    def side(self, side: Side) -> tuple:
        return self.left if side is Side.LEFT else self.right

    def get(self, side: Side, j: int) -> FluxProfile:
        return self.side(side)[j - 1]

    def laws(self) -> Iterable[SpeedLaw]:
        for p in self.left + self.right:
            yield p.law

    @classmethod
    def linear(cls, M: int, v_left, v_right) -> "SideProfiles":
        """Linear laws; scalars apply to every lane, sequences give one speed per lane."""
        vl = [v_left] * M if np.isscalar(v_left) else list(v_left)
        vr = [v_right] * M if np.isscalar(v_right) else list(v_right)
        if len(vl) != M or len(vr) != M:
            raise ModelError(f"expected {M} speeds per side")
        return cls(
            tuple(FluxProfile(LinearSpeed(float(v))) for v in vl),
            tuple(FluxProfile(LinearSpeed(float(v))) for v in vr),
        )
