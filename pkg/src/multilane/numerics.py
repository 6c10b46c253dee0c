"""Godunov interface flux, lane-change source and the two split half-steps.

State arrays have shape ``(M, K)``: row ``j - 1`` holds lane ``j``.
Out-of-window ghost cells copy the outermost cell of each lane.
"""

from __future__ import annotations

import enum

import numpy as np

from .grid import Grid
from .model import (
    DOMAIN_TOL,
    DensityDomainError,
    LaneTopology,
    ModelError,
    Side,
    SideProfiles,
    check_density,
)


class CFLViolation(ModelError):
    pass


class InterfaceKind(enum.Enum):
    INTERIOR_LEFT = "interior-left"
    INTERIOR_RIGHT = "interior-right"
    JUNCTION = "junction"


def godunov_flux(kind: InterfaceKind, j: int, u, w, profiles: SideProfiles):
    """Numerical flux on lane ``j`` through an interface with left state ``u`` and right state ``w``.

    Interior interfaces use the classical unimodal Godunov formula
    ``min(f(min(u, theta)), f(max(w, theta)))``; the junction takes the
    upstream demand from the left flux and the downstream supply from the right one.
    """
    u = check_density(u)
    w = check_density(w)
    if kind is InterfaceKind.JUNCTION:
        fl, fr = profiles.get(Side.LEFT, j), profiles.get(Side.RIGHT, j)
    else:
        side = Side.LEFT if kind is InterfaceKind.INTERIOR_LEFT else Side.RIGHT
        fl = fr = profiles.get(side, j)
    return np.minimum(fl(np.minimum(u, fl.theta)), fr(np.maximum(w, fr.theta)))


def source_rate(side: Side, j: int, u, w, topology: LaneTopology, profiles: SideProfiles):
    """Lane-change rate from lane ``j`` (density ``u``) to lane ``j + 1`` (density ``w``).

    The rate is upwinded on the lane losing vehicles: with ``dv = v_{j+1}(w) - v_j(u)``
    it is ``dv * u`` if ``dv >= 0`` and ``dv * w`` otherwise. Returns 0 for
    ``j`` outside ``1 .. M-1`` and for cut indices.
    """
    u = check_density(u)
    w = check_density(w)
    if j < 1 or j >= topology.M or j in topology.cuts(side):
        return 0.0 * (np.asarray(u) + np.asarray(w))
    dv = profiles.get(side, j + 1).law(w) - profiles.get(side, j).law(u)
    return np.where(dv >= 0.0, dv * u, dv * w)[()]


def interface_fluxes(rho: np.ndarray, grid: Grid, profiles: SideProfiles) -> np.ndarray:
    """Fluxes through all ``K + 1`` interfaces of every lane, shape ``(M, K + 1)``."""
    M, K = rho.shape
    J = grid.junction
    out = np.empty((M, K + 1))
    for r in range(M):
        ext = np.empty(K + 2)
        ext[1:-1] = rho[r]
        ext[0], ext[-1] = rho[r, 0], rho[r, -1]
        u, w = ext[:-1], ext[1:]
        fl, fr = profiles.left[r], profiles.right[r]
        out[r, :J] = np.minimum(fl(np.minimum(u[:J], fl.theta)), fl(np.maximum(w[:J], fl.theta)))
        out[r, J + 1 :] = np.minimum(
            fr(np.minimum(u[J + 1 :], fr.theta)), fr(np.maximum(w[J + 1 :], fr.theta))
        )
        out[r, J] = min(fl(min(u[J], fl.theta)), fr(max(w[J], fr.theta)))
    return out


def transport_step(rho: np.ndarray, grid: Grid, profiles: SideProfiles, dt: float | None = None,
                   fluxes: np.ndarray | None = None) -> np.ndarray:
    """Conservative Godunov update of every lane over one step of length ``dt``."""
    dt = grid.dt if dt is None else dt
    lam = dt / grid.dx
    v_c1 = _c1_norm(profiles)
    if lam * v_c1 > 0.5 * (1.0 + 1e-12):
        raise CFLViolation(
            f"CFL violated: lambda*V = {lam * v_c1:.6g} > 1/2 (need lambda*V <= 1/2)"
        )
    if not np.all(np.isfinite(rho)):
        raise DensityDomainError("non-finite density in state")
    if fluxes is None:
        fluxes = interface_fluxes(rho, grid, profiles)
    return rho - lam * (fluxes[:, 1:] - fluxes[:, :-1])


def source_rates(rho: np.ndarray, grid: Grid, topology: LaneTopology,
                 profiles: SideProfiles) -> np.ndarray:
    """Rates ``S_0 .. S_M`` at every cell, shape ``(M + 1, K)``; rows 0 and M are zero."""
    M, K = rho.shape
    S = np.zeros((M + 1, K))
    for side in Side:
        sl = grid.side_slice(side)
        cuts = topology.cuts(side)
        for j in range(1, M):
            if j in cuts:
                continue
            u, w = rho[j - 1, sl], rho[j, sl]
            dv = profiles.get(side, j + 1).law(w) - profiles.get(side, j).law(u)
            S[j, sl] = np.where(dv >= 0.0, dv * u, dv * w)
    return S


def source_step(rho_half: np.ndarray, grid: Grid, topology: LaneTopology,
                profiles: SideProfiles, dt: float | None = None) -> np.ndarray:
    """Explicit Euler update of the lane-change terms, all lanes from the same state.

    Raises :class:`DensityDomainError` when the result leaves [0, 1] by more
    than the rounding tolerance; the result is returned unclamped otherwise.
    """
    dt = grid.dt if dt is None else dt
    S = source_rates(rho_half, grid, topology, profiles)
    out = rho_half + dt * (S[:-1] - S[1:])
    lo, hi = out.min(), out.max()
    if lo < -DOMAIN_TOL or hi > 1.0 + DOMAIN_TOL or not np.isfinite(lo + hi):
        raise DensityDomainError(
            f"density left [0, 1] after source step (min={lo:.17g}, max={hi:.17g}); "
            "check the CFL condition"
        )
    return out


def _c1_norm(profiles: SideProfiles) -> float:
    laws = list(profiles.laws())
    return max(law.sup_speed for law in laws) + max(law.derivative_bound for law in laws)
