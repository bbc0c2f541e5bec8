"""Multi-well potentials with unit minimum and a finite limit at infinity.

The implemented family is an inverted max of Gaussians,

    V(x) = v_inf - (v_inf - 1) * max_i exp(-|x - z_i|^2 / w),

which attains min V = 1 exactly at the well centers z_i, satisfies
1 <= V(x) < v_inf everywhere, and tends to v_inf at infinity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DuplicateWells,
    FlatPotential,
    MissingOriginWell,
    NonPositiveEpsilon,
)
from .grid import Grid

__all__ = [
    "PotentialSpec",
    "WellGeometry",
    "ValidationReport",
    "make_multiwell",
    "default_geometry",
    "validate",
    "eval_scaled",
]


@dataclass(frozen=True, eq=False)
class PotentialSpec:
    """Inverted-Gaussian multi-well potential.

    wells has shape (l, dim); the first well must sit at the origin and
    v_inf must exceed the normalized minimum value 1.
    """

    wells: np.ndarray
    v_inf: float
    width: float

    @property
    def l(self) -> int:
        return self.wells.shape[0]

    @property
    def dim(self) -> int:
        return self.wells.shape[1]

    def __call__(self, points: np.ndarray) -> np.ndarray:
        """Evaluate V at points of shape (m, dim) or (dim,)."""
        pts = np.asarray(points, dtype=float)
        single = pts.ndim == 1
        pts = np.atleast_2d(pts)
        d2 = ((pts[:, None, :] - self.wells[None, :, :]) ** 2).sum(axis=2)
        bump = np.exp(-d2 / self.width).max(axis=1)
        vals = self.v_inf - (self.v_inf - 1.0) * bump
        return float(vals[0]) if single else vals


@dataclass(frozen=True)
class WellGeometry:
    """Localization radii: disjoint balls B_rho0(z_i) inside B_R0(0)."""

    rho0: float
    R0: float

    def check(self, wells: np.ndarray) -> list[str]:
        """Return a list of violated constraints (empty when valid)."""
        problems = []
        l = wells.shape[0]
        if l > 1:
            dmin = min(
                float(np.linalg.norm(wells[i] - wells[j]))
                for i in range(l)
                for j in range(i + 1, l)
            )
            if self.rho0 >= 0.5 * dmin:
                problems.append(
                    f"balls overlap: rho0={self.rho0} >= half min well distance {0.5 * dmin}"
                )
        rmax = float(np.linalg.norm(wells, axis=1).max())
        if rmax + self.rho0 >= self.R0:
            problems.append(
                f"union of balls not inside B_R0: max|z|+rho0={rmax + self.rho0} >= R0={self.R0}"
            )
        return problems


@dataclass
class ValidationReport:
    """Numerical audit of the potential hypotheses on a grid."""

    min_value: float
    min_ok: bool
    wells_in_domain: bool
    wells_resolved: bool
    upper_ok: bool
    tail_gap: float
    tail_ok: bool
    geometry_problems: list[str] = field(default_factory=list)

    @property
    def geometry_ok(self) -> bool:
        return not self.geometry_problems

    @property
    def passed(self) -> bool:
        return (
            self.min_ok
            and self.wells_in_domain
            and self.wells_resolved
            and self.upper_ok
            and self.tail_ok
            and self.geometry_ok
        )


def make_multiwell(wells, v_inf: float, width: float) -> PotentialSpec:
    """Construct the inverted-Gaussian potential with the given wells.

    wells: sequence of well centers; the first must be the origin.
    """
    W = np.asarray(wells, dtype=float)
    if W.ndim == 1:
        W = W[:, None]  # flat list of scalars means 1d well positions
    if W.ndim != 2 or W.shape[0] < 1 or W.shape[1] not in (1, 2):
        raise MissingOriginWell("wells must be a nonempty list of 1d or 2d centers")
    if np.any(W[0] != 0.0):
        raise MissingOriginWell(f"first well must be the origin, got {W[0]}")
    if v_inf <= 1.0:
        raise FlatPotential(f"need v_inf > 1 for a strict limit, got {v_inf}")
    if width <= 0.0:
        raise FlatPotential(f"need width > 0, got {width}")
    for i in range(W.shape[0]):
        for j in range(i + 1, W.shape[0]):
            if np.allclose(W[i], W[j], rtol=0.0, atol=0.0):
                raise DuplicateWells(f"wells {i} and {j} coincide at {W[i]}")
    W.setflags(write=False)
    return PotentialSpec(wells=W, v_inf=float(v_inf), width=float(width))


def default_geometry(spec: PotentialSpec) -> WellGeometry:
    """rho0 = quarter of the smallest well separation (1 for a single well),
    R0 = twice max(1, farthest well distance)."""
    W = spec.wells
    if spec.l == 1:
        rho0 = 1.0
    else:
        dmin = min(
            float(np.linalg.norm(W[i] - W[j]))
            for i in range(spec.l)
            for j in range(i + 1, spec.l)
        )
        rho0 = 0.25 * dmin
    R0 = 2.0 * max(1.0, float(np.linalg.norm(W, axis=1).max()))
    return WellGeometry(rho0=rho0, R0=R0)


def validate(
    spec: PotentialSpec, g: Grid, geometry: WellGeometry | None = None
) -> ValidationReport:
    """Audit (V1)/(V2) on the grid: unit minimum at resolved wells, strict
    upper bound, and near-limit behaviour at the domain boundary."""
    if geometry is None:
        geometry = default_geometry(spec)
    vals = spec(g.nodes)

    min_value = float(vals.min())
    min_ok = min_value >= 1.0 - 1e-12

    wells_in_domain = bool(np.all(np.abs(spec.wells) <= g.R + 1e-12))
    # each well center must have a node within h and V there ~ 1
    wells_resolved = True
    for z in spec.wells:
        d = np.linalg.norm(g.nodes - z[None, :], axis=1)
        near = d <= g.h * np.sqrt(g.dim) + 1e-12
        if not near.any() or vals[near].min() > 1.0 + (spec.v_inf - 1.0) * g.dim * (
            g.h**2
        ) / spec.width + 1e-12:
            wells_resolved = False

    # strict V < v_inf holds in exact arithmetic; in floats the Gaussian
    # deficit underflows far from the wells, saturating V at v_inf exactly
    upper_ok = bool(np.all(vals <= spec.v_inf))

    boundary = ~g.interior_mask
    tail_gap = float(np.abs(vals[boundary] - spec.v_inf).max())
    tail_ok = tail_gap < 0.01 * (spec.v_inf - 1.0)

    return ValidationReport(
        min_value=min_value,
        min_ok=min_ok,
        wells_in_domain=wells_in_domain,
        wells_resolved=wells_resolved,
        upper_ok=upper_ok,
        tail_gap=tail_gap,
        tail_ok=tail_ok,
        geometry_problems=geometry.check(spec.wells),
    )


def eval_scaled(spec: PotentialSpec, eps: float, g: Grid) -> np.ndarray:
    """Tabulate V(eps * x) at every grid node."""
    if eps <= 0.0:
        raise NonPositiveEpsilon(f"eps must be positive, got {eps}")
    return spec(eps * g.nodes)
