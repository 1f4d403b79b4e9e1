"""
Dominance Regions
=================

Two-block (h = 2) partitions k = (k, r-k): grids of the normalized risk
difference NRD(t) = (μ²/ν)(R(t) - R(t_J)), the region D^{μ,ν} = {NRD < 0},
the large-μ limit oval, the small-μ rectangle and finite-intersection
estimates of the region dominating the Jeffreys prior for every μ.

Grid cells outside T^μ (open set) hold NaN and are never members.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from app.core.cone import Partition
from app.core.errors import DomainError
from app.core.priors import PriorKind, canonical_hyperparams
from app.core.risk import exact_risk, lb_eigenvalue, risk_difference
from app.core.specfun import ConeSpec

logger = logging.getLogger(__name__)

OVAL_MARGIN = 0.05


# --- GRIDS ---
@dataclass(frozen=True)
class GridSpec:
    """Rectangular (t1, t2) grid; `resolution_t2` defaults to `resolution`."""

    t1_min: float
    t1_max: float
    t2_min: float
    t2_max: float
    resolution: int
    resolution_t2: Optional[int] = None

    def __post_init__(self):
        if not (self.t1_max > self.t1_min and self.t2_max > self.t2_min):
            raise DomainError("grid needs max > min on both axes")
        if self.resolution_t2 is None:
            object.__setattr__(self, "resolution_t2", self.resolution)
        for n in (self.resolution, self.resolution_t2):
            if int(n) != n or n < 2:
                raise DomainError(f"grid resolution must be an integer >= 2 (got {n})")

    @classmethod
    def parse(cls, text: str) -> "GridSpec":
        """Parse "t1_min:t1_max:n1,t2_min:t2_max:n2"."""
        try:
            axes = [part.split(":") for part in text.replace("−", "-").split(",")]
            (a0, a1, n1), (b0, b1, n2) = axes
            return cls(float(a0), float(a1), float(b0), float(b1), int(n1), int(n2))
        except (ValueError, TypeError):
            raise DomainError(f"grid must look like t1_min:t1_max:n,t2_min:t2_max:n (got {text!r})")

    def axes(self) -> tuple:
        return (
            np.linspace(self.t1_min, self.t1_max, self.resolution),
            np.linspace(self.t2_min, self.t2_max, self.resolution_t2),
        )

    def points(self) -> np.ndarray:
        """(n1, n2, 2) array of grid points, t1 along the first axis."""
        t1, t2 = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([t1, t2], axis=-1)

    def to_dict(self) -> dict:
        return {
            "t1_min": self.t1_min,
            "t1_max": self.t1_max,
            "t2_min": self.t2_min,
            "t2_max": self.t2_max,
            "resolution": self.resolution,
            "resolution_t2": self.resolution_t2,
        }


@dataclass
class RegionGrid:
    """NRD values and membership on a grid; `metadata` records how they were produced."""

    grid: GridSpec
    nrd_values: np.ndarray
    membership: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if np.any(self.membership & ~(self.nrd_values < 0)):
            raise DomainError("membership marks a grid point whose NRD is not negative")

    def to_frame(self) -> pd.DataFrame:
        """Rows t1,t2,nrd,member, row-major in t1 then t2."""
        pts = self.grid.points()
        return pd.DataFrame(
            {
                "t1": pts[..., 0].ravel(),
                "t2": pts[..., 1].ravel(),
                "nrd": self.nrd_values.ravel(),
                "member": self.membership.ravel().astype(int),
            }
        )

    @property
    def member_count(self) -> int:
        return int(self.membership.sum())


def _two_block(cone: ConeSpec, k: int) -> Partition:
    return Partition.split(cone, k)


def in_domain(p: Partition, mu: float, t: np.ndarray) -> np.ndarray:
    """Open T^μ test on a (..., 2) array of points."""
    return (t[..., 0] > p.domain_floor(1, mu)) & (t[..., 1] > p.domain_floor(2, mu))


# --- SCANS ---
def scan_nrd(
    cone: ConeSpec,
    k: int,
    mu: float,
    nu: float,
    grid: GridSpec,
    workers: Optional[int] = 1,
) -> RegionGrid:
    """
    NRD on every grid point, NaN outside T^μ.

    Rows (fixed t1) are evaluated as vectorized batches, optionally spread
    over `workers` threads; results are assembled in row order.
    """
    p = _two_block(cone, k)
    cone.check_shape(mu, "mu")
    cone.check_shape(nu, "nu")
    t_j = canonical_hyperparams(p, PriorKind.JEFFREYS)
    pts = grid.points()
    valid = in_domain(p, mu, pts)

    def row(j: int) -> np.ndarray:
        out = np.full(pts.shape[1], np.nan)
        mask = valid[j]
        if np.any(mask):
            out[mask] = mu**2 / nu * risk_difference(p, pts[j][mask], t_j, mu, nu)
        return out

    workers = max(1, int(workers or 1))
    if workers == 1:
        rows = [row(j) for j in range(pts.shape[0])]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(row, range(pts.shape[0])))
    nrd = np.vstack(rows)
    membership = valid & (np.nan_to_num(nrd, nan=0.0) < 0)
    logger.info("scan mu=%g nu=%g: %d/%d members, %d outside T^mu", mu, nu, membership.sum(), nrd.size, (~valid).sum())
    meta = {"d": cone.d, "r": cone.r, "k": k, "mu": [float(mu)], "nu": float(nu), "grid": grid.to_dict()}
    return RegionGrid(grid=grid, nrd_values=nrd, membership=membership, metadata=meta)


def v_estimate(
    cone: ConeSpec,
    k: int,
    nu: float,
    mu_list: Sequence[float],
    grid: GridSpec,
    workers: Optional[int] = 1,
) -> RegionGrid:
    """
    Pointwise conjunction of scan_nrd membership over `mu_list`.

    nrd_values holds the largest NRD over the list (NaN where any μ puts the
    point outside T^μ), so membership still implies a negative value.
    """
    mus = [float(m) for m in mu_list]
    if not mus:
        raise DomainError("mu_list must not be empty")
    for m in mus:
        cone.check_shape(m, "mu")
    scans = [scan_nrd(cone, k, m, nu, grid, workers) for m in mus]
    stacked = np.stack([s.nrd_values for s in scans])
    worst = np.max(stacked, axis=0)
    membership = np.logical_and.reduce([s.membership for s in scans])
    meta = {"d": cone.d, "r": cone.r, "k": k, "mu": mus, "nu": float(nu), "grid": grid.to_dict()}
    return RegionGrid(grid=grid, nrd_values=worst, membership=membership, metadata=meta)


# --- REFERENCE SHAPES ---
def oval_signed(cone: ConeSpec, k: int, t) -> float:
    """
    (k/2)(t1 - t_R1)² + ((r-k)/2)(t2 - t_R2)² - (d²/8) r k (r-k); negative inside the oval.

    Equals 2·lb_eigenvalue(t); accepts (..., 2) arrays.
    """
    p = _two_block(cone, k)
    t = np.asarray(t, dtype=float)
    t_r = canonical_hyperparams(p, PriorKind.RIGHT_INVARIANT)
    r, d = cone.r, cone.d
    value = (
        k / 2.0 * (t[..., 0] - t_r[0]) ** 2
        + (r - k) / 2.0 * (t[..., 1] - t_r[1]) ** 2
        - d * d / 8.0 * r * k * (r - k)
    )
    return float(value) if value.ndim == 0 else value


def rect_membership(cone: ConeSpec, k: int, t):
    """t1 > t_J1 and t_R2 < t2 < t_J2 (open rectangle)."""
    p = _two_block(cone, k)
    t = np.asarray(t, dtype=float)
    t_j = canonical_hyperparams(p, PriorKind.JEFFREYS)
    t_r = canonical_hyperparams(p, PriorKind.RIGHT_INVARIANT)
    inside = (t[..., 0] > t_j[0]) & (t[..., 1] > t_r[1]) & (t[..., 1] < t_j[1])
    return bool(inside) if np.ndim(inside) == 0 else inside


def dominance_summary(cone: ConeSpec, k: int, mu: float, nu: float) -> dict:
    """NR at t_J, t_C, t_R and whether R_R < R_C < R_J holds strictly."""
    p = _two_block(cone, k)
    reports = {kind: exact_risk(p, canonical_hyperparams(p, kind), mu, nu) for kind in PriorKind}
    r_j = reports[PriorKind.JEFFREYS]
    r_c = reports[PriorKind.REFERENCE]
    r_r = reports[PriorKind.RIGHT_INVARIANT]
    return {
        "mu": float(mu),
        "nu": float(nu),
        "nr_J": r_j.nr,
        "nr_C": r_c.nr,
        "nr_R": r_r.nr,
        "nrd_C": r_c.nrd,
        "nrd_R": r_r.nrd,
        "ordered": bool(r_r.total < r_c.total < r_j.total),
    }


def conjecture_diagnostic(cone: ConeSpec, k: int, result: RegionGrid) -> dict:
    """
    Compare a V-estimate against rectangle ∩ oval on its grid.

    Counts points in only one of the two sets; this is evidence only.
    """
    pts = result.grid.points()
    reference = rect_membership(cone, k, pts) & (oval_signed(cone, k, pts) < 0)
    only_estimate = result.membership & ~reference
    only_reference = reference & ~result.membership
    return {
        "grid_points": int(pts.shape[0] * pts.shape[1]),
        "estimate_members": result.member_count,
        "reference_members": int(reference.sum()),
        "only_in_estimate": int(only_estimate.sum()),
        "only_in_reference": int(only_reference.sum()),
        "agreement": float(1.0 - (only_estimate.sum() + only_reference.sum()) / reference.size),
    }


def eigenvalue_gap(cone: ConeSpec, k: int, result: RegionGrid) -> float:
    """sup over valid grid points of |NRD - 2λ| for a single-μ scan."""
    p = _two_block(cone, k)
    gap = np.abs(result.nrd_values - 2.0 * lb_eigenvalue(p, result.grid.points()))
    if not np.any(np.isfinite(gap)):
        raise DomainError("no grid point lies in the hyperparameter domain")
    return float(np.nanmax(gap))


# Test independently
if __name__ == "__main__":
    real2 = ConeSpec(d=1, r=2)
    spec = GridSpec.parse("-2.5:0:11,-3:-0.5:11")
    scan = scan_nrd(real2, 1, 100.0, 1.0, spec)
    print("=" * 50)
    print(scan.to_frame().head())
    print(conjecture_diagnostic(real2, 1, scan))
