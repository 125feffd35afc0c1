"""Block certificates of purity and the derived Journe parameters.

A filter whose matrix, partitioned around a leading a x a block A, is
uniformly expanding on a symmetric region F around 0 (every singular value
of A at least 1 + delta) while the remaining blocks stay below
eps = min(1/8, delta/8), and whose region overlaps its own dilation in
positive measure, generates a pure operator: no modulus-one eigenvector
can exist.  This module checks such certificates cell by cell, searches
for them over nested grid-aligned regions, and derives the parameter
budget that places the smooth Journe family inside the certificate regime
for a requested delta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

import numpy as np

from .errors import GridAlignmentError, ParameterError
from .filters import (
    FilterMatrix,
    JourneParams,
    _journe_sets,
    journe_profile,
)
from .torus import GridSpec, IntervalSet

SQRT2 = math.sqrt(2.0)


def certificate_eps(delta: float) -> float:
    """The off-block budget paired with an expansion margin delta."""
    return min(1.0 / 8.0, delta / 8.0)


@dataclass(frozen=True)
class Certificate:
    """A verified block certificate; its existence implies purity."""

    block_size: int
    delta: float
    eps: float
    region: IntervalSet
    sigma_min: float
    off_block_max: float
    overlap_measure: Fraction
    grid: GridSpec


@dataclass(frozen=True)
class CertificateFailure:
    """Why a candidate certificate was rejected, with a witness cell."""

    reason: str
    witness_cell: Optional[int] = None
    detail: str = ""


def _block_norms(filt: FilterMatrix, block_size: int, cells: np.ndarray):
    """Per-cell smallest singular value of A and largest of B, C, D."""
    a = block_size
    mats = np.transpose(filt.samples[..., cells], (2, 0, 1))
    smin = np.linalg.svd(mats[:, :a, :a], compute_uv=False)[:, -1]
    off = np.zeros(len(cells))
    for rows, cols in (
        (slice(None, a), slice(a, None)),
        (slice(a, None), slice(None, a)),
        (slice(a, None), slice(a, None)),
    ):
        block = mats[:, rows, cols]
        if block.shape[1] and block.shape[2]:
            off = np.maximum(
                off, np.linalg.svd(block, compute_uv=False)[:, 0]
            )
    return smin, off


def check_certificate(
    filt: FilterMatrix,
    block_size: int,
    delta: float,
    region: IntervalSet,
) -> Union[Certificate, CertificateFailure]:
    """Verify the three block conditions of a certificate on a region.

    Conditions, each checked at every grid cell of the region: the leading
    block satisfies sigma_min(A) >= 1 + delta (equivalently its inverse
    has norm at most 1/(1 + delta)); the other blocks stay strictly below
    eps = min(1/8, delta/8) in operator norm; and the region meets its own
    dilation image in positive measure.  Witness cells in failures are the
    lowest offending cell index.
    """
    if not (1 <= block_size <= filt.count):
        raise ParameterError(
            f"block size must lie in [1, {filt.count}], got {block_size}"
        )
    if delta <= 0:
        raise ParameterError(f"delta must be positive, got {delta}")
    if not region.aligned(filt.grid):
        raise GridAlignmentError("certificate region must align with the grid")
    cells = np.nonzero(region.cell_mask(filt.grid))[0]
    if cells.size == 0:
        return CertificateFailure("empty region")
    smin, off = _block_norms(filt, block_size, cells)
    eps = certificate_eps(delta)
    bad = np.nonzero(smin < 1.0 + delta)[0]
    if bad.size:
        k = int(bad[0])
        kind = "singular" if smin[k] == 0.0 else "insufficiently expanding"
        return CertificateFailure(
            "expansivity failure",
            witness_cell=int(cells[k]),
            detail=(
                f"leading block is {kind} at cell {int(cells[k])}: "
                f"sigma_min {smin[k]!r} < 1 + delta {1.0 + delta!r}"
            ),
        )
    bad = np.nonzero(off >= eps)[0]
    if bad.size:
        k = int(bad[0])
        return CertificateFailure(
            "off-block failure",
            witness_cell=int(cells[k]),
            detail=(
                f"off-diagonal block norm {off[k]!r} >= eps {eps!r} "
                f"at cell {int(cells[k])}"
            ),
        )
    overlap = region.intersect(region.dilate(filt.scale)).measure()
    if overlap <= 0:
        return CertificateFailure(
            "region does not overlap its dilation image"
        )
    return Certificate(
        block_size=block_size,
        delta=delta,
        eps=eps,
        region=region,
        sigma_min=float(smin.min()),
        off_block_max=float(off.max()),
        overlap_measure=overlap,
        grid=filt.grid,
    )


def _symmetric_region(grid: GridSpec, halfwidth_cells: int) -> IntervalSet:
    m = grid.cells
    j = halfwidth_cells
    return IntervalSet.from_arcs([(Fraction(-j, m), Fraction(j, m))])


def search_certificate(filt: FilterMatrix) -> Optional[Certificate]:
    """Search symmetric grid-aligned regions around 0 for a certificate.

    Candidate regions are [-j/M, j/M) for j = 1 .. M/2 and every block
    size is tried.  For a given region the best possible delta is
    sigma_min - 1, so candidates are scored by (delta, region measure)
    and ties prefer the smaller block.  Returns None when no region
    certifies.
    """
    m = filt.cells
    all_cells = np.arange(m)
    best: Optional[tuple] = None
    for a in range(1, filt.count + 1):
        smin, off = _block_norms(filt, a, all_cells)
        worst_smin = math.inf
        worst_off = 0.0
        for j in range(1, m // 2 + 1):
            new = (j - 1, m - j) if j > 1 else (0, m - 1)
            worst_smin = min(worst_smin, smin[new[0]], smin[new[1]])
            worst_off = max(worst_off, off[new[0]], off[new[1]])
            delta = worst_smin - 1.0
            if delta <= 0.0:
                break
            while 1.0 + delta > worst_smin:
                delta = float(np.nextafter(delta, -math.inf))
            if worst_off >= certificate_eps(delta):
                continue
            region = _symmetric_region(filt.grid, j)
            overlap = region.intersect(region.dilate(filt.scale)).measure()
            if overlap <= 0:
                continue
            key = (delta, overlap, -a)
            if best is None or key > best[0]:
                best = (key, a, delta, region)
    if best is None:
        return None
    _, a, delta, region = best
    found = check_certificate(filt, a, delta, region)
    if not isinstance(found, Certificate):
        raise AssertionError(
            f"search produced a candidate that fails re-checking: {found}"
        )
    return found


@dataclass(frozen=True)
class BoundCheck:
    """One named inequality in a derivation, with its numeric margin."""

    description: str
    lhs: float
    rhs: float
    strict: bool

    @property
    def ok(self) -> bool:
        return self.lhs < self.rhs if self.strict else self.lhs <= self.rhs

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs


@dataclass(frozen=True)
class JourneDerivation:
    """The parameter budget placing the Journe family in the certificate regime."""

    delta: float
    r1: float
    r2: float
    r: float
    interval_denominator: int
    region: IntervalSet
    params: JourneParams
    checks: dict[str, BoundCheck]


def derive_journe(
    delta: float,
    grid: GridSpec = GridSpec(2, 56, 2),
    eps_smooth: Fraction = Fraction(1, 56),
    transition: str = "exp_bump",
) -> JourneDerivation:
    """Derive the deformation size r and region for a requested delta.

    Two constraints cap r: the off-blocks must stay under
    eps = min(1/8, delta/8), which a budget of half of min(1/16, delta/16)
    guarantees with room to spare, and the leading entry must stay
    expanding, which needs sqrt(2) sqrt(1 - 2 r^2) >= 1 + delta and so
    caps r at sqrt((sqrt(2) - (1 + delta)) / (1 + delta)).  That cap is
    real only for delta < sqrt(2) - 1, which bounds the admissible range.
    The region is then the widest aligned [-1/n, 1/n] with n >= 7 on
    which the sampled profile exceeds sqrt(2) sqrt(1 - 2 r^2) and the
    off-diagonal entry stays under eps.
    """
    if not (0.0 < delta < SQRT2 - 1.0):
        raise ParameterError(
            f"delta must lie in (0, sqrt(2) - 1), got {delta!r}"
        )
    r1 = min(1.0 / 16.0, delta / 16.0) / 2.0
    r2 = math.sqrt((SQRT2 - (1.0 + delta)) / (1.0 + delta))
    r = min(r1, r2)
    params = JourneParams(
        r=r, eps_smooth=eps_smooth, transition=transition, grid=grid
    )
    q = journe_profile(params)
    m = grid.cells
    threshold = SQRT2 * math.sqrt(1.0 - 2.0 * r * r)
    eps = certificate_eps(delta)
    band12 = _journe_sets()["band12"].cell_mask(grid)
    h12 = np.abs(np.roll(q, -(m // 2)) * band12)
    chosen = None
    for n in range(7, m + 1):
        if m % n:
            continue
        j = m // n
        cells = np.concatenate([np.arange(j), np.arange(m - j, m)])
        if np.all(q[cells] > threshold) and np.all(h12[cells] < eps):
            chosen = n
            break
    if chosen is None:
        raise ParameterError(
            "no aligned region satisfies the derived bounds; refine the grid"
        )
    j = m // chosen
    region = _symmetric_region(grid, j)
    cells = np.concatenate([np.arange(j), np.arange(m - j, m)])
    checks = {
        "deformation_keeps_expansion": BoundCheck(
            "1 / (sqrt(2) sqrt(1 - 2 r^2)) stays within 1 / (1 + delta)",
            1.0 / threshold,
            1.0 / (1.0 + delta),
            strict=False,
        ),
        "deformation_keeps_off_blocks_small": BoundCheck(
            "the off-diagonal peak 2 r stays under min(1/8, delta/8)",
            2.0 * r,
            eps,
            strict=True,
        ),
        "half_budget_rule": BoundCheck(
            "r1 is half of min(1/16, delta/16)",
            r1,
            min(1.0 / 16.0, delta / 16.0),
            strict=True,
        ),
        "profile_exceeds_threshold_on_region": BoundCheck(
            "sampled profile exceeds sqrt(2) sqrt(1 - 2 r^2) on the region",
            threshold,
            float(q[cells].min()),
            strict=True,
        ),
        "entry12_below_eps_on_region": BoundCheck(
            "off-diagonal entry stays under eps on the region",
            float(h12[cells].max()),
            eps,
            strict=True,
        ),
    }
    return JourneDerivation(
        delta=delta,
        r1=r1,
        r2=r2,
        r=r,
        interval_denominator=chosen,
        region=region,
        params=params,
        checks=checks,
    )
