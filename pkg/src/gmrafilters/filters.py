"""Matrix-valued step filters on the circle and their defining identities.

A filter here is a c x c matrix H of step functions sampled on a uniform
grid, attached to a dilation factor N and a nested chain of supports
sigma_1 >= ... >= sigma_c.  The defining identity, checked cell by cell,
is the coset orthogonality relation

    sum_{z : z^N = 1} sum_j h_{i,j}(w z) conj(h_{i',j}(w z))
        = N delta_{i,i'} chi_{sigma_i}(w^N),

together with the support rule that column j vanishes outside sigma_j.
Because supports and grids are exact rational objects, the identity either
holds at every cell up to float rounding or fails with a concrete witness
cell; there is no quadrature error anywhere.

The generators at the bottom of the module build the classical examples:
the constant filter, the Haar and Shannon filters at multiplicity one, the
classical two-channel Journe step filter, and its smooth one-parameter
deformation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

import numpy as np

from .errors import GridAlignmentError, ParameterError, ResolutionError
from .torus import (
    GridSpec,
    IntervalSet,
    RatLike,
    SigmaChain,
    TorusPoint,
    as_rat,
)

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True, eq=False)
class StepFn:
    """A complex step function: one sample per grid cell."""

    grid: GridSpec
    samples: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.samples, dtype=np.complex128)
        if arr.shape != (self.grid.cells,):
            raise ParameterError(
                f"expected {self.grid.cells} samples, got shape {arr.shape}"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    def value_at(self, point: TorusPoint) -> complex:
        return complex(self.samples[self.grid.cell_of_point(point)])

    def support(self) -> IntervalSet:
        """Union of the cells carrying a nonzero sample."""
        m = self.grid.cells
        arcs = [
            (Fraction(t, m), Fraction(t + 1, m))
            for t in range(m)
            if self.samples[t] != 0
        ]
        return IntervalSet.from_arcs(arcs)

    def refine(self) -> "StepFn":
        return StepFn(self.grid.finer(), np.repeat(self.samples, self.grid.scale))


@dataclass(frozen=True, eq=False)
class FilterMatrix:
    """A c x c matrix of step functions with a dilation factor and supports.

    ``samples[i, j, t]`` is the value of entry (i, j) on grid cell t.  The
    grid must have depth >= 1 so that each cell has a full coset of
    translates under the kernel of the dilation, and the support chain must
    align with the coarser grid so the right-hand side of the defining
    identity is constant on cells.

    Construction validates only structure.  Whether the defining identity
    and the support rule actually hold is a question for
    :func:`filter_equation_residual` and :func:`support_violations`, so
    that corrupted data can still be loaded and then failed with a witness.
    """

    scale: int
    chain: SigmaChain
    grid: GridSpec
    samples: np.ndarray

    def __post_init__(self) -> None:
        if self.grid.scale != self.scale:
            raise ParameterError("grid scale and filter scale disagree")
        if self.grid.depth < 1:
            raise ResolutionError("filter grids need depth >= 1 for coset pairing")
        c = self.chain.count
        arr = np.asarray(self.samples, dtype=np.complex128)
        if arr.shape != (c, c, self.grid.cells):
            raise ParameterError(
                f"expected samples of shape {(c, c, self.grid.cells)}, "
                f"got {arr.shape}"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)
        if not self.chain.aligned(self.grid.coarser()):
            raise GridAlignmentError(
                "support chain must align with the coarser grid"
            )

    @property
    def count(self) -> int:
        return self.chain.count

    @property
    def cells(self) -> int:
        return self.grid.cells

    def coarse_grid(self) -> GridSpec:
        return self.grid.coarser()

    def entry(self, i: int, j: int) -> StepFn:
        return StepFn(self.grid, self.samples[i, j])

    def matrix_at_cell(self, index: int) -> np.ndarray:
        return self.samples[:, :, index % self.cells]

    def matrix_at(self, point: TorusPoint) -> np.ndarray:
        return self.matrix_at_cell(self.grid.cell_of_point(point))

    def sigma_masks(self, grid: GridSpec | None = None) -> list[np.ndarray]:
        """Cell masks of the support chain on ``grid`` (default: fine grid)."""
        g = grid if grid is not None else self.grid
        return [s.cell_mask(g) for s in self.chain.sigmas]


@dataclass(frozen=True)
class ResidualReport:
    """Worst-case deviation from an identity, with a witness location.

    Ties are broken deterministically: the lowest cell index wins, then the
    lexicographically smallest index pair.
    """

    max_abs_residual: float
    argmax_cell: int
    argmax_pair: tuple[int, int]
    per_pair: dict[tuple[int, int], float] = field(compare=False)


def _report_from_residuals(res: np.ndarray) -> ResidualReport:
    # res has shape (c, c, cells); argmax in (cell, i, i') order breaks ties
    # toward the lowest cell, then the smallest pair.
    c = res.shape[0]
    by_cell = np.ascontiguousarray(np.moveaxis(res, 2, 0))
    flat = int(np.argmax(by_cell))
    cell, rest = divmod(flat, c * c)
    i, ip = divmod(rest, c)
    per_pair = {
        (a, b): float(res[a, b].max()) for a in range(c) for b in range(c)
    }
    return ResidualReport(
        max_abs_residual=float(by_cell.flat[flat]),
        argmax_cell=int(cell),
        argmax_pair=(int(i), int(ip)),
        per_pair=per_pair,
    )


def filter_equation_residual(filt: FilterMatrix) -> ResidualReport:
    """Exact cell-level check of the defining coset identity.

    For a fine cell t the coset translates are the cells t mod M' + k M'
    with M' = M / N, and the dilation sends cell t onto coarse cell
    t mod M'.  Both sides of the identity are therefore constant on each
    residue class of cells, and the report indexes witnesses by the lowest
    cell of the class.
    """
    n = filt.scale
    m = filt.cells
    mp = m // n
    c = filt.count
    grouped = filt.samples.reshape(c, c, n, mp)
    lhs = np.einsum("ijkt,pjkt->ipt", grouped, np.conj(grouped))
    rhs = np.zeros((c, c, mp))
    coarse_masks = filt.sigma_masks(filt.coarse_grid())
    for i in range(c):
        rhs[i, i] = n * coarse_masks[i].astype(float)
    return _report_from_residuals(np.abs(lhs - rhs))


def generalized_filter_residual(filt: FilterMatrix, order: int) -> ResidualReport:
    """Check the n-step product identity obtained by iterating the filter.

    With P(w) the ordered product of transposed filter matrices along the
    dilation orbit of w (n factors), the identity is

        (1/N^n) sum_{z : z^(N^n) = 1} sum_i P_{i,j}(w z) conj(P_{i,j'}(w z))
            = delta_{j,j'} chi_{sigma_j}(w^(N^n)).

    For order 1 this reduces to the defining identity divided by N.
    Requires N**order to divide the number of cells and the supports to
    align with the correspondingly coarser grid.
    """
    if order < 1:
        raise ParameterError("order must be >= 1")
    n = filt.scale
    m = filt.cells
    if order > filt.grid.depth:
        raise ResolutionError(
            f"order {order} exceeds grid depth {filt.grid.depth}"
        )
    block = n**order
    mq = m // block
    target_grid = GridSpec(n, filt.grid.base, filt.grid.depth - order)
    if not filt.chain.aligned(target_grid):
        raise GridAlignmentError(
            f"supports do not align with the depth-{target_grid.depth} grid"
        )
    transposed = np.ascontiguousarray(np.transpose(filt.samples, (2, 1, 0)))
    indices = np.arange(m)
    prod = transposed[indices]
    for k in range(1, order):
        prod = prod @ transposed[(indices * n**k) % m]
    gram = np.einsum("tij,tik->jkt", prod, np.conj(prod))
    lhs = gram.reshape(filt.count, filt.count, block, mq).mean(axis=2)
    rhs = np.zeros((filt.count, filt.count, mq))
    masks = filt.sigma_masks(target_grid)
    for j in range(filt.count):
        rhs[j, j] = masks[j].astype(float)
    return _report_from_residuals(np.abs(lhs - rhs))


def cocycle_product(filt: FilterMatrix, point: TorusPoint, order: int) -> np.ndarray:
    """Ordered product of transposed filter matrices along a dilation orbit.

    Returns H^T(x) H^T(x^N) ... H^T(x^(N^(order-1))) as a dense c x c
    matrix; the empty product (order 0) is the identity.
    """
    if order < 0:
        raise ParameterError("order must be >= 0")
    out = np.eye(filt.count, dtype=np.complex128)
    x = point
    for _ in range(order):
        out = out @ filt.matrix_at(x).T
        x = x.dilate(filt.scale)
    return out


@dataclass(frozen=True)
class SupportReport:
    """Cells where the support rules fail, by category.

    ``column`` lists (i, j, cell) with a nonzero sample outside sigma_j;
    ``dilated_row`` lists those whose dilated cell leaves sigma_i.  The
    second category is implied by the defining identity, so it is reported
    for diagnosis rather than checked independently during verification.
    """

    column: tuple[tuple[int, int, int], ...]
    dilated_row: tuple[tuple[int, int, int], ...]

    def clean(self) -> bool:
        return not self.column and not self.dilated_row


def support_violations(filt: FilterMatrix) -> SupportReport:
    c = filt.count
    mp = filt.cells // filt.scale
    fine_masks = filt.sigma_masks()
    coarse_masks = filt.sigma_masks(filt.coarse_grid())
    column = []
    dilated_row = []
    nz = filt.samples != 0
    for i in range(c):
        for j in range(c):
            for t in np.nonzero(nz[i, j] & ~fine_masks[j])[0]:
                column.append((i, j, int(t)))
            for t in np.nonzero(nz[i, j] & ~coarse_masks[i][np.arange(filt.cells) % mp])[0]:
                dilated_row.append((i, j, int(t)))
    return SupportReport(tuple(column), tuple(dilated_row))


def refine(filt: FilterMatrix) -> FilterMatrix:
    """Re-sample on the next finer grid; values are duplicated bit for bit."""
    return FilterMatrix(
        filt.scale,
        filt.chain,
        filt.grid.finer(),
        np.repeat(filt.samples, filt.scale, axis=2),
    )


def coarsen_check(filt: FilterMatrix) -> bool:
    """True when the samples are constant on the cells of the coarser grid."""
    n = filt.scale
    c = filt.count
    blocks = filt.samples.reshape(c, c, filt.cells // n, n)
    return bool(np.all(blocks == blocks[:, :, :, :1]))


# ---------------------------------------------------------------------------
# generators


def make_constant(depth: int = 4, base: int = 1, scale: int = 2) -> FilterMatrix:
    """The multiplicity-one filter h = 1: the identity fails to dilate.

    Satisfies the defining identity exactly because the coset sum is
    1 + ... + 1 = N on the full circle.
    """
    grid = GridSpec(scale, base, depth)
    samples = np.ones((1, 1, grid.cells), dtype=np.complex128)
    return FilterMatrix(scale, SigmaChain.full_circle(1), grid, samples)


def make_haar(depth: int = 4, base: int = 1) -> FilterMatrix:
    """The Haar low-pass filter h(x) = (1 + e^(2 pi i x)) / sqrt(2) at N = 2.

    Samples are taken at cell left endpoints on the first half of the
    circle; the partner cell a half turn away is then written as
    (1 - e^(2 pi i x)) / sqrt(2) from the same exponential, which makes the
    pair identity |h(x)|^2 + |h(x + 1/2)|^2 = 2 hold to rounding at every
    cell rather than only in the limit.
    """
    grid = GridSpec(2, base, depth)
    m = grid.cells
    half = m // 2
    t = np.arange(half)
    z = np.exp(2j * np.pi * t / m)
    samples = np.empty((1, 1, m), dtype=np.complex128)
    samples[0, 0, :half] = (1 + z) / SQRT2
    samples[0, 0, half:] = (1 - z) / SQRT2
    return FilterMatrix(2, SigmaChain.full_circle(1), grid, samples)


def make_shannon(depth: int = 4, base: int = 4) -> FilterMatrix:
    """The Shannon filter: sqrt(2) on the quarter arcs around 0, else 0.

    The support [-1/4, 1/4) is a section of the doubling map over the full
    circle, so each coset of a cell meets the support exactly once and the
    coset sum is |sqrt(2)|^2 = 2 everywhere.
    """
    if base % 4:
        raise GridAlignmentError("shannon needs a base divisible by 4")
    grid = GridSpec(2, base, depth)
    support = IntervalSet.from_arcs([(Fraction(-1, 4), Fraction(1, 4))])
    samples = np.zeros((1, 1, grid.cells), dtype=np.complex128)
    samples[0, 0, support.cell_mask(grid)] = SQRT2
    return FilterMatrix(2, SigmaChain.full_circle(1), grid, samples)


def journe_sigma_chain() -> SigmaChain:
    """The two-member support chain of the Journe multiplicity function.

    sigma_1 = [-1/2, -3/7) u [-2/7, 2/7) u [3/7, 1/2)  (measure 5/7)
    sigma_2 = [-1/7, 1/7)                              (measure 2/7)
    """
    s1 = IntervalSet.from_arcs(
        [
            (Fraction(-1, 2), Fraction(-3, 7)),
            (Fraction(-2, 7), Fraction(2, 7)),
            (Fraction(3, 7), Fraction(1, 2)),
        ]
    )
    s2 = IntervalSet.from_arcs([(Fraction(-1, 7), Fraction(1, 7))])
    return SigmaChain.of([s1, s2])


def _journe_sets() -> dict[str, IntervalSet]:
    chain = journe_sigma_chain()
    return {
        "sigma1": chain.sigmas[0],
        "sigma2": chain.sigmas[1],
        # sections of the doubling map over sigma_1 and sigma_2
        "e1": IntervalSet.from_arcs(
            [
                (Fraction(-2, 7), Fraction(-1, 4)),
                (Fraction(-1, 7), Fraction(1, 7)),
                (Fraction(1, 4), Fraction(2, 7)),
            ]
        ),
        "e2": IntervalSet.from_arcs(
            [(Fraction(-1, 2), Fraction(-3, 7)), (Fraction(3, 7), Fraction(1, 2))]
        ),
        # supports of the two nonzero entries of the smooth family
        "band11": IntervalSet.from_arcs([(Fraction(-2, 7), Fraction(2, 7))]),
        "band12": IntervalSet.from_arcs([(Fraction(-1, 7), Fraction(1, 7))]),
    }


def make_journe_step(
    depth: int = 2, base: int = 28, half_turn_phases: bool = False
) -> FilterMatrix:
    """The classical two-channel Journe step filter.

    The two nonzero entries sit in the first column:

        h_11 = sqrt(2) on E_1,   h_21 = sqrt(2) on E_2,   h_12 = h_22 = 0,

    where E_1 and E_2 are disjoint sections of the doubling map over
    sigma_1 and sigma_2.  Each coset of a cell therefore meets each
    section at most once and the defining identity holds cell by cell.

    The printed form of this filter decorates the moduli with exponential
    phases e^(2 pi i chi_E); taken literally those phases equal 1, which is
    the default here.  ``half_turn_phases`` switches to e^(pi i chi_E),
    flipping the sign on each section.  Either way the moduli, and hence
    all residuals and certificates, are unchanged.
    """
    if base % 28:
        raise GridAlignmentError("the Journe geometry needs a base divisible by 28")
    grid = GridSpec(2, base, depth)
    sets = _journe_sets()
    sign = -1.0 if half_turn_phases else 1.0
    samples = np.zeros((2, 2, grid.cells), dtype=np.complex128)
    samples[0, 0, sets["e1"].cell_mask(grid)] = sign * SQRT2
    samples[1, 0, sets["e2"].cell_mask(grid)] = sign * SQRT2
    return FilterMatrix(2, journe_sigma_chain(), grid, samples)


@dataclass(frozen=True)
class JourneParams:
    """Parameters of the smooth one-parameter Journe deformation.

    ``r`` in (0, 1) is the deformation parameter (r -> 0 recovers the
    step profile), ``eps_smooth`` < 1/28 is the half-width of the smoothed
    transitions, and ``transition`` selects the interpolant used inside
    them.  Floats passed for ``r`` are kept at their exact binary value.
    """

    r: Fraction
    eps_smooth: Fraction
    transition: str = "exp_bump"
    grid: GridSpec = GridSpec(2, 56, 2)

    def __init__(
        self,
        r: Union[RatLike, float],
        eps_smooth: RatLike = Fraction(1, 56),
        transition: str = "exp_bump",
        grid: GridSpec = GridSpec(2, 56, 2),
    ) -> None:
        object.__setattr__(
            self, "r", Fraction(r) if isinstance(r, float) else as_rat(r)
        )
        object.__setattr__(self, "eps_smooth", as_rat(eps_smooth))
        object.__setattr__(self, "transition", transition)
        object.__setattr__(self, "grid", grid)
        self.__post_init__()

    def __post_init__(self) -> None:
        if not (0 < self.r < 1):
            raise ParameterError(f"r must lie in (0, 1), got {self.r}")
        if not (0 < self.eps_smooth < Fraction(1, 28)):
            raise ParameterError(
                f"eps_smooth must lie in (0, 1/28), got {self.eps_smooth}"
            )
        if self.transition not in ("exp_bump", "polynomial_c2"):
            raise ParameterError(f"unknown transition {self.transition!r}")
        if self.grid.scale != 2 or self.grid.depth < 1:
            raise ParameterError("the Journe family needs scale 2 and depth >= 1")
        m = self.grid.cells
        for p in self.breakpoints():
            if (p * m).denominator != 1:
                raise GridAlignmentError(
                    f"breakpoint {p} does not align with the {m}-cell grid"
                )

    def breakpoints(self) -> tuple[Fraction, ...]:
        e = self.eps_smooth
        return (
            Fraction(1, 7) - e,
            Fraction(3, 14) + e,
            Fraction(2, 7) - e,
            Fraction(5, 14) + e,
            Fraction(3, 7) - e,
            Fraction(3, 7) + e,
            Fraction(1, 2),
            Fraction(1, 7),
            Fraction(2, 7),
            Fraction(3, 7),
        )


def _transition(kind: str, t: float) -> float:
    """Monotone interpolant from 0 at t = 0 to 1 at t = 1."""
    if t <= 0.0:
        return 0.0
    if t >= 1.0:
        return 1.0
    if kind == "exp_bump":
        g0 = math.exp(-1.0 / t)
        g1 = math.exp(-1.0 / (1.0 - t))
        return g0 / (g0 + g1)
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t))


def journe_profile(params: JourneParams) -> np.ndarray:
    """Sample the scalar profile q of the smooth Journe family.

    On the first half of the circle q is piecewise: it falls from
    sqrt(2) sqrt(1 - r^2) at 0 to a zero plateau before 3/14, rises to a
    sqrt(2) plateau across [2/7, 5/14], falls back to a zero plateau
    around 3/7, and rises to sqrt(2) r at 1/2, each transition smoothed
    over a width controlled by eps_smooth.  Cells on the second half are
    then forced by the exact complement rule

        q(cell + 1/2) = sqrt(max(0, 2 - q(cell)^2)),

    which is what makes the coset identity of the assembled filter close
    to rounding at every cell.  Samples are taken at cell left endpoints.
    """
    grid = params.grid
    m = grid.cells
    half = m // 2
    r = float(params.r)
    p1, p2, p3, p4, p5, p6, phalf = params.breakpoints()[:7]
    q0 = SQRT2 * math.sqrt(1.0 - r * r)
    kind = params.transition
    q = np.zeros(m)
    for t in range(half):
        x = Fraction(t, m)
        if x < p1:
            q[t] = q0 * (1.0 - _transition(kind, float(x / p1)))
        elif x < p2:
            q[t] = 0.0
        elif x < p3:
            q[t] = SQRT2 * _transition(kind, float((x - p2) / (p3 - p2)))
        elif x < p4:
            q[t] = SQRT2
        elif x < p5:
            q[t] = SQRT2 * (1.0 - _transition(kind, float((x - p4) / (p5 - p4))))
        elif x < p6:
            q[t] = 0.0
        else:
            q[t] = SQRT2 * r * _transition(kind, float((x - p6) / (phalf - p6)))
    for t in range(half, m):
        q[t] = math.sqrt(max(0.0, 2.0 - q[t - half] ** 2))
    return q


def make_journe_family(
    params: JourneParams, half_turn_phases: bool = False
) -> FilterMatrix:
    """The smooth Journe deformation assembled from the profile q.

    The nonzero entries are

        h_11(x) = q(x)        on [-2/7, 2/7),
        h_21(x) = sqrt(2)     on E_2 = [-1/2, -3/7) u [3/7, 1/2),
        h_12(x) = q(x + 1/2)  on [-1/7, 1/7),

    with h_22 = 0.  As with the step filter, the printed exponential
    phases are literally 1 by default and ``half_turn_phases`` flips the
    sign on each band without changing any modulus.
    """
    grid = params.grid
    m = grid.cells
    sets = _journe_sets()
    q = journe_profile(params)
    sign = -1.0 if half_turn_phases else 1.0
    samples = np.zeros((2, 2, m), dtype=np.complex128)
    samples[0, 0] = sign * q * sets["band11"].cell_mask(grid)
    samples[1, 0, sets["e2"].cell_mask(grid)] = sign * SQRT2
    samples[0, 1] = sign * np.roll(q, -(m // 2)) * sets["band12"].cell_mask(grid)
    return FilterMatrix(2, journe_sigma_chain(), grid, samples)
