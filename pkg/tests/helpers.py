"""Shared builders for randomized but exactly valid filters."""

import math

import numpy as np

from gmrafilters import FilterMatrix, GridSpec, SigmaChain

SQRT2 = math.sqrt(2.0)


def random_scalar_filter(rng: np.random.Generator, depth: int = 4) -> FilterMatrix:
    """A random multiplicity-one filter built coset pair by coset pair.

    On each pair {t, t + M/2} the samples are sqrt(2) cos(phi) e^(i a) and
    sqrt(2) sin(phi) e^(i b), so the pair identity sums to 2 exactly up to
    rounding whatever the draws.
    """
    grid = GridSpec(2, 1, depth)
    m = grid.cells
    mp = m // 2
    phi = rng.uniform(0.0, 2.0 * np.pi, mp)
    a = rng.uniform(0.0, 2.0 * np.pi, mp)
    b = rng.uniform(0.0, 2.0 * np.pi, mp)
    samples = np.empty((1, 1, m), dtype=np.complex128)
    samples[0, 0, :mp] = SQRT2 * np.cos(phi) * np.exp(1j * a)
    samples[0, 0, mp:] = SQRT2 * np.sin(phi) * np.exp(1j * b)
    return FilterMatrix(2, SigmaChain.full_circle(1), grid, samples)


def random_phase_copy(filt: FilterMatrix, rng: np.random.Generator) -> FilterMatrix:
    """Multiply every sample by an independent unit phase.

    Moduli are untouched and the cross terms of the defining identity
    vanish through disjoint supports, so validity is preserved.
    """
    phases = np.exp(2j * np.pi * rng.random(filt.samples.shape))
    return FilterMatrix(filt.scale, filt.chain, filt.grid, filt.samples * phases)


def with_sample(filt: FilterMatrix, i: int, j: int, cell: int, value) -> FilterMatrix:
    """Copy of a filter with one sample overwritten."""
    samples = filt.samples.copy()
    samples[i, j, cell] = value
    return FilterMatrix(filt.scale, filt.chain, filt.grid, samples)
