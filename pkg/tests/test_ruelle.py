"""The averaging operator, its adjoint, and the purity classification."""

import math

import numpy as np
import pytest

from gmrafilters import (
    DimensionCapError,
    GridSpec,
    NOT_PURE_CERTIFIED,
    PURE_AT_RESOLUTION,
    PURE_CERTIFIED,
    ParameterError,
    ResolutionError,
    SigmaChain,
    VecField,
    assemble_transfer_matrix,
    classify_purity,
    decay_probe,
    derive_journe,
    isometry_residual,
    make_journe_step,
    make_constant,
    make_haar,
    make_journe_family,
    make_shannon,
    martingale_sequence,
    random_vecfield,
    ruelle_apply,
    search_certificate,
    transfer_apply,
)
from gmrafilters.filters import FilterMatrix
from gmrafilters.ruelle import DIM_CAP_ENV

from helpers import random_scalar_filter

SQRT2 = math.sqrt(2.0)
INV_SQRT2 = 1.0 / SQRT2


def journe_filter():
    return make_journe_family(derive_journe(0.1).params)


class TestVecField:
    def test_rejects_mass_outside_supports(self):
        filt = make_journe_step()
        values = np.ones((2, filt.cells), dtype=np.complex128)
        with pytest.raises(ParameterError):
            VecField(filt.chain, filt.grid, values)

    def test_masked_zeroes_the_outside(self):
        filt = make_journe_step()
        f = VecField.masked(
            filt.chain, filt.grid, np.ones((2, filt.cells), dtype=np.complex128)
        )
        masks = filt.sigma_masks()
        assert np.all(f.values[0, masks[0]] == 1)
        assert np.all(f.values[1, ~masks[1]] == 0)

    def test_norm_is_cell_averaged(self):
        grid = GridSpec(2, 1, 2)
        chain = SigmaChain.full_circle(1)
        f = VecField(chain, grid, 2 * np.ones((1, 4)))
        assert f.norm() == pytest.approx(2.0)
        assert f.refine().norm() == pytest.approx(2.0)

    def test_inner_product_conjugates_the_right_slot(self):
        grid = GridSpec(2, 1, 1)
        chain = SigmaChain.full_circle(1)
        f = VecField(chain, grid, np.array([[1j, 0]]))
        g = VecField(chain, grid, np.array([[1.0, 0]]))
        assert f.inner(g) == pytest.approx(0.5j)

    def test_random_field_is_reproducible(self):
        filt = make_journe_step()
        a = random_vecfield(filt.chain, filt.grid, np.random.default_rng(7))
        b = random_vecfield(filt.chain, filt.grid, np.random.default_rng(7))
        assert np.array_equal(a.values, b.values)


class TestOperator:
    def test_hand_computed_application(self):
        filt = make_haar(depth=2)
        coarse = filt.coarse_grid()
        f = VecField(filt.chain, coarse, np.array([[2.0, 3.0]]))
        out = ruelle_apply(filt, f)
        h = filt.samples[0, 0]
        expected = h * np.array([2.0, 3.0, 2.0, 3.0])
        assert np.allclose(out.values[0], expected, atol=0)

    def test_wrong_grid_is_refused(self):
        filt = make_haar(depth=2)
        f = VecField.ones(filt.chain, filt.grid)
        with pytest.raises(ResolutionError):
            ruelle_apply(filt, f)
        g = VecField.ones(filt.chain, filt.coarse_grid())
        with pytest.raises(ResolutionError):
            transfer_apply(filt, g)

    @pytest.mark.parametrize(
        "make",
        [make_constant, make_haar, make_shannon, make_journe_step, journe_filter],
    )
    def test_isometry_on_valid_filters(self, make):
        assert isometry_residual(make(), trials=20, seed=0) <= 1e-12

    def test_isometry_fails_on_an_invalid_filter(self):
        filt = make_constant()
        bad = FilterMatrix(
            filt.scale, filt.chain, filt.grid, filt.samples * SQRT2
        )
        assert isometry_residual(bad, trials=5, seed=0) > 0.1

    @pytest.mark.parametrize("make", [make_haar, make_journe_step, journe_filter])
    def test_adjoint_relation_is_exact(self, make):
        filt = make()
        rng = np.random.default_rng(3)
        coarse = filt.coarse_grid()
        for _ in range(20):
            f = random_vecfield(filt.chain, coarse, rng)
            g = random_vecfield(filt.chain, filt.grid, rng)
            lhs = ruelle_apply(filt, f).inner(g)
            rhs = f.inner(transfer_apply(filt, g))
            assert abs(lhs - rhs) <= 1e-14


class TestTransferMatrix:
    def test_matrix_agrees_with_the_functional_adjoint(self):
        filt = make_journe_step()
        tm = assemble_transfer_matrix(filt)
        rng = np.random.default_rng(11)
        g = random_vecfield(filt.chain, filt.grid, rng)
        vec = np.array([g.values[i, t] for i, t in tm.basis])
        direct = transfer_apply(filt, g).refine()
        expected = np.array([direct.values[i, t] for i, t in tm.basis])
        assert np.allclose(tm.matrix @ vec, expected, atol=1e-14)

    def test_basis_is_restricted_to_the_supports(self):
        filt = make_journe_step()
        tm = assemble_transfer_matrix(filt)
        masks = filt.sigma_masks()
        assert tm.dimension == int(masks[0].sum() + masks[1].sum())
        assert all(masks[i][t] for i, t in tm.basis)

    def test_dimension_cap(self):
        with pytest.raises(DimensionCapError):
            assemble_transfer_matrix(make_haar(depth=4), dim_cap=8)

    def test_dimension_cap_from_environment(self, monkeypatch):
        monkeypatch.setenv(DIM_CAP_ENV, "8")
        with pytest.raises(DimensionCapError):
            assemble_transfer_matrix(make_haar(depth=4))
        monkeypatch.setenv(DIM_CAP_ENV, "64")
        assemble_transfer_matrix(make_haar(depth=4))

    @pytest.mark.parametrize(
        "make",
        [make_constant, make_haar, make_shannon, make_journe_step, journe_filter],
    )
    def test_spectrum_stays_in_the_closed_unit_disk(self, make):
        tm = assemble_transfer_matrix(make())
        moduli = np.abs(np.linalg.eigvals(tm.matrix))
        assert moduli.max() <= 1.0 + 1e-10

    def test_shannon_spectrum_is_strictly_contractive(self):
        tm = assemble_transfer_matrix(make_shannon(depth=3))
        moduli = np.abs(np.linalg.eigvals(tm.matrix))
        assert moduli.max() <= INV_SQRT2 + 1e-12

    def test_journe_top_modulus(self):
        tm = assemble_transfer_matrix(journe_filter())
        moduli = np.abs(np.linalg.eigvals(tm.matrix))
        assert moduli.max() == pytest.approx(INV_SQRT2, abs=1e-6)


class TestClassification:
    def test_requires_a_verified_filter(self):
        filt = make_constant()
        bad = FilterMatrix(filt.scale, filt.chain, filt.grid, filt.samples * 1.1)
        with pytest.raises(ParameterError):
            classify_purity(bad)

    def test_constant_filter_is_not_pure(self):
        verdict = classify_purity(make_constant())
        assert verdict.status == NOT_PURE_CERTIFIED
        assert len(verdict.eigenpairs) >= 1
        pair = verdict.eigenpairs[0]
        assert pair.eigenvalue == pytest.approx(1.0, abs=1e-12)
        assert pair.residual <= 1e-14
        assert pair.unit_norm_ok
        assert pair.unit_norm_dev <= 1e-12
        spread = np.ptp(np.abs(pair.fld.values))
        assert spread <= 1e-12

    def test_constant_eigenpair_is_sharpened_to_the_closed_form(self):
        verdict = classify_purity(make_constant())
        pair = verdict.eigenpairs[0]
        assert pair.eigenvalue == 1.0 + 0.0j
        assert pair.residual == 0.0
        assert pair.unit_norm_dev == 0.0
        assert np.all(pair.fld.values == 1.0)
        assert verdict.diagnostics["sharpened_to_exact"] == 1

    def test_sharpening_leaves_distant_fields_alone(self):
        verdict = classify_purity(make_haar())
        assert verdict.diagnostics["sharpened_to_exact"] == 0

    @pytest.mark.parametrize("depth", [4, 5, 6])
    def test_haar_verdict_is_stable_across_resolutions(self, depth):
        filt = make_haar(depth=depth)
        verdict = classify_purity(filt)
        assert verdict.status == PURE_AT_RESOLUTION
        assert not verdict.eigenpairs
        assert verdict.resolution == filt.grid

    def test_certificate_upgrades_the_haar_verdict(self):
        filt = make_haar()
        cert = search_certificate(filt)
        assert cert is not None
        verdict = classify_purity(filt, certificate=cert)
        assert verdict.status == PURE_CERTIFIED
        assert not verdict.diagnostics["anomalies"]

    def test_contradictory_evidence_is_inconclusive(self):
        verdict = classify_purity(make_constant(), certificate=object())
        assert verdict.status == "inconclusive"
        assert verdict.diagnostics["anomalies"]

    def test_diagnostics_carry_the_spectrum_and_flags(self):
        verdict = classify_purity(make_constant(depth=3))
        diag = verdict.diagnostics
        assert diag["dimension"] == 8
        assert len(diag["spectrum"]) == 8
        order = diag["spectrum_order"]
        moduli = np.abs(diag["spectrum"])
        assert sorted(moduli, reverse=True) == pytest.approx(
            [moduli[k] for k in order]
        )
        assert diag["candidate_flags"][order[0]]
        assert diag["passing_flags"][order[0]]
        assert diag["candidates_tested"][0]["passed"]
        assert diag["candidates_tested"][0]["block_deviation"] <= 1e-12

    def test_constant_eigenvector_martingale_is_flat(self):
        verdict = classify_purity(make_constant())
        devs = verdict.diagnostics["martingale_max_dev"]
        assert len(devs) >= 1
        assert max(devs) <= 1e-12


class TestMartingale:
    def test_list_runs_from_zero_to_n_max(self):
        filt = make_haar(depth=3)
        f = VecField.ones(filt.chain, filt.grid)
        seq = martingale_sequence(f, f, filt.scale, 2)
        assert len(seq) == 3
        assert np.allclose(seq[0].samples, np.abs(f.values[0]) ** 2, atol=0)

    def test_every_order_has_the_same_mean(self):
        filt = make_journe_step()
        rng = np.random.default_rng(5)
        f = random_vecfield(filt.chain, filt.grid, rng)
        g = random_vecfield(filt.chain, filt.grid, rng)
        target = f.inner(g)
        for x in martingale_sequence(f, g, filt.scale, 2):
            assert complex(x.samples.mean()) == pytest.approx(target, abs=1e-14)

    def test_grid_must_resolve_the_kernel(self):
        grid = GridSpec(2, 3, 1)
        chain = SigmaChain.full_circle(1)
        f = VecField.ones(chain, grid)
        martingale_sequence(f, f, 2, 1)
        with pytest.raises(ResolutionError):
            martingale_sequence(f, f, 2, 2)

    def test_mismatched_grids_are_refused(self):
        chain = SigmaChain.full_circle(1)
        f = VecField.ones(chain, GridSpec(2, 1, 3))
        g = VecField.ones(chain, GridSpec(2, 1, 2))
        with pytest.raises(ResolutionError):
            martingale_sequence(f, g, 2, 1)


class TestDecayProbe:
    def _unit_ones(self, filt):
        probe = VecField.ones(filt.chain, filt.grid)
        return probe.scaled(1.0 / probe.norm())

    @pytest.mark.parametrize("make", [make_haar, make_shannon])
    def test_low_pass_probe_decays_geometrically(self, make):
        filt = make()
        norms = decay_probe(filt, self._unit_ones(filt), 5)
        assert norms == pytest.approx(
            [INV_SQRT2**k for k in range(6)], abs=1e-12
        )

    def test_constant_probe_never_decays(self):
        filt = make_constant()
        norms = decay_probe(filt, self._unit_ones(filt), 5)
        assert norms == pytest.approx([1.0] * 6, abs=1e-14)

    @pytest.mark.parametrize("make", [make_journe_step, journe_filter])
    def test_probe_is_nonincreasing_on_valid_filters(self, make):
        filt = make()
        norms = decay_probe(filt, self._unit_ones(filt), 6)
        for a, b in zip(norms, norms[1:]):
            assert b <= a + 1e-12

    def test_random_valid_filters_are_nonexpansive(self):
        rng = np.random.default_rng(2)
        for _ in range(5):
            filt = random_scalar_filter(rng)
            f = random_vecfield(filt.chain, filt.grid, rng)
            nrm = f.norm()
            if nrm == 0:
                continue
            norms = decay_probe(filt, f.scaled(1 / nrm), 4)
            for a, b in zip(norms, norms[1:]):
                assert b <= a + 1e-12
