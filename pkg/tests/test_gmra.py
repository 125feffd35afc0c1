"""Refinement towers, telescoping, and the intersection dichotomy report."""

import numpy as np
import pytest

from gmrafilters import (
    DimensionCapError,
    NOT_PURE_CERTIFIED,
    PURE_CERTIFIED,
    ParameterError,
    ResolutionError,
    VecField,
    build_tower,
    cocycle_product,
    derive_journe,
    intersection_report,
    make_journe_step,
    make_constant,
    make_haar,
    make_journe_family,
    random_vecfield,
    ruelle_apply,
)


class TestTower:
    def test_haar_level_dimensions(self):
        tower = build_tower(make_haar(depth=1), 3)
        assert [tower.dimension(k) for k in range(4)] == [2, 4, 8, 16]
        assert [g.cells for g in tower.levels] == [2, 4, 8, 16]

    def test_journe_level_dimensions_weight_by_multiplicity(self):
        tower = build_tower(make_journe_step(), 2)
        assert [tower.dimension(k) for k in range(3)] == [112, 224, 448]

    def test_each_embedding_is_an_isometry(self):
        tower = build_tower(make_journe_step(), 3)
        rng = np.random.default_rng(0)
        f = random_vecfield(tower.base.chain, tower.levels[0], rng)
        for _ in range(tower.depth):
            g = tower.embed(f)
            assert g.norm() == pytest.approx(f.norm(), abs=1e-13)
            f = g

    @pytest.mark.parametrize("base,steps", [(make_haar, 3), (make_journe_step, 2)])
    def test_lift_telescopes_into_the_cocycle(self, base, steps):
        filt = base(depth=1) if base is make_haar else base()
        tower = build_tower(filt, steps)
        rng = np.random.default_rng(4)
        f = random_vecfield(filt.chain, tower.levels[0], rng)
        top = tower.lift(f)
        n = filt.scale
        grid = tower.levels[steps]
        for cell in range(grid.cells):
            x = grid.point_of_cell(cell)
            prod = cocycle_product(filt, x, steps)
            target = x.dilate_iter(n, steps)
            source = f.values[:, f.grid.cell_of_point(target)]
            expected = prod @ source
            assert np.allclose(top.values[:, cell], expected, atol=1e-12)

    def test_lift_to_intermediate_level(self):
        tower = build_tower(make_haar(depth=1), 3)
        f = VecField.ones(tower.base.chain, tower.levels[0])
        mid = tower.lift(f, to_level=2)
        assert mid.grid == tower.levels[2]
        with pytest.raises(ResolutionError):
            tower.lift(mid, to_level=1)

    def test_constant_filter_keeps_the_ones_field_at_every_level(self):
        tower = build_tower(make_constant(depth=2), 3)
        f = VecField.ones(tower.base.chain, tower.levels[0])
        for level in range(1, tower.depth + 1):
            lifted = tower.lift(f, to_level=level)
            assert np.all(lifted.values == 1.0)

    def test_embedding_agrees_with_direct_application(self):
        filt = make_journe_step()
        tower = build_tower(filt, 1)
        rng = np.random.default_rng(8)
        f = random_vecfield(filt.chain, filt.grid, rng)
        assert np.allclose(
            tower.embed(f).values,
            ruelle_apply(tower.stages[0], f).values,
            atol=0,
        )

    def test_alien_field_is_refused(self):
        tower = build_tower(make_haar(depth=1), 2)
        f = VecField.ones(tower.base.chain, tower.levels[2].finer())
        with pytest.raises(ResolutionError):
            tower.level_of(f)

    def test_top_of_tower_cannot_embed_further(self):
        tower = build_tower(make_haar(depth=1), 1)
        f = VecField.ones(tower.base.chain, tower.levels[1])
        with pytest.raises(ResolutionError):
            tower.embed(f)

    def test_dimension_cap(self):
        with pytest.raises(DimensionCapError):
            build_tower(make_haar(depth=1), 6, dim_cap=100)
        build_tower(make_haar(depth=1), 5, dim_cap=100)

    def test_negative_depth_is_refused(self):
        with pytest.raises(ParameterError):
            build_tower(make_haar(), -1)


class TestIntersectionReport:
    def test_haar_intersection_is_trivial_with_a_certificate(self):
        rep = intersection_report(make_haar())
        assert rep.verdict.status == PURE_CERTIFIED
        assert rep.certificate is not None
        assert rep.equivalence == {
            "tail_intersection_nontrivial": "no",
            "modulus_one_eigenvector": "ruled_out",
            "consistent": True,
        }
        assert "purity" in rep.narrative
        assert "zero" in rep.narrative

    def test_constant_intersection_is_nontrivial_with_a_witness(self):
        rep = intersection_report(make_constant())
        assert rep.verdict.status == NOT_PURE_CERTIFIED
        assert rep.certificate is None
        assert rep.equivalence["tail_intersection_nontrivial"] == "yes"
        assert rep.equivalence["modulus_one_eigenvector"] == "found"
        assert rep.equivalence["consistent"] is True
        # the sequence-space model with its fixed unit mass at 0
        assert "square-summable" in rep.narrative
        assert "power of 2" in rep.narrative
        assert "unit mass" in rep.narrative
        assert "fixed" in rep.narrative

    def test_journe_family_intersection_is_trivial(self):
        filt = make_journe_family(derive_journe(0.1).params)
        rep = intersection_report(filt)
        assert rep.verdict.status == PURE_CERTIFIED
        assert rep.equivalence["consistent"] is True

    def test_dimension_caution_is_always_present(self):
        for filt in (make_haar(), make_constant()):
            rep = intersection_report(filt)
            assert "No dimension" in rep.dimension_caution
            assert "infinite dimensional" in rep.dimension_caution
