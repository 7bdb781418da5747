import numpy as np
import pytest

from volflux.errors import ExcessiveDegeneracy, ProfileCountMismatch
from volflux.gamma import (
    Budget,
    build_loop,
    gamma_closed_form,
    gamma_mc,
    gamma_stratified,
    injectivity_witness,
    verify_theorem2,
)
from volflux.homology import CohomologyClass, HomologyVector, loop_class, signed_crossings
from volflux.isotopy import Letter, TwistProfile, TwistWord
from volflux.kernel import STRAIGHT, PathSystem
from volflux.scenario import unit_profiles

from conftest import unit_word

DUAL_H1 = CohomologyClass([1, 0, 0, 0], id="dual-h1")


class TestBuildLoop:
    def test_empty_word(self, L, system):
        loop = build_loop(L, TwistWord(()), (0.3, 0.7))
        np.testing.assert_array_equal(loop_class(loop, system).comps, np.zeros(4))

    def test_outside_cylinders(self, L, system, cyl):
        w = TwistWord((Letter(TwistProfile.tent(cyl["h2"], 1.5, 0.25, 3.0), 1.0),))
        np.testing.assert_array_equal(loop_class(build_loop(L, w, (0.3, 0.7)), system).comps, np.zeros(4))

    def test_one_wrap(self, L, system, cyl):
        # omega(z_x) = 2.4 on the circumference-2 cylinder
        w = TwistWord((Letter(TwistProfile.tent(cyl["h1"], 0.3, 0.2, 2.4), 1.0),))
        loop = build_loop(L, w, (0.2, 0.3))
        crossings = [signed_crossings(loop, c) for c in system.curves]
        assert crossings[2:] == [1, 1] or crossings[2:] == [-1, -1]
        comps = loop_class(loop, system).comps
        assert abs(comps[0]) == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(comps[1:], 0, atol=1e-12)

    def test_closed_at_base_point(self, L, cyl):
        w = TwistWord((Letter(TwistProfile.tent(cyl["v1"], 0.5, 0.3, 1.0), 1.0),))
        loop = build_loop(L, w, (0.4, 1.3), PathSystem("waypoint", (0.2, 0.8)))
        assert loop.pieces[0][0] == L.base_point and loop.pieces[-1][1] == L.base_point


class TestGammaMC:
    def test_phi_zero(self, system, lemma_word):
        est = gamma_mc(CohomologyClass(np.zeros(4)), lemma_word, STRAIGHT, system, 10_000, 0)
        assert est.value == 0.0 and est.stderr == 0.0

    def test_lemma_case(self, system, lemma_word):
        est = gamma_mc(DUAL_H1, lemma_word, STRAIGHT, system, 10**6, 0)
        assert abs(est.value - 0.5) <= 3 * est.stderr
        assert est.stderr <= 0.005

    def test_negated_word(self, system, cyl):
        phi = CohomologyClass([0.3, -0.7, 0.5, 0.9])
        w = TwistWord(
            (
                Letter(TwistProfile.tent(cyl["h1"], 0.4, 0.3, 2.0), 1.2),
                Letter(TwistProfile.cubic_bump(cyl["v2"], 1.2, 1.8, 1.5), -0.9),
            )
        )
        a = gamma_mc(phi, w, STRAIGHT, system, 200_000, 1)
        b = gamma_mc(phi, w.scaled(-1), STRAIGHT, system, 200_000, 2)
        assert abs(a.value + b.value) <= 3 * np.hypot(a.stderr, b.stderr)

    def test_reproducible_bitwise(self, system, lemma_word):
        a = gamma_mc(DUAL_H1, lemma_word, STRAIGHT, system, 300_000, 9, workers=3)
        b = gamma_mc(DUAL_H1, lemma_word, STRAIGHT, system, 300_000, 9, workers=3)
        assert a == b

    def test_excessive_degeneracy(self, system, cyl):
        # an integrand that flags every sample as degenerate
        from volflux import montecarlo

        def always_bad(pts):
            return np.zeros(len(pts)), np.ones(len(pts), dtype=bool)

        with pytest.raises(ExcessiveDegeneracy):
            montecarlo.integrate(system.surface, always_bad, 10_000, 0)


class TestGammaStratified:
    def test_empty_word(self, system):
        est = gamma_stratified(DUAL_H1, TwistWord(()), STRAIGHT, system, 64)
        assert est.value == 0.0 and est.bound == 0.0

    def test_lemma_case(self, system, lemma_word):
        est = gamma_stratified(DUAL_H1, lemma_word, STRAIGHT, system, 1024)
        assert est.bound <= 0.01
        assert abs(est.value - 0.5) <= est.bound

    def test_doubling_halves_bound(self, system, lemma_word):
        coarse = gamma_stratified(DUAL_H1, lemma_word, STRAIGHT, system, 128)
        fine = gamma_stratified(DUAL_H1, lemma_word, STRAIGHT, system, 256)
        assert fine.bound / coarse.bound == pytest.approx(0.5, abs=0.05)

    def test_minimum_resolution(self, system, lemma_word):
        with pytest.raises(ValueError):
            gamma_stratified(DUAL_H1, lemma_word, STRAIGHT, system, 8)


class TestClosedForm:
    def test_single_letter(self, system, cyl):
        phi = CohomologyClass([0.3, -0.7, 0.5, 0.9])
        for name in ("h1", "h2", "v1", "v2"):
            prof = TwistProfile.cubic_bump(cyl[name], cyl[name].z0 + 0.2, cyl[name].z1 - 0.1, 1.7)
            w = TwistWord((Letter(prof, -0.8),))
            expected = phi.coeffs[system.index(name)] * -0.8 * prof.integral()
            assert gamma_closed_form(phi, w, system) == pytest.approx(expected, abs=1e-14)

    def test_sum_over_letters(self, system, cyl):
        phi = CohomologyClass([0.3, -0.7, 0.5, 0.9])
        words = [unit_word(cyl[n]).scaled(s) for n, s in zip(("h1", "v2", "h2"), (0.5, -2.0, 1.5))]
        total = TwistWord(tuple(l for w in words for l in w.letters))
        assert gamma_closed_form(phi, total, system) == pytest.approx(
            sum(gamma_closed_form(phi, w, system) for w in words), abs=1e-14
        )

    def test_orthogonal_phi(self, system, lemma_word):
        assert gamma_closed_form(CohomologyClass([0, 1, 1, 1]), lemma_word, system) == 0.0

    @pytest.mark.parametrize("t", (-2, -1, 0.5, 3))
    def test_scaling(self, system, lemma_word, t):
        phi = CohomologyClass([0.3, -0.7, 0.5, 0.9])
        base = gamma_closed_form(phi, lemma_word, system)
        assert gamma_closed_form(phi, lemma_word.scaled(t), system) == pytest.approx(t * base, rel=1e-12)


class TestVerifyTheorem2:
    def test_lemma_configuration(self, system, lemma_word):
        rep = verify_theorem2(DUAL_H1, lemma_word, system, Budget(samples=200_000, grid=256))
        assert rep.closed_form == pytest.approx(0.5, abs=1e-15)
        assert rep.passed

    def test_empty_word(self, system):
        rep = verify_theorem2(CohomologyClass([0.2, 0.4, -1, 1]), TwistWord(()), system, Budget(samples=10_000, grid=32))
        assert rep.closed_form == 0.0
        assert all(e.value == 0.0 for e in rep.estimates)
        assert rep.passed

    def test_detects_wrong_closed_form(self, system, lemma_word):
        from volflux.gamma import check_estimate

        est = gamma_mc(DUAL_H1, lemma_word, STRAIGHT, system, 200_000, 4)
        assert not check_estimate(est, 0.6, Budget())[0]


class TestInjectivity:
    def test_unit_profiles(self, system, cyl):
        rep = injectivity_witness(system, unit_profiles(system, cyl), confirm="none")
        # with the dual basis, entry (i, j) is phi_i(PD(flux of core j)) = delta_ij
        np.testing.assert_allclose(rep.matrix, np.eye(4), atol=1e-12)
        assert abs(rep.det) == pytest.approx(1.0, abs=1e-9)
        assert rep.passed

    def test_column_scaling(self, system, cyl):
        profs = unit_profiles(system, cyl)
        base = injectivity_witness(system, profs, confirm="none").matrix
        profs[2] = profs[2].scaled(-1.5)
        scaled = injectivity_witness(system, profs, confirm="none").matrix
        np.testing.assert_allclose(scaled[:, 2], -1.5 * base[:, 2], atol=1e-12)

    def test_zero_integral_fails(self, system, cyl):
        profs = unit_profiles(system, cyl)
        c = cyl["h2"]
        profs[1] = TwistProfile(c, (1.2, 1.5, 1.8), ((0.0, 1.0, -10 / 3), (0.0, -1.0, 10 / 3)))
        assert profs[1].integral() == pytest.approx(0.0, abs=1e-15)
        rep = injectivity_witness(system, profs, confirm="none")
        assert abs(rep.det) < 1e-12
        assert not rep.passed

    def test_count_mismatch(self, system, cyl):
        with pytest.raises(ProfileCountMismatch):
            injectivity_witness(system, unit_profiles(system, cyl)[:3])

    def test_mc_diagonal(self, system, cyl):
        rep = injectivity_witness(system, unit_profiles(system, cyl), Budget(samples=100_000), confirm="diagonal")
        assert rep.passed
        assert np.isnan(rep.mc_values[0, 1]) and not np.isnan(rep.mc_values[1, 1])
