import numpy as np
import pytest

from volflux.errors import UnknownCurve, UnsupportedSurface
from volflux.flux import flux_loop_demo, flux_of_word, flux_oracle
from volflux.isotopy import Cylinder, Letter, TwistProfile, TwistWord
from volflux.surface import FlatSurface

from conftest import unit_word

SCALES = (-2, -1, 0.5, 3)


def test_empty_word(system):
    np.testing.assert_array_equal(flux_of_word(TwistWord(()), system).periods, np.zeros(4))


def test_lemma_word_periods(system, lemma_word):
    # column h1 of J: h1 meets v1 and v2 once each
    J = system.intersection_form
    assert lemma_word.letters[0].profile.integral() == pytest.approx(0.5, abs=1e-15)
    np.testing.assert_allclose(flux_of_word(lemma_word, system).periods, 0.5 * J[0], atol=1e-15)
    np.testing.assert_allclose(np.abs(flux_of_word(lemma_word, system).periods), [0, 0, 0.5, 0.5], atol=1e-15)


@pytest.mark.parametrize("s", SCALES)
def test_linearity_in_scale(system, lemma_word, s):
    base = flux_of_word(lemma_word, system).periods
    np.testing.assert_allclose(flux_of_word(lemma_word.scaled(s), system).periods, s * base, rtol=1e-12, atol=0)


def test_additivity(system, cyl, lemma_word):
    w2 = TwistWord((Letter(TwistProfile.cubic_bump(cyl["v2"], 1.2, 1.8, 1.4), -0.6),))
    total = flux_of_word(lemma_word * w2, system).periods
    parts = flux_of_word(lemma_word, system).periods + flux_of_word(w2, system).periods
    np.testing.assert_allclose(total, parts, atol=1e-15)


def test_unknown_curve(system):
    stray = Cylinder("h9", "genus2-L", "horizontal", 0.0, 2.0, 0.0, 1.0, "nope")
    w = TwistWord((Letter(TwistProfile.tent(stray, 0.5, 0.2, 1.0), 1.0),))
    with pytest.raises(UnknownCurve):
        flux_of_word(w, system)


class TestOracle:
    def test_empty_word_exact(self, system):
        assert flux_oracle(TwistWord(()), "v1", system, 1000, 0).value == 0.0

    def test_lemma_word_v1(self, system, lemma_word):
        est = flux_oracle(lemma_word, system["v1"], system, 10**6, 1)
        assert abs(est.value - 0.5) <= 3 * est.stderr
        assert 0 < est.stderr < 0.005

    def test_word_and_inverse_cancel(self, system, cyl):
        w = unit_word(cyl["h2"])
        est = flux_oracle(w * w.inverse(), "v1", system, 200_000, 2)
        assert abs(est.value) <= 3 * est.stderr + 1e-15

    def test_reproducible(self, system, lemma_word):
        a = flux_oracle(lemma_word, "v2", system, 50_000, 5)
        b = flux_oracle(lemma_word, "v2", system, 50_000, 5)
        assert a == b

    def test_workers_reproducible(self, system, lemma_word):
        a = flux_oracle(lemma_word, "v2", system, 50_000, 5, workers=2)
        b = flux_oracle(lemma_word, "v2", system, 50_000, 5, workers=2)
        assert a == b
        assert abs(a.value - 0.5) <= 3 * a.stderr


class TestLoopDemo:
    def test_torus(self, torus):
        rep = flux_loop_demo(torus)
        assert rep.is_loop
        assert np.max(np.abs(rep.flux.periods)) == pytest.approx(1.0, abs=1e-12)
        # the horizontal core is a, so the period sits on the transverse curve b
        assert rep.flux.periods[0] == 0 and abs(rep.flux.periods[1]) == pytest.approx(1.0, abs=1e-12)

    def test_torus_double(self, torus):
        rep = flux_loop_demo(torus, value=2.0)
        assert rep.is_loop
        assert abs(rep.flux.periods[1]) == pytest.approx(2.0, abs=1e-12)

    def test_torus_fractional_not_loop(self, torus):
        assert not flux_loop_demo(torus, value=0.5).is_loop

    def test_l_surface(self, L):
        rep = flux_loop_demo(L)
        assert not rep.is_loop
        assert "rejected" in rep.reason

    def test_unsupported(self, L):
        other = FlatSurface("other", L.polygon, L.identifications, L.base_point, 2)
        with pytest.raises(UnsupportedSurface):
            flux_loop_demo(other)
