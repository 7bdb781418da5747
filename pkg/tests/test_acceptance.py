"""Acceptance criteria 1-7 at their stated budgets and tolerances.

Each test prints one PASS/FAIL line (visible with or without ``-s``).
"""
import time

import numpy as np
import pytest

from volflux.flux import flux_loop_demo, flux_of_word, flux_oracle
from volflux.gamma import Budget, gamma_closed_form, gamma_mc, gamma_stratified, injectivity_witness, verify_theorem2
from volflux.homology import CohomologyClass
from volflux.kernel import STRAIGHT
from volflux.scenario import load_default, random_case, unit_profiles
from volflux.suites import SuiteReport, run_invariants
from volflux.surface import build_torus

from conftest import unit_word

SAMPLES = 10**6
GRID = 1024
SCALES = (-2, -1, 0.5, 3)


@pytest.fixture
def report_line(capsys, request):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'} {detail}")

    return emit


def test_criterion_1_lemma(system, lemma_word, report_line):
    phi = CohomologyClass([1, 0, 0, 0])
    t0 = time.perf_counter()
    mc = gamma_mc(phi, lemma_word, STRAIGHT, system, SAMPLES, 0)
    st = gamma_stratified(phi, lemma_word, STRAIGHT, system, GRID)
    secs = time.perf_counter() - t0
    assert lemma_word.letters[0].profile.integral() == 0.5
    ok_mc = abs(mc.value - 0.5) <= 3 * mc.stderr and mc.stderr <= 0.005
    ok_st = abs(st.value - 0.5) <= 0.01 and abs(st.value - 0.5) <= st.bound
    ok = ok_mc and ok_st and secs < 60
    report_line(
        1, ok,
        f"mc={mc.value:.5f}+-{mc.stderr:.5f} stratified={st.value:.6f} (bound {st.bound:.4f}) in {secs:.1f}s",
    )
    assert ok


def test_criterion_2_theorem2(system, cyl, report_line):
    failures = []
    worst = 0.0
    for k in range(20):
        word, phi = random_case(1000 + k, cyl)
        assert 1 <= len(word) <= 5
        rep = verify_theorem2(phi, word, system, Budget(samples=SAMPLES, grid=GRID, seed=k))
        mc = rep.estimates[0]
        if mc.stderr > 0:
            worst = max(worst, abs(mc.value - rep.closed_form) / mc.stderr)
        if not rep.passed:
            failures.append(k)
    ok = not failures
    report_line(2, ok, f"20 cases, failures={failures}, worst mc deviation {worst:.2f} sigma")
    assert ok


def test_criterion_3_scaling(system, cyl, lemma_word, report_line):
    words = [lemma_word] + [unit_word(cyl[n]) for n in ("h1", "h2", "v1", "v2")]
    phi = CohomologyClass([0.3, -0.7, 0.5, 0.9])
    worst = 0.0
    for w in words:
        f = flux_of_word(w, system).periods
        g = gamma_closed_form(phi, w, system)
        for s in SCALES:
            fs = flux_of_word(w.scaled(s), system).periods
            gs = gamma_closed_form(phi, w.scaled(s), system)
            scale_f = np.max(np.abs(s * f))
            worst = max(worst, np.max(np.abs(fs - s * f)) / scale_f)
            worst = max(worst, abs(gs - s * g) / abs(s * g))
    ok = worst <= 1e-12
    report_line(3, ok, f"max relative deviation {worst:.2e}")
    assert ok


def test_criterion_4_flux_oracle(system, cyl, report_line):
    bad = []
    worst = 0.0
    for a, name in enumerate(("h1", "h2", "v1", "v2")):
        w = unit_word(cyl[name])
        periods = flux_of_word(w, system).periods
        for j, cid in enumerate(system.ids):
            est = flux_oracle(w, cid, system, SAMPLES, seed=100 + 4 * a + j)
            dev = abs(est.value - periods[j])
            if est.stderr > 0:
                worst = max(worst, dev / est.stderr)
            if dev > 3 * est.stderr:
                bad.append(f"{name}/{cid}")
    ok = not bad
    report_line(4, ok, f"16 pairs, failures={bad}, worst {worst:.2f} sigma")
    assert ok


def test_criterion_5_injectivity(system, cyl, report_line):
    rep = injectivity_witness(system, unit_profiles(system, cyl), Budget(samples=SAMPLES), confirm="all")
    det_ok = abs(abs(rep.det) - 1.0) <= 1e-9
    mc_ok = bool(np.all(rep.mc_checks))
    ok = det_ok and mc_ok and rep.passed
    report_line(5, ok, f"|det|={abs(rep.det):.12f}, MC entries confirmed {int(rep.mc_checks.sum())}/16")
    assert ok


def test_criterion_6_loop_demo(L, report_line):
    torus = flux_loop_demo(build_torus())
    genus2 = flux_loop_demo(L)
    mag = float(np.max(np.abs(torus.flux.periods)))
    ok = torus.is_loop and abs(mag - 1.0) <= 1e-12 and not genus2.is_loop
    report_line(6, ok, f"torus isLoop={torus.is_loop} period={mag!r}; genus2-L isLoop={genus2.is_loop}")
    assert ok


def test_criterion_7_property_suite(report_line):
    sc = load_default()
    report = SuiteReport(seed=sc.budget.seed, workers=sc.budget.workers, suites=["invariants"])
    t0 = time.perf_counter()
    run_invariants(sc, report)
    secs = time.perf_counter() - t0
    kinds = {r.name.split("/")[0] for r in report.rows}
    needed = {"paths", "schedule-smoothstep", "schedule-overshoot", "commute", "additivity-gamma",
              "additivity-flux", "volume-chi2", "crossing-antisymmetry", "normalize-idempotence"}
    bad = [r.name for r in report.rows if not r.passed]
    ok = needed <= kinds and not bad and secs < 300
    report_line(7, ok, f"{len(report.rows)} checks, failures={bad}, {secs:.1f}s")
    assert ok
