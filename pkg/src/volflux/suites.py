"""Named verification suites over a scenario, collected into one report."""
from __future__ import annotations

import time
import zlib
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .flux import flux_loop_demo, flux_of_word, flux_oracle
from .gamma import check_estimate, gamma_closed_form, gamma_mc, gamma_stratified, injectivity_witness
from .homology import CohomologyClass, signed_crossings
from .isotopy import LINEAR, OVERSHOOT, SMOOTHSTEP, Letter, TwistProfile, TwistWord, check_volume_preservation
from .kernel import STRAIGHT, PathSystem
from .scenario import SUITES, Scenario
from .surface import chi_square_uniformity


@dataclass(frozen=True)
class Row:
    suite: str
    name: str
    expected: float
    observed: float
    tolerance: float
    passed: bool
    # "abs": |observed - expected| <= tolerance; "lt": observed < tolerance; "gt": observed > tolerance
    comparison: str = "abs"


@dataclass(frozen=True)
class GammaRow:
    phi_id: str
    word_id: str
    method: str
    value: float
    width: float  # stderr for mc, error bound for stratified
    samples: int
    closed_form: float
    passed: bool


@dataclass(frozen=True)
class FluxRow:
    word_id: str
    curve_id: str
    period: float
    oracle: float
    sigma: float
    passed: bool


@dataclass
class SuiteReport:
    seed: int
    workers: int
    version: str = __version__
    rows: list[Row] = field(default_factory=list)
    gamma_rows: list[GammaRow] = field(default_factory=list)
    flux_rows: list[FluxRow] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)
    suites: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)


def _seed(base: int, label: str) -> int:
    """Stable per-check seed so adding a check does not shift the others."""
    return (int(base) << 32) + zlib.crc32(label.encode())


def _abs_row(suite, name, expected, observed, tol):
    return Row(suite, name, float(expected), float(observed), float(tol), bool(abs(observed - expected) <= tol))


def _explicit(sc: Scenario, items):
    gen = sc.extra.get("generated", set())
    return [x for x in items if x.id not in gen]


def _mc(sc: Scenario, phi, word, label, paths=STRAIGHT, schedule=LINEAR):
    b = sc.budget
    return gamma_mc(phi, word, paths, sc.system, b.samples, _seed(b.seed, label), b.workers, schedule)


def _gamma_pair(sc: Scenario, report: SuiteReport, suite: str, phi, word, expected):
    b = sc.budget
    for method in b.methods:
        if method == "mc":
            est = _mc(sc, phi, word, f"{suite}/{phi.id}/{word.id}")
        else:
            est = gamma_stratified(phi, word, STRAIGHT, sc.system, b.grid)
        ok, tol = check_estimate(est, expected, b)
        report.rows.append(Row(suite, f"{phi.id}/{word.id}/{method}", expected, est.value, tol, ok))
        report.gamma_rows.append(
            GammaRow(phi.id, word.id, method, est.value, est.tolerance_width, est.sample_count, expected, ok)
        )


def run_lemma3(sc: Scenario, report: SuiteReport) -> None:
    """Single-letter words: Gamma(phi)(F) = phi(core) * scale * int omega."""
    for word in _explicit(sc, sc.words):
        if len(word) != 1:
            continue
        letter = word.letters[0]
        for phi in _explicit(sc, sc.phis):
            expected = phi.coeffs[sc.system.index(letter.cylinder.core)] * letter.scale * letter.profile.integral()
            _gamma_pair(sc, report, "lemma3", phi, word, float(expected))


def run_theorem2(sc: Scenario, report: SuiteReport) -> None:
    for wid, pid in sc.theorem2_cases:
        phi, word = sc.phi(pid), sc.word(wid)
        _gamma_pair(sc, report, "theorem2", phi, word, gamma_closed_form(phi, word, sc.system))


def run_injectivity(sc: Scenario, report: SuiteReport) -> None:
    rep = injectivity_witness(sc.system, sc.injectivity_profiles, sc.budget, confirm="all")
    report.rows.append(Row("injectivity", "abs-det", rep.threshold, abs(rep.det), rep.threshold, abs(rep.det) > rep.threshold, "gt"))
    m = len(sc.system.curves)
    for i in range(m):
        for j in range(m):
            tol = sc.budget.tolerance_scale * sc.budget.sigma * rep.mc_stderr[i, j]
            report.rows.append(
                Row("injectivity", f"entry[{i}][{j}]", rep.matrix[i, j], rep.mc_values[i, j], tol, bool(rep.mc_checks[i, j]))
            )


def run_flux_oracle(sc: Scenario, report: SuiteReport) -> None:
    b = sc.budget
    for word in _explicit(sc, sc.words):
        if len(word) != 1:
            continue
        periods = flux_of_word(word, sc.system).periods
        for j, cid in enumerate(sc.system.ids):
            est = flux_oracle(word, cid, sc.system, b.samples, _seed(b.seed, f"flux/{word.id}/{cid}"), b.workers)
            tol = b.tolerance_scale * b.sigma * est.stderr
            ok = abs(est.value - periods[j]) <= tol
            report.rows.append(Row("flux-oracle", f"{word.id}/{cid}", periods[j], est.value, tol, ok))
            report.flux_rows.append(FluxRow(word.id, cid, float(periods[j]), est.value, est.stderr, ok))


def run_flux_loop_demo(sc: Scenario, report: SuiteReport) -> None:
    demo = flux_loop_demo(sc.surface, sample_count=min(sc.budget.samples, 100_000), seed=sc.budget.seed)
    # a full-rotation loop exists only when the surface is a torus
    expect_loop = sc.surface.genus == 1
    report.rows.append(Row("flux-loop-demo", "isLoop", float(expect_loop), float(demo.is_loop), 0.0, demo.is_loop == expect_loop))
    if expect_loop:
        mag = float(np.max(np.abs(demo.flux.periods)))
        L = next(iter(sc.cylinders.values())).circumference
        report.rows.append(_abs_row("flux-loop-demo", "period-magnitude", L, mag, 1e-12))


def _disjoint_pair(sc: Scenario):
    def rect(c):
        corners = np.array([c.from_cyl(np.array([s]), np.array([z]))[0] for s in (c.s0, c.s0 + c.circumference) for z in (c.z0, c.z1)])
        return corners.min(axis=0), corners.max(axis=0)

    cyls = [sc.cylinders[k] for k in sorted(sc.cylinders)]
    for i, a in enumerate(cyls):
        for c in cyls[i + 1 :]:
            (alo, ahi), (clo, chi) = rect(a), rect(c)
            if np.any(ahi <= clo) or np.any(chi <= alo):
                return a, c
    return None


def _unit_tent(cyl, height=1.0):
    return TwistProfile.tent(cyl, (cyl.z0 + cyl.z1) / 2, cyl.height / 4, height)


def run_invariants(sc: Scenario, report: SuiteReport) -> None:
    b = sc.budget
    system = sc.system
    S = "invariants"
    phis = _explicit(sc, sc.phis) or [CohomologyClass(np.eye(len(system.curves))[0], id="dual-0")]
    phi = phis[-1]
    words = [w for w in _explicit(sc, sc.words) if len(w)]
    k = b.tolerance_scale * b.sigma

    def agree(name, e1, e2):
        tol = k * float(np.hypot(e1.stderr, e2.stderr))
        report.rows.append(_abs_row(S, name, e1.value, e2.value, tol))

    # path-system independence
    waypoint = PathSystem("waypoint", (0.2, 0.8) if sc.surface.name == "genus2-L" else (0.3, 0.7))
    for w in words:
        agree(f"paths/{w.id}", _mc(sc, phi, w, f"paths-a/{w.id}"), _mc(sc, phi, w, f"paths-b/{w.id}", paths=waypoint))

    # isotopy independence: schedules and commuting letters
    multi = next((w for w in words if len(w) > 1), words[0] if words else None)
    if multi is not None:
        base = _mc(sc, phi, multi, f"schedule-linear/{multi.id}")
        for sched in (SMOOTHSTEP, OVERSHOOT):
            agree(f"schedule-{sched.name}/{multi.id}", base, _mc(sc, phi, multi, f"schedule-{sched.name}/{multi.id}", schedule=sched))
        fo_lin = flux_oracle(multi, system.ids[0], system, b.samples, _seed(b.seed, "reparam-lin"), b.workers)
        fo_smooth = flux_oracle(multi, system.ids[0], system, b.samples, _seed(b.seed, "reparam-smooth"), b.workers, SMOOTHSTEP)
        agree(f"flux-reparam/{multi.id}", fo_lin, fo_smooth)
    pair = _disjoint_pair(sc)
    if pair is not None:
        a, c = pair
        la, lc = Letter(_unit_tent(a, 1.5), 1.0), Letter(_unit_tent(c, 1.2), -0.8)
        w1, w2 = TwistWord((la, lc), id="commute-ac"), TwistWord((lc, la), id="commute-ca")
        agree(f"commute/{a.id}-{c.id}", _mc(sc, phi, w1, "commute-1"), _mc(sc, phi, w2, "commute-2"))

    # homomorphism additivity
    if len(words) >= 2:
        w1, w2 = words[0], words[1]
        prod = w1 * w2
        e1, e2, e12 = _mc(sc, phi, w1, "add-1"), _mc(sc, phi, w2, "add-2"), _mc(sc, phi, prod, "add-12")
        tol = k * float(np.sqrt(e1.stderr**2 + e2.stderr**2 + e12.stderr**2))
        report.rows.append(_abs_row(S, f"additivity-gamma/{w1.id}*{w2.id}", e1.value + e2.value, e12.value, tol))
        gap = np.abs(flux_of_word(prod, system).periods - flux_of_word(w1, system).periods - flux_of_word(w2, system).periods)
        report.rows.append(_abs_row(S, f"additivity-flux/{w1.id}*{w2.id}", 0.0, float(gap.max()), 1e-12))

    # volume preservation
    for w in words:
        vr = check_volume_preservation(sc.surface, w, b.samples, _seed(b.seed, f"volume/{w.id}"))
        report.rows.append(Row(S, f"volume-chi2/{w.id}", 0.0, vr.chi2, vr.threshold, vr.passed, "lt"))
    pts = sc.surface.sample_points(b.samples, np.random.default_rng(_seed(b.seed, "uniform")))
    stat, thr = chi_square_uniformity(sc.surface, pts)
    report.rows.append(Row(S, "sample-chi2", 0.0, stat, thr, stat < thr, "lt"))

    # crossing antisymmetry
    worst = 0
    for i, ci in enumerate(system.curves):
        for cj in system.curves[i + 1 :]:
            worst = max(worst, abs(signed_crossings(ci.as_polyline(), cj) + signed_crossings(cj.as_polyline(), ci)))
    report.rows.append(_abs_row(S, "crossing-antisymmetry", 0.0, float(worst), 0.0))

    # normalize idempotence, including points on glued edges
    rng = np.random.default_rng(_seed(b.seed, "normalize"))
    probe = [tuple(p) for p in sc.surface.sample_points(500, rng)]
    poly = sc.surface.polygon
    for i in range(len(poly)):
        (x0, y0), (x1, y1) = poly[i], poly[(i + 1) % len(poly)]
        for t in (0.0, 0.25, 0.5, 0.9):
            probe.append((x0 + t * (x1 - x0), y0 + t * (y1 - y0)))
    gap = 0.0
    for p in probe:
        q = sc.surface.normalize(p)
        r = sc.surface.normalize(q)
        gap = max(gap, abs(q.x - r.x), abs(q.y - r.y))
    report.rows.append(_abs_row(S, "normalize-idempotence", 0.0, gap, 0.0))


RUNNERS = {
    "flux-loop-demo": run_flux_loop_demo,
    "flux-oracle": run_flux_oracle,
    "injectivity": run_injectivity,
    "invariants": run_invariants,
    "lemma3": run_lemma3,
    "theorem2": run_theorem2,
}
assert set(RUNNERS) == set(SUITES)


def run_scenario(sc: Scenario, suites: list[str] | None = None) -> SuiteReport:
    chosen = list(suites) if suites is not None else list(sc.suites)
    report = SuiteReport(seed=sc.budget.seed, workers=sc.budget.workers, suites=chosen)
    for name in chosen:
        t0 = time.perf_counter()
        RUNNERS[name](sc, report)
        report.timings[name] = time.perf_counter() - t0
    return report
