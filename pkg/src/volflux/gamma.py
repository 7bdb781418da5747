"""Gamma(phi)(f): the area integral of phi on the loops l(f; x).

For a sample ``x`` the loop runs from the base point to ``x``, follows the
isotopy track of ``x``, and returns from ``f(x)`` to the base point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import montecarlo
from .errors import DegenerateLeg, ProfileCountMismatch
from .flux import flux_of_word
from .homology import CohomologyClass, CurveSystem, eval_phi, poincare_dual
from .isotopy import LINEAR, Letter, Schedule, TwistProfile, TwistWord, trajectory
from .kernel import STRAIGHT, PathSystem, crossing_bounds, trace_crossings
from .surface import EPS_CONE, FlatSurface, Polyline

__all__ = [
    "Budget",
    "GammaEstimate",
    "PathSystem",
    "build_loop",
    "gamma_closed_form",
    "gamma_mc",
    "gamma_stratified",
    "injectivity_witness",
    "verify_theorem2",
]


@dataclass(frozen=True)
class Budget:
    samples: int = 1_000_000
    grid: int = 1024
    seed: int = 0
    workers: int = 1
    sigma: float = 3.0
    tolerance_scale: float = 1.0
    methods: tuple[str, ...] = ("mc", "stratified")

    def __post_init__(self):
        if self.samples <= 0 or self.grid < 16 or self.workers <= 0:
            raise ValueError("budget needs samples > 0, grid >= 16, workers > 0")


@dataclass(frozen=True)
class GammaEstimate:
    value: float
    stderr: float
    sample_count: int
    method: str
    bound: float = 0.0
    resampled: int = 0
    max_abs_integrand: float = 0.0

    @property
    def tolerance_width(self) -> float:
        return self.stderr if self.method == "mc" else self.bound


def build_loop(surface: FlatSurface, word: TwistWord, x, paths: PathSystem = STRAIGHT, schedule: Schedule = LINEAR) -> Polyline:
    """The closed loop l(f; x) as planar pieces, starting and ending at the base point."""
    traj = trajectory(surface, word, x, schedule)
    start, end = traj.start.coords, traj.end.coords
    bp = surface.base_point

    def leg(p):
        if paths.kind == "straight":
            pieces = ((bp, p),)
        else:
            w = tuple(paths.waypoint)
            if math.dist(w, p) < EPS_CONE:
                raise DegenerateLeg(f"{p} coincides with the waypoint")
            pieces = ((bp, w), (w, p))
        for a, b in pieces:
            surface.check_clear_of_cones(a, b)
        return Polyline(tuple((a, b) for a, b in pieces if a != b))

    return leg(start) + traj.polyline + leg(end).reversed()


@dataclass(frozen=True)
class GammaIntegrand:
    """Picklable integrand x -> phi(class of l(f; x))."""

    system: CurveSystem
    word: TwistWord
    weights: np.ndarray
    paths: PathSystem = STRAIGHT
    schedule: Schedule = LINEAR

    def __call__(self, pts):
        batch = trace_crossings(self.system, self.word, pts, self.paths, self.schedule)
        return batch.crossings @ self.weights, batch.degenerate


def _phi_weights(phi: CohomologyClass, system: CurveSystem) -> np.ndarray:
    # phi(class) = phi . J^{-T} n = (J^{-1} phi) . n
    return np.linalg.solve(system.intersection_form.astype(float), phi.coeffs)


def integrand_bound(phi: CohomologyClass, word: TwistWord, system: CurveSystem, paths=STRAIGHT, schedule=LINEAR) -> float:
    """A priori bound on |phi(class of l(f; x))| from maximal wrap counts."""
    w = _phi_weights(phi, system)
    return float(np.abs(w) @ crossing_bounds(system, word, paths, schedule))


def gamma_mc(
    phi: CohomologyClass,
    word: TwistWord,
    paths: PathSystem,
    system: CurveSystem,
    sample_count: int,
    seed: int,
    workers: int = 1,
    schedule: Schedule = LINEAR,
) -> GammaEstimate:
    paths.validate(system.surface)
    integrand = GammaIntegrand(system, word, _phi_weights(phi, system), paths, schedule)
    res = montecarlo.integrate(system.surface, integrand, sample_count, seed, workers)
    cap = integrand_bound(phi, word, system, paths, schedule)
    if res.max_abs > cap + 1e-9:
        raise RuntimeError(f"integrand {res.max_abs} exceeds its a priori bound {cap}")
    return GammaEstimate(res.value, res.stderr, res.sample_count, "mc", 0.0, res.resampled, res.max_abs)


def gamma_stratified(
    phi: CohomologyClass,
    word: TwistWord,
    paths: PathSystem,
    system: CurveSystem,
    grid_resolution: int,
    schedule: Schedule = LINEAR,
) -> GammaEstimate:
    """Midpoint rule on an R x R grid over the polygon's bounding box.

    ``bound`` is the discrete total variation of the integrand (sum of
    neighbour jumps times the shared cell side) times the cell diameter
    scale; the integrand is piecewise constant, so the midpoint error is
    carried by cells cut by its jump set.
    """
    if grid_resolution < 16:
        raise ValueError("grid_resolution must be at least 16")
    surface = system.surface
    paths.validate(surface)
    R = grid_resolution
    poly = np.asarray(surface.polygon)
    (xmin, ymin), (xmax, ymax) = poly.min(axis=0), poly.max(axis=0)
    hx, hy = (xmax - xmin) / R, (ymax - ymin) / R
    xs = xmin + (np.arange(R) + 0.5) * hx
    ys = ymin + (np.arange(R) + 0.5) * hy
    X, Y = np.meshgrid(xs, ys)
    mids = np.column_stack([X.ravel(), Y.ravel()])
    inside = surface.contains_array(mids)
    integrand = GammaIntegrand(system, word, _phi_weights(phi, system), paths, schedule)

    pts = mids[inside]
    vals, bad = integrand(pts)
    perturbed = 0
    # deterministic micro-perturbation inside the cell
    for k in range(1, 11):
        if not bad.any():
            break
        idx = np.flatnonzero(bad)
        perturbed += len(idx)
        shift = np.array([hx, hy]) * 1e-4 * k * np.array([0.6180339887, 0.3819660113])
        v2, b2 = integrand(pts[idx] + shift)
        vals[idx] = v2
        bad = np.zeros_like(bad)
        bad[idx] = b2
    if bad.any():
        raise RuntimeError("stratified quadrature could not clear degenerate midpoints")

    g = np.full(len(mids), np.nan)
    g[inside] = vals
    g = g.reshape(R, R)
    cell = hx * hy
    value = float(np.nansum(g) * cell)
    dx = np.abs(np.diff(g, axis=1))
    dy = np.abs(np.diff(g, axis=0))
    tv = float(np.nansum(dx) * hy + np.nansum(dy) * hx)
    bound = float(tv * max(hx, hy))
    cap = integrand_bound(phi, word, system, paths, schedule)
    max_abs = float(np.max(np.abs(vals))) if len(vals) else 0.0
    if max_abs > cap + 1e-9:
        raise RuntimeError(f"integrand {max_abs} exceeds its a priori bound {cap}")
    return GammaEstimate(value, 0.0, int(inside.sum()), "stratified", bound, perturbed, max_abs)


def gamma_closed_form(phi: CohomologyClass, word: TwistWord, system: CurveSystem) -> float:
    return eval_phi(phi, poincare_dual(flux_of_word(word, system), system))


@dataclass(frozen=True)
class Theorem2Report:
    phi_id: str
    word_id: str
    closed_form: float
    estimates: tuple[GammaEstimate, ...]
    checks: tuple[bool, ...]
    tolerances: tuple[float, ...]

    @property
    def passed(self) -> bool:
        return all(self.checks)


def check_estimate(est: GammaEstimate, expected: float, budget: Budget) -> tuple[bool, float]:
    """Pass if |value - expected| <= max(sigma * stderr, bound), scaled by tolerance_scale."""
    tol = budget.tolerance_scale * max(budget.sigma * est.stderr, est.bound)
    return abs(est.value - expected) <= tol, tol


def verify_theorem2(
    phi: CohomologyClass,
    word: TwistWord,
    system: CurveSystem,
    budget: Budget = Budget(),
    paths: PathSystem = STRAIGHT,
) -> Theorem2Report:
    closed = gamma_closed_form(phi, word, system)
    estimates, checks, tols = [], [], []
    for method in budget.methods:
        if method == "mc":
            est = gamma_mc(phi, word, paths, system, budget.samples, budget.seed, budget.workers)
        elif method == "stratified":
            est = gamma_stratified(phi, word, paths, system, budget.grid)
        else:
            raise ValueError(f"unknown method {method!r}")
        ok, tol = check_estimate(est, closed, budget)
        estimates.append(est)
        checks.append(ok)
        tols.append(tol)
    return Theorem2Report(phi.id, word.id, closed, tuple(estimates), tuple(checks), tuple(tols))


@dataclass(frozen=True)
class InjectivityReport:
    matrix: np.ndarray
    det: float
    min_singular_value: float
    mc_values: np.ndarray | None = None
    mc_stderr: np.ndarray | None = None
    mc_checks: np.ndarray | None = None
    threshold: float = field(default=0.0)

    @property
    def passed(self) -> bool:
        ok = abs(self.det) > self.threshold
        if self.mc_checks is not None:
            ok = ok and bool(np.all(self.mc_checks))
        return ok


def injectivity_witness(
    system: CurveSystem,
    profiles: list[TwistProfile],
    budget: Budget | None = None,
    confirm: str = "all",
) -> InjectivityReport:
    """Matrix Gamma(phi_i)(F_j) for the dual basis phi_i and one twist per basis cylinder.

    ``confirm`` selects which entries get a Monte Carlo check: "all",
    "diagonal" or "none".
    """
    m = len(system.curves)
    if len(profiles) != m:
        raise ProfileCountMismatch(f"need {m} profiles, got {len(profiles)}")
    phis = [CohomologyClass(np.eye(m)[i], id=f"dual-{system.ids[i]}") for i in range(m)]
    words = [TwistWord((Letter(p, 1.0),), id=f"F-{p.cylinder.id}") for p in profiles]
    M = np.array([[gamma_closed_form(phis[i], words[j], system) for j in range(m)] for i in range(m)])
    det = float(np.linalg.det(M))
    smin = float(np.linalg.svd(M, compute_uv=False).min())
    scale = float(np.abs(M).max()) if M.size else 0.0
    threshold = 1e-6 * scale**m
    if budget is None or confirm == "none":
        return InjectivityReport(M, det, smin, threshold=threshold)
    vals = np.full((m, m), np.nan)
    errs = np.full((m, m), np.nan)
    checks = np.ones((m, m), dtype=bool)
    for i in range(m):
        for j in range(m):
            if confirm == "diagonal" and i != j:
                continue
            est = gamma_mc(phis[i], words[j], STRAIGHT, system, budget.samples, budget.seed + m * i + j, budget.workers)
            vals[i, j], errs[i, j] = est.value, est.stderr
            checks[i, j] = check_estimate(est, M[i, j], budget)[0]
    return InjectivityReport(M, det, smin, vals, errs, checks, threshold)
