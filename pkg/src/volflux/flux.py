"""Flux of twist words: closed form, swept-area oracle, and the torus loop demo."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import montecarlo
from .errors import UnknownCurve, UnsupportedSurface
from .homology import BasisCurve, CurveSystem, standard_curves
from .isotopy import LINEAR, Schedule, TwistProfile, TwistWord, apply_points, standard_cylinders
from .kernel import trace_crossings
from .surface import FlatSurface


@dataclass(frozen=True)
class FluxClass:
    """A class in H^1 given by its periods on the basis curves."""

    periods: np.ndarray

    def __post_init__(self):
        p = np.array(self.periods, dtype=float)
        p.setflags(write=False)
        object.__setattr__(self, "periods", p)

    def __add__(self, other):
        return FluxClass(self.periods + other.periods)

    def __mul__(self, k):
        return FluxClass(k * self.periods)

    __rmul__ = __mul__


def flux_of_word(word: TwistWord, system: CurveSystem) -> FluxClass:
    J = system.intersection_form
    periods = np.zeros(len(J))
    for letter in word.letters:
        core = letter.cylinder.core
        if core not in system.ids:
            raise UnknownCurve(f"core curve {core!r} of cylinder {letter.cylinder.id!r} not in system")
        periods += letter.scale * letter.profile.integral() * J[system.index(core)]
    return FluxClass(periods)


@dataclass(frozen=True)
class TrajectoryCrossings:
    """Picklable integrand: signed crossings of the bare trajectory with one curve."""

    system: CurveSystem
    word: TwistWord
    column: int
    schedule: Schedule = LINEAR

    def __call__(self, pts):
        batch = trace_crossings(self.system, self.word, pts, paths=None, schedule=self.schedule)
        return batch.crossings[:, self.column].astype(float), batch.degenerate


@dataclass(frozen=True)
class OracleEstimate:
    value: float
    stderr: float
    sample_count: int
    resampled: int


def flux_oracle(
    word: TwistWord,
    curve: BasisCurve | str,
    system: CurveSystem,
    sample_count: int,
    seed: int,
    workers: int = 1,
    schedule: Schedule = LINEAR,
) -> OracleEstimate:
    """Net area carried across ``curve``: area times the mean signed crossing count."""
    curve_id = curve if isinstance(curve, str) else curve.id
    column = system.index(curve_id)
    if len(word) == 0:
        return OracleEstimate(0.0, 0.0, sample_count, 0)
    res = montecarlo.integrate(
        system.surface, TrajectoryCrossings(system, word, column, schedule), sample_count, seed, workers
    )
    return OracleEstimate(res.value, res.stderr, res.sample_count, res.resampled)


@dataclass(frozen=True)
class LoopDemoReport:
    surface: str
    flux: FluxClass
    is_loop: bool
    reason: str
    max_displacement: float


def _max_surface_displacement(surface: FlatSurface, a: np.ndarray, b: np.ndarray) -> float:
    best = np.full(len(a), np.inf)
    for t in surface._translation_set():
        best = np.minimum(best, np.linalg.norm(a + np.asarray(t) - b, axis=1))
    return float(best.max()) if len(best) else 0.0


def flux_loop_demo(surface: FlatSurface, value: float | None = None, sample_count: int = 20_000, seed: int = 0) -> LoopDemoReport:
    """Full-rotation twist: a loop of diffeomorphisms with non-zero flux on the torus only.

    On the torus the horizontal cylinder is the whole surface, so omega may be
    constant; shearing by a whole number of circumferences is the identity.
    On the genus-2 surface every profile must vanish near the cylinder
    boundary, so the same construction is not available and the closest
    admissible profile does not give the identity.
    """
    if surface.name not in ("torus", "genus2-L"):
        raise UnsupportedSurface(f"no loop demo for surface {surface.name!r}")
    system = standard_curves(surface)
    cyl = next(iter(standard_cylinders(surface).values()))
    L = cyl.circumference
    value = L if value is None else float(value)
    pts = surface.sample_points(sample_count, np.random.default_rng(seed))
    try:
        profile = TwistProfile.constant(cyl, value)
        reason = f"constant omega={value} on a cylinder filling the surface"
    except ValueError as exc:
        # taper to zero just inside the cylinder boundary
        z0, z1 = cyl.z0, cyl.z1
        e = 0.05 * (z1 - z0)
        k = value / e
        profile = TwistProfile(
            cyl,
            (z0 + e, z0 + 2 * e, z1 - 2 * e, z1 - e),
            ((0.0, k), (value,), (value, -k)),
        )
        reason = f"constant omega rejected ({exc}); tapered profile used instead"
    word = TwistWord(((profile, 1.0),), id="full-rotation")
    moved = _max_surface_displacement(surface, pts, apply_points(word, pts))
    return LoopDemoReport(surface.name, flux_of_word(word, system), moved <= 1e-12, reason, moved)
