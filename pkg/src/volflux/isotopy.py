"""Cylinder twists, words of twists and their canonical isotopies.

A cylinder is an axis-aligned rectangle of the polygon whose two ends are
glued, so it is foliated by closed geodesics of length ``circumference``.
In cylinder coordinates ``(s, z)`` (``s`` along the core, ``z`` transverse)
a twist acts by ``(s, z) -> (s + scale * omega(z), z)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConePointHit, UnsupportedSurface
from .surface import EPS_CONE, FlatSurface, Polyline, Segment, SurfacePoint, chi_square_uniformity

HORIZONTAL = "horizontal"
VERTICAL = "vertical"


@dataclass(frozen=True)
class Cylinder:
    id: str
    surface: str
    axis: str
    s0: float
    circumference: float
    z0: float
    z1: float
    core: str
    periodic: bool = False

    def __post_init__(self):
        if self.axis not in (HORIZONTAL, VERTICAL):
            raise ValueError(f"axis must be {HORIZONTAL!r} or {VERTICAL!r}")
        if self.circumference <= 0 or self.z1 <= self.z0:
            raise ValueError("cylinder needs positive circumference and height")

    @property
    def height(self) -> float:
        return self.z1 - self.z0

    @property
    def area(self) -> float:
        return self.height * self.circumference

    @property
    def direction(self) -> tuple[float, float]:
        return (1.0, 0.0) if self.axis == HORIZONTAL else (0.0, 1.0)

    def to_cyl(self, pts):
        """Planar ``(x, y)`` to ``(s, z)``; works on scalars and arrays."""
        pts = np.asarray(pts, dtype=float)
        if self.axis == HORIZONTAL:
            return pts[..., 0], pts[..., 1]
        return pts[..., 1], pts[..., 0]

    def from_cyl(self, s, z):
        if self.axis == HORIZONTAL:
            return np.stack([s, z], axis=-1)
        return np.stack([z, s], axis=-1)

    def contains(self, pts) -> np.ndarray:
        s, z = self.to_cyl(pts)
        return (s >= self.s0) & (s <= self.s0 + self.circumference) & (z >= self.z0) & (z <= self.z1)

    def validate(self, surface: FlatSurface) -> None:
        if surface.name != self.surface:
            raise ValueError(f"cylinder {self.id} belongs to {self.surface!r}, not {surface.name!r}")
        L = self.circumference
        for s in np.linspace(self.s0, self.s0 + L, 5):
            for z in np.linspace(self.z0, self.z1, 5):
                if not surface.contains(tuple(self.from_cyl(s, z))):
                    raise ValueError(f"cylinder {self.id} leaves the polygon")
        for z in np.linspace(self.z0, self.z1, 7)[1:-1]:
            a = tuple(self.from_cyl(self.s0, z))
            b = tuple(self.from_cyl(self.s0 + L, z))
            if not surface.same_point(a, b, tol=1e-9):
                raise ValueError(f"ends of cylinder {self.id} are not glued")
        for c in surface.cone_corners:
            s, z = self.to_cyl(c)
            if self.z0 < z < self.z1 and self.s0 - EPS_CONE <= s <= self.s0 + L + EPS_CONE:
                raise ValueError(f"cylinder {self.id} contains a cone point")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "surface": self.surface,
            "axis": self.axis,
            "s0": self.s0,
            "circumference": self.circumference,
            "z0": self.z0,
            "z1": self.z1,
            "core": self.core,
            "periodic": self.periodic,
        }

    @classmethod
    def from_dict(cls, d) -> "Cylinder":
        return cls(
            id=str(d["id"]),
            surface=str(d["surface"]),
            axis=str(d["axis"]),
            s0=float(d["s0"]),
            circumference=float(d["circumference"]),
            z0=float(d["z0"]),
            z1=float(d["z1"]),
            core=str(d["core"]),
            periodic=bool(d.get("periodic", False)),
        )


def standard_cylinders(surface: FlatSurface) -> dict[str, Cylinder]:
    if surface.name == "genus2-L":
        cyls = [
            Cylinder("h1", surface.name, HORIZONTAL, 0.0, 2.0, 0.0, 1.0, "h1"),
            Cylinder("h2", surface.name, HORIZONTAL, 0.0, 1.0, 1.0, 2.0, "h2"),
            Cylinder("v1", surface.name, VERTICAL, 0.0, 2.0, 0.0, 1.0, "v1"),
            Cylinder("v2", surface.name, VERTICAL, 0.0, 1.0, 1.0, 2.0, "v2"),
        ]
    elif surface.name == "torus":
        cyls = [
            Cylinder("a", surface.name, HORIZONTAL, 0.0, 1.0, 0.0, 1.0, "a", periodic=True),
            Cylinder("b", surface.name, VERTICAL, 0.0, 1.0, 0.0, 1.0, "b", periodic=True),
        ]
    else:
        raise UnsupportedSurface(f"no standard cylinders for surface {surface.name!r}")
    return {c.id: c for c in cyls}


@dataclass(frozen=True)
class TwistProfile:
    """Piecewise polynomial omega(z), zero outside ``[breakpoints[0], breakpoints[-1]]``.

    ``coeffs[i]`` holds ascending coefficients in the local variable
    ``u = z - breakpoints[i]`` on the i-th piece; degree at most 3.
    """

    cylinder: Cylinder
    breakpoints: tuple[float, ...]
    coeffs: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        bp = tuple(float(b) for b in self.breakpoints)
        cf = tuple(tuple(float(c) for c in row) for row in self.coeffs)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "coeffs", cf)
        if len(bp) < 2 or len(cf) != len(bp) - 1:
            raise ValueError("need k+1 breakpoints for k polynomial pieces")
        if any(b1 <= b0 for b0, b1 in zip(bp, bp[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if any(len(row) == 0 or len(row) > 4 for row in cf):
            raise ValueError("each piece needs 1 to 4 coefficients (degree <= 3)")
        if not all(math.isfinite(c) for row in cf for c in row):
            raise ValueError("coefficients must be finite")
        cyl = self.cylinder
        ends = [self._piece_value(i, bp[i + 1] - bp[i]) for i in range(len(cf))]
        starts = [cf[i][0] for i in range(len(cf))]
        scale = max(1.0, max(abs(v) for v in ends + starts))
        for i in range(len(cf) - 1):
            if abs(ends[i] - starts[i + 1]) > 1e-12 * scale:
                raise ValueError(f"omega is discontinuous at z={bp[i + 1]}")
        full = abs(bp[0] - cyl.z0) <= 1e-15 and abs(bp[-1] - cyl.z1) <= 1e-15
        if cyl.periodic and full:
            if abs(starts[0] - ends[-1]) > 1e-12 * scale:
                raise ValueError("omega must be continuous around a periodic cylinder")
        else:
            if not (cyl.z0 < bp[0] and bp[-1] < cyl.z1):
                raise ValueError(
                    f"support [{bp[0]}, {bp[-1]}] must lie strictly inside ({cyl.z0}, {cyl.z1})"
                )
            if abs(starts[0]) > 1e-12 * scale or abs(ends[-1]) > 1e-12 * scale:
                raise ValueError("omega must vanish at the ends of its support")

    def _piece_value(self, i, u):
        return float(np.polynomial.polynomial.polyval(u, self.coeffs[i]))

    @property
    def support(self) -> tuple[float, float]:
        return self.breakpoints[0], self.breakpoints[-1]

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        bp = np.asarray(self.breakpoints)
        out = np.zeros_like(z)
        idx = np.clip(np.searchsorted(bp, z, side="right") - 1, 0, len(self.coeffs) - 1)
        inside = (z >= bp[0]) & (z <= bp[-1])
        for i, row in enumerate(self.coeffs):
            m = inside & (idx == i)
            if np.any(m):
                out[m] = np.polynomial.polynomial.polyval(z[m] - bp[i], row)
        return out if out.ndim else float(out)

    def derivative(self, z):
        z = np.asarray(z, dtype=float)
        bp = np.asarray(self.breakpoints)
        out = np.zeros_like(z)
        idx = np.clip(np.searchsorted(bp, z, side="right") - 1, 0, len(self.coeffs) - 1)
        inside = (z >= bp[0]) & (z <= bp[-1])
        for i, row in enumerate(self.coeffs):
            m = inside & (idx == i)
            if np.any(m):
                out[m] = np.polynomial.polynomial.polyval(
                    z[m] - bp[i], np.polynomial.polynomial.polyder(row)
                )
        return out if out.ndim else float(out)

    def integral(self) -> float:
        total = 0.0
        for i, row in enumerate(self.coeffs):
            w = self.breakpoints[i + 1] - self.breakpoints[i]
            total += sum(c * w ** (k + 1) / (k + 1) for k, c in enumerate(row))
        return total

    def max_abs(self) -> float:
        best = 0.0
        P = np.polynomial.polynomial
        for i, row in enumerate(self.coeffs):
            w = self.breakpoints[i + 1] - self.breakpoints[i]
            cands = [0.0, w]
            if len(row) > 2:
                for r in P.polyroots(P.polyder(row)):
                    if abs(r.imag) < 1e-12 and 0 <= r.real <= w:
                        cands.append(r.real)
            best = max(best, max(abs(P.polyval(u, row)) for u in cands))
        return best

    def scaled(self, factor: float) -> "TwistProfile":
        return TwistProfile(
            self.cylinder, self.breakpoints, tuple(tuple(factor * c for c in row) for row in self.coeffs)
        )

    # -- constructors ---------------------------------------------------

    @classmethod
    def tent(cls, cylinder, center, half_width, height) -> "TwistProfile":
        a, b = center - half_width, center + half_width
        k = height / half_width
        return cls(cylinder, (a, center, b), ((0.0, k), (height, -k)))

    @classmethod
    def quadratic_bump(cls, cylinder, a, b, height) -> "TwistProfile":
        """``height * 4t(1-t)`` with ``t = (z-a)/(b-a)``."""
        w = b - a
        return cls(cylinder, (a, b), ((0.0, 4 * height / w, -4 * height / w**2),))

    @classmethod
    def cubic_bump(cls, cylinder, a, b, height) -> "TwistProfile":
        """C^1 bump: smoothstep up on the first half, smoothstep down on the second."""
        h = (b - a) / 2
        up = (0.0, 0.0, 3 * height / h**2, -2 * height / h**3)
        down = (height, 0.0, -3 * height / h**2, 2 * height / h**3)
        return cls(cylinder, (a, a + h, b), (up, down))

    @classmethod
    def constant(cls, cylinder, value) -> "TwistProfile":
        return cls(cylinder, (cylinder.z0, cylinder.z1), ((float(value),),))

    def to_dict(self) -> dict:
        return {
            "cylinder": self.cylinder.id,
            "breakpoints": list(self.breakpoints),
            "coeffs": [list(r) for r in self.coeffs],
        }


def int_omega(profile: TwistProfile) -> float:
    return profile.integral()


@dataclass(frozen=True)
class Letter:
    profile: TwistProfile
    scale: float = 1.0

    @property
    def cylinder(self) -> Cylinder:
        return self.profile.cylinder

    def displacement(self, z):
        return self.scale * self.profile(z)


@dataclass(frozen=True)
class TwistWord:
    """Product of twists in functional order: the last letter acts first."""

    letters: tuple[Letter, ...] = ()
    id: str = "word"

    def __post_init__(self):
        letters = tuple(
            l if isinstance(l, Letter) else Letter(*l) for l in self.letters
        )
        object.__setattr__(self, "letters", letters)
        names = {l.cylinder.surface for l in letters}
        if len(names) > 1:
            raise ValueError("all letters must live on the same surface")

    @property
    def application_order(self) -> tuple[Letter, ...]:
        return tuple(reversed(self.letters))

    def __mul__(self, other: "TwistWord") -> "TwistWord":
        return TwistWord(self.letters + other.letters, f"{self.id}*{other.id}")

    def inverse(self) -> "TwistWord":
        return TwistWord(
            tuple(Letter(l.profile, -l.scale) for l in reversed(self.letters)), f"{self.id}^-1"
        )

    def scaled(self, t: float) -> "TwistWord":
        return TwistWord(tuple(Letter(l.profile, t * l.scale) for l in self.letters), self.id)

    def __len__(self):
        return len(self.letters)


@dataclass(frozen=True)
class Schedule:
    """Time profile rho of one letter's slot: the point sits at s + rho(t) * d.

    ``turning`` lists the successive extreme values of rho; the track of a
    letter is the chain of moves between them.
    """

    name: str
    turning: tuple[float, ...]

    def rho(self, t):
        t = np.asarray(t, dtype=float)
        if self.name == "linear":
            return t
        if self.name == "smoothstep":
            return t * t * (3 - 2 * t)
        if self.name == "overshoot":
            return np.where(t <= 0.5, 3 * t, 1.5 - (t - 0.5))
        raise ValueError(self.name)


LINEAR = Schedule("linear", (1.0,))
SMOOTHSTEP = Schedule("smoothstep", (1.0,))
OVERSHOOT = Schedule("overshoot", (1.5, 1.0))
SCHEDULES = {s.name: s for s in (LINEAR, SMOOTHSTEP, OVERSHOOT)}


@dataclass(frozen=True)
class Trajectory:
    start: SurfacePoint
    end: SurfacePoint
    segments: tuple[Segment, ...] = field(default=())

    @property
    def polyline(self) -> Polyline:
        return Polyline.of(*self.segments)

    @property
    def track_length(self) -> float:
        return sum(s.length for s in self.segments)


def _check_point(surface: FlatSurface, p) -> None:
    for c in surface.cone_corners:
        if math.dist(tuple(c), tuple(p)) < EPS_CONE:
            raise ConePointHit(f"{tuple(p)} is a cone point")


def _apply_letter(letter: Letter, p) -> tuple[float, float]:
    cyl = letter.cylinder
    if not cyl.contains(p):
        return tuple(p)
    s, z = cyl.to_cyl(p)
    d = letter.displacement(float(z))
    s_new = cyl.s0 + math.fmod(float(s) - cyl.s0 + d, cyl.circumference)
    if s_new < cyl.s0:
        s_new += cyl.circumference
    return tuple(float(v) for v in cyl.from_cyl(s_new, z))


def apply_point(surface: FlatSurface, word: TwistWord, x) -> SurfacePoint:
    p = tuple(surface.normalize(x))
    _check_point(surface, p)
    for letter in word.application_order:
        p = tuple(surface.normalize(_apply_letter(letter, p)))
    return SurfacePoint(*p)


def apply_points(word: TwistWord, pts: np.ndarray) -> np.ndarray:
    """Vectorized action on canonical interior points; results stay canonical."""
    pts = np.array(pts, dtype=float)
    for letter in word.application_order:
        cyl = letter.cylinder
        inside = cyl.contains(pts)
        s, z = cyl.to_cyl(pts[inside])
        d = letter.displacement(z)
        s_new = cyl.s0 + np.mod(s - cyl.s0 + d, cyl.circumference)
        pts[inside] = cyl.from_cyl(s_new, z)
    return pts


def trajectory(surface: FlatSurface, word: TwistWord, x, schedule: Schedule = LINEAR) -> Trajectory:
    """Track of ``x`` under the canonical isotopy, unrolled across the gluings."""
    p = surface.normalize(x)
    _check_point(surface, tuple(p))
    start = p
    segments = []
    for letter in word.application_order:
        cyl = letter.cylinder
        if not cyl.contains(tuple(p)):
            continue
        _, z = cyl.to_cyl(tuple(p))
        d = letter.displacement(float(z))
        if d == 0.0:
            continue
        prev = 0.0
        for r in schedule.turning:
            delta = d * (r - prev)
            prev = r
            if delta == 0.0:
                continue
            sign = 1.0 if delta > 0 else -1.0
            direction = (sign * cyl.direction[0], sign * cyl.direction[1])
            seg = surface.unroll_segment(p, direction, abs(delta))
            segments.append(seg)
            p = seg.end
    return Trajectory(start, p, tuple(segments))


def trajectory_position(surface, word: TwistWord, x, t: float, schedule: Schedule = LINEAR):
    """f_t(x): each letter owns the half-open time slot [k/n, (k+1)/n)."""
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    p = tuple(surface.normalize(x))
    order = word.application_order
    n = len(order)
    if n == 0:
        return SurfacePoint(*p)
    slot = min(int(t * n), n - 1)
    for k, letter in enumerate(order[: slot + 1]):
        frac = 1.0 if k < slot else t * n - slot
        partial = Letter(letter.profile, letter.scale * float(schedule.rho(frac)))
        p = tuple(surface.normalize(_apply_letter(partial, p)))
    return SurfacePoint(*p)


@dataclass(frozen=True)
class VolumeReport:
    max_jacobian_error: float
    chi2: float
    threshold: float
    sample_count: int

    @property
    def passed(self) -> bool:
        return self.max_jacobian_error == 0.0 and self.chi2 < self.threshold


def check_volume_preservation(surface: FlatSurface, word: TwistWord, sample_count: int, seed: int) -> VolumeReport:
    """Analytic unit-Jacobian check per letter plus a chi-square test of the pushforward."""
    if sample_count <= 0:
        raise ValueError("sample_count must be positive")
    worst = 0.0
    for letter in word.letters:
        lo, hi = letter.profile.support
        for z in np.linspace(lo, hi, 33):
            # d(s', z')/d(s, z) for the shear (s, z) -> (s + w(z), z)
            jac = np.array([[1.0, letter.scale * letter.profile.derivative(z)], [0.0, 1.0]])
            det = jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0]
            worst = max(worst, abs(det - 1.0))
    rng = np.random.default_rng(seed)
    pts = surface.sample_points(sample_count, rng)
    stat, thr = chi_square_uniformity(surface, apply_points(word, pts))
    return VolumeReport(worst, stat, thr, sample_count)
