"""Closed translation surfaces given as one Euclidean polygon with edges glued by translations.

The polygon is stored counter-clockwise. Edge ``i`` runs from vertex ``i`` to
vertex ``i + 1`` and each edge is glued to exactly one partner edge of the
same length and opposite direction. The area form is the Euclidean one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConePointHit, PointOutsideAtlas

EPS_CONE = 1e-9
# boundary / vertex snapping tolerance for normalize
EPS_SNAP = 1e-12

Point = tuple[float, float]


@dataclass(frozen=True)
class SurfacePoint:
    x: float
    y: float

    @property
    def coords(self) -> Point:
        return (self.x, self.y)

    def __iter__(self):
        yield self.x
        yield self.y

    def __getitem__(self, i):
        return (self.x, self.y)[i]


@dataclass(frozen=True)
class Segment:
    """A straight path on the surface, cut into one planar piece per chart visit."""

    start: SurfacePoint
    end: SurfacePoint
    pieces: tuple[tuple[Point, Point], ...]

    @property
    def length(self) -> float:
        return sum(math.dist(a, b) for a, b in self.pieces)


@dataclass(frozen=True)
class Polyline:
    """A path on the surface as a chain of planar pieces (closed when it returns to its start)."""

    pieces: tuple[tuple[Point, Point], ...] = ()

    @classmethod
    def of(cls, *parts) -> "Polyline":
        pieces = []
        for part in parts:
            pieces.extend(part.pieces)
        return cls(tuple(pieces))

    def reversed(self) -> "Polyline":
        return Polyline(tuple((b, a) for a, b in reversed(self.pieces)))

    def __add__(self, other: "Polyline") -> "Polyline":
        return Polyline(self.pieces + other.pieces)

    @property
    def length(self) -> float:
        return sum(math.dist(a, b) for a, b in self.pieces)


def _cross(ax, ay, bx, by):
    return ax * by - ay * bx


def _point_segment_distance(p, a, b) -> float:
    ax, ay = a
    dx, dy = b[0] - ax, b[1] - ay
    nn = dx * dx + dy * dy
    if nn == 0.0:
        return math.dist(p, a)
    t = ((p[0] - ax) * dx + (p[1] - ay) * dy) / nn
    t = min(1.0, max(0.0, t))
    return math.hypot(p[0] - (ax + t * dx), p[1] - (ay + t * dy))


@dataclass(frozen=True)
class FlatSurface:
    name: str
    polygon: tuple[Point, ...]
    identifications: tuple[tuple[int, int], ...]
    base_point: Point
    genus: int
    cells: tuple[tuple[Point, ...], ...] = ()

    partner: tuple[int, ...] = field(init=False, repr=False)
    translations: tuple[Point, ...] = field(init=False, repr=False)
    area: float = field(init=False)
    euler_characteristic: int = field(init=False)
    cone_points: tuple[tuple[Point, float], ...] = field(init=False)
    vertex_class: tuple[int, ...] = field(init=False, repr=False)
    class_angle: tuple[float, ...] = field(init=False, repr=False)

    def __post_init__(self):
        poly = tuple((float(x), float(y)) for x, y in self.polygon)
        object.__setattr__(self, "polygon", poly)
        object.__setattr__(self, "base_point", (float(self.base_point[0]), float(self.base_point[1])))
        object.__setattr__(
            self, "identifications", tuple((int(i), int(j)) for i, j in self.identifications)
        )
        n = len(poly)
        if n < 3:
            raise ValueError("polygon needs at least three vertices")
        area = 0.5 * sum(_cross(*poly[k], *poly[(k + 1) % n]) for k in range(n))
        if area <= 0:
            raise ValueError("polygon must be counter-clockwise with positive area")
        object.__setattr__(self, "area", area)

        partner = [-1] * n
        for i, j in self.identifications:
            for e in (i, j):
                if not 0 <= e < n:
                    raise ValueError(f"edge index {e} out of range")
                if partner[e] != -1 or i == j:
                    raise ValueError(f"edge {e} appears in more than one identification")
            partner[i], partner[j] = j, i
        if -1 in partner:
            raise ValueError(f"edge {partner.index(-1)} has no identification")
        object.__setattr__(self, "partner", tuple(partner))

        translations = []
        for i in range(n):
            j = partner[i]
            ei = np.subtract(poly[(i + 1) % n], poly[i])
            ej = np.subtract(poly[(j + 1) % n], poly[j])
            if np.abs(ei + ej).max() > 1e-12:
                raise ValueError(f"edges {i} and {j} are not parallel, equal and opposite")
            t = np.subtract(poly[j], poly[(i + 1) % n])
            translations.append((float(t[0]), float(t[1])))
        object.__setattr__(self, "translations", tuple(translations))

        # corners glued by the edge translations
        parent = list(range(n))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for i in range(n):
            j = partner[i]
            for a, b in ((i, (j + 1) % n), ((i + 1) % n, j)):
                ra, rb = find(a), find(b)
                if ra != rb:
                    parent[ra] = rb
        roots = sorted({find(k) for k in range(n)})
        vclass = tuple(roots.index(find(k)) for k in range(n))
        object.__setattr__(self, "vertex_class", vclass)

        angles = [0.0] * len(roots)
        for k in range(n):
            a = np.subtract(poly[(k + 1) % n], poly[k])
            b = np.subtract(poly[k - 1], poly[k])
            ang = math.atan2(_cross(*a, *b), float(np.dot(a, b)))
            if ang <= 0:
                ang += 2 * math.pi
            angles[vclass[k]] += ang
        object.__setattr__(self, "class_angle", tuple(angles))

        chi = len(roots) - n // 2 + 1
        object.__setattr__(self, "euler_characteristic", chi)
        if chi != 2 - 2 * self.genus:
            raise ValueError(f"Euler characteristic {chi} does not match genus {self.genus}")
        excess = sum(a - 2 * math.pi for a in angles)
        if abs(excess - 2 * math.pi * (2 * self.genus - 2)) > 1e-9:
            raise ValueError("cone angle excess inconsistent with genus")

        cones = []
        for c, ang in enumerate(angles):
            if abs(ang - 2 * math.pi) > 1e-9:
                rep = min(poly[k] for k in range(n) if vclass[k] == c)
                cones.append((rep, ang))
        object.__setattr__(self, "cone_points", tuple(cones))

        for k in range(n):
            a, b = poly[k], poly[(k + 1) % n]
            if _cross(b[0] - a[0], b[1] - a[1], self.base_point[0] - a[0], self.base_point[1] - a[1]) <= 0:
                raise ValueError("base point must lie in the interior of the polygon kernel")

    # -- geometry helpers -------------------------------------------------

    @property
    def n_edges(self) -> int:
        return len(self.polygon)

    def edge(self, i: int) -> tuple[Point, Point]:
        return self.polygon[i], self.polygon[(i + 1) % self.n_edges]

    @property
    def cone_corners(self) -> np.ndarray:
        """Every polygon corner that represents a cone point."""
        cone_classes = {
            c for c, a in enumerate(self.class_angle) if abs(a - 2 * math.pi) > 1e-9
        }
        pts = [self.polygon[k] for k in range(self.n_edges) if self.vertex_class[k] in cone_classes]
        return np.array(pts, dtype=float).reshape(-1, 2)

    def is_cone_corner(self, k: int) -> bool:
        return abs(self.class_angle[self.vertex_class[k]] - 2 * math.pi) > 1e-9

    def canonical_edge(self, i: int) -> bool:
        """True if edge ``i`` is the canonical side of its identified pair."""
        j = self.partner[i]

        def mid(e):
            a, b = self.edge(e)
            return ((a[0] + b[0]) / 2, (a[1] + b[1]) / 2)

        return mid(i) < mid(j)

    def boundary_distance(self, p) -> float:
        return min(_point_segment_distance(p, *self.edge(i)) for i in range(self.n_edges))

    def contains(self, p, tol: float = EPS_SNAP) -> bool:
        """Closed-polygon membership with an absolute boundary tolerance."""
        if self.boundary_distance(p) <= tol:
            return True
        return self._strictly_inside(p)

    def _strictly_inside(self, p) -> bool:
        x, y = p
        inside = False
        poly = self.polygon
        n = len(poly)
        for k in range(n):
            (x0, y0), (x1, y1) = poly[k], poly[(k + 1) % n]
            if (y0 > y) != (y1 > y):
                xi = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
                if xi > x:
                    inside = not inside
        return inside

    def contains_array(self, pts: np.ndarray) -> np.ndarray:
        """Vectorized even-odd membership test (boundary behaviour unspecified)."""
        x, y = pts[:, 0], pts[:, 1]
        inside = np.zeros(len(pts), dtype=bool)
        poly = self.polygon
        n = len(poly)
        for k in range(n):
            (x0, y0), (x1, y1) = poly[k], poly[(k + 1) % n]
            if y0 == y1:
                continue
            cond = (y0 > y) != (y1 > y)
            xi = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
            inside ^= cond & (xi > x)
        return inside

    # -- normalization ----------------------------------------------------

    def normalize(self, raw) -> SurfacePoint:
        p = (float(raw[0]), float(raw[1]))
        if not self.contains(p):
            p = self._pull_back(p)
        n = self.n_edges
        for k in range(n):
            if math.dist(p, self.polygon[k]) <= EPS_SNAP:
                cls = self.vertex_class[k]
                rep = min(self.polygon[m] for m in range(n) if self.vertex_class[m] == cls)
                return SurfacePoint(*rep)
        for i in range(n):
            a, b = self.edge(i)
            if _point_segment_distance(p, a, b) <= EPS_SNAP and not self.canonical_edge(i):
                dx, dy = b[0] - a[0], b[1] - a[1]
                lam = ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / (dx * dx + dy * dy)
                j = self.partner[i]
                pa, pb = self.edge(j)
                # v_i <-> v_{j+1}, v_{i+1} <-> v_j
                return SurfacePoint(pb[0] + lam * (pa[0] - pb[0]), pb[1] + lam * (pa[1] - pb[1]))
        return SurfacePoint(*p)

    def _pull_back(self, p) -> Point:
        best = None
        for i in range(self.n_edges):
            a, b = self.edge(i)
            dx, dy = b[0] - a[0], b[1] - a[1]
            side = _cross(dx, dy, p[0] - a[0], p[1] - a[1])
            if side >= 0:
                continue
            lam = ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / (dx * dx + dy * dy)
            if not -EPS_SNAP <= lam <= 1 + EPS_SNAP:
                continue
            t = self.translations[i]
            cand = (p[0] + t[0], p[1] + t[1])
            if self.contains(cand):
                dist = -side / math.hypot(dx, dy)
                if best is None or dist < best[0]:
                    best = (dist, cand)
        if best is None:
            raise PointOutsideAtlas(f"{p} is not within one identification translate of the polygon")
        return best[1]

    def same_point(self, p, q, tol: float = 1e-12) -> bool:
        """Equality on the surface: planar distance up to one or two edge translations."""
        p = tuple(p)
        q = tuple(q)
        if math.dist(p, q) <= tol:
            return True
        for t in self._translation_set():
            if math.dist((p[0] + t[0], p[1] + t[1]), q) <= tol:
                return True
        return False

    def _translation_set(self):
        ts = {(0.0, 0.0)}
        for t in self.translations:
            ts.add(t)
            for s in self.translations:
                ts.add((t[0] + s[0], t[1] + s[1]))
        return sorted(ts)

    # -- geodesics --------------------------------------------------------

    def check_clear_of_cones(self, a, b) -> None:
        for c in self.cone_corners:
            if _point_segment_distance(tuple(c), a, b) < EPS_CONE:
                raise ConePointHit(f"path {a}->{b} passes within {EPS_CONE} of cone point {tuple(c)}")

    def unroll_segment(self, start, direction, length: float) -> Segment:
        if length < 0:
            raise ValueError("length must be non-negative")
        p = tuple(self.normalize(start))
        start_pt = SurfacePoint(*p)
        if length == 0:
            return Segment(start_pt, start_pt, ())
        dx, dy = float(direction[0]), float(direction[1])
        norm = math.hypot(dx, dy)
        if norm == 0:
            raise ValueError("direction must be non-zero")
        dx, dy = dx / norm, dy / norm
        self.check_clear_of_cones(p, p)

        pieces = []
        remaining = float(length)
        n = self.n_edges
        for _ in range(1_000_000):
            t_exit, e_exit = math.inf, -1
            for i in range(n):
                a, b = self.edge(i)
                ex, ey = b[0] - a[0], b[1] - a[1]
                # outward normal of a counter-clockwise edge
                nx, ny = ey, -ex
                dn = dx * nx + dy * ny
                if dn <= 1e-15:
                    continue
                t = ((a[0] - p[0]) * nx + (a[1] - p[1]) * ny) / dn
                if t < -EPS_SNAP:
                    continue
                hx, hy = p[0] + t * dx, p[1] + t * dy
                lam = ((hx - a[0]) * ex + (hy - a[1]) * ey) / (ex * ex + ey * ey)
                if -1e-12 <= lam <= 1 + 1e-12 and t < t_exit:
                    t_exit, e_exit = max(t, 0.0), i
            if e_exit < 0:
                raise RuntimeError(f"ray from {p} does not leave the polygon")
            if t_exit >= remaining:
                q = (p[0] + remaining * dx, p[1] + remaining * dy)
                self.check_clear_of_cones(p, q)
                pieces.append((p, q))
                end = self.normalize(q)
                return Segment(start_pt, end, tuple(pieces))
            q = (p[0] + t_exit * dx, p[1] + t_exit * dy)
            self.check_clear_of_cones(p, q)
            if t_exit > 0:
                pieces.append((p, q))
            remaining -= t_exit
            p = self._cross_edge(q, e_exit, (dx, dy))
        raise RuntimeError("segment unrolling did not terminate")

    def _cross_edge(self, q, e, d) -> Point:
        near = [k for k in range(self.n_edges) if math.dist(q, self.polygon[k]) < EPS_CONE]
        if not near:
            t = self.translations[e]
            return (q[0] + t[0], q[1] + t[1])
        # through a regular (angle 2 pi) vertex: pick the translate that continues inward
        for t in self._translation_set():
            cand = (q[0] + t[0], q[1] + t[1])
            probe = (cand[0] + 1e-7 * d[0], cand[1] + 1e-7 * d[1])
            if t != (0.0, 0.0) and self._strictly_inside(probe) and self.boundary_distance(probe) > 1e-9:
                return cand
        raise RuntimeError(f"cannot continue geodesic through vertex at {q}")

    # -- sampling ---------------------------------------------------------

    def _fan(self):
        bp = np.asarray(self.base_point)
        poly = np.asarray(self.polygon)
        a = poly
        b = np.roll(poly, -1, axis=0)
        areas = 0.5 * _cross(a[:, 0] - bp[0], a[:, 1] - bp[1], b[:, 0] - bp[0], b[:, 1] - bp[1])
        return bp, a, b, areas

    def sample_points(self, count: int, rng: np.random.Generator) -> np.ndarray:
        """Uniform samples (area measure) as an ``(count, 2)`` array, clear of cone points."""
        bp, a, b, areas = self._fan()
        out = np.empty((0, 2))
        cones = self.cone_corners
        while len(out) < count:
            m = count - len(out)
            tri = rng.choice(len(areas), size=m, p=areas / areas.sum())
            r1 = np.sqrt(rng.random(m))
            r2 = rng.random(m)
            pts = (
                (1 - r1)[:, None] * bp
                + (r1 * (1 - r2))[:, None] * a[tri]
                + (r1 * r2)[:, None] * b[tri]
            )
            if len(cones):
                d = np.min(np.linalg.norm(pts[:, None, :] - cones[None, :, :], axis=2), axis=1)
                pts = pts[d >= EPS_CONE]
            out = np.concatenate([out, pts])
        return out[:count]

    def sample_area(self, count: int, seed: int) -> list[SurfacePoint]:
        if count <= 0:
            raise ValueError("count must be positive")
        pts = self.sample_points(count, np.random.default_rng(seed))
        return [SurfacePoint(float(x), float(y)) for x, y in pts]

    # -- uniformity -------------------------------------------------------

    def partition(self) -> tuple[tuple[Point, ...], ...]:
        """Convex cells used for chi-square uniformity tests (fan triangles by default)."""
        if self.cells:
            return self.cells
        bp, a, b, areas = self._fan()
        return tuple(
            (tuple(bp), tuple(a[k]), tuple(b[k])) for k in range(len(areas)) if areas[k] > 0
        )

    def cell_index(self, pts: np.ndarray) -> np.ndarray:
        idx = np.full(len(pts), -1)
        for c, cell in enumerate(self.partition()):
            inside = np.ones(len(pts), dtype=bool)
            m = len(cell)
            for k in range(m):
                (x0, y0), (x1, y1) = cell[k], cell[(k + 1) % m]
                inside &= _cross(x1 - x0, y1 - y0, pts[:, 0] - x0, pts[:, 1] - y0) >= 0
            idx[(idx < 0) & inside] = c
        return idx

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "polygon": [list(v) for v in self.polygon],
            "identifications": [list(p) for p in self.identifications],
            "basePoint": list(self.base_point),
            "genus": self.genus,
        }
        if self.cells:
            d["cells"] = [[list(v) for v in c] for c in self.cells]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FlatSurface":
        return cls(
            name=d.get("name", "custom"),
            polygon=tuple(tuple(v) for v in d["polygon"]),
            identifications=tuple(tuple(p) for p in d["identifications"]),
            base_point=tuple(d["basePoint"]),
            genus=int(d["genus"]),
            cells=tuple(tuple(tuple(v) for v in c) for c in d.get("cells", ())),
        )


def cell_areas(surface: FlatSurface) -> np.ndarray:
    out = []
    for cell in surface.partition():
        m = len(cell)
        out.append(0.5 * sum(_cross(*cell[k], *cell[(k + 1) % m]) for k in range(m)))
    return np.array(out)


def chi_square_uniformity(surface: FlatSurface, pts: np.ndarray, significance: float = 1e-3):
    """Pearson chi-square of cell counts against area-proportional expectations.

    Returns ``(statistic, threshold)``; uniformity is accepted when statistic < threshold.
    """
    from scipy.stats import chi2

    idx = surface.cell_index(np.asarray(pts))
    areas = cell_areas(surface)
    counts = np.bincount(idx[idx >= 0], minlength=len(areas))
    expected = len(pts) * areas / areas.sum()
    stat = float(np.sum((counts - expected) ** 2 / expected))
    return stat, float(chi2.ppf(1 - significance, len(areas) - 1))


def build_genus2_l() -> FlatSurface:
    """Three unit squares at (0,0), (1,0), (0,1) with opposite sides glued."""
    poly = ((0, 0), (1, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2), (0, 1))
    # edges: 0 bottom-left, 1 bottom-right, 2 right, 3 top of right square,
    # 4 right of top square, 5 top, 6 left-upper, 7 left-lower
    idents = ((0, 5), (1, 3), (2, 7), (4, 6))
    cells = []
    for ox, oy in ((0, 0), (1, 0), (0, 1)):
        cells.append(((ox, oy), (ox + 1, oy), (ox + 1, oy + 1)))
        cells.append(((ox, oy), (ox + 1, oy + 1), (ox, oy + 1)))
    return FlatSurface("genus2-L", poly, idents, (0.5, 0.5), 2, tuple(cells))


def build_torus() -> FlatSurface:
    poly = ((0, 0), (1, 0), (1, 1), (0, 1))
    cells = tuple(
        ((i / 3, j / 2), ((i + 1) / 3, j / 2), ((i + 1) / 3, (j + 1) / 2), (i / 3, (j + 1) / 2))
        for j in range(2)
        for i in range(3)
    )
    return FlatSurface("torus", poly, ((0, 2), (1, 3)), (0.5, 0.5), 1, cells)


BUILDERS = {"genus2-L": build_genus2_l, "torus": build_torus}


def normalize(surface: FlatSurface, raw) -> SurfacePoint:
    return surface.normalize(raw)


def unroll_segment(surface: FlatSurface, start, direction, length: float) -> Segment:
    return surface.unroll_segment(start, direction, length)


def sample_area(surface: FlatSurface, count: int, seed: int) -> list[SurfacePoint]:
    return surface.sample_area(count, seed)
