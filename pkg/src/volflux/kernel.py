"""Batched signed crossing counts for loops l(f; x) over many sample points.

The scalar route (``gamma.build_loop`` + ``homology.signed_crossings``)
materializes every unrolled piece. Here the same counts come from lifted
cylinder coordinates: a move from ``s`` to ``s + d`` along a cylinder of
circumference ``L`` meets a transverse curve piece at position ``p`` exactly
``floor((s + d - p) / L) - floor((s - p) / L)`` times, signed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .homology import EPS_CROSS, CurveSystem
from .isotopy import LINEAR, Cylinder, Schedule, TwistWord
from .surface import EPS_CONE

# direction cosine below which a curve piece counts as axis-aligned
_AXIS_TOL = 1e-12


@dataclass(frozen=True)
class PathSystem:
    """How the base point is joined to a sample: straight, or through a waypoint."""

    kind: str = "straight"
    waypoint: tuple[float, float] | None = None

    def __post_init__(self):
        if self.kind not in ("straight", "waypoint"):
            raise ValueError(f"unknown path system {self.kind!r}")
        if self.kind == "waypoint" and self.waypoint is None:
            raise ValueError("waypoint path system needs a waypoint")

    def validate(self, surface) -> None:
        if self.kind == "waypoint":
            from .surface import _cross

            w = self.waypoint
            poly = surface.polygon
            n = len(poly)
            for k in range(n):
                a, b = poly[k], poly[(k + 1) % n]
                if _cross(b[0] - a[0], b[1] - a[1], w[0] - a[0], w[1] - a[1]) <= 0:
                    raise ValueError("waypoint must lie in the interior of the polygon kernel")

    def legs(self, base_point, pts):
        """Planar leg segments from the base point to each point, as (start, end) arrays."""
        bp = np.broadcast_to(np.asarray(base_point, dtype=float), pts.shape)
        if self.kind == "straight":
            return [(bp, pts)]
        w = np.broadcast_to(np.asarray(self.waypoint, dtype=float), pts.shape)
        return [(bp, w), (w, pts)]


STRAIGHT = PathSystem()


def _dist2_points_to_segment(px, py, a, b):
    """Squared distance from points (px, py) to the fixed segment a-b."""
    ax, ay = float(a[0]), float(a[1])
    dx, dy = float(b[0]) - ax, float(b[1]) - ay
    nn = dx * dx + dy * dy
    ux, uy = px - ax, py - ay
    if nn == 0.0:
        return ux * ux + uy * uy
    t = np.clip((ux * dx + uy * dy) / nn, 0.0, 1.0)
    ex, ey = ux - t * dx, uy - t * dy
    return ex * ex + ey * ey


def _dist2_point_to_segments(v, Ax, Ay, Bx, By):
    """Squared distance from the fixed point v to each segment A-B."""
    dx, dy = Bx - Ax, By - Ay
    nn = dx * dx + dy * dy
    ux, uy = v[0] - Ax, v[1] - Ay
    t = np.clip((ux * dx + uy * dy) / np.where(nn > 0, nn, 1.0), 0.0, 1.0)
    ex, ey = ux - t * dx, uy - t * dy
    return ex * ex + ey * ey


def point_segment_distance(pts: np.ndarray, a, b) -> np.ndarray:
    return np.sqrt(_dist2_points_to_segment(pts[:, 0], pts[:, 1], a, b))


_EPS2 = EPS_CROSS * EPS_CROSS
_CONE2 = EPS_CONE * EPS_CONE


def _segment_crossings(A, B, q0, q1):
    """Signed transversal crossings of segments A->B (arrays) with the fixed segment q0->q1.

    Returns (signed count, degenerate mask).
    """
    Ax, Ay, Bx, By = A[:, 0], A[:, 1], B[:, 0], B[:, 1]
    rx, ry = Bx - Ax, By - Ay
    sx, sy = float(q1[0]) - float(q0[0]), float(q1[1]) - float(q0[1])
    denom = rx * sy - ry * sx
    wx, wy = float(q0[0]) - Ax, float(q0[1]) - Ay
    safe = np.where(denom == 0, 1.0, denom)
    t = (wx * sy - wy * sx) / safe
    u = (wx * ry - wy * rx) / safe
    hit = (denom != 0) & (t > 0) & (t < 1) & (u > 0) & (u < 1)
    count = np.where(hit, np.sign(denom), 0.0).astype(np.int64)
    degenerate = (_dist2_points_to_segment(Ax, Ay, q0, q1) < _EPS2) | (
        _dist2_points_to_segment(Bx, By, q0, q1) < _EPS2
    )
    nonzero = (rx != 0) | (ry != 0)
    for v in (q0, q1):
        degenerate |= nonzero & (_dist2_point_to_segments(v, Ax, Ay, Bx, By) < _EPS2)
    return count, degenerate


def _classify(cyl: Cylinder, q0, q1):
    """Return ('perp', p, zlo, zhi, sign) | ('par', zp) | ('none',) for a curve piece."""
    ax = np.asarray(cyl.direction)
    d = np.subtract(q1, q0)
    length = np.hypot(*d)
    if length == 0:
        return ("none",)
    along = abs(d @ ax) / length
    s_a, z_a = cyl.to_cyl(q0)
    s_b, z_b = cyl.to_cyl(q1)
    if along < _AXIS_TOL:
        p = float(s_a)
        zlo, zhi = sorted((float(z_a), float(z_b)))
        L = cyl.circumference
        if zhi <= cyl.z0 or zlo >= cyl.z1 or not (cyl.s0 <= p <= cyl.s0 + L):
            return ("none",)
        if abs(p - cyl.s0) < EPS_CROSS or abs(p - cyl.s0 - L) < EPS_CROSS:
            raise NotImplementedError(f"curve piece lies on the glued end of cylinder {cyl.id}")
        sign = int(np.sign(ax[0] * d[1] - ax[1] * d[0]))
        return ("perp", p, zlo, zhi, sign)
    if along > 1 - _AXIS_TOL:
        return ("par", float(z_a))
    raise NotImplementedError("batched crossings need axis-aligned basis curves")


def _lift_count(s, d, p, L):
    return np.floor((s + d - p) / L) - np.floor((s - p) / L)


@dataclass
class LoopBatch:
    crossings: np.ndarray  # (N, m) int64
    end_points: np.ndarray  # (N, 2)
    degenerate: np.ndarray  # (N,) bool


def trace_crossings(
    system: CurveSystem,
    word: TwistWord,
    pts: np.ndarray,
    paths: PathSystem | None = STRAIGHT,
    schedule: Schedule = LINEAR,
) -> LoopBatch:
    """Crossing counts of l(f; x) (or of the bare trajectory when ``paths`` is None)."""
    surface = system.surface
    pts = np.asarray(pts, dtype=float)
    N = len(pts)
    curves = [c.oriented_pieces for c in system.curves]
    m = len(curves)
    counts = np.zeros((N, m), dtype=np.int64)
    degenerate = np.zeros(N, dtype=bool)

    cones = surface.cone_corners
    for c in cones:
        degenerate |= (pts[:, 0] - c[0]) ** 2 + (pts[:, 1] - c[1]) ** 2 < _CONE2

    vertices = [pts]
    cur = pts.copy()
    for letter in word.application_order:
        cyl = letter.cylinder
        inside = cyl.contains(cur)
        s, z = cyl.to_cyl(cur)
        d = np.where(inside, letter.displacement(z), 0.0)
        moving = d != 0
        L = cyl.circumference
        table = [[_classify(cyl, q0, q1) for q0, q1 in pieces] for pieces in curves]
        prev = 0.0
        s_run = s.copy()
        for r in schedule.turning:
            delta = d * (r - prev)
            prev = r
            for j, rows in enumerate(table):
                for entry in rows:
                    if entry[0] == "perp":
                        _, p, zlo, zhi, sign = entry
                        band = moving & (z > zlo) & (z < zhi)
                        counts[:, j] += np.where(
                            band, sign * _lift_count(s_run, delta, p, L), 0
                        ).astype(np.int64)
                        degenerate |= moving & (
                            (np.abs(z - zlo) < EPS_CROSS) | (np.abs(z - zhi) < EPS_CROSS)
                        )
                    elif entry[0] == "par":
                        degenerate |= moving & (np.abs(z - entry[1]) < EPS_CROSS)
            s_run = np.where(moving, cyl.s0 + np.mod(s_run - cyl.s0 + delta, L), s_run)
            step = cur.copy()
            step[moving] = cyl.from_cyl(s_run[moving], z[moving])
            vertices.append(step)
        cur = vertices[-1]

    for v in vertices:
        for j, pieces in enumerate(curves):
            for q0, q1 in pieces:
                degenerate |= _dist2_points_to_segment(v[:, 0], v[:, 1], q0, q1) < _EPS2

    if paths is not None:
        bp = surface.base_point
        out_legs = paths.legs(bp, pts)
        back_legs = [(b, a) for a, b in reversed(paths.legs(bp, cur))]
        for A, B in out_legs + back_legs:
            A = np.ascontiguousarray(A)
            B = np.ascontiguousarray(B)
            for j, pieces in enumerate(curves):
                for q0, q1 in pieces:
                    cnt, deg = _segment_crossings(A, B, q0, q1)
                    counts[:, j] += cnt
                    degenerate |= deg
            for c in cones:
                degenerate |= _dist2_point_to_segments(c, A[:, 0], A[:, 1], B[:, 0], B[:, 1]) < _CONE2
    return LoopBatch(counts, cur, degenerate)


def crossing_bounds(system: CurveSystem, word: TwistWord, paths: PathSystem | None, schedule: Schedule = LINEAR) -> np.ndarray:
    """Per-curve upper bound on |crossings| of any loop l(f; x)."""
    curves = [c.oriented_pieces for c in system.curves]
    bound = np.zeros(len(curves))
    n_legs = 0 if paths is None else 2 * (1 if paths.kind == "straight" else 2)
    for j, pieces in enumerate(curves):
        bound[j] += n_legs * len(pieces)
    for letter in word.letters:
        cyl = letter.cylinder
        dmax = abs(letter.scale) * letter.profile.max_abs()
        prev = 0.0
        moves = []
        for r in schedule.turning:
            moves.append(abs(r - prev) * dmax)
            prev = r
        for j, pieces in enumerate(curves):
            for q0, q1 in pieces:
                if _classify(cyl, q0, q1)[0] == "perp":
                    bound[j] += sum(np.floor(mv / cyl.circumference) + 1 for mv in moves)
    return bound
