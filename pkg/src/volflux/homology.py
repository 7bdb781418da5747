"""Basis curves, signed crossing counts, the intersection form and Poincare duality.

Homotopy classes of loops are only ever seen through real-valued
homomorphisms, so everything here works in H_1 with real coefficients.
A loop's class is recovered from its signed crossing numbers with the
basis curves by inverting the intersection form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateCrossing, DimensionMismatch, SingularPairing, UnsupportedSurface
from .surface import EPS_CONE, FlatSurface, Polyline, Segment, _point_segment_distance

EPS_CROSS = 1e-9

# transverse offsets of the standard core curves, chosen off every dyadic grid line
OFFSET = 1.0 / 1024
OFFSET_STEP = 2.0**-20


@dataclass(frozen=True)
class BasisCurve:
    id: str
    pieces: tuple
    orientation: int = 1

    def __post_init__(self):
        pieces = tuple(
            ((float(a[0]), float(a[1])), (float(b[0]), float(b[1]))) for a, b in self.pieces
        )
        object.__setattr__(self, "pieces", pieces)
        if self.orientation not in (1, -1):
            raise ValueError("orientation must be +1 or -1")

    @property
    def oriented_pieces(self):
        if self.orientation == 1:
            return self.pieces
        return tuple((b, a) for a, b in reversed(self.pieces))

    def as_polyline(self) -> Polyline:
        return Polyline(self.oriented_pieces)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "pieces": [[list(a), list(b)] for a, b in self.pieces],
            "orientation": self.orientation,
        }

    @classmethod
    def from_dict(cls, d) -> "BasisCurve":
        return cls(str(d["id"]), tuple(tuple(p) for p in d["pieces"]), int(d.get("orientation", 1)))


def _pieces_of(trace):
    if isinstance(trace, (Polyline, Segment)):
        return trace.pieces
    if isinstance(trace, BasisCurve):
        return trace.oriented_pieces
    if isinstance(trace, (list, tuple)) and trace and isinstance(trace[0], (Polyline, Segment)):
        return tuple(p for part in trace for p in part.pieces)
    return tuple(trace)


def signed_crossings(trace, curve: BasisCurve) -> int:
    """Sum of sign(det(trace direction, curve direction)) over transversal crossings."""
    total = 0
    cpieces = curve.oriented_pieces
    for p0, p1 in _pieces_of(trace):
        rx, ry = p1[0] - p0[0], p1[1] - p0[1]
        rlen = math.hypot(rx, ry)
        if rlen == 0.0:
            continue
        for q0, q1 in cpieces:
            sx, sy = q1[0] - q0[0], q1[1] - q0[1]
            slen = math.hypot(sx, sy)
            for v in (p0, p1):
                if _point_segment_distance(v, q0, q1) < EPS_CROSS:
                    raise DegenerateCrossing(f"trace vertex {v} lies on curve {curve.id}")
            for v in (q0, q1):
                if _point_segment_distance(v, p0, p1) < EPS_CROSS:
                    raise DegenerateCrossing(f"curve {curve.id} vertex {v} lies on the trace")
            denom = rx * sy - ry * sx
            wx, wy = q0[0] - p0[0], q0[1] - p0[1]
            if abs(denom) <= 1e-15 * rlen * slen:
                # parallel: endpoint checks above already caught any overlap
                continue
            t = (wx * sy - wy * sx) / denom
            u = (wx * ry - wy * rx) / denom
            if 0.0 < t < 1.0 and 0.0 < u < 1.0:
                total += 1 if denom > 0 else -1
    return total


@dataclass(frozen=True)
class CohomologyClass:
    """A homomorphism H_1 -> R given by its values on the basis curves."""

    coeffs: np.ndarray
    id: str = "phi"

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        if not np.all(np.isfinite(c)):
            raise ValueError("cohomology coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)


@dataclass(frozen=True)
class HomologyVector:
    comps: np.ndarray

    def __post_init__(self):
        c = np.array(self.comps, dtype=float)
        c.setflags(write=False)
        object.__setattr__(self, "comps", c)

    def __add__(self, other):
        return HomologyVector(self.comps + other.comps)

    def __neg__(self):
        return HomologyVector(-self.comps)


@dataclass(frozen=True)
class CurveSystem:
    surface: FlatSurface
    curves: tuple[BasisCurve, ...]
    intersection_form: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "curves", tuple(self.curves))
        ids = [c.id for c in self.curves]
        if len(set(ids)) != len(ids):
            raise ValueError("curve ids must be unique")
        if len(self.curves) != 2 * self.surface.genus:
            raise ValueError(f"need {2 * self.surface.genus} basis curves, got {len(self.curves)}")
        bp = self.surface.base_point
        cones = [tuple(c) for c in self.surface.cone_corners]
        for c in self.curves:
            pieces = c.pieces
            for k, (a, b) in enumerate(pieces):
                nxt = pieces[(k + 1) % len(pieces)][0]
                if not self.surface.same_point(b, nxt, tol=1e-9):
                    raise ValueError(f"curve {c.id} is not closed at piece {k}")
                if _point_segment_distance(bp, a, b) < EPS_CONE:
                    raise ValueError(f"curve {c.id} passes through the base point")
                for cp in cones:
                    if _point_segment_distance(cp, a, b) < EPS_CONE:
                        raise ValueError(f"curve {c.id} passes through a cone point")
        m = len(self.curves)
        J = np.zeros((m, m), dtype=int)
        for i in range(m):
            for j in range(m):
                if i != j:
                    J[i, j] = signed_crossings(self.curves[i].oriented_pieces, self.curves[j])
        if not np.array_equal(J, -J.T):
            raise ValueError("intersection form is not antisymmetric")
        if abs(round(np.linalg.det(J))) != 1:
            raise ValueError("basis curves do not form a unimodular basis of H_1")
        J.setflags(write=False)
        object.__setattr__(self, "intersection_form", J)

    @property
    def ids(self) -> list[str]:
        return [c.id for c in self.curves]

    def index(self, curve_id: str) -> int:
        from .errors import UnknownCurve

        try:
            return self.ids.index(curve_id)
        except ValueError:
            raise UnknownCurve(curve_id) from None

    def __getitem__(self, curve_id: str) -> BasisCurve:
        return self.curves[self.index(curve_id)]

    def to_dict(self) -> dict:
        return {"curves": [c.to_dict() for c in self.curves]}

    @classmethod
    def from_dict(cls, surface: FlatSurface, d) -> "CurveSystem":
        return cls(surface, tuple(BasisCurve.from_dict(c) for c in d["curves"]))


def standard_curves(surface: FlatSurface) -> CurveSystem:
    """Core curves of the shipped surfaces' horizontal and vertical cylinders."""
    d = [OFFSET + OFFSET_STEP * k for k in range(1, 5)]
    if surface.name == "genus2-L":
        curves = (
            BasisCurve("h1", (((0.0, 0.5 + d[0]), (2.0, 0.5 + d[0])),)),
            BasisCurve("h2", (((0.0, 1.5 + d[1]), (1.0, 1.5 + d[1])),)),
            BasisCurve("v1", (((0.5 + d[2], 0.0), (0.5 + d[2], 2.0)),)),
            BasisCurve("v2", (((1.5 + d[3], 0.0), (1.5 + d[3], 1.0)),)),
        )
    elif surface.name == "torus":
        curves = (
            BasisCurve("a", (((0.0, 0.5 + d[0]), (1.0, 0.5 + d[0])),)),
            BasisCurve("b", (((0.5 + d[1], 0.0), (0.5 + d[1], 1.0)),)),
        )
    else:
        raise UnsupportedSurface(f"no standard curve system for surface {surface.name!r}")
    return CurveSystem(surface, curves)


def _check_closed(trace: Polyline, surface: FlatSurface) -> None:
    if trace.pieces and not surface.same_point(trace.pieces[0][0], trace.pieces[-1][1], tol=1e-9):
        raise ValueError("loop_class needs a closed trace")


def class_from_crossings(crossings, system: CurveSystem) -> HomologyVector:
    """Solve sum_i comps[i] * J[i, j] = crossings[j]."""
    J = system.intersection_form
    return HomologyVector(np.linalg.solve(J.T.astype(float), np.asarray(crossings, dtype=float)))


def loop_class(trace, system: CurveSystem) -> HomologyVector:
    trace = Polyline(_pieces_of(trace))
    _check_closed(trace, system.surface)
    crossings = [signed_crossings(trace, c) for c in system.curves]
    return class_from_crossings(crossings, system)


def eval_phi(phi: CohomologyClass, cls: HomologyVector) -> float:
    if phi.coeffs.shape != cls.comps.shape:
        raise DimensionMismatch(f"{phi.coeffs.shape} vs {cls.comps.shape}")
    return float(phi.coeffs @ cls.comps)


def poincare_dual(flux_values, system: CurveSystem) -> HomologyVector:
    """Homology class D with intersection(D, c_j) equal to the j-th period for every basis curve."""
    periods = np.asarray(getattr(flux_values, "periods", flux_values), dtype=float)
    J = system.intersection_form.astype(float)
    if periods.shape != (len(J),):
        raise DimensionMismatch(f"expected {len(J)} periods, got {periods.shape}")
    if abs(np.linalg.det(J)) < 0.5:
        raise SingularPairing("intersection form is singular")
    return HomologyVector(np.linalg.solve(J.T, periods))
