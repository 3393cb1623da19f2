"""Planar geometry kernel: exact predicates, windings, intersections, simple polygons.

All coordinates are float64 pairs. Orientation tests are evaluated with a
floating-point filter and fall back to exact rational arithmetic when the
filter is inconclusive, so every sign decision is exact for the given floats.
Coincidence tolerance for everything that is not a sign test is 1e-12.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DegenerateInput, NotSimple, OnCurve

COINCIDENCE_TOL = 1e-12

# Relative error of a filtered 2x2 determinant; anything larger is trustworthy.
_ORIENT_FILTER = 3.3306690738754716e-16


def orient(a, b, c) -> int:
    """Sign of the signed area of triangle (a, b, c): 1 ccw, -1 cw, 0 collinear."""
    detleft = (a[0] - c[0]) * (b[1] - c[1])
    detright = (a[1] - c[1]) * (b[0] - c[0])
    det = detleft - detright
    errbound = _ORIENT_FILTER * (abs(detleft) + abs(detright))
    if det > errbound:
        return 1
    if det < -errbound:
        return -1
    # Filter inconclusive: redo with exact rationals (floats convert exactly).
    ax, ay = Fraction(float(a[0])), Fraction(float(a[1]))
    bx, by = Fraction(float(b[0])), Fraction(float(b[1]))
    cx, cy = Fraction(float(c[0])), Fraction(float(c[1]))
    exact = (ax - cx) * (by - cy) - (ay - cy) * (bx - cx)
    if exact > 0:
        return 1
    if exact < 0:
        return -1
    return 0


def point_segment_distance(p, a, b) -> float:
    """Euclidean distance from p to segment [a, b]."""
    px, py = float(p[0]), float(p[1])
    ax, ay = float(a[0]), float(a[1])
    bx, by = float(b[0]), float(b[1])
    dx, dy = bx - ax, by - ay
    dd = dx * dx + dy * dy
    if dd == 0.0:
        return float(np.hypot(px - ax, py - ay))
    t = ((px - ax) * dx + (py - ay) * dy) / dd
    t = min(1.0, max(0.0, t))
    return float(np.hypot(px - (ax + t * dx), py - (ay + t * dy)))


def _on_segment_collinear(p, a, b) -> bool:
    """Assuming p collinear with [a, b], is p within the closed segment?"""
    return (
        min(a[0], b[0]) <= p[0] <= max(a[0], b[0])
        and min(a[1], b[1]) <= p[1] <= max(a[1], b[1])
    )


@dataclass(frozen=True)
class SegmentIntersection:
    """Classification of how two closed segments meet."""

    kind: str  # "disjoint" | "proper" | "touch" | "overlap"
    points: tuple  # () for disjoint, (p,) for proper/touch, (p, q) for overlap


def segment_intersection(p1, p2, q1, q2) -> SegmentIntersection:
    """Classify the intersection of segments [p1,p2] and [q1,q2] exactly."""
    d1 = orient(q1, q2, p1)
    d2 = orient(q1, q2, p2)
    d3 = orient(p1, p2, q1)
    d4 = orient(p1, p2, q2)

    if d1 != d2 and d3 != d4 and 0 not in (d1, d2, d3, d4):
        # Proper crossing; solve for the point in floats.
        p1x, p1y = float(p1[0]), float(p1[1])
        rx, ry = float(p2[0]) - p1x, float(p2[1]) - p1y
        q1x, q1y = float(q1[0]), float(q1[1])
        sx, sy = float(q2[0]) - q1x, float(q2[1]) - q1y
        denom = rx * sy - ry * sx
        t = ((q1x - p1x) * sy - (q1y - p1y) * sx) / denom
        return SegmentIntersection("proper", ((p1x + t * rx, p1y + t * ry),))

    if d1 == d2 == d3 == d4 == 0:
        # Collinear: measure 1D overlap along the dominant axis.
        axis = 0 if abs(p2[0] - p1[0]) + abs(q2[0] - q1[0]) >= abs(p2[1] - p1[1]) + abs(
            q2[1] - q1[1]
        ) else 1
        pts = sorted([tuple(map(float, p1)), tuple(map(float, p2))], key=lambda z: z[axis])
        qts = sorted([tuple(map(float, q1)), tuple(map(float, q2))], key=lambda z: z[axis])
        lo = max(pts[0], qts[0], key=lambda z: z[axis])
        hi = min(pts[1], qts[1], key=lambda z: z[axis])
        if lo[axis] > hi[axis]:
            return SegmentIntersection("disjoint", ())
        if lo == hi:
            return SegmentIntersection("touch", (lo,))
        return SegmentIntersection("overlap", (lo, hi))

    # Some orientation vanishes: possible endpoint touch.
    touches = []
    if d1 == 0 and _on_segment_collinear(p1, q1, q2):
        touches.append(tuple(map(float, p1)))
    if d2 == 0 and _on_segment_collinear(p2, q1, q2):
        touches.append(tuple(map(float, p2)))
    if d3 == 0 and _on_segment_collinear(q1, p1, p2):
        touches.append(tuple(map(float, q1)))
    if d4 == 0 and _on_segment_collinear(q2, p1, p2):
        touches.append(tuple(map(float, q2)))
    if touches:
        return SegmentIntersection("touch", (touches[0],))
    if d1 != d2 and d3 != d4:
        # One endpoint orientation is zero but off-segment cases were filtered,
        # remaining sign pattern still means a crossing through an endpoint.
        return SegmentIntersection("touch", (tuple(map(float, p1)),))
    return SegmentIntersection("disjoint", ())


class Polyline:
    """Ordered vertex chain, optionally closed. Vertices are an (n, 2) array."""

    def __init__(self, vertices, closed: bool = False):
        v = np.asarray(vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 2:
            raise DegenerateInput("polyline needs at least two 2d vertices")
        self.vertices = v
        self.closed = bool(closed)

    def __len__(self):
        return self.vertices.shape[0]

    def edges(self):
        """Yield (a, b) vertex pairs for every edge."""
        v = self.vertices
        n = v.shape[0]
        for i in range(n - 1):
            yield v[i], v[i + 1]
        if self.closed:
            yield v[n - 1], v[0]

    def edge_array(self):
        """Edges as an (m, 4) array of (ax, ay, bx, by)."""
        v = self.vertices
        if self.closed:
            w = np.vstack([v, v[:1]])
        else:
            w = v
        return np.hstack([w[:-1], w[1:]])

    def length(self) -> float:
        e = self.edge_array()
        return float(np.sum(np.hypot(e[:, 2] - e[:, 0], e[:, 3] - e[:, 1])))


def signed_area(vertices) -> float:
    v = np.asarray(vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def winding_degree(z, curve: Polyline) -> int:
    """Topological degree of a closed polyline around z.

    Raises OnCurve if z is within 1e-12 of the curve, where the degree is
    undefined.
    """
    if not curve.closed:
        raise DegenerateInput("winding degree needs a closed curve")
    v = curve.vertices
    n = v.shape[0]
    zx, zy = float(z[0]), float(z[1])
    for i in range(n):
        a = v[i]
        b = v[(i + 1) % n]
        if point_segment_distance((zx, zy), a, b) < COINCIDENCE_TOL:
            raise OnCurve(f"point {z} lies on the curve")
    wn = 0
    for i in range(n):
        a = v[i]
        b = v[(i + 1) % n]
        if a[1] <= zy:
            if b[1] > zy and orient(a, b, (zx, zy)) > 0:
                wn += 1
        else:
            if b[1] <= zy and orient(a, b, (zx, zy)) < 0:
                wn -= 1
    return wn


def _segments_conflict(a0, a1, b0, b1, shared) -> bool:
    """Do two edges meet anywhere besides an allowed shared endpoint?"""
    hit = segment_intersection(a0, a1, b0, b1)
    if hit.kind == "disjoint":
        return False
    if hit.kind == "overlap":
        return True
    p = hit.points[0]
    for s in shared:
        if abs(p[0] - s[0]) <= COINCIDENCE_TOL and abs(p[1] - s[1]) <= COINCIDENCE_TOL:
            return False
    return True


def _dedupe_consecutive(v, closed):
    keep = [0]
    for i in range(1, v.shape[0]):
        if not np.allclose(v[i], v[keep[-1]], rtol=0.0, atol=COINCIDENCE_TOL):
            keep.append(i)
    out = v[keep]
    if closed and out.shape[0] > 1 and np.allclose(out[0], out[-1], rtol=0.0, atol=COINCIDENCE_TOL):
        out = out[:-1]
    return out


def is_simple(polyline: Polyline, brute_force_limit: int = 1000) -> bool:
    """True iff no two edges meet except adjacent ones at their shared vertex.

    Consecutive duplicate vertices are collapsed first, so a repeated or
    collinear interior vertex on an edge does not count against simplicity.
    Uses all-pairs checks up to `brute_force_limit` edges and a spatial-hash
    broad phase above that.
    """
    v = _dedupe_consecutive(polyline.vertices, polyline.closed)
    if v.shape[0] < 2:
        return True
    pl = Polyline(v, closed=polyline.closed)
    edges = list(pl.edges())
    n = len(edges)
    if n <= brute_force_limit:
        pairs = ((i, j) for i in range(n) for j in range(i + 1, n))
    else:
        pairs = _candidate_pairs(edges)
    for i, j in pairs:
        a0, a1 = edges[i]
        b0, b1 = edges[j]
        adjacent = (j == i + 1) or (pl.closed and i == 0 and j == n - 1)
        if adjacent:
            shared = [a1] if j == i + 1 else [a0]
            if _segments_conflict(a0, a1, b0, b1, shared):
                return False
        else:
            if segment_intersection(a0, a1, b0, b1).kind != "disjoint":
                return False
    return True


def _candidate_pairs(edges):
    """Spatial-hash broad phase: only edge pairs sharing a grid cell."""
    pts = np.array([[a[0], a[1], b[0], b[1]] for a, b in edges])
    lengths = np.hypot(pts[:, 2] - pts[:, 0], pts[:, 3] - pts[:, 1])
    cell = max(float(np.median(lengths)), 1e-9)
    buckets: dict = {}
    for i, (a, b) in enumerate(edges):
        x0 = int(np.floor(min(a[0], b[0]) / cell))
        x1 = int(np.floor(max(a[0], b[0]) / cell))
        y0 = int(np.floor(min(a[1], b[1]) / cell))
        y1 = int(np.floor(max(a[1], b[1]) / cell))
        for cx in range(x0, x1 + 1):
            for cy in range(y0, y1 + 1):
                buckets.setdefault((cx, cy), []).append(i)
    seen = set()
    for members in buckets.values():
        for ii in range(len(members)):
            for jj in range(ii + 1, len(members)):
                i, j = members[ii], members[jj]
                if i > j:
                    i, j = j, i
                if (i, j) not in seen:
                    seen.add((i, j))
                    yield i, j


class SimplePolygon:
    """Positively oriented simple polygon."""

    def __init__(self, vertices, check: bool = True):
        v = _dedupe_consecutive(np.asarray(vertices, dtype=float), closed=True)
        if v.shape[0] < 3:
            raise DegenerateInput("polygon needs at least three distinct vertices")
        if signed_area(v) < 0:
            v = v[::-1].copy()
        self.vertices = v
        if check:
            if signed_area(v) <= 0:
                raise NotSimple("polygon has non-positive area")
            if not is_simple(Polyline(v, closed=True)):
                raise NotSimple("polygon boundary self-intersects")

    def __len__(self):
        return self.vertices.shape[0]

    def area(self) -> float:
        return signed_area(self.vertices)

    def boundary(self) -> Polyline:
        return Polyline(self.vertices, closed=True)

    def contains(self, z) -> bool:
        """Strict interior test; points on the boundary return False."""
        try:
            return winding_degree(z, self.boundary()) != 0
        except OnCurve:
            return False

    def centroid(self):
        v = self.vertices
        x, y = v[:, 0], v[:, 1]
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        cross = x * yn - xn * y
        a = np.sum(cross) / 2.0
        cx = float(np.sum((x + xn) * cross) / (6.0 * a))
        cy = float(np.sum((y + yn) * cross) / (6.0 * a))
        return np.array([cx, cy])


def generalized_segment(a, b, into, xi: float) -> Polyline:
    """Path from a to b: straight, or bent through one interior midpoint.

    When `into` is None the path is the straight segment. Otherwise `into`
    points off the chord into the open cell; its component along the chord is
    discarded and the path bends at m = midpoint + d * n with n the unit
    perpendicular rest of `into` and d = xi * |ab| / 2. Hence m projects onto
    the chord at its midpoint, dist(m, chord) < xi * |ab|, and the length is
    2 * sqrt(1 + xi^2) * |ab| / 2 <= (1 + xi) * |ab|.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if xi <= 0:
        raise DegenerateInput("xi must be positive")
    if into is None:
        return Polyline([a, b])
    gap = float(np.hypot(*(b - a)))
    if gap <= COINCIDENCE_TOL:
        raise DegenerateInput("generalized segment endpoints coincide")
    n = np.asarray(into, dtype=float)
    chord = (b - a) / gap
    n = n - float(np.dot(n, chord)) * chord
    nn = float(np.hypot(*n))
    if nn <= COINCIDENCE_TOL:
        raise DegenerateInput("interior direction is parallel to the segment")
    m = (a + b) / 2.0 + (xi * gap / 2.0) * (n / nn)
    return Polyline([a, m, b])


def polyline_intersections(polylines, tol: float = COINCIDENCE_TOL):
    """All conflicts among the edges of several open polylines.

    Edges belonging to the same polyline are allowed to meet at shared
    consecutive-vertex endpoints; distinct polylines are allowed to meet at
    coincident chain endpoints (grid curves legitimately share crosses).
    Returns a list of ((chain_i, edge_i), (chain_j, edge_j), kind) conflicts.
    """
    edges = []
    owner = []
    for ci, pl in enumerate(polylines):
        v = np.asarray(pl, dtype=float)
        for k in range(v.shape[0] - 1):
            edges.append((v[k], v[k + 1]))
            owner.append((ci, k))
    n = len(edges)
    if n == 0:
        return []
    if n <= 1000:
        pairs = ((i, j) for i in range(n) for j in range(i + 1, n))
    else:
        pairs = _candidate_pairs(edges)
    ends = {}
    for ci, pl in enumerate(polylines):
        v = np.asarray(pl, dtype=float)
        ends[ci] = (v[0], v[-1])
    conflicts = []
    for i, j in pairs:
        (ci, ki), (cj, kj) = owner[i], owner[j]
        a0, a1 = edges[i]
        b0, b1 = edges[j]
        hit = segment_intersection(a0, a1, b0, b1)
        if hit.kind == "disjoint":
            continue
        if hit.kind == "overlap":
            conflicts.append((owner[i], owner[j], "overlap"))
            continue
        p = hit.points[0]
        allowed = []
        if ci == cj and abs(ki - kj) == 1:
            allowed.append(a1 if kj == ki + 1 else a0)
        if ci != cj:
            # Chains may share endpoints (crosses); interior contact is not ok.
            for e in ends[ci]:
                for e2 in ends[cj]:
                    if np.allclose(e, e2, rtol=0.0, atol=tol):
                        allowed.append(e)
        ok = any(
            abs(p[0] - s[0]) <= tol and abs(p[1] - s[1]) <= tol for s in allowed
        )
        if not ok:
            conflicts.append((owner[i], owner[j], hit.kind))
    return conflicts


def polygon_kernel(vertices, shrink: float = 0.0):
    """Kernel of a polygon (points seeing the whole boundary), or None.

    Computed by clipping the bounding box against every edge half-plane,
    optionally shrunk inward by `shrink`. Returns an (m, 2) array or None.
    """
    v = np.asarray(vertices, dtype=float)
    lo = v.min(axis=0) - 1.0
    hi = v.max(axis=0) + 1.0
    region = [
        np.array([lo[0], lo[1]]),
        np.array([hi[0], lo[1]]),
        np.array([hi[0], hi[1]]),
        np.array([lo[0], hi[1]]),
    ]
    n = v.shape[0]
    for i in range(n):
        a = v[i]
        b = v[(i + 1) % n]
        d = b - a
        nrm = float(np.hypot(*d))
        if nrm <= COINCIDENCE_TOL:
            continue
        # Half-plane: left of a->b, moved inward by shrink.
        nx, ny = -d[1] / nrm, d[0] / nrm
        ax, ay = a[0] + shrink * nx, a[1] + shrink * ny
        region = _clip_halfplane(region, (ax, ay), (d[0], d[1]))
        if len(region) < 3:
            return None
    return np.array(region)


def _clip_halfplane(poly, a, d):
    """Clip a convex polygon by the half-plane left of point a, direction d."""
    out = []
    n = len(poly)
    ax, ay = a
    dx, dy = d

    def side(p):
        return dx * (p[1] - ay) - dy * (p[0] - ax)

    for i in range(n):
        p = poly[i]
        q = poly[(i + 1) % n]
        sp, sq = side(p), side(q)
        if sp >= 0:
            out.append(p)
        if (sp > 0 and sq < 0) or (sp < 0 and sq > 0):
            t = sp / (sp - sq)
            out.append(p + t * (q - p))
    return out


def is_convex(vertices, tol: float = 0.0) -> bool:
    """True if the polygon is convex (exact sign tests; collinear allowed)."""
    v = np.asarray(vertices, dtype=float)
    n = v.shape[0]
    sign = 0
    for i in range(n):
        o = orient(v[i], v[(i + 1) % n], v[(i + 2) % n])
        if o == 0:
            continue
        if sign == 0:
            sign = o
        elif o != sign:
            return False
    return True


def point_cloud_diameter(points) -> float:
    """Exact diameter of a point set (vectorized all-pairs)."""
    p = np.asarray(points, dtype=float)
    if p.shape[0] < 2:
        return 0.0
    d2 = np.sum((p[:, None, :] - p[None, :, :]) ** 2, axis=2)
    return float(np.sqrt(d2.max()))
