"""Shortest paths inside simple polygons and the opposing-side boundary integral.

Geodesic distance between two points of a closed simple polygon is realized
by a polyline bending only at reflex vertices. It is computed by clipping the
polygon into a triangulation (whose dual is a tree), walking the unique
sleeve of triangles between the endpoints, and pulling the path tight with a
funnel pass driven by exact orientation tests. The boundary functional
integrates geodesic distances between images of horizontally and vertically
opposing rectangle boundary points with midpoint quadrature.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CombinatoricsBroken,
    DegenerateInput,
    NotSimple,
    OnCurve,
    OutsidePolygon,
)
from .geom import (
    Polyline,
    SimplePolygon,
    orient,
    point_segment_distance,
    segment_intersection,
    winding_degree,
)


@dataclass
class Triangulation:
    """Triangle cover of a simple polygon with tree-shaped dual adjacency."""

    polygon: SimplePolygon
    triangles: list  # index triples into polygon.vertices, all CCW
    neighbors: list  # per triangle: list of (other tri index, shared (i, j))

    def coords(self, t: int) -> np.ndarray:
        v = self.polygon.vertices
        i, j, k = self.triangles[t]
        return np.array([v[i], v[j], v[k]])


def _blocked(v, a, b, c) -> bool:
    """Is v inside the closed CCW triangle abc (corners excluded by caller)?"""
    return orient(a, b, v) >= 0 and orient(b, c, v) >= 0 and orient(c, a, v) >= 0


def triangulate(P: SimplePolygon) -> Triangulation:
    """Ear-clipping triangulation; exact orientation tests throughout.

    Collinear boundary vertices are tolerated: they become triangle corners
    where possible, and when no positive-area ear exists one of them is
    dropped (it lies on the segment between its neighbors, so the covered
    region is unchanged).
    """
    verts = P.vertices
    n = verts.shape[0]
    idx = list(range(n))
    triangles = []

    def turn(pos):
        a = idx[(pos - 1) % len(idx)]
        b = idx[pos]
        c = idx[(pos + 1) % len(idx)]
        return orient(verts[a], verts[b], verts[c]), a, b, c

    guard = 0
    while len(idx) > 3:
        guard += 1
        if guard > 4 * n * n:
            raise NotSimple("ear clipping failed to make progress")
        clipped = False
        blockers = []
        for pos in range(len(idx)):
            o, _, b, _ = turn(pos)
            if o <= 0:
                blockers.append(b)
        for pos in range(len(idx)):
            o, a, b, c = turn(pos)
            if o <= 0:
                continue
            bad = False
            for j in blockers:
                if j in (a, b, c):
                    continue
                if _blocked(verts[j], verts[a], verts[b], verts[c]):
                    bad = True
                    break
            if not bad:
                triangles.append((a, b, c))
                idx.pop(pos)
                clipped = True
                break
        if clipped:
            continue
        # No convex ear: drop one collinear vertex (boundary shape unchanged).
        for pos in range(len(idx)):
            o, a, b, c = turn(pos)
            if o == 0:
                idx.pop(pos)
                clipped = True
                break
        if not clipped:
            raise NotSimple("no ear in a supposedly simple polygon")
    o = orient(verts[idx[0]], verts[idx[1]], verts[idx[2]])
    if o <= 0:
        raise NotSimple("degenerate final triangle")
    triangles.append(tuple(idx))

    # Dual adjacency through shared edges; a simple polygon's dual is a tree.
    edge_owner: dict = {}
    neighbors = [[] for _ in triangles]
    for t, (i, j, k) in enumerate(triangles):
        for u, v in ((i, j), (j, k), (k, i)):
            key = (min(u, v), max(u, v))
            if key in edge_owner:
                s = edge_owner.pop(key)
                neighbors[s].append((t, (u, v)))
                neighbors[t].append((s, (u, v)))
            else:
                edge_owner[key] = t
    return Triangulation(P, triangles, neighbors)


def _locate(tri: Triangulation, p) -> int:
    """Index of a triangle whose closure contains p, or -1.

    Queries that arrive from interpolation along a boundary side can land a
    few ulps outside every triangle; a nearest-triangle fallback accepts them
    within a relative tolerance instead of rejecting the point.
    """
    v = tri.polygon.vertices
    px, py = float(p[0]), float(p[1])
    for t, (i, j, k) in enumerate(tri.triangles):
        # Cheap bounding-box rejection before exact tests.
        xs = (v[i][0], v[j][0], v[k][0])
        ys = (v[i][1], v[j][1], v[k][1])
        if px < min(xs) - 1e-9 or px > max(xs) + 1e-9:
            continue
        if py < min(ys) - 1e-9 or py > max(ys) + 1e-9:
            continue
        if (
            orient(v[i], v[j], p) >= 0
            and orient(v[j], v[k], p) >= 0
            and orient(v[k], v[i], p) >= 0
        ):
            return t
    span = v.max(axis=0) - v.min(axis=0)
    tol = 1e-9 * max(1.0, float(np.hypot(span[0], span[1])))
    best, best_d = -1, tol
    q = np.array([px, py])
    for t, (i, j, k) in enumerate(tri.triangles):
        d = min(
            point_segment_distance(q, v[i], v[j]),
            point_segment_distance(q, v[j], v[k]),
            point_segment_distance(q, v[k], v[i]),
        )
        if d <= best_d:
            best, best_d = t, d
    return best


def _sleeve(tri: Triangulation, start: int, goal: int):
    """Unique dual-tree path of triangle indices from start to goal."""
    if start == goal:
        return [start]
    parent = {start: None}
    queue = deque([start])
    while queue:
        t = queue.popleft()
        if t == goal:
            break
        for s, _ in tri.neighbors[t]:
            if s not in parent:
                parent[s] = t
                queue.append(s)
    if goal not in parent:
        raise CombinatoricsBroken("dual graph is disconnected")
    path = [goal]
    while parent[path[-1]] is not None:
        path.append(parent[path[-1]])
    return path[::-1]


def _portal(tri: Triangulation, t: int, shared) -> tuple:
    """Shared edge of triangle t oriented as (left, right) when exiting."""
    tidx = tri.triangles[t]
    u, v = shared
    j = next(p for p in range(3) if tidx[p] not in (u, v))
    right = tidx[(j + 1) % 3]
    left = tidx[(j + 2) % 3]
    verts = tri.polygon.vertices
    return verts[left], verts[right]


def _eq(p, q) -> bool:
    return p[0] == q[0] and p[1] == q[1]


def _string_pull(portals, limit: int):
    """Funnel pass over (left, right) portal pairs; exact sign tests."""
    path = [portals[0][0]]
    apex = portals[0][0]
    left, right = apex, apex
    apex_i = left_i = right_i = 0
    i = 1
    steps = 0
    while i < len(portals):
        steps += 1
        if steps > limit:
            raise CombinatoricsBroken("funnel failed to terminate")
        pl, pr = portals[i]
        # The new right point narrows the funnel if it is left of (or on)
        # the apex->right edge; it may not cross over the left edge.
        if orient(apex, right, pr) >= 0:
            if _eq(apex, right) or orient(apex, left, pr) < 0:
                right, right_i = pr, i
            else:
                path.append(left)
                apex, apex_i = left, left_i
                left = right = apex
                left_i = right_i = apex_i
                i = apex_i + 1
                continue
        if orient(apex, left, pl) <= 0:
            if _eq(apex, left) or orient(apex, right, pl) > 0:
                left, left_i = pl, i
            else:
                path.append(right)
                apex, apex_i = right, right_i
                left = right = apex
                left_i = right_i = apex_i
                i = apex_i + 1
                continue
        i += 1
    path.append(portals[-1][0])
    out = [path[0]]
    for p in path[1:]:
        if not _eq(p, out[-1]):
            out.append(p)
    return out


def shortest_path(P: SimplePolygon, a, b, tri: Triangulation | None = None):
    """Geodesic between two points of the closed polygon.

    Returns (Polyline, length). The path stays inside the closure, bends
    only at polygon vertices, and realizes the internal geodesic distance.
    Pass a precomputed triangulation to amortize repeated queries.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if tri is None:
        tri = triangulate(P)
    ta = _locate(tri, a)
    tb = _locate(tri, b)
    if ta < 0:
        raise OutsidePolygon(f"point {tuple(a)} is not in the polygon closure")
    if tb < 0:
        raise OutsidePolygon(f"point {tuple(b)} is not in the polygon closure")
    if _eq(a, b):
        return Polyline([a, b]), 0.0
    sleeve = _sleeve(tri, ta, tb)
    portals = [(a, a)]
    for t, s in zip(sleeve[:-1], sleeve[1:]):
        shared = next(e for nb, e in tri.neighbors[t] if nb == s)
        portals.append(_portal(tri, t, shared))
    portals.append((b, b))
    pts = _string_pull(portals, limit=40 * (len(portals) + 2) ** 2)
    pl = Polyline(pts) if len(pts) > 1 else Polyline([pts[0], pts[0]])
    return pl, pl.length()


def geodesic_distance(P: SimplePolygon, a, b, tri: Triangulation | None = None) -> float:
    return shortest_path(P, a, b, tri)[1]


def segment_in_closure(P: SimplePolygon, a, b) -> bool:
    """Does the closed segment [a, b] lie inside the closed polygon?

    The segment is cut at every contact with the boundary; each open piece
    is inside iff its midpoint is (points on the boundary count as inside).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    boundary = P.boundary()
    gap2 = float(np.dot(b - a, b - a))
    if gap2 == 0.0:
        return _in_closure(P, a)
    params = [0.0, 1.0]
    for u, v in boundary.edges():
        hit = segment_intersection(a, b, u, v)
        for p in hit.points:
            t = float(np.dot(np.asarray(p) - a, b - a) / gap2)
            params.append(min(1.0, max(0.0, t)))
    params = sorted(set(params))
    for s, t in zip(params[:-1], params[1:]):
        if t - s < 1e-15:
            continue
        mid = a + ((s + t) / 2.0) * (b - a)
        if not _in_closure(P, mid):
            return False
    return True


def _in_closure(P: SimplePolygon, p) -> bool:
    try:
        return winding_degree(p, P.boundary()) != 0
    except OnCurve:
        return True


class BoundaryParam:
    """Continuous injective PL map from a rectangle boundary to the plane.

    The rectangle is [a1, a2] x [b1, b2]; the map is given per side as
    (parameters, image points) with parameters running in the side's natural
    coordinate (x for bottom/top, y for left/right), endpoints included.
    Corners must agree across adjacent sides; the closed image must be a
    simple polyline.
    """

    def __init__(self, rect, bottom, right, top, left, check: bool = True):
        self.a1, self.a2, self.b1, self.b2 = map(float, rect)
        if not (self.a1 < self.a2 and self.b1 < self.b2):
            raise DegenerateInput("rectangle sides must have positive length")
        self.sides = {}
        for name, lo, hi, data in (
            ("bottom", self.a1, self.a2, bottom),
            ("right", self.b1, self.b2, right),
            ("top", self.a1, self.a2, top),
            ("left", self.b1, self.b2, left),
        ):
            ts = np.asarray(data[0], dtype=float)
            pts = np.asarray(data[1], dtype=float)
            if ts.ndim != 1 or pts.shape != (ts.size, 2) or ts.size < 2:
                raise DegenerateInput(f"side {name}: need matching params and points")
            if abs(ts[0] - lo) > 1e-12 or abs(ts[-1] - hi) > 1e-12:
                raise DegenerateInput(f"side {name}: parameters must span [{lo}, {hi}]")
            if np.any(np.diff(ts) <= 0):
                raise DegenerateInput(f"side {name}: parameters must increase")
            self.sides[name] = (ts, pts)
        for s1, e1, s2, e2 in (
            ("bottom", -1, "right", 0),
            ("right", -1, "top", -1),
            ("top", 0, "left", -1),
            ("left", 0, "bottom", 0),
        ):
            p = self.sides[s1][1][e1]
            q = self.sides[s2][1][e2]
            if np.hypot(*(p - q)) > 1e-9:
                raise DegenerateInput(f"corner mismatch between {s1} and {s2}")
        self._polygon = None
        if check and not self.image_is_simple():
            raise NotSimple("boundary image self-intersects")

    def _eval(self, name: str, t: float):
        ts, pts = self.sides[name]
        t = float(t)
        if t <= ts[0]:
            return pts[0].copy()
        if t >= ts[-1]:
            return pts[-1].copy()
        i = int(np.searchsorted(ts, t, side="right")) - 1
        lam = (t - ts[i]) / (ts[i + 1] - ts[i])
        return (1 - lam) * pts[i] + lam * pts[i + 1]

    def bottom(self, x: float):
        return self._eval("bottom", x)

    def top(self, x: float):
        return self._eval("top", x)

    def left(self, y: float):
        return self._eval("left", y)

    def right(self, y: float):
        return self._eval("right", y)

    def closed_image(self) -> np.ndarray:
        """Image vertices in boundary order (CCW in the rectangle parameter)."""
        chunks = [
            self.sides["bottom"][1][:-1],
            self.sides["right"][1][:-1],
            self.sides["top"][1][::-1][:-1],
            self.sides["left"][1][::-1][:-1],
        ]
        return np.vstack(chunks)

    def image_is_simple(self) -> bool:
        from .geom import is_simple

        return is_simple(Polyline(self.closed_image(), closed=True))

    def image_polygon(self) -> SimplePolygon:
        if self._polygon is None:
            self._polygon = SimplePolygon(self.closed_image())
        return self._polygon


@dataclass
class PsiEstimate:
    value: float  # finer-level estimate
    gap: float  # |coarse - fine| refinement gap
    nodes: int  # midpoint nodes per integral at the finer level
    horizontal: float  # bottom-vs-top integral at the finer level
    vertical: float  # left-vs-right integral at the finer level


def _psi_level(phi: BoundaryParam, tri: Triangulation, n: int):
    P = phi.image_polygon()
    h = 0.0
    wa, wb = phi.a2 - phi.a1, phi.b2 - phi.b1
    for i in range(n):
        t = phi.a1 + (i + 0.5) * wa / n
        h += geodesic_distance(P, phi.bottom(t), phi.top(t), tri)
    h *= wa / n
    v = 0.0
    for i in range(n):
        y = phi.b1 + (i + 0.5) * wb / n
        v += geodesic_distance(P, phi.left(y), phi.right(y), tri)
    v *= wb / n
    return h, v


def boundary_geodesic_integral(
    phi: BoundaryParam, n: int = 32, tol: float | None = None, max_doublings: int = 6
) -> PsiEstimate:
    """Integral of geodesic distances between opposing boundary images.

    Composite midpoint quadrature of d(bottom(t), top(t)) over the width and
    d(left(y), right(y)) over the height, distances measured inside the
    region enclosed by the boundary image. Computes levels n and 2n and
    reports the refinement gap; with `tol` set, keeps doubling (up to
    `max_doublings`) until the gap drops below it.
    """
    if n < 2:
        raise DegenerateInput("need at least two quadrature nodes")
    P = phi.image_polygon()
    tri = triangulate(P)
    h, v = _psi_level(phi, tri, n)
    coarse = h + v
    # With no refinement allowed the gap is unknown, reported as infinite.
    fine, gap = coarse, float("inf")
    for _ in range(max_doublings):
        n *= 2
        h, v = _psi_level(phi, tri, n)
        fine = h + v
        gap = abs(fine - coarse)
        if tol is None or gap < tol:
            return PsiEstimate(value=fine, gap=gap, nodes=n, horizontal=h, vertical=v)
        coarse = fine
    return PsiEstimate(value=fine, gap=gap, nodes=n, horizontal=h, vertical=v)


def identity_boundary(rect) -> BoundaryParam:
    """Boundary map fixing the rectangle pointwise."""
    a1, a2, b1, b2 = map(float, rect)
    return BoundaryParam(
        rect,
        bottom=([a1, a2], [(a1, b1), (a2, b1)]),
        right=([b1, b2], [(a2, b1), (a2, b2)]),
        top=([a1, a2], [(a1, b2), (a2, b2)]),
        left=([b1, b2], [(a1, b1), (a1, b2)]),
    )
