"""Piecewise affine homeomorphic extension of rectangle boundary data.

Given an injective piecewise linear map on the boundary of a rectangle,
build a piecewise affine homeomorphism of the rectangle onto the enclosed
region whose Manhattan variation stays within a prescribed excess over the
opposing-boundary geodesic integral (the infimum over all extensions).
The construction is recursive geodesic bisection: split the rectangle across
its longer side, map the cut to the image geodesic between the split points,
and fill the leaves with fan or strip triangulations once the measured
excess fits the leaf's area share of the budget.
"""

from __future__ import annotations

import bisect

import numpy as np

from .errors import DegenerateInput, ExtensionFailed, GlueMismatch, OnCurve
from .geodesic import (
    BoundaryParam,
    boundary_geodesic_integral,
    geodesic_distance,
    shortest_path,
    triangulate,
)
from .geom import (
    Polyline,
    orient,
    point_segment_distance,
    polygon_kernel,
    segment_intersection,
    signed_area,
    winding_degree,
)


class PLHomeo:
    """Piecewise affine map on a rectangle, one affine piece per triangle.

    src and img are matching (n, 2) vertex arrays; triangles holds index
    triples, counterclockwise in the source. The map sends each source
    triangle affinely onto its image triangle. validate() checks the
    orientation-preserving homeomorphism invariants.
    """

    def __init__(self, rect, src, img, triangles):
        self.rect = tuple(float(c) for c in rect)
        a1, a2, b1, b2 = self.rect
        if not (a1 < a2 and b1 < b2):
            raise DegenerateInput("rectangle sides must have positive length")
        self.src = np.asarray(src, dtype=float).reshape(-1, 2)
        self.img = np.asarray(img, dtype=float).reshape(-1, 2)
        self.triangles = np.asarray(triangles, dtype=int).reshape(-1, 3)
        if self.src.shape != self.img.shape:
            raise DegenerateInput("source and image vertex arrays must match")
        self._jac = None
        self._areas = None
        self._buckets = None

    # -- affine data --------------------------------------------------------

    def _affine(self):
        if self._jac is not None:
            return
        m = self.triangles.shape[0]
        self._jac = np.empty((m, 2, 2))
        self._areas = np.empty(m)
        for t, (i, j, k) in enumerate(self.triangles):
            A = np.column_stack([self.src[j] - self.src[i], self.src[k] - self.src[i]])
            B = np.column_stack([self.img[j] - self.img[i], self.img[k] - self.img[i]])
            det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
            if det == 0.0:
                raise DegenerateInput(f"source triangle {t} is degenerate")
            Ainv = np.array([[A[1, 1], -A[0, 1]], [-A[1, 0], A[0, 0]]]) / det
            self._jac[t] = B @ Ainv
            self._areas[t] = abs(det) / 2.0

    def jacobian(self, t: int) -> np.ndarray:
        self._affine()
        return self._jac[t]

    def source_area(self, t: int) -> float:
        self._affine()
        return float(self._areas[t])

    # -- evaluation ---------------------------------------------------------

    def _build_buckets(self):
        a1, a2, b1, b2 = self.rect
        m = self.triangles.shape[0]
        g = max(1, int(np.sqrt(m)))
        buckets = [[] for _ in range(g * g)]
        fx = g / (a2 - a1)
        fy = g / (b2 - b1)
        for t, (i, j, k) in enumerate(self.triangles):
            pts = self.src[[i, j, k]]
            lo = pts.min(axis=0)
            hi = pts.max(axis=0)
            ix0 = min(g - 1, max(0, int((lo[0] - a1) * fx)))
            ix1 = min(g - 1, max(0, int((hi[0] - a1) * fx)))
            iy0 = min(g - 1, max(0, int((lo[1] - b1) * fy)))
            iy1 = min(g - 1, max(0, int((hi[1] - b1) * fy)))
            for ix in range(ix0, ix1 + 1):
                for iy in range(iy0, iy1 + 1):
                    buckets[ix * g + iy].append(t)
        self._buckets = (g, fx, fy, buckets)

    def _locate(self, p) -> int:
        if self._buckets is None:
            self._build_buckets()
        g, fx, fy, buckets = self._buckets
        a1, a2, b1, b2 = self.rect
        x = min(max(float(p[0]), a1), a2)
        y = min(max(float(p[1]), b1), b2)
        q = np.array([x, y])
        ix = min(g - 1, max(0, int((x - a1) * fx)))
        iy = min(g - 1, max(0, int((y - b1) * fy)))
        for t in buckets[ix * g + iy]:
            i, j, k = self.triangles[t]
            if (
                orient(self.src[i], self.src[j], q) >= 0
                and orient(self.src[j], self.src[k], q) >= 0
                and orient(self.src[k], self.src[i], q) >= 0
            ):
                return t
        # Clamped point can still sit an ulp outside every triangle of its
        # bucket; fall back to the nearest triangle by vertex distance.
        best, best_d = -1, np.inf
        for t, (i, j, k) in enumerate(self.triangles):
            d = min(
                float(np.hypot(*(self.src[i] - q))),
                float(np.hypot(*(self.src[j] - q))),
                float(np.hypot(*(self.src[k] - q))),
            )
            if d < best_d:
                best, best_d = t, d
        return best

    def eval(self, p) -> np.ndarray:
        """Image of a single source point (clamped to the rectangle)."""
        t = self._locate(p)
        i = self.triangles[t][0]
        J = self.jacobian(t)
        q = np.array([float(p[0]), float(p[1])])
        return self.img[i] + J @ (q - self.src[i])

    def evals(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        out = np.empty_like(pts)
        for r in range(pts.shape[0]):
            out[r] = self.eval(pts[r])
        return out

    # -- line restrictions ----------------------------------------------------

    def line_image(self, orientation: str, c: float) -> Polyline:
        """Image of a full horizontal or vertical line of the rectangle.

        orientation "horizontal" restricts to y = c (parametrized by x),
        "vertical" to x = c. Breakpoints are placed at every crossing of a
        triangle edge, so the result is exact for the piecewise affine map.
        """
        a1, a2, b1, b2 = self.rect
        if orientation == "horizontal":
            lo, hi, fixed_axis, free_axis = a1, a2, 1, 0
        elif orientation == "vertical":
            lo, hi, fixed_axis, free_axis = b1, b2, 0, 1
        else:
            raise DegenerateInput("orientation must be horizontal or vertical")
        c = float(c)
        cuts = {lo, hi}
        for i, j, k in self.triangles:
            for u, v in ((i, j), (j, k), (k, i)):
                pu, pv = self.src[u], self.src[v]
                du, dv = pu[fixed_axis] - c, pv[fixed_axis] - c
                if du == 0.0:
                    cuts.add(float(pu[free_axis]))
                if dv == 0.0:
                    cuts.add(float(pv[free_axis]))
                if (du > 0 and dv < 0) or (du < 0 and dv > 0):
                    w = du / (du - dv)
                    cuts.add(float(pu[free_axis] + w * (pv[free_axis] - pu[free_axis])))
        ts = np.array(sorted(t for t in cuts if lo <= t <= hi))
        pts = np.empty((ts.size, 2))
        for r, t in enumerate(ts):
            p = (t, c) if orientation == "horizontal" else (c, t)
            pts[r] = self.eval(p)
        return Polyline(pts)

    def line_variation(self, orientation: str, c: float) -> float:
        return self.line_image(orientation, c).length()

    # -- boundary -------------------------------------------------------------

    def side_trace(self, side: str):
        """Boundary restriction on one rectangle side as (params, points).

        Vertices are the triangulation vertices lying exactly on the side,
        ordered by the side's natural coordinate.
        """
        a1, a2, b1, b2 = self.rect
        axis, level, sort_axis = {
            "bottom": (1, b1, 0),
            "top": (1, b2, 0),
            "left": (0, a1, 1),
            "right": (0, a2, 1),
        }[side]
        idx = np.nonzero(self.src[:, axis] == level)[0]
        order = np.argsort(self.src[idx, sort_axis], kind="stable")
        idx = idx[order]
        return self.src[idx, sort_axis].copy(), self.img[idx].copy()

    # -- validation -----------------------------------------------------------

    def validate(self, boundary: BoundaryParam | None = None) -> None:
        """Check the homeomorphism invariants, raising ExtensionFailed.

        Source triangles must be positively oriented and partition the
        rectangle (area sum, interior edges shared by exactly two triangles,
        no vertex in the interior of another edge); image triangles must be
        positively oriented. With a boundary parametrization given, the
        trace must reproduce every parametrization vertex bit-exactly, and
        any trace vertices added by splitting must still lie on the curve.
        """
        a1, a2, b1, b2 = self.rect
        self._affine()
        area = (a2 - a1) * (b2 - b1)
        total = float(self._areas.sum())
        if abs(total - area) > 1e-9 * area:
            raise ExtensionFailed(
                f"source triangles cover {total}, rectangle area is {area}"
            )
        edge_count: dict = {}
        for t, (i, j, k) in enumerate(self.triangles):
            if orient(self.src[i], self.src[j], self.src[k]) <= 0:
                raise ExtensionFailed(f"source triangle {t} not counterclockwise")
            if orient(self.img[i], self.img[j], self.img[k]) <= 0:
                raise ExtensionFailed(f"image triangle {t} not positively oriented")
            for u, v in ((i, j), (j, k), (k, i)):
                key = (min(u, v), max(u, v))
                edge_count[key] = edge_count.get(key, 0) + 1
        for (u, v), cnt in edge_count.items():
            if cnt > 2:
                raise ExtensionFailed("an edge is shared by more than two triangles")
            if cnt == 1 and not _edge_on_rect_boundary(self.src[u], self.src[v], self.rect):
                raise ExtensionFailed("interior edge with a single owner (T junction)")
        seen = set()
        for r in range(self.src.shape[0]):
            key = (self.src[r, 0], self.src[r, 1])
            if key in seen:
                raise ExtensionFailed("duplicate source vertices")
            seen.add(key)
        self._check_no_vertex_on_edge(edge_count.keys())
        if boundary is not None:
            for side in ("bottom", "right", "top", "left"):
                ts, pts = self.side_trace(side)
                ref_ts, ref_pts = boundary.sides[side]
                pos = {float(t): r for r, t in enumerate(ts)}
                for r, t in enumerate(ref_ts):
                    at = pos.get(float(t))
                    if at is None or not np.array_equal(pts[at], ref_pts[r]):
                        raise ExtensionFailed(
                            f"boundary vertex at {side} t={t} not reproduced"
                        )
                for r, t in enumerate(ts):
                    gap = np.hypot(*(pts[r] - boundary._eval(side, t)))
                    if gap > 1e-9:
                        raise ExtensionFailed(
                            f"trace vertex off the boundary curve at {side} t={t}"
                        )

    def _check_no_vertex_on_edge(self, edges) -> None:
        # Bucketed scan: a vertex strictly inside another triangle's edge
        # would break continuity across that edge.
        a1, a2, b1, b2 = self.rect
        nv = self.src.shape[0]
        g = max(1, int(np.sqrt(nv)))
        fx = g / (a2 - a1)
        fy = g / (b2 - b1)
        buckets: dict = {}
        for r in range(nv):
            ix = min(g - 1, max(0, int((self.src[r, 0] - a1) * fx)))
            iy = min(g - 1, max(0, int((self.src[r, 1] - b1) * fy)))
            buckets.setdefault((ix, iy), []).append(r)
        for u, v in edges:
            pu, pv = self.src[u], self.src[v]
            lo = np.minimum(pu, pv)
            hi = np.maximum(pu, pv)
            ix0 = min(g - 1, max(0, int((lo[0] - a1) * fx)))
            ix1 = min(g - 1, max(0, int((hi[0] - a1) * fx)))
            iy0 = min(g - 1, max(0, int((lo[1] - b1) * fy)))
            iy1 = min(g - 1, max(0, int((hi[1] - b1) * fy)))
            for ix in range(ix0, ix1 + 1):
                for iy in range(iy0, iy1 + 1):
                    for r in buckets.get((ix, iy), ()):
                        if r == u or r == v:
                            continue
                        p = self.src[r]
                        if p[0] < lo[0] or p[0] > hi[0] or p[1] < lo[1] or p[1] > hi[1]:
                            continue
                        if (p[0] == pu[0] and p[1] == pu[1]) or (
                            p[0] == pv[0] and p[1] == pv[1]
                        ):
                            continue
                        if orient(pu, pv, p) == 0:
                            raise ExtensionFailed("vertex lies inside another edge")


def _edge_on_rect_boundary(p, q, rect) -> bool:
    a1, a2, b1, b2 = rect
    for axis, level in ((0, a1), (0, a2), (1, b1), (1, b2)):
        if p[axis] == level and q[axis] == level:
            return True
    return False


def manhattan_variation(h: PLHomeo) -> float:
    """Sum over triangles of area times the two Jacobian column norms."""
    h._affine()
    cols = np.hypot(h._jac[:, 0, :], h._jac[:, 1, :])  # (m, 2) column norms
    return float((h._areas * cols.sum(axis=1)).sum())


def variation_components(h: PLHomeo):
    """(|D1 h|, |D2 h|) over the rectangle, exact for the affine pieces."""
    h._affine()
    cols = np.hypot(h._jac[:, 0, :], h._jac[:, 1, :])
    v1 = float((h._areas * cols[:, 0]).sum())
    v2 = float((h._areas * cols[:, 1]).sum())
    return v1, v2


# ---------------------------------------------------------------------------
# boundary parametrization plumbing


def _side_source_points(phi: BoundaryParam):
    """Boundary breakpoints of phi as (source points, image points), CCW."""
    a1, a2, b1, b2 = phi.a1, phi.a2, phi.b1, phi.b2
    src, img = [], []

    def add(side, make_src, reverse=False):
        ts, pts = phi.sides[side]
        rng = range(ts.size - 1) if not reverse else range(ts.size - 1, 0, -1)
        for i in rng:
            src.append(make_src(ts[i]))
            img.append(pts[i])

    add("bottom", lambda t: (t, b1))
    add("right", lambda t: (a2, t))
    add("top", lambda t: (t, b2), reverse=True)
    add("left", lambda t: (a1, t), reverse=True)
    return np.array(src, dtype=float), np.array(img, dtype=float)


def _restrict(ts, pts, lo, hi, p_lo, p_hi):
    """Slice side data to [lo, hi], reusing given endpoint images bit-exact.

    Knots within rounding distance of the new endpoints are the same nominal
    parameter reached through different arithmetic; keeping them would leave
    a zero-length edge in the child's image polygon that no fill survives.
    """
    tol = 64 * np.finfo(float).eps * max(1.0, abs(lo), abs(hi))
    inner = np.nonzero((ts > lo + tol) & (ts < hi - tol))[0]
    new_ts = np.concatenate([[lo], ts[inner], [hi]])
    new_pts = np.vstack([[p_lo], pts[inner], [p_hi]])
    return new_ts, new_pts


def _edge_under_segment(poly_vertices, p, q, tol=1e-12):
    """Polygon edge that the segment [p, q] runs along, or None."""
    n = poly_vertices.shape[0]
    for i in range(n):
        a = poly_vertices[i]
        b = poly_vertices[(i + 1) % n]
        if (
            point_segment_distance(p, a, b) <= tol
            and point_segment_distance(q, a, b) <= tol
        ):
            return a, b
    return None


def _offset_directions(prev_pt, bend, next_pt, poly_vertices):
    """Candidate inward directions for pulling a bend off the boundary.

    Segments of the geodesic that run along a polygon wall need the wall's
    inward normal (a parallel strip keeps both split halves simple); isolated
    reflex-vertex bends take the path bisector. Opposite signs come last.
    """
    dirs = []

    def push(d):
        nd = float(np.hypot(*d))
        if nd > 1e-12:
            d = d / nd
            for known in dirs:
                if abs(known[0] - d[0]) < 1e-9 and abs(known[1] - d[1]) < 1e-9:
                    return
            dirs.append(d)

    for a, b in filter(
        None,
        (
            _edge_under_segment(poly_vertices, bend, next_pt),
            _edge_under_segment(poly_vertices, prev_pt, bend),
        ),
    ):
        e = b - a
        push(np.array([-e[1], e[0]]))  # interior is left of a CCW edge
    u = prev_pt - bend
    v = next_pt - bend
    nu, nv = float(np.hypot(*u)), float(np.hypot(*v))
    if nu > 0 and nv > 0:
        push(u / nu + v / nv)
    w = next_pt - prev_pt
    push(np.array([-w[1], w[0]]))
    return dirs + [-d for d in dirs]


def _segment_clears_boundary(poly_vertices, cand, far) -> bool:
    """No proper crossing or overlap between [cand, far] and the polygon edges.

    The far end may sit on the boundary (a cut endpoint, or a bend not yet
    offset), and interpolated side points land an ulp off their wall, which
    exact predicates would read as a crossing. The far end is pulled in by a
    hair so only crossings caused by the candidate itself count.
    """
    far = far + 1e-6 * (cand - far)
    n = poly_vertices.shape[0]
    for i in range(n):
        a = poly_vertices[i]
        b = poly_vertices[(i + 1) % n]
        kind = segment_intersection(cand, far, a, b).kind
        if kind in ("proper", "overlap"):
            return False
    return True


def _cut_geodesic(phi: BoundaryParam, p_from, p_to):
    """Geodesic polyline between two boundary image points, pulled off
    any polygon vertices it bends around so both split halves stay simple."""
    poly = phi.image_polygon()
    path, _ = shortest_path(poly, p_from, p_to)
    pts = [np.asarray(p, dtype=float) for p in path.vertices]
    ring = Polyline(poly.vertices, closed=True)
    # Endpoints stay exact; interior bends sit on polygon vertices and are
    # nudged inward so the cut only meets the boundary at its ends. The nudge
    # scales with the region diameter: each generation of cuts then leaves
    # vertices separated at a fixed fraction of its own leaf scale instead of
    # piling sub-ulp dust around a repeatedly wrapped vertex.
    span = poly.vertices.max(axis=0) - poly.vertices.min(axis=0)
    diam = float(np.hypot(span[0], span[1]))
    for i in range(1, len(pts) - 1):
        dirs = _offset_directions(pts[i - 1], pts[i], pts[i + 1], poly.vertices)
        local = min(
            float(np.hypot(*(pts[i] - pts[i - 1]))),
            float(np.hypot(*(pts[i + 1] - pts[i]))),
        )
        step = max(1e-12, min(3e-4 * diam, 0.25 * local))
        moved = None
        for _ in range(8):
            for d in dirs:
                cand = pts[i] + step * d
                try:
                    if winding_degree(cand, ring) != 1:
                        continue
                except OnCurve:
                    continue
                if _segment_clears_boundary(
                    poly.vertices, cand, pts[i - 1]
                ) and _segment_clears_boundary(poly.vertices, cand, pts[i + 1]):
                    moved = cand
                    break
            if moved is not None:
                break
            step *= 0.1
        if moved is not None:
            pts[i] = moved
    return np.vstack(pts)


def _constant_speed_params(points, lo, hi):
    seg = np.hypot(*np.diff(points, axis=0).T)
    total = float(seg.sum())
    if total == 0.0:
        raise DegenerateInput("cut curve has zero length")
    frac = np.concatenate([[0.0], np.cumsum(seg) / total])
    ts = lo + (hi - lo) * frac
    ts[0], ts[-1] = lo, hi
    return ts


def _cut_contact(cut_pts, arc, i0, i1, path_pts):
    """First contact (arc fraction, point) of cut segments [i0, i1) with a path.

    Touching and overlapping contacts count: when the path runs along the
    cut (both wrap the same vertex chain) any shared point preserves the
    distance split, and the earliest one keeps the sweep monotone.
    """
    total = arc[-1]
    for i in range(i0, i1):
        a, b = cut_pts[i], cut_pts[i + 1]
        best = None
        for j in range(path_pts.shape[0] - 1):
            hit = segment_intersection(a, b, path_pts[j], path_pts[j + 1])
            if hit.kind == "disjoint":
                continue
            for p in hit.points:
                p = np.asarray(p, dtype=float)
                frac = (arc[i] + float(np.hypot(*(p - a)))) / total
                if best is None or frac < best[0]:
                    best = (frac, p)
        if best is not None:
            return best
    return None, None


class _CutMatcher:
    """Transversal geodesic queries against one piece, with a convex fast path.

    A convex image makes every opposing-boundary geodesic a straight chord,
    so crossing and distance queries reduce to segment arithmetic; otherwise
    paths are funneled through a cached triangulation.
    """

    def __init__(self, phi: BoundaryParam, axis: int):
        self.phi = phi
        self.side_a, self.side_b = ("left", "right") if axis == 0 else ("bottom", "top")
        ring = phi.closed_image()
        n = ring.shape[0]
        self.convex = all(
            orient(ring[i], ring[(i + 1) % n], ring[(i + 2) % n]) >= 0
            for i in range(n)
        )
        self._poly = None
        self._tri = None

    def _geo(self):
        if self._poly is None:
            self._poly = self.phi.image_polygon()
            self._tri = triangulate(self._poly)
        return self._poly, self._tri

    def endpoints(self, s: float):
        return self.phi._eval(self.side_a, s), self.phi._eval(self.side_b, s)

    def path(self, s: float) -> np.ndarray | None:
        pa, pb = self.endpoints(s)
        if self.convex:
            return np.vstack([pa, pb])
        poly, tri = self._geo()
        try:
            pl, _ = shortest_path(poly, pa, pb, tri)
        except Exception:
            return None
        return pl.vertices

    def dist(self, p, q) -> float:
        if self.convex:
            return float(np.hypot(*(p - q)))
        poly, tri = self._geo()
        return geodesic_distance(poly, p, q, tri)

    def excess(self, s: float, gamma) -> float:
        """Inflation of the opposing-boundary distance when routed via gamma."""
        pa, pb = self.endpoints(s)
        try:
            return self.dist(pa, gamma) + self.dist(gamma, pb) - self.dist(pa, pb)
        except Exception:
            return 0.0


def _match_cut_params(phi: BoundaryParam, axis: int, cut_pts, lo, hi, tol=None):
    """Cut parameters placing every cut point on its transversal geodesic.

    The distance integrals of the two halves only add up to the parent's
    when the cut point with parameter t lies on the geodesic joining the
    opposing boundary images at t; anything else inflates the children's
    lower bounds, and the inflation compounds down the split tree. Bend
    parameters are found by bisection on the monotone order of geodesic
    crossings along the cut. With a tolerance given, extra knots are then
    inserted inside straight stretches until the estimated inflation of the
    distance integral drops below it.

    Returns (ts, pts, residual): residual is the remaining inflation
    estimate. It stays large when the transversal crossings pile up on one
    point of the cut, which happens exactly when the piece is collapsed
    along the cut direction; no parametrization can fix such a cut and the
    caller should cut along the other axis instead.
    """
    span = hi - lo
    seg = np.diff(cut_pts, axis=0)
    arc = np.concatenate([[0.0], np.cumsum(np.hypot(seg[:, 0], seg[:, 1]))])
    if arc[-1] <= 0:
        ts = _constant_speed_params(cut_pts, lo, hi)
        return ts, cut_pts, 0.0
    mat = _CutMatcher(phi, axis)
    nb = cut_pts.shape[0]
    bend_u = arc / arc[-1]
    nseg = nb - 1
    s_vals = [lo]
    resolved = True
    for k in range(1, nb - 1):
        s_a, s_b = s_vals[-1], hi
        target = bend_u[k]
        for _ in range(50):
            s_mid = 0.5 * (s_a + s_b)
            path = mat.path(s_mid)
            u_mid = None
            if path is not None:
                u_mid, _ = _cut_contact(cut_pts, arc, 0, nseg, path)
            if u_mid is None:
                resolved = False
                break
            if u_mid >= target:
                s_b = s_mid
            else:
                s_a = s_mid
            if s_b - s_a <= 1e-13 * span:
                break
        if not resolved:
            break
        s_vals.append(0.5 * (s_a + s_b))
    if resolved:
        # Colliding values mean a stretch of the cut lies along one
        # transversal geodesic: its image must be traversed within a single
        # parameter value in the limit. Spread such params over a strip wide
        # enough for fills to keep positive cells at descendant scales; the
        # spreading cost lands in the refinement drift estimate below.
        for k in range(1, nb - 1):
            if s_vals[k] <= s_vals[k - 1]:
                step = min(1e-6 * span, (hi - s_vals[k - 1]) / (nb - k))
                s_vals[k] = s_vals[k - 1] + step
        resolved = s_vals[-1] < hi
    if not resolved:
        ts = _constant_speed_params(cut_pts, lo, hi)
        return ts, cut_pts, _sampled_drift(mat, ts, cut_pts)
    s_vals.append(hi)
    # row = [parameter, arc fraction, image point, index of the cut segment
    # the preceding interval lies in]
    rows = [
        [s_vals[k], bend_u[k], np.asarray(cut_pts[k], dtype=float), max(0, k - 1)]
        for k in range(nb)
    ]
    residual = 0.0
    if tol is not None and tol > 0:
        rows, residual = _refine_cut_knots(mat, cut_pts, arc, rows, tol, span)
    ts = np.array([r[0] for r in rows])
    pts = np.vstack([r[2] for r in rows])
    ts[0], ts[-1] = lo, hi
    pts[0], pts[-1] = cut_pts[0], cut_pts[-1]
    if np.any(np.diff(ts) <= 0):
        ts = _constant_speed_params(cut_pts, lo, hi)
        return ts, cut_pts, _sampled_drift(mat, ts, cut_pts)
    return ts, pts, residual


def _sampled_drift(mat, ts, pts):
    """Midpoint drift estimate of a cut parametrization, by interval."""
    total = 0.0
    for i in range(ts.size - 1):
        s_mid = 0.5 * (ts[i] + ts[i + 1])
        gamma = 0.5 * (pts[i] + pts[i + 1])
        total += mat.excess(s_mid, gamma) * (ts[i + 1] - ts[i])
    return total


def _refine_cut_knots(mat, cut_pts, arc, rows, tol, span):
    """Insert crossing-matched knots until the drift estimate is within tol.

    Every interval between adjacent knots lies inside one straight stretch
    of the cut, so the child parametrization traverses the stretch linearly
    there and the midpoint inflation times the interval width estimates the
    interval's contribution to the lower-bound drift. Intervals whose
    crossing collapses onto an existing knot cannot be improved; their
    estimate is reported back as residual drift.
    """
    def interval_est(ra, rb):
        width = rb[0] - ra[0]
        if width <= 1e-11 * span:
            return 0.0
        s_mid = 0.5 * (ra[0] + rb[0])
        gamma = 0.5 * (ra[2] + rb[2])
        return mat.excess(s_mid, gamma) * width

    ests = [interval_est(rows[i], rows[i + 1]) for i in range(len(rows) - 1)]
    stuck = 0.0
    for _ in range(16):
        if stuck + sum(ests) <= tol:
            break
        worst = int(np.argmax(ests))
        if ests[worst] <= 0.0:
            break
        ra, rb = rows[worst], rows[worst + 1]
        s_mid = 0.5 * (ra[0] + rb[0])
        j = rb[3]
        path = mat.path(s_mid)
        u_new = p_new = None
        if path is not None:
            u_new, p_new = _cut_contact(cut_pts, arc, j, j + 1, path)
        gap_u = 1e-6 * (rb[1] - ra[1])
        if u_new is None or u_new - ra[1] < gap_u or rb[1] - u_new < gap_u:
            # The crossing sits on an existing knot: more knots cannot help,
            # only make dust. Count the interval as unresolved.
            stuck += ests[worst]
            ests[worst] = 0.0
            continue
        new = [s_mid, u_new, p_new, j]
        rows.insert(worst + 1, new)
        ests[worst : worst + 1] = [
            interval_est(ra, new),
            interval_est(new, rb),
        ]
    return rows, stuck + sum(ests)


def _split(
    phi: BoundaryParam,
    axis: int,
    m: float,
    drift_tol: float | None = None,
    drift_cap: float | None = None,
):
    """Split phi across source coordinate m into two boundary maps.

    axis 0 cuts [a1, a2] at x = m (cut joins bottom(m) to top(m)); axis 1
    cuts [b1, b2] at y = m. The cut data arrays are shared by both children,
    which keeps later gluing bit-exact. drift_tol bounds the estimated
    inflation of the children's distance integrals over the parent's;
    estimates above drift_cap mean the transversal crossings pile up on one
    point, so the cut direction itself is wrong and the split fails.
    """
    if drift_cap is None:
        drift_cap = 4 * drift_tol if drift_tol is not None else np.inf
    a1, a2, b1, b2 = phi.a1, phi.a2, phi.b1, phi.b2
    if axis == 0:
        p_lo = phi.bottom(m)
        p_hi = phi.top(m)
        cut_pts = _cut_geodesic(phi, p_lo, p_hi)
        cut_pts[0], cut_pts[-1] = p_lo, p_hi
        cut_ts, cut_pts, drift = _match_cut_params(phi, 0, cut_pts, b1, b2, drift_tol)
        if drift > drift_cap:
            raise ExtensionFailed(f"cut drift {drift:.3e} unresolvable at x = {m}")
        cut = (cut_ts, cut_pts)
        bl_ts, bl_pts = _restrict(*phi.sides["bottom"], a1, m, phi.sides["bottom"][1][0], p_lo)
        br_ts, br_pts = _restrict(*phi.sides["bottom"], m, a2, p_lo, phi.sides["bottom"][1][-1])
        tl_ts, tl_pts = _restrict(*phi.sides["top"], a1, m, phi.sides["top"][1][0], p_hi)
        tr_ts, tr_pts = _restrict(*phi.sides["top"], m, a2, p_hi, phi.sides["top"][1][-1])
        left_child = BoundaryParam(
            (a1, m, b1, b2),
            bottom=(bl_ts, bl_pts),
            right=cut,
            top=(tl_ts, tl_pts),
            left=phi.sides["left"],
        )
        right_child = BoundaryParam(
            (m, a2, b1, b2),
            bottom=(br_ts, br_pts),
            right=phi.sides["right"],
            top=(tr_ts, tr_pts),
            left=cut,
        )
        return left_child, right_child
    p_lo = phi.left(m)
    p_hi = phi.right(m)
    cut_pts = _cut_geodesic(phi, p_lo, p_hi)
    cut_pts[0], cut_pts[-1] = p_lo, p_hi
    cut_ts, cut_pts, drift = _match_cut_params(phi, 1, cut_pts, a1, a2, drift_tol)
    if drift > drift_cap:
        raise ExtensionFailed(f"cut drift {drift:.3e} unresolvable at y = {m}")
    cut = (cut_ts, cut_pts)
    ll_ts, ll_pts = _restrict(*phi.sides["left"], b1, m, phi.sides["left"][1][0], p_lo)
    lu_ts, lu_pts = _restrict(*phi.sides["left"], m, b2, p_lo, phi.sides["left"][1][-1])
    rl_ts, rl_pts = _restrict(*phi.sides["right"], b1, m, phi.sides["right"][1][0], p_hi)
    ru_ts, ru_pts = _restrict(*phi.sides["right"], m, b2, p_hi, phi.sides["right"][1][-1])
    lower = BoundaryParam(
        (a1, a2, b1, m),
        bottom=phi.sides["bottom"],
        right=(rl_ts, rl_pts),
        top=cut,
        left=(ll_ts, ll_pts),
    )
    upper = BoundaryParam(
        (a1, a2, m, b2),
        bottom=cut,
        right=(ru_ts, ru_pts),
        top=phi.sides["top"],
        left=(lu_ts, lu_pts),
    )
    return lower, upper


# ---------------------------------------------------------------------------
# leaf fills


def _fan_fill(phi: BoundaryParam) -> PLHomeo | None:
    """Fan triangulation from the rectangle center onto a kernel point."""
    src_b, img_b = _side_source_points(phi)
    kernel = polygon_kernel(img_b, shrink=0.0)
    if kernel is None:
        return None
    anchor = np.asarray(kernel, dtype=float).mean(axis=0)
    n = src_b.shape[0]
    for i in range(n):
        if orient(anchor, img_b[i], img_b[(i + 1) % n]) <= 0:
            return None
    center = np.array([(phi.a1 + phi.a2) / 2.0, (phi.b1 + phi.b2) / 2.0])
    src = np.vstack([src_b, center])
    img = np.vstack([img_b, anchor])
    tris = [(n, i, (i + 1) % n) for i in range(n)]
    return PLHomeo((phi.a1, phi.a2, phi.b1, phi.b2), src, img, tris)


def _grid_fill(phi: BoundaryParam, k: int) -> PLHomeo | None:
    """Tensor grid fill blending the four side curves across the piece.

    Interior lattice images interpolate the sides linearly minus the
    bilinear corner term, so the fill matches all four side polylines and
    its variation converges to the boundary lower bound as k grows, where a
    single-diagonal fill stalls at a fixed relative excess set by the shape
    of the image. Side breakpoints join the lattice and boundary rows take
    the side values bit for bit, which keeps gluing exact. Cells are split
    along whichever diagonal keeps the image triangles positively oriented;
    a fold gives None.
    """
    a1, a2, b1, b2 = phi.a1, phi.a2, phi.b1, phi.b2

    def lattice(lo, hi, knots_a, knots_b):
        knots = np.unique(np.concatenate([knots_a, knots_b]))
        uni = np.linspace(lo, hi, k + 1)
        # A uniform point a rounding error away from a knot would make a
        # sliver column whose image corners coincide; keep the knot.
        tol = 1e-9 * (hi - lo)
        far = np.abs(uni[:, None] - knots[None, :]).min(axis=1) > tol
        return np.unique(np.concatenate([uni[far], knots]))

    xs = lattice(a1, a2, phi.sides["bottom"][0], phi.sides["top"][0])
    ys = lattice(b1, b2, phi.sides["left"][0], phi.sides["right"][0])
    nx, ny = xs.size, ys.size
    bot = np.vstack([phi.bottom(x) for x in xs])
    top = np.vstack([phi.top(x) for x in xs])
    lef = np.vstack([phi.left(y) for y in ys])
    rig = np.vstack([phi.right(y) for y in ys])
    u = ((xs - a1) / (a2 - a1))[None, :, None]
    v = ((ys - b1) / (b2 - b1))[:, None, None]
    p00, p10 = bot[0], bot[-1]
    p01, p11 = top[0], top[-1]
    img = (
        (1 - v) * bot[None, :, :]
        + v * top[None, :, :]
        + (1 - u) * lef[:, None, :]
        + u * rig[:, None, :]
        - ((1 - u) * (1 - v) * p00 + u * (1 - v) * p10 + (1 - u) * v * p01 + u * v * p11)
    )
    # The blend cancels to the side values on the boundary only up to
    # rounding; store the exact side rows so traces stay bit-exact.
    img[0, :, :] = bot
    img[-1, :, :] = top
    img[:, 0, :] = lef
    img[:, -1, :] = rig
    img = img.reshape(nx * ny, 2)
    gx, gy = np.meshgrid(xs, ys)
    src = np.column_stack([gx.ravel(), gy.ravel()])
    tris = []
    for j in range(ny - 1):
        for i in range(nx - 1):
            c00 = j * nx + i
            c10 = c00 + 1
            c01 = c00 + nx
            c11 = c01 + 1
            first = ((c00, c10, c11), (c00, c11, c01))
            second = ((c10, c11, c01), (c10, c01, c00))
            for pair in (first, second):
                if all(orient(img[a], img[b], img[c]) > 0 for a, b, c in pair):
                    tris.extend(pair)
                    break
            else:
                return None
    return PLHomeo((a1, a2, b1, b2), src, img, tris)


def _corner_fan_fills(phi: BoundaryParam) -> list[PLHomeo]:
    """Fans anchored at a corner image point.

    The natural fill when the image is a wedge hanging off one corner: an
    interior anchor pays an order-one premium over the geodesic bound on
    such pieces at every scale, while the corner anchor is asymptotically
    optimal. Requires the two sides meeting at the corner to be plain
    segments, otherwise their interior breakpoints would give the fan
    degenerate source triangles.
    """
    src_b, img_b = _side_source_points(phi)
    n = src_b.shape[0]
    nb = phi.sides["bottom"][0].size
    nr = phi.sides["right"][0].size
    nt = phi.sides["top"][0].size
    corners = (
        (0, "left", "bottom"),
        (nb - 1, "bottom", "right"),
        (nb - 1 + nr - 1, "right", "top"),
        (nb - 1 + nr - 1 + nt - 1, "top", "left"),
    )
    out = []
    for r, side_a, side_b in corners:
        if phi.sides[side_a][0].size != 2 or phi.sides[side_b][0].size != 2:
            continue
        apex = img_b[r]
        tris = []
        ok = True
        for k in range(n):
            k2 = (k + 1) % n
            if k == r or k2 == r:
                continue
            if orient(apex, img_b[k], img_b[k2]) <= 0:
                ok = False
                break
            tris.append((r, k, k2))
        if ok:
            out.append(
                PLHomeo((phi.a1, phi.a2, phi.b1, phi.b2), src_b, img_b, tris)
            )
    return out


def _strip_fills(phi: BoundaryParam) -> list[PLHomeo]:
    """Zig-zag triangulations between the two transversal sides.

    Requires the two remaining sides to be plain segments. Ties in the
    two-pointer advance are broken both ways; on a plain quadrilateral the
    two orders give the two diagonals, and a nonconvex image admits only one
    of them. Returns every variant whose image triangles stay positive.
    """
    out = []
    for lo_side, hi_side, seg_a, seg_b, flip in (
        ("bottom", "top", "left", "right", False),
        ("left", "right", "bottom", "top", True),
    ):
        if phi.sides[seg_a][0].size != 2 or phi.sides[seg_b][0].size != 2:
            continue
        lo_ts, lo_pts = phi.sides[lo_side]
        hi_ts, hi_pts = phi.sides[hi_side]
        if flip:
            level_lo, level_hi = phi.a1, phi.a2
            make_lo = lambda t: (level_lo, t)
            make_hi = lambda t: (level_hi, t)
        else:
            level_lo, level_hi = phi.b1, phi.b2
            make_lo = lambda t: (t, level_lo)
            make_hi = lambda t: (t, level_hi)
        src = [make_lo(t) for t in lo_ts] + [make_hi(t) for t in hi_ts]
        img = np.vstack([lo_pts, hi_pts])
        nb = lo_ts.size
        for lo_wins_ties in (True, False):
            # Two-pointer zig-zag; index orders below are counterclockwise in
            # the source for each direction, so only the image needs checking.
            tris = []
            i, j = 0, 0
            while i < nb - 1 or j < hi_ts.size - 1:
                t_next_lo = lo_ts[i + 1] if i < nb - 1 else np.inf
                t_next_hi = hi_ts[j + 1] if j < hi_ts.size - 1 else np.inf
                if t_next_lo < t_next_hi or (
                    t_next_lo == t_next_hi and lo_wins_ties
                ):
                    tri = (i, i + 1, nb + j) if not flip else (i, nb + j, i + 1)
                    i += 1
                else:
                    tri = (
                        (i, nb + j + 1, nb + j)
                        if not flip
                        else (i, nb + j, nb + j + 1)
                    )
                    j += 1
                tris.append(tri)
            if all(orient(img[u], img[v], img[w]) > 0 for u, v, w in tris):
                src_arr = np.array(src, dtype=float)
                out.append(
                    PLHomeo((phi.a1, phi.a2, phi.b1, phi.b2), src_arr, img, tris)
                )
    return out


# ---------------------------------------------------------------------------
# gluing


def _shared_edge(r1, r2):
    """(axis, coord) of the common full edge of two rectangles, or None."""
    a1, a2, b1, b2 = r1
    c1, c2, d1, d2 = r2
    if a2 == c1 and b1 == d1 and b2 == d2:
        return 0, a2
    if c2 == a1 and b1 == d1 and b2 == d2:
        return 0, a1
    if b2 == d1 and a1 == c1 and a2 == c2:
        return 1, b2
    if d2 == b1 and a1 == c1 and a2 == c2:
        return 1, b1
    return None


def _edge_trace(h: PLHomeo, axis: int, coord: float):
    idx = np.nonzero(h.src[:, axis] == coord)[0]
    order = np.argsort(h.src[idx, 1 - axis], kind="stable")
    idx = idx[order]
    return h.src[idx], h.img[idx]


def _edge_match_tol(lo: float, hi: float) -> float:
    """Parameter slack for identifying one vertex bisected by two subtrees."""
    return 16 * np.finfo(float).eps * max(1.0, abs(lo), abs(hi))


def _conform_edge(h: PLHomeo, axis: int, coord: float, union_rows) -> PLHomeo:
    """Insert missing shared-edge vertices so the trace matches union_rows.

    Each insertion splits the single triangle owning the containing edge
    segment, keeping the mesh conforming. Vertex rows are copied bit for bit
    from the sibling so the later trace comparison can stay exact.
    """
    src = [np.asarray(r, dtype=float) for r in h.src]
    img = [np.asarray(r, dtype=float) for r in h.img]
    tris = list(h.triangles)
    have = {}
    for k, row in enumerate(src):
        if row[axis] == coord:
            have[float(row[1 - axis])] = k
    ts = sorted(have)
    tol = _edge_match_tol(ts[0], ts[-1])
    claimed = {t for t, _, _ in union_rows}
    changed = False
    for t, sp, ip in union_rows:
        k = None
        if t in have:
            k = have[t]
        else:
            # Independently bisected breakpoints land an ulp apart; adopt
            # the canonical row instead of minting a twin vertex. Moving a
            # vertex must not reorder it past its edge neighbors or steal a
            # knot that another union row names exactly.
            pos = bisect.bisect_left(ts, t)
            for q in (pos - 1, pos):
                if not (0 <= q < len(ts) and abs(ts[q] - t) <= tol):
                    continue
                if ts[q] in claimed:
                    continue
                if q > 0 and t <= ts[q - 1]:
                    continue
                if q + 1 < len(ts) and t >= ts[q + 1]:
                    continue
                cand = have[ts[q]]
                if np.abs(img[cand] - ip).max() <= 1e-9:
                    k = cand
                    break
        if k is not None:
            if not (np.array_equal(src[k], sp) and np.array_equal(img[k], ip)):
                told = float(src[k][1 - axis])
                src[k] = np.asarray(sp, dtype=float)
                img[k] = np.asarray(ip, dtype=float)
                if told != t:
                    del have[told]
                    ts.remove(told)
                    have[t] = k
                    bisect.insort(ts, t)
                changed = True
            continue
        pos = bisect.bisect_left(ts, t)
        if pos == 0 or pos == len(ts):
            raise GlueMismatch("shared-edge vertex outside the edge span")
        vi, vj = have[ts[pos - 1]], have[ts[pos]]
        new = len(src)
        src.append(np.asarray(sp, dtype=float))
        img.append(np.asarray(ip, dtype=float))
        owner = None
        for n_idx, tri in enumerate(tris):
            if vi in tri and vj in tri:
                owner = n_idx
                break
        if owner is None:
            raise GlueMismatch("no triangle owns a shared-edge segment")
        lst = list(tris[owner])
        for r in range(3):
            if lst[r] in (vi, vj) and lst[(r + 1) % 3] in (vi, vj):
                a0, b0, c0 = lst[r], lst[(r + 1) % 3], lst[(r + 2) % 3]
                break
        tris[owner] = (a0, new, c0)
        tris.append((new, b0, c0))
        have[t] = new
        bisect.insort(ts, t)
        changed = True
    if not changed:
        return h
    return PLHomeo(h.rect, np.array(src), np.array(img), tris)


def _merge_pair(h1: PLHomeo, h2: PLHomeo) -> PLHomeo:
    """Glue two maps sharing a full rectangle edge into one map.

    The shared-edge traces must agree wherever both sides have a vertex;
    vertices present on one side only (from deeper cuts) are inserted into
    the other side's triangles first so the glued mesh stays conforming.
    """
    shared = _shared_edge(h1.rect, h2.rect)
    if shared is None:
        raise GlueMismatch(f"rectangles {h1.rect} and {h2.rect} share no full edge")
    axis, coord = shared
    s1, i1 = _edge_trace(h1, axis, coord)
    s2, i2 = _edge_trace(h2, axis, coord)
    if s1.shape != s2.shape or not (np.array_equal(s1, s2) and np.array_equal(i1, i2)):
        # Rounding in independently refined interpolation spans, and deep
        # cut bisections converging to the same point, move a breakpoint by
        # an ulp; pair such rows and let the first map's bits be canonical.
        # Anything beyond rounding keeps both rows or is a real mismatch.
        n1, n2 = s1.shape[0], s2.shape[0]
        tol = _edge_match_tol(
            min(float(s1[0, 1 - axis]), float(s2[0, 1 - axis])),
            max(float(s1[-1, 1 - axis]), float(s2[-1, 1 - axis])),
        )
        union_rows = []
        i = j = 0
        while i < n1 or j < n2:
            if j >= n2:
                take = 1
            elif i >= n1:
                take = 2
            else:
                a, b = float(s1[i, 1 - axis]), float(s2[j, 1 - axis])
                gap = np.abs(i1[i] - i2[j]).max()
                if a == b and gap > 1e-12:
                    word = "x" if axis == 0 else "y"
                    raise GlueMismatch(f"traces differ on shared edge {word} = {coord}")
                if abs(a - b) <= tol and gap <= 1e-9:
                    take = 3
                elif a <= b:
                    take = 1
                else:
                    take = 2
            if take == 2:
                union_rows.append((float(s2[j, 1 - axis]), s2[j], i2[j]))
                j += 1
            else:
                union_rows.append((float(s1[i, 1 - axis]), s1[i], i1[i]))
                i += 1
                if take == 3:
                    j += 1
        h1 = _conform_edge(h1, axis, coord, union_rows)
        h2 = _conform_edge(h2, axis, coord, union_rows)
        s1, i1 = _edge_trace(h1, axis, coord)
        s2, i2 = _edge_trace(h2, axis, coord)
        if s1.shape != s2.shape or not (
            np.array_equal(s1, s2) and np.array_equal(i1, i2)
        ):
            word = "x" if axis == 0 else "y"
            raise GlueMismatch(f"traces differ on shared edge {word} = {coord}")
    index = {}
    src_rows, img_rows = [], []

    def intern(sp, ip):
        key = (float(sp[0]), float(sp[1]))
        r = index.get(key)
        if r is None:
            r = len(src_rows)
            index[key] = r
            src_rows.append(sp)
            img_rows.append(ip)
        return r

    tris = []
    for h in (h1, h2):
        for u, v, w in h.triangles:
            tris.append(
                (
                    intern(h.src[u], h.img[u]),
                    intern(h.src[v], h.img[v]),
                    intern(h.src[w], h.img[w]),
                )
            )
    a1 = min(h1.rect[0], h2.rect[0])
    a2 = max(h1.rect[1], h2.rect[1])
    b1 = min(h1.rect[2], h2.rect[2])
    b2 = max(h1.rect[3], h2.rect[3])
    rect = (a1, a2, b1, b2)
    src, img, tris = _weld_twins(np.array(src_rows), np.array(img_rows), tris, rect)
    return PLHomeo(rect, src, img, tris)


def _weld_twins(src, img, tris, rect):
    """Collapse vertex pairs a rounding error apart into one vertex.

    Cut endpoints and fill lattice points for the same nominal coordinate
    reach a mesh through different arithmetic, meet only when subtrees are
    glued, and would leave a sliver whose image triangle has no orientation.
    A vertex on the outer rectangle boundary wins over an interior one so
    boundary traces keep their exact coordinates.
    """
    tol = _edge_match_tol(min(rect[0], rect[2]), max(rect[1], rect[3]))
    order = np.lexsort((src[:, 1], src[:, 0]))
    alias = {}
    for i in range(order.size - 1):
        a, b = int(order[i]), int(order[i + 1])
        while a in alias:
            a = alias[a]
        if np.abs(src[a] - src[b]).max() <= tol and np.abs(img[a] - img[b]).max() <= 1e-9:
            on_a = _on_rect_boundary(src[a], rect)
            on_b = _on_rect_boundary(src[b], rect)
            if on_a and on_b:
                continue
            if on_b:
                a, b = b, a
            alias[b] = a
    if not alias:
        return src, img, tris

    def root(v):
        while v in alias:
            v = alias[v]
        return v

    out_tris = []
    for t in tris:
        t = tuple(root(v) for v in t)
        if len(set(t)) == 3:
            out_tris.append(t)
    keep = sorted(set(v for t in out_tris for v in t))
    remap = {v: i for i, v in enumerate(keep)}
    out_tris = [tuple(remap[v] for v in t) for t in out_tris]
    return src[keep], img[keep], out_tris


def _on_rect_boundary(p, rect) -> bool:
    return p[0] in (rect[0], rect[1]) or p[1] in (rect[2], rect[3])


def glue(pieces, grid) -> PLHomeo:
    """Glue per-rectangle maps into one map over the full grid rectangle.

    grid provides the sorted cut coordinates xs and ys; pieces must cover
    every grid cell exactly once, with bit-equal traces on shared edges.
    """
    xs = np.asarray(grid.xs, dtype=float)
    ys = np.asarray(grid.ys, dtype=float)
    by_cell = {}
    for h in pieces:
        by_cell[h.rect] = h
    rows = []
    for j in range(ys.size - 1):
        row = None
        for i in range(xs.size - 1):
            cell = (float(xs[i]), float(xs[i + 1]), float(ys[j]), float(ys[j + 1]))
            h = by_cell.get(cell)
            if h is None:
                raise GlueMismatch(f"no piece for grid cell {cell}")
            row = h if row is None else _merge_pair(row, h)
        rows.append(row)
    out = rows[0]
    for row in rows[1:]:
        out = _merge_pair(out, row)
    return out


# ---------------------------------------------------------------------------
# minimal extension


def _choose_cut(phi: BoundaryParam, axis: int) -> float:
    """Cut coordinate: a transversal-side breakpoint near the middle if any,
    else the midpoint."""
    if axis == 0:
        lo, hi = phi.a1, phi.a2
        knots = np.concatenate([phi.sides["bottom"][0], phi.sides["top"][0]])
    else:
        lo, hi = phi.b1, phi.b2
        knots = np.concatenate([phi.sides["left"][0], phi.sides["right"][0]])
    mid = (lo + hi) / 2.0
    span = hi - lo
    inner = knots[(knots > lo + span / 4.0) & (knots < hi - span / 4.0)]
    if inner.size:
        return float(inner[np.argmin(np.abs(inner - mid))])
    return mid


def _reflex_params(phi: BoundaryParam, axis: int) -> list[float]:
    """Cut coordinates of reflex image vertices on the transversal sides.

    A reflex vertex turns the region into a self-similar wedge: every cut
    geodesic through the piece wraps it, and no plain fill gets within a
    vanishing slack of the lower bound at any scale. Ending a cut exactly at
    the vertex splits its interior angle between two children, whose corners
    are then convex and never wrapped again. Closest to the middle first.
    """
    names = ("bottom", "top") if axis == 0 else ("left", "right")
    # In the counterclockwise run around the region, "top" and "left" chains
    # are traversed backwards, which flips the sign of the interior turn.
    signs = {"bottom": -1.0, "right": -1.0, "top": 1.0, "left": 1.0}
    lo, hi = (phi.a1, phi.a2) if axis == 0 else (phi.b1, phi.b2)
    span = hi - lo
    all_pts = np.vstack([phi.sides[s][1] for s in phi.sides])
    bbox = all_pts.max(axis=0) - all_pts.min(axis=0)
    img_diam = float(np.hypot(bbox[0], bbox[1]))
    out = []
    for name in names:
        ts, pts = phi.sides[name]
        for k in range(1, len(ts) - 1):
            t = float(ts[k])
            if t <= lo + 1e-6 * span or t >= hi - 1e-6 * span:
                continue
            # Near-coincident neighbours make the turn sign meaningless and
            # a cut through such a knot grazes the boundary it came from.
            d_prev = float(np.hypot(*(pts[k] - pts[k - 1])))
            d_next = float(np.hypot(*(pts[k + 1] - pts[k])))
            if min(d_prev, d_next) < 1e-6 * img_diam:
                continue
            turn = orient(pts[k - 1], pts[k], pts[k + 1])
            if signs[name] * turn > 0:
                out.append(t)
    mid = (lo + hi) / 2.0
    out.sort(key=lambda t: abs(t - mid))
    return out


def _extend(phi, eps_total, total_area, psi_total, depth, max_depth, quad_n):
    area = (phi.a2 - phi.a1) * (phi.b2 - phi.b1)
    psi = boundary_geodesic_integral(phi, n=quad_n, tol=None, max_doublings=2)
    # Slack is granted by share of the total lower bound, with the area share
    # as a floor. Pinched pieces have small area but real boundary variation;
    # an area-only budget starves exactly the leaves that need depth most.
    # Both shares sum to at most 0.4 eps each over any partition into leaves.
    # A third share decays with depth; the depths of the leaves of a binary
    # cut tree satisfy sum 2^-depth = 1, so this sums to 0.2 eps as well.
    # It keeps deep slivers from being asked for relative accuracy that no
    # fill family delivers at any lattice size.
    slack = max(
        0.4 * eps_total * psi.value / psi_total,
        0.4 * eps_total * area / total_area,
        0.2 * eps_total * 2.0 ** (-depth),
    )
    # The lower bound must be resolved finer than the acceptance slack, or
    # quadrature error alone would force endless splitting.
    if psi.gap > 0.25 * slack:
        psi = boundary_geodesic_integral(
            phi, n=quad_n, tol=max(0.25 * slack, 1e-10), max_doublings=8
        )
    # Whatever spread the quadrature could not resolve cannot be demanded
    # from the fill either; the top-level measured check still governs.
    accept = psi.value + slack + psi.gap
    best = None
    for fill in [_fan_fill(phi)] + _strip_fills(phi) + _corner_fan_fills(phi):
        if fill is None:
            continue
        var = manhattan_variation(fill)
        if best is None or var < best[0]:
            best = (var, fill)
    if best is None or best[0] > accept:
        # Refining the grid trades triangles for variation without touching
        # the boundary split, so no lower-bound drift and no extra depth.
        for k in (2, 4, 8, 16, 32):
            g = _grid_fill(phi, k)
            if g is None:
                break
            var = manhattan_variation(g)
            if best is None or var < best[0]:
                best = (var, g)
            if var <= accept:
                break
    if best is not None and best[0] <= accept:
        return best[1]
    if depth >= max_depth:
        raise ExtensionFailed(
            f"variation budget not reached within depth {max_depth}"
        )
    first = 0 if (phi.a2 - phi.a1) >= (phi.b2 - phi.b1) else 1
    candidates = []
    seen = set()

    knot_tol = 64 * np.finfo(float).eps * max(
        1.0, abs(phi.a1), abs(phi.a2), abs(phi.b1), abs(phi.b2)
    )

    def push(axis, m):
        m = float(m)
        lo, hi = (phi.a1, phi.a2) if axis == 0 else (phi.b1, phi.b2)
        # Knot parameters an ulp apart come from different arithmetic for
        # the same nominal value. A cut through one of them would run as a
        # sliver strip past the other, so snap to the existing knot, and
        # never cut within the snap zone of the piece boundary.
        for side in ("left", "right") if axis == 1 else ("bottom", "top"):
            ts = phi.sides[side][0]
            j = int(np.argmin(np.abs(ts - m)))
            if abs(ts[j] - m) <= knot_tol:
                m = float(ts[j])
                break
        if m - lo <= knot_tol or hi - m <= knot_tol:
            return
        key = (axis, m)
        if key not in seen:
            seen.add(key)
            candidates.append(key)

    # Reflex vertices go first: cutting anywhere else leaves the wedge intact
    # in one child and the same impasse one level deeper.
    for axis in (first, 1 - first):
        for m in _reflex_params(phi, axis)[:3]:
            push(axis, m)
    # Then every interior breakpoint of the transversal sides, central ones
    # first. A bend that never coincides with a cut is inherited by one
    # child at every level and the recursion stalls near it; cutting through
    # the breakpoint leaves both children straight there.
    for axis in (first, 1 - first):
        lo, hi = (phi.a1, phi.a2) if axis == 0 else (phi.b1, phi.b2)
        mid = (lo + hi) / 2.0
        names = ("bottom", "top") if axis == 0 else ("left", "right")
        knots = np.unique(np.concatenate([phi.sides[s][0] for s in names]))
        inner = knots[(knots > lo) & (knots < hi)]
        for m in sorted(inner, key=lambda t: abs(t - mid))[:8]:
            push(axis, m)
    for axis in (first, 1 - first):
        lo, hi = (phi.a1, phi.a2) if axis == 0 else (phi.b1, phi.b2)
        for frac in (0.5, 0.4, 0.6):
            push(axis, lo + frac * (hi - lo))
    last_err = None
    # Per-cut allowance for lower-bound inflation: proportional to this
    # piece's share so each level of the tree spends about one such unit.
    drift_tol = 0.01 * eps_total * psi.value / psi_total
    # Only reject a cut whose drift is catastrophic for this piece; small
    # estimated drift is cheaper to absorb than to depth-split away.
    drift_cap = max(4 * drift_tol, 0.05 * psi.value)
    for axis, m in candidates:
        try:
            child_a, child_b = _split(phi, axis, m, drift_tol, drift_cap)
            # Degenerate pieces must fail here, inside the candidate loop,
            # not deeper in the recursion.
            triangulate(child_a.image_polygon())
            triangulate(child_b.image_polygon())
        except Exception as e:  # cut touched the boundary badly, try another spot
            last_err = e
            continue
        ha = _extend(
            child_a, eps_total, total_area, psi_total, depth + 1, max_depth, quad_n
        )
        hb = _extend(
            child_b, eps_total, total_area, psi_total, depth + 1, max_depth, quad_n
        )
        return _merge_pair(ha, hb)
    raise ExtensionFailed(f"no valid cut found at depth {depth}: {last_err}")


def minimal_extension(
    phi: BoundaryParam,
    eps: float,
    *,
    quad_n: int = 16,
    max_depth: int = 20,
) -> PLHomeo:
    """Piecewise affine homeomorphism extending phi with near-minimal variation.

    The result h satisfies h = phi on the rectangle boundary (bit-exact at
    the parametrization vertices) and manhattan_variation(h) at most the
    opposing-boundary geodesic integral of phi plus eps. Recursive geodesic
    bisection with measured acceptance; ExtensionFailed when the budget is
    not reachable within the depth cap.
    """
    if eps <= 0:
        raise DegenerateInput("eps must be positive")
    if signed_area(phi.closed_image()) <= 0:
        raise ExtensionFailed("boundary image is negatively oriented")
    total_area = (phi.a2 - phi.a1) * (phi.b2 - phi.b1)
    psi_root = boundary_geodesic_integral(
        phi, n=max(32, quad_n), tol=eps / 8.0, max_doublings=6
    )
    target = psi_root.value + eps
    h = None
    for factor, n_leaf in ((1.0, quad_n), (0.3, 2 * quad_n), (0.1, 4 * quad_n)):
        h = _extend(
            phi, eps * factor, total_area, psi_root.value, 0, max_depth, n_leaf
        )
        if manhattan_variation(h) <= target:
            h.validate(phi)
            return h
    raise ExtensionFailed(
        f"measured variation {manhattan_variation(h)} exceeds the budget {target}"
    )
