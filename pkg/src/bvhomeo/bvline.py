"""One-dimensional BV traces along grid lines.

A trace is piecewise linear between breakpoints and may jump at them; values
live in the plane. This module computes variations over windows, the arc-type
parametrization that spreads jumps over parameter intervals, the continuous
path that fills the jumps, the small/big-jump segmentation used when an
approximating curve is built piece by piece, two-sided variation convergence
checks, and the quantitative bound on how far a short path pinned near two
points can stray from the segment between them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadWindow,
    DegenerateInput,
    NoValidCut,
    PreconditionFailed,
)


class BVLine:
    """Planar-valued BV function of one variable: PL pieces plus jumps.

    `ts` are strictly increasing breakpoints covering [ts[0], ts[-1]];
    `left[i]` and `right[i]` are the one-sided values at ts[i]; between
    consecutive breakpoints the value interpolates linearly from right[i]
    to left[i+1].
    """

    def __init__(self, ts, left, right):
        ts = np.asarray(ts, dtype=float)
        left = np.asarray(left, dtype=float)
        right = np.asarray(right, dtype=float)
        if ts.ndim != 1 or ts.size < 2:
            raise DegenerateInput("need at least two breakpoints")
        if np.any(np.diff(ts) <= 0):
            raise DegenerateInput("breakpoints must be strictly increasing")
        if left.shape != (ts.size, 2) or right.shape != (ts.size, 2):
            raise DegenerateInput("one-sided values must be (n, 2) arrays")
        self.ts = ts
        self.left = left
        self.right = right

    @classmethod
    def continuous(cls, ts, values):
        """Trace with no jumps: one value per breakpoint."""
        values = np.asarray(values, dtype=float)
        return cls(ts, values, values)

    @classmethod
    def from_function(cls, fn, t_lo, t_hi, jumps=(), tol=1e-6, max_doublings=14):
        """Sample a black-box planar-valued function into a trace.

        Dyadic sampling is refined until the computed variation moves by
        less than `tol` between levels. Known jump positions get one-sided
        values probed a hair to each side.
        """
        jumps = sorted(float(j) for j in jumps)
        if any(j <= t_lo or j >= t_hi for j in jumps):
            raise DegenerateInput("jump positions must be interior")
        h = 1e-9 * (t_hi - t_lo)
        n = 64
        prev = None
        for _ in range(max_doublings):
            base = np.linspace(t_lo, t_hi, n + 1)
            ts = np.unique(np.concatenate([base, np.asarray(jumps, dtype=float)]))
            left = np.array([fn(t) for t in ts], dtype=float)
            right = left.copy()
            for j in jumps:
                i = int(np.searchsorted(ts, j))
                left[i] = fn(j - h)
                right[i] = fn(j + h)
            g = cls(ts, left, right)
            v = variation(g)
            if prev is not None and abs(v - prev) < tol:
                return g
            prev = v
            n *= 2
        return g

    @property
    def t_lo(self) -> float:
        return float(self.ts[0])

    @property
    def t_hi(self) -> float:
        return float(self.ts[-1])

    def jump_sizes(self):
        return np.hypot(
            self.right[:, 0] - self.left[:, 0], self.right[:, 1] - self.left[:, 1]
        )

    def jump_points(self):
        """Breakpoints with nonzero jump, as (position, size) pairs."""
        sizes = self.jump_sizes()
        return [(float(t), float(s)) for t, s in zip(self.ts, sizes) if s > 0.0]

    def piece_lengths(self):
        """Arc length of each PL piece between consecutive breakpoints."""
        d = self.left[1:] - self.right[:-1]
        return np.hypot(d[:, 0], d[:, 1])

    def eval_right(self, t: float):
        t = float(t)
        self._check_inside(t)
        i = int(np.searchsorted(self.ts, t, side="right")) - 1
        if i >= self.ts.size - 1:
            return self.right[-1].copy()
        if self.ts[i] == t:
            a, b = self.right[i], self.left[i + 1]
            return a.copy()
        lam = (t - self.ts[i]) / (self.ts[i + 1] - self.ts[i])
        return (1 - lam) * self.right[i] + lam * self.left[i + 1]

    def eval_left(self, t: float):
        t = float(t)
        self._check_inside(t)
        i = int(np.searchsorted(self.ts, t, side="left"))
        if i < self.ts.size and self.ts[i] == t:
            return self.left[i].copy()
        i -= 1
        lam = (t - self.ts[i]) / (self.ts[i + 1] - self.ts[i])
        return (1 - lam) * self.right[i] + lam * self.left[i + 1]

    def eval(self, t: float):
        """Right-continuous evaluation."""
        return self.eval_right(t)

    def is_continuous_at(self, t: float, tol: float = 0.0) -> bool:
        i = int(np.searchsorted(self.ts, float(t)))
        if i >= self.ts.size or self.ts[i] != float(t):
            return True
        return float(np.hypot(*(self.right[i] - self.left[i]))) <= tol

    def _check_inside(self, t: float):
        if t < self.t_lo - 1e-12 or t > self.t_hi + 1e-12:
            raise BadWindow(f"parameter {t} outside [{self.t_lo}, {self.t_hi}]")


def variation(g: BVLine, window=None, closed: str = "left") -> float:
    """Total variation of g over a window.

    `window` is a (lo, hi) pair inside the trace interval; None means the
    whole closed interval. `closed` picks which window endpoints' jumps are
    counted: "left" for [lo, hi), "right" for (lo, hi], "both", "neither".
    Jumps strictly inside always count; the continuous part contributes its
    arc length over the open overlap.
    """
    if window is None:
        lo, hi = g.t_lo, g.t_hi
        closed = "both"
    else:
        lo, hi = float(window[0]), float(window[1])
        if lo > hi:
            raise BadWindow(f"window ({lo}, {hi}) is reversed")
        if lo < g.t_lo - 1e-12 or hi > g.t_hi + 1e-12:
            raise BadWindow(f"window ({lo}, {hi}) outside trace interval")
    if closed not in ("left", "right", "both", "neither"):
        raise BadWindow(f"unknown window convention {closed!r}")

    ts = g.ts
    total = 0.0
    # Continuous part: PL pieces clipped to (lo, hi).
    lengths = g.piece_lengths()
    for i in range(ts.size - 1):
        a, b = ts[i], ts[i + 1]
        ov_lo, ov_hi = max(a, lo), min(b, hi)
        if ov_hi <= ov_lo:
            continue
        total += lengths[i] * (ov_hi - ov_lo) / (b - a)
    # Jump part.
    sizes = g.jump_sizes()
    for i in range(ts.size):
        t, s = ts[i], sizes[i]
        if s == 0.0:
            continue
        if lo < t < hi:
            total += s
        elif t == lo and closed in ("left", "both") and lo < hi:
            total += s
        elif t == hi and closed in ("right", "both"):
            total += s
        elif t == lo == hi and closed == "both":
            total += s
    return float(total)


@dataclass
class ArcParam:
    """Strictly increasing parameter spreading a trace's jumps over intervals.

    l(y) = (y - t_lo + variation over [t_lo, y)) / (interval length + total
    variation). At a jump the parameter skips the interval [l(y-), l(y+)] of
    width jump/(length + variation); those intervals are listed in
    `jump_intervals` as (y, a, b) triples.
    """

    source: BVLine
    knots_t: np.ndarray  # breakpoints of the source
    l_left: np.ndarray  # parameter just before each breakpoint
    l_right: np.ndarray  # parameter just after each breakpoint
    jump_intervals: list = field(default_factory=list)

    def value(self, y: float) -> float:
        """l at a continuity point (left limit at jump points)."""
        y = float(y)
        t = self.knots_t
        i = int(np.searchsorted(t, y, side="left"))
        if i < t.size and t[i] == y:
            return float(self.l_left[i])
        i -= 1
        lam = (y - t[i]) / (t[i + 1] - t[i])
        return float((1 - lam) * self.l_right[i] + lam * self.l_left[i + 1])

    def value_right(self, y: float) -> float:
        y = float(y)
        t = self.knots_t
        i = int(np.searchsorted(t, y, side="left"))
        if i < t.size and t[i] == y:
            return float(self.l_right[i])
        return self.value(y)

    def inverse(self, u: float) -> float:
        """y with l(y) = u; inside a jump interval returns the jump ordinate."""
        u = float(u)
        if u < -1e-12 or u > 1 + 1e-12:
            raise BadWindow(f"parameter {u} outside [0, 1]")
        lr = self.l_right
        i = int(np.searchsorted(lr, u, side="right")) - 1
        i = max(0, min(i, self.knots_t.size - 1))
        if u <= self.l_left[i]:
            return float(self.knots_t[i])
        if i == self.knots_t.size - 1 or u <= lr[i]:
            return float(self.knots_t[i])
        if u >= self.l_left[i + 1]:
            return float(self.knots_t[i + 1])
        lam = (u - lr[i]) / (self.l_left[i + 1] - lr[i])
        return float((1 - lam) * self.knots_t[i] + lam * self.knots_t[i + 1])


def arc_param(g: BVLine) -> ArcParam:
    span = g.t_hi - g.t_lo
    total = variation(g)
    denom = span + total
    sizes = g.jump_sizes()
    lengths = g.piece_lengths()
    n = g.ts.size
    l_left = np.empty(n)
    l_right = np.empty(n)
    acc = 0.0  # variation over [t_lo, y)
    jump_intervals = []
    for i in range(n):
        y = g.ts[i]
        l_left[i] = ((y - g.t_lo) + acc) / denom
        if sizes[i] > 0.0:
            acc += sizes[i]
            jump_intervals.append(
                (float(y), float(l_left[i]), float(((y - g.t_lo) + acc) / denom))
            )
        l_right[i] = ((y - g.t_lo) + acc) / denom
        if i < n - 1:
            acc += lengths[i]
    return ArcParam(g, g.ts.copy(), l_left, l_right, jump_intervals)


@dataclass
class PLPath:
    """Piecewise-linear path with explicit parameter values."""

    params: np.ndarray  # (m,) nondecreasing in [0, 1]
    points: np.ndarray  # (m, 2)

    def eval(self, t: float):
        t = float(t)
        p = self.params
        if t <= p[0]:
            return self.points[0].copy()
        if t >= p[-1]:
            return self.points[-1].copy()
        i = int(np.searchsorted(p, t, side="right")) - 1
        while p[i + 1] == p[i]:
            i += 1
        lam = (t - p[i]) / (p[i + 1] - p[i])
        return (1 - lam) * self.points[i] + lam * self.points[i + 1]

    def length(self) -> float:
        d = np.diff(self.points, axis=0)
        return float(np.sum(np.hypot(d[:, 0], d[:, 1])))


def fill_jumps(g: BVLine, arcp: ArcParam | None = None) -> PLPath:
    """Continuous path through the trace's values with jumps bridged linearly.

    Off jump intervals the path equals g reparametrized by the arc-type
    parameter; over a jump interval it runs straight from the left value to
    the right value. Its length equals the total variation of g exactly, and
    it is Lipschitz with constant (interval length + variation).
    """
    if arcp is None:
        arcp = arc_param(g)
    params = []
    points = []
    sizes = g.jump_sizes()
    for i in range(g.ts.size):
        if sizes[i] > 0.0:
            params.append(arcp.l_left[i])
            points.append(g.left[i])
            params.append(arcp.l_right[i])
            points.append(g.right[i])
        else:
            params.append(arcp.l_left[i])
            points.append(g.right[i])
    return PLPath(np.asarray(params, dtype=float), np.asarray(points, dtype=float))


@dataclass
class SegmentationResult:
    """Partition of a trace into small-variation and isolated-big-jump spans."""

    sigma: float
    intervals: list  # (lo, hi) pairs, contiguous, covering the trace interval
    tags: list  # "small" or "big", parallel to intervals
    big_jumps: list  # jump positions with size >= sigma / 5
    small_jumps: list  # remaining jump positions
    min_length: float

    def spans(self, tag: str):
        return [iv for iv, t in zip(self.intervals, self.tags) if t == tag]


def _dodge_knots(g: BVLine, t: float, lo: float, hi: float) -> float:
    """Nudge t into the open room (lo, hi), off the breakpoints of g.

    Breakpoints are isolated and the walk steps are tiny relative to the
    room, so the returned point stays within 1e-6 * (hi - lo) of t.
    """
    if lo >= hi:
        raise NoValidCut("empty room for a cut point")
    step = (hi - lo) * 1e-6
    t = min(max(t, lo + step), hi - step)
    if not np.any(np.isclose(g.ts, t, rtol=0.0, atol=1e-13)):
        return t
    for k in range(1, 200):
        for cand in (t + step / k, t - step / k):
            if lo < cand < hi and not np.any(
                np.isclose(g.ts, cand, rtol=0.0, atol=1e-13)
            ):
                return cand
    raise NoValidCut("could not place a cut off the breakpoints")


def _flank_bound(g: BVLine, t: float, room: float, sigma: float, side: int) -> float:
    """Continuity point within `room` of t whose flank variation is < sigma^3/100.

    `side` is -1 for a point left of t, +1 for right.
    """
    cap = sigma**3 / 100.0
    r = 0.9 * room
    for _ in range(200):
        lo, hi = (t - room, t) if side < 0 else (t, t + room)
        c = _dodge_knots(g, t + side * r, lo, hi)
        win = (c, t) if side < 0 else (t, c)
        if variation(g, win, closed="neither") < cap:
            return c
        r /= 2.0
        if r < 1e-13:
            break
    raise NoValidCut(f"no flank below variation {cap} on side {side} of {t}")


def _greedy_small_cuts(g: BVLine, lo: float, hi: float, sigma: float):
    """Cut points splitting [lo, hi] into spans of variation < sigma/4.

    Entered only where no big jump lives, so every jump inside is < sigma/5.
    Cuts land at continuity points; when a jump would overflow the budget the
    cut backs into the PL piece just before it.
    """
    budget = 0.99 * sigma / 4.0
    sizes = g.jump_sizes()
    lengths = g.piece_lengths()
    # Event list: jumps strictly inside, pieces clipped to [lo, hi], in order.
    events = []
    for k in range(g.ts.size):
        t_k = g.ts[k]
        if lo < t_k < hi and sizes[k] > 0.0:
            events.append(("jump", t_k, float(sizes[k]), k))
        if k < g.ts.size - 1:
            a, b = max(g.ts[k], lo), min(g.ts[k + 1], hi)
            if b > a:
                slope = float(lengths[k]) / (g.ts[k + 1] - g.ts[k])
                events.append(("piece", a, b, slope))
    cuts = []
    acc = 0.0
    last = lo
    for ev in events:
        if ev[0] == "jump":
            _, t_j, size, k = ev
            if acc + size >= budget:
                room_lo = max(float(g.ts[k - 1]), last)
                slope = float(lengths[k - 1]) / (g.ts[k] - g.ts[k - 1])
                back = min((t_j - room_lo) / 2.0, sigma / 40.0 / max(slope, 1e-30))
                c = _dodge_knots(g, t_j - back, room_lo, t_j)
                cuts.append(c)
                last = c
                acc = slope * (t_j - c) + size
            else:
                acc += size
        else:
            _, a, b, slope = ev
            cur = a
            while slope > 0.0 and acc + slope * (b - cur) >= budget:
                raw = cur + max(budget - acc, 0.0) / slope
                if raw >= b - 1e-9 * (b - cur):
                    break  # cut would sit on the piece end; carry the rest
                c = _dodge_knots(g, raw, cur, b)
                cuts.append(c)
                last = c
                acc = 0.0
                cur = c
            acc += slope * (b - cur)
    return cuts


def segment_line(g: BVLine, sigma: float, required_cuts=()) -> SegmentationResult:
    """Partition a trace into small-variation spans and isolated big jumps.

    Jumps of size >= sigma/5 each get their own span whose flanks carry
    variation < sigma^3/100 and whose endpoints are continuity points; all
    other spans have variation < sigma/4. `required_cuts` are positions that
    must appear among the span endpoints (they must be continuity points).
    """
    if sigma <= 0:
        raise DegenerateInput("sigma must be positive")
    if not g.is_continuous_at(g.t_lo) or not g.is_continuous_at(g.t_hi):
        raise PreconditionFailed("trace must be continuous at its endpoints")
    for c in required_cuts:
        if not (g.t_lo < c < g.t_hi):
            raise NoValidCut(f"required cut {c} outside the open interval")
        if not g.is_continuous_at(c):
            raise NoValidCut(f"required cut {c} sits on a jump")

    jumps = g.jump_points()
    big_ts = [t for t, s in jumps if s >= sigma / 5.0]
    small_ts = [t for t, s in jumps if 0.0 < s < sigma / 5.0]

    # Room around each big jump: half the gap to the nearest obstruction, so
    # neighboring spans cannot collide even after cut points dodge knots.
    obstructions = sorted(set([g.t_lo, g.t_hi] + list(required_cuts) + big_ts))
    big_spans = []
    for t in sorted(big_ts):
        idx = obstructions.index(t)
        room_l = (t - obstructions[idx - 1]) / 2.0
        room_r = (obstructions[idx + 1] - t) / 2.0
        a = _flank_bound(g, t, room_l, sigma, side=-1)
        b = _flank_bound(g, t, room_r, sigma, side=+1)
        big_spans.append((a, b))

    boundaries = sorted(
        set([g.t_lo, g.t_hi] + list(required_cuts))
        | {a for a, _ in big_spans}
        | {b for _, b in big_spans}
    )
    covered = sorted(big_spans)
    intervals = []
    tags = []
    for lo, hi in zip(boundaries[:-1], boundaries[1:]):
        mid = (lo + hi) / 2.0
        tag = "big" if any(a <= mid <= b for a, b in covered) else None
        if tag == "big":
            intervals.append((lo, hi))
            tags.append("big")
        else:
            cuts = _greedy_small_cuts(g, lo, hi, sigma)
            pts = [lo] + cuts + [hi]
            for a, b in zip(pts[:-1], pts[1:]):
                intervals.append((a, b))
                tags.append("small")
    min_length = min(b - a for a, b in intervals)
    if min_length <= 1e-13:
        raise NoValidCut("segmentation produced a zero-length span")
    return SegmentationResult(
        sigma=float(sigma),
        intervals=intervals,
        tags=tags,
        big_jumps=big_ts,
        small_jumps=small_ts,
        min_length=float(min_length),
    )


def _integral_norm_affine(p, q, T: float) -> float:
    """Exact integral of |p + u q| for u in [0, T], with p, q planar."""
    if T <= 0:
        return 0.0
    gamma = float(np.dot(q, q))
    if gamma < 1e-30:
        return float(np.hypot(*p)) * T
    beta = float(np.dot(p, q))
    alpha = float(np.dot(p, p))
    disc = alpha * gamma - beta * beta  # >= 0 by Cauchy-Schwarz
    if disc <= 1e-18 * alpha * gamma + 1e-300:
        # Values move along a line through zero: integrate |linear|.
        root = -beta / gamma
        s = np.sqrt(gamma)

        def prim(u):
            return s * (u - root) * abs(u - root) / 2.0

        if 0.0 < root < T:
            return abs(prim(root) - prim(0.0)) + abs(prim(T) - prim(root))
        return abs(prim(T) - prim(0.0))

    def prim(u):
        r = np.sqrt(gamma * u * u + 2 * beta * u + alpha)
        return ((gamma * u + beta) * r) / (2 * gamma) + disc / (
            2 * gamma**1.5
        ) * np.arcsinh((gamma * u + beta) / np.sqrt(disc))

    return float(prim(T) - prim(0.0))


def l1_distance(g1: BVLine, g2: BVLine) -> float:
    """Integral of |g1 - g2| over the common interval (exact per PL piece)."""
    if abs(g1.t_lo - g2.t_lo) > 1e-12 or abs(g1.t_hi - g2.t_hi) > 1e-12:
        raise BadWindow("traces live on different intervals")
    ts = np.unique(np.concatenate([g1.ts, g2.ts]))
    total = 0.0
    for a, b in zip(ts[:-1], ts[1:]):
        T = b - a
        if T <= 0:
            continue
        p = g1.eval_right(a) - g2.eval_right(a)
        q = (g1.eval_left(b) - g2.eval_left(b) - p) / T
        total += _integral_norm_affine(p, q, T)
    return total


@dataclass
class SplitCheckReport:
    """Per-side variation gaps of a strictly converging trace sequence."""

    cut: float
    tol: float
    l1_gaps: list
    total_gaps: list
    left_gaps: list
    right_gaps: list
    converged: bool


def check_strict_split(seq, g: BVLine, c: float, tol: float = 1e-6) -> SplitCheckReport:
    """Check that variation convergence splits across a continuity point.

    Requires the sequence to converge to g in L1 and in total variation
    (within tol) and g to be continuous at c; then the variations over each
    side of c must converge too, and the report carries the per-side gaps.
    """
    c = float(c)
    if not (g.t_lo < c < g.t_hi):
        raise BadWindow(f"cut {c} outside the open interval")
    if not g.is_continuous_at(c):
        raise PreconditionFailed(f"trace jumps at the cut point {c}")
    if not seq:
        raise PreconditionFailed("empty sequence")
    v_full = variation(g)
    v_left = variation(g, (g.t_lo, c), closed="neither")
    v_right = variation(g, (c, g.t_hi), closed="neither")
    l1_gaps, total_gaps, left_gaps, right_gaps = [], [], [], []
    for gk in seq:
        l1_gaps.append(l1_distance(gk, g))
        total_gaps.append(abs(variation(gk) - v_full))
        left_gaps.append(abs(variation(gk, (g.t_lo, c), closed="neither") - v_left))
        right_gaps.append(abs(variation(gk, (c, g.t_hi), closed="neither") - v_right))
    if l1_gaps[-1] > tol or total_gaps[-1] > tol:
        raise PreconditionFailed(
            "sequence does not converge strictly within tolerance: "
            f"l1 gap {l1_gaps[-1]:.3g}, variation gap {total_gaps[-1]:.3g}"
        )
    converged = left_gaps[-1] <= tol and right_gaps[-1] <= tol
    return SplitCheckReport(
        cut=c,
        tol=tol,
        l1_gaps=l1_gaps,
        total_gaps=total_gaps,
        left_gaps=left_gaps,
        right_gaps=right_gaps,
        converged=converged,
    )


@dataclass
class DeviationResult:
    max_deviation: float
    bound: float
    passed: bool


def constrained_path_deviation(
    A, B, C, D, path, eps: float, delta: float
) -> DeviationResult:
    """How far a short path pinned near A and B strays from the segment AB.

    The path runs from C in the delta*|AB|-ball around A to D in the ball
    around B and has length at most (1+eps)*|AB|. Compared at constant speed
    against the segment A->B, its sup-distance never exceeds
    3*sqrt(2*eps+delta)*|AB|; the result records the measured maximum, the
    bound, and whether it held.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    C = np.asarray(C, dtype=float)
    D = np.asarray(D, dtype=float)
    if eps < 0 or delta < 0:
        raise PreconditionFailed("eps and delta must be nonnegative")
    L = float(np.hypot(*(B - A)))
    if L <= 0:
        raise PreconditionFailed("segment endpoints coincide")
    slack = 1e-9 * max(1.0, L)
    if np.hypot(*(C - A)) > delta * L + slack:
        raise PreconditionFailed("start point outside its ball")
    if np.hypot(*(D - B)) > delta * L + slack:
        raise PreconditionFailed("end point outside its ball")
    pts = np.asarray(path, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 1:
        raise PreconditionFailed("path must be a nonempty list of points")
    if np.hypot(*(pts[0] - C)) > slack or np.hypot(*(pts[-1] - D)) > slack:
        raise PreconditionFailed("path must join the pinned endpoints")
    seg = np.hypot(np.diff(pts[:, 0]), np.diff(pts[:, 1])) if pts.shape[0] > 1 else np.array([])
    total = float(np.sum(seg))
    if total > (1 + eps) * L + slack:
        raise PreconditionFailed(
            f"path length {total:.6g} exceeds (1+eps)*L = {(1 + eps) * L:.6g}"
        )
    bound = 3.0 * np.sqrt(2.0 * eps + delta) * L
    if total <= 0:
        # Constant path: compare against both segment ends.
        dev = max(float(np.hypot(*(pts[0] - A))), float(np.hypot(*(pts[0] - B))))
        return DeviationResult(dev, float(bound), dev <= bound + slack)
    # Constant-speed parameters of the path vertices. The difference from the
    # constant-speed segment is piecewise affine in the parameter, so its
    # norm is maximal at a vertex parameter.
    params = np.concatenate([[0.0], np.cumsum(seg)]) / total
    gamma = A[None, :] + params[:, None] * (B - A)[None, :]
    dev = float(np.max(np.hypot(*(pts - gamma).T)))
    return DeviationResult(dev, float(bound), dev <= bound + slack)
