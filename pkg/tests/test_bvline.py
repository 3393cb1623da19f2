from __future__ import annotations

import math

import numpy as np
import pytest

from bvhomeo.bvline import (
    BVLine,
    arc_param,
    check_strict_split,
    constrained_path_deviation,
    fill_jumps,
    l1_distance,
    segment_line,
    variation,
)
from bvhomeo.errors import BadWindow, NoValidCut, PreconditionFailed


def _variation_oracle(g: BVLine) -> float:
    # Brute-force fine-partition variation: sample one-sided values on a
    # partition refined through every breakpoint and sum consecutive
    # distances. For PL-plus-jumps traces this partition is variation-exact
    # up to the one-sided probes.
    ss = np.unique(np.concatenate([g.ts, np.linspace(g.t_lo, g.t_hi, 257)]))
    vals = [g.eval_right(ss[0])]
    for s in ss[1:-1]:
        vals.append(g.eval_left(s))
        vals.append(g.eval_right(s))
    vals.append(g.eval_left(ss[-1]))
    vals = np.asarray(vals)
    return float(np.sum(np.hypot(*(np.diff(vals, axis=0).T))))


def _identity_trace() -> BVLine:
    return BVLine.continuous([-1.0, 1.0], [(-1.0, 0.0), (1.0, 0.0)])


def _slope_one_with_unit_jump() -> BVLine:
    # (t, 0) rising to (t, 1) across a unit jump at t = 0.
    return BVLine(
        [-1.0, 0.0, 1.0],
        left=[(-1.0, 0.0), (0.0, 0.0), (1.0, 1.0)],
        right=[(-1.0, 0.0), (0.0, 1.0), (1.0, 1.0)],
    )


def _random_trace(rng, n_knots: int = 10, n_jumps: int = 3) -> BVLine:
    interior = np.sort(rng.uniform(-0.9, 0.9, size=n_knots))
    ts = np.concatenate([[-1.0], interior, [1.0]])
    ts = np.unique(ts)
    left = rng.normal(scale=0.7, size=(ts.size, 2))
    right = left.copy()
    idx = rng.choice(np.arange(1, ts.size - 1), size=min(n_jumps, ts.size - 2),
                     replace=False)
    right[idx] += rng.normal(scale=0.4, size=(idx.size, 2))
    return BVLine(ts, left, right)


def test_variation_constant_is_zero():
    g = BVLine.continuous([-1.0, 1.0], [(0.3, 0.7), (0.3, 0.7)])
    assert variation(g) == 0.0


def test_variation_identity_trace():
    assert variation(_identity_trace()) == pytest.approx(2.0)


def test_variation_slope_plus_jump_matches_fine_partition_oracle():
    g = _slope_one_with_unit_jump()
    assert _variation_oracle(g) == pytest.approx(3.0, abs=1e-6)
    assert variation(g) == pytest.approx(3.0, abs=1e-12)


def test_variation_oracle_agrees_on_random_traces():
    rng = np.random.default_rng(5)
    for _ in range(10):
        g = _random_trace(rng)
        assert variation(g) == pytest.approx(_variation_oracle(g), abs=1e-5)


def test_variation_window_conventions():
    g = _slope_one_with_unit_jump()
    assert variation(g, (-1.0, 0.0), closed="left") == pytest.approx(1.0)
    assert variation(g, (-1.0, 0.0), closed="both") == pytest.approx(2.0)
    assert variation(g, (0.0, 1.0), closed="left") == pytest.approx(2.0)
    assert variation(g, (0.0, 1.0), closed="neither") == pytest.approx(1.0)
    assert variation(g, (-0.5, 0.5), closed="neither") == pytest.approx(2.0)


def test_variation_additive_over_disjoint_windows():
    rng = np.random.default_rng(9)
    for _ in range(20):
        g = _random_trace(rng)
        a, b, c = np.sort(rng.uniform(-1, 1, size=3))
        lhs = variation(g, (a, b), closed="left") + variation(g, (b, c), closed="left")
        assert lhs == pytest.approx(variation(g, (a, c), closed="left"), abs=1e-12)


def test_variation_bad_windows():
    g = _identity_trace()
    with pytest.raises(BadWindow):
        variation(g, (0.5, 0.2))
    with pytest.raises(BadWindow):
        variation(g, (-2.0, 0.0))
    with pytest.raises(BadWindow):
        variation(g, (0.0, 0.5), closed="sideways")


def test_arc_param_zero_variation_is_affine():
    g = BVLine.continuous([-1.0, 1.0], [(0.0, 0.0), (0.0, 0.0)])
    arcp = arc_param(g)
    for y in (-1.0, -0.5, 0.0, 0.25, 1.0):
        assert arcp.value(y) == pytest.approx((y + 1) / 2)


def test_arc_param_single_jump_of_size_two():
    # Jump of size 2 at y = 0 and no continuous variation: the parameter
    # reaches 1/4 just before the jump and 3/4 just after.
    g = BVLine(
        [-1.0, 0.0, 1.0],
        left=[(0.0, -1.0), (0.0, -1.0), (0.0, 1.0)],
        right=[(0.0, -1.0), (0.0, 1.0), (0.0, 1.0)],
    )
    arcp = arc_param(g)
    assert arcp.value(0.0) == pytest.approx(0.25)
    assert arcp.value_right(0.0) == pytest.approx(0.75)
    assert len(arcp.jump_intervals) == 1
    y, a, b = arcp.jump_intervals[0]
    assert (y, a, b) == pytest.approx((0.0, 0.25, 0.75))


def test_arc_param_endpoints_normalized():
    rng = np.random.default_rng(13)
    for _ in range(10):
        g = _random_trace(rng)
        arcp = arc_param(g)
        assert arcp.value(g.t_lo) == pytest.approx(0.0, abs=1e-15)
        assert arcp.value(g.t_hi) == pytest.approx(1.0)


def test_arc_param_strictly_increasing_on_dense_sample():
    rng = np.random.default_rng(21)
    g = _random_trace(rng)
    arcp = arc_param(g)
    ys = np.linspace(-1, 1, 400)
    ls = [arcp.value(y) for y in ys]
    assert np.all(np.diff(ls) > 0)


def test_arc_param_inverse_round_trip():
    rng = np.random.default_rng(29)
    g = _random_trace(rng)
    arcp = arc_param(g)
    for y in np.linspace(-0.99, 0.99, 50):
        if not g.is_continuous_at(y):
            continue
        assert arcp.inverse(arcp.value(y)) == pytest.approx(y, abs=1e-10)


def test_fill_jumps_no_jumps_reproduces_trace():
    g = BVLine.continuous(
        [-1.0, 0.0, 1.0], [(-1.0, 0.0), (0.0, 0.5), (1.0, 0.0)]
    )
    arcp = arc_param(g)
    path = fill_jumps(g, arcp)
    for y in np.linspace(-1, 1, 37):
        assert path.eval(arcp.value(y)) == pytest.approx(g.eval(y), abs=1e-12)


def test_fill_jumps_bridges_symmetric_jump_through_average():
    g = _slope_one_with_unit_jump()
    arcp = arc_param(g)
    path = fill_jumps(g, arcp)
    _, a, b = arcp.jump_intervals[0]
    mid = path.eval((a + b) / 2)
    avg = (g.left[1] + g.right[1]) / 2
    assert mid == pytest.approx(avg, abs=1e-12)


def test_fill_jumps_preserves_endpoints():
    g = _slope_one_with_unit_jump()
    path = fill_jumps(g)
    assert path.eval(0.0) == pytest.approx(g.eval_right(-1.0))
    assert path.eval(1.0) == pytest.approx(g.eval_left(1.0))


def test_fill_jumps_length_equals_variation():
    rng = np.random.default_rng(31)
    for _ in range(15):
        g = _random_trace(rng)
        path = fill_jumps(g)
        assert path.length() == pytest.approx(variation(g), abs=1e-9)


def test_fill_jumps_lipschitz_with_combined_constant():
    rng = np.random.default_rng(37)
    g = _random_trace(rng)
    lip = (g.t_hi - g.t_lo) + variation(g)
    path = fill_jumps(g)
    ts = rng.uniform(0, 1, size=(200, 2))
    for s, t in ts:
        gap = float(np.hypot(*(path.eval(s) - path.eval(t))))
        assert gap <= lip * abs(s - t) * (1 + 1e-9) + 1e-12


def test_segment_line_continuous_monotone_all_small():
    g = _identity_trace()
    res = segment_line(g, sigma=0.5)
    assert res.big_jumps == []
    assert all(tag == "small" for tag in res.tags)
    for lo, hi in res.intervals:
        assert variation(g, (lo, hi), closed="both") < 0.125


def test_segment_line_isolates_jump_of_size_sigma():
    sigma = 0.3
    g = BVLine(
        [-1.0, 0.2, 1.0],
        left=[(-1.0, 0.0), (0.2, 0.0), (1.0, 0.3)],
        right=[(-1.0, 0.0), (0.2, 0.3), (1.0, 0.3)],
    )
    res = segment_line(g, sigma)
    assert res.big_jumps == [0.2]
    bigs = res.spans("big")
    assert len(bigs) == 1
    lo, hi = bigs[0]
    assert lo < 0.2 < hi
    cap = sigma**3 / 100
    assert variation(g, (lo, 0.2), closed="neither") < cap
    assert variation(g, (0.2, hi), closed="neither") < cap
    assert g.is_continuous_at(lo) and g.is_continuous_at(hi)


def test_segment_line_unit_variation_greedy_count():
    # Total variation 1, no big jumps, sigma = 0.5: every span must stay
    # under 0.125, which forces at least eight spans.
    g = BVLine.continuous([-1.0, 1.0], [(-0.5, 0.0), (0.5, 0.0)])
    assert variation(g) == pytest.approx(1.0)
    res = segment_line(g, sigma=0.5)
    assert len(res.intervals) >= 8
    for lo, hi in res.intervals:
        assert variation(g, (lo, hi), closed="both") < 0.125


def test_segment_line_coverage_and_bounds_random():
    rng = np.random.default_rng(41)
    for _ in range(15):
        g = _random_trace(rng, n_knots=14, n_jumps=4)
        sigma = float(rng.uniform(0.2, 1.0))
        res = segment_line(g, sigma)
        # Contiguous cover of the whole interval.
        assert res.intervals[0][0] == pytest.approx(g.t_lo)
        assert res.intervals[-1][1] == pytest.approx(g.t_hi)
        for (a, b), (c, d) in zip(res.intervals[:-1], res.intervals[1:]):
            assert b == pytest.approx(c, abs=1e-14)
        assert res.min_length > 0
        expected_big = [t for t, s in g.jump_points() if s >= sigma / 5]
        assert sorted(res.big_jumps) == pytest.approx(sorted(expected_big))
        for (lo, hi), tag in zip(res.intervals, res.tags):
            if tag == "small":
                assert variation(g, (lo, hi), closed="both") < sigma / 4
            else:
                inside = [t for t in res.big_jumps if lo < t < hi]
                assert len(inside) == 1
                t = inside[0]
                cap = sigma**3 / 100
                assert variation(g, (lo, t), closed="neither") < cap
                assert variation(g, (t, hi), closed="neither") < cap


def test_segment_line_respects_required_cuts():
    g = _identity_trace()
    res = segment_line(g, sigma=0.5, required_cuts=(0.25,))
    endpoints = {round(a, 12) for a, _ in res.intervals}
    endpoints |= {round(b, 12) for _, b in res.intervals}
    assert 0.25 in endpoints


def test_segment_line_rejects_required_cut_on_jump():
    g = _slope_one_with_unit_jump()
    with pytest.raises(NoValidCut):
        segment_line(g, sigma=0.5, required_cuts=(0.0,))


def test_segment_line_rejects_endpoint_jump():
    g = BVLine(
        [-1.0, 1.0],
        left=[(0.0, 0.0), (1.0, 0.0)],
        right=[(0.5, 0.0), (1.0, 0.0)],
    )
    with pytest.raises(PreconditionFailed):
        segment_line(g, sigma=0.5)


def test_l1_distance_basics():
    g1 = _identity_trace()
    g2 = BVLine.continuous([-1.0, 1.0], [(-1.0, 1.0), (1.0, 1.0)])
    assert l1_distance(g1, g2) == pytest.approx(2.0)
    g3 = BVLine.continuous([-1.0, 1.0], [(-1.0, -1.0), (1.0, 1.0)])
    assert l1_distance(g1, g3) == pytest.approx(1.0, abs=1e-6)


def test_check_strict_split_identical_sequence():
    g = _identity_trace()
    report = check_strict_split([g, g, g], g, c=0.3)
    assert report.converged
    assert report.left_gaps[-1] == pytest.approx(0.0, abs=1e-12)
    assert report.right_gaps[-1] == pytest.approx(0.0, abs=1e-12)


def _bump_perturbation(k: int) -> BVLine:
    ts = [-1.0, -0.5, 0.0, 0.5, 1.0]
    vals = [(t, 0.0) for t in ts]
    vals[2] = (0.0, 1.0 / k)
    return BVLine.continuous(ts, vals)


def test_check_strict_split_shrinking_bump():
    g = _identity_trace()
    seq = [_bump_perturbation(k) for k in (5, 20, 80, 320, 5000)]
    report = check_strict_split(seq, g, c=0.3, tol=1e-3)
    assert report.converged
    assert report.left_gaps == sorted(report.left_gaps, reverse=True)
    assert report.right_gaps[-1] < 1e-3


def test_check_strict_split_rejects_cut_on_jump():
    g = _slope_one_with_unit_jump()
    with pytest.raises(PreconditionFailed):
        check_strict_split([g], g, c=0.0)


def test_check_strict_split_rejects_nonconverging_sequence():
    g = _identity_trace()
    off = BVLine.continuous([-1.0, 1.0], [(0.0, 1.0), (2.0, 1.0)])
    with pytest.raises(PreconditionFailed):
        check_strict_split([off], g, c=0.3)


def test_deviation_straight_segment():
    res = constrained_path_deviation(
        (0, 0), (2, 0), (0, 0), (2, 0), [(0, 0), (2, 0)], eps=0.0, delta=0.0
    )
    assert res.max_deviation == pytest.approx(0.0, abs=1e-12)
    assert res.bound == 0.0
    assert res.passed


def test_deviation_semicircle_half_length():
    # Semicircular arc over a segment of length 2: path length pi, so
    # eps = pi/2 - 1, the bound is 3*sqrt(pi-2)*L ~ 3.2055*L, and the true
    # deviation is exactly half the segment length.
    L = 2.0
    thetas = np.linspace(np.pi, 0.0, 2001)
    arc = np.column_stack([1.0 + np.cos(thetas), np.sin(thetas)])
    eps = np.pi / 2 - 1
    res = constrained_path_deviation(
        (0, 0), (2, 0), (0, 0), (2, 0), arc, eps=eps, delta=0.0
    )
    assert res.bound == pytest.approx(3 * math.sqrt(np.pi - 2) * L)
    assert res.max_deviation == pytest.approx(0.5 * L, abs=2e-3)
    assert res.passed


def _random_valid_configuration(rng):
    while True:
        A, B = rng.uniform(-1, 1, size=(2, 2))
        L = float(np.hypot(*(B - A)))
        if L > 0.3:
            break
    eps = float(rng.uniform(0.002, 0.8))
    delta = float(rng.uniform(0.0, eps / 2))
    ang = rng.uniform(0, 2 * np.pi, size=2)
    C = A + delta * L * rng.uniform(0, 1) * np.array([np.cos(ang[0]), np.sin(ang[0])])
    D = B + delta * L * rng.uniform(0, 1) * np.array([np.cos(ang[1]), np.sin(ang[1])])
    m = int(rng.integers(0, 6))
    mids = (A + B) / 2 + rng.normal(scale=L / 2, size=(m, 2))
    raw = np.vstack([C, mids, D]) if m else np.vstack([C, D])
    # Shrink toward the chord until the length budget holds; the length is
    # convex in the shrink factor, so the linear estimate is safe.
    fracs = np.linspace(0, 1, raw.shape[0])[:, None]
    chord = C[None, :] + fracs * (D - C)[None, :]
    seg = np.hypot(*np.diff(raw, axis=0).T)
    raw_len = float(np.sum(seg))
    target = (1 + eps) * L * 0.999
    cd = float(np.hypot(*(D - C)))
    if raw_len > target:
        lam = (target - cd) / (raw_len - cd) if raw_len > cd else 0.0
        lam = max(0.0, min(1.0, lam))
        raw = chord + lam * (raw - chord)
    return A, B, C, D, raw, eps, delta


def test_deviation_bound_holds_on_monte_carlo_configurations():
    rng = np.random.default_rng(99)
    for _ in range(10000):
        A, B, C, D, path, eps, delta = _random_valid_configuration(rng)
        res = constrained_path_deviation(A, B, C, D, path, eps, delta)
        assert res.passed, (A, B, C, D, eps, delta, res)


def test_deviation_rejects_violated_hypotheses():
    with pytest.raises(PreconditionFailed):
        constrained_path_deviation(
            (0, 0), (2, 0), (1, 1), (2, 0), [(1, 1), (2, 0)], eps=0.1, delta=0.01
        )
    with pytest.raises(PreconditionFailed):
        constrained_path_deviation(
            (0, 0), (2, 0), (0, 0), (2, 0),
            [(0, 0), (1, 5), (2, 0)], eps=0.1, delta=0.0,
        )


def test_from_function_linear_trace():
    g = BVLine.from_function(lambda t: (2 * t, t), 0.0, 1.0)
    assert variation(g) == pytest.approx(math.sqrt(5), abs=1e-6)


def test_from_function_with_jump_hint():
    def fn(t):
        return (t, 0.0) if t < 0 else (t, 1.0)

    g = BVLine.from_function(fn, -1.0, 1.0, jumps=[0.0])
    assert variation(g) == pytest.approx(3.0, abs=1e-5)
