"""Tests for the piecewise affine extension machinery."""

from __future__ import annotations

from types import SimpleNamespace

import numpy as np
import pytest

from bvhomeo.errors import ExtensionFailed, GlueMismatch
from bvhomeo.extend import (
    PLHomeo,
    _split,
    glue,
    manhattan_variation,
    minimal_extension,
    variation_components,
)
from bvhomeo.geodesic import BoundaryParam, boundary_geodesic_integral, identity_boundary

SQUARE = (-1.0, 1.0, -1.0, 1.0)
CORNERS = np.array([(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)])
TWO_TRIANGLES = [(0, 1, 2), (0, 2, 3)]


def _affine_homeo(mat) -> PLHomeo:
    img = CORNERS @ np.asarray(mat, dtype=float).T
    return PLHomeo(SQUARE, CORNERS, img, TWO_TRIANGLES)


def _line_integral_variation(h: PLHomeo, n: int = 256) -> float:
    """Independent variation oracle: trapezoid over per-line image lengths."""
    a1, a2, b1, b2 = h.rect
    ys = np.linspace(b1, b2, n)
    horiz = np.trapezoid([h.line_variation("horizontal", y) for y in ys], ys)
    xs = np.linspace(a1, a2, n)
    vert = np.trapezoid([h.line_variation("vertical", x) for x in xs], xs)
    return float(horiz + vert)


def _random_star_boundary(rng, rect=SQUARE) -> BoundaryParam:
    """Injective PL boundary map whose image is a random star polygon."""
    n = int(rng.integers(8, 16))
    while True:
        angles = np.sort(rng.uniform(0, 2 * np.pi, n))
        gaps = np.diff(np.concatenate([angles, [angles[0] + 2 * np.pi]]))
        if gaps.min() > 0.05 and gaps.max() < np.pi - 0.1:
            break
    radii = rng.uniform(0.35, 1.3, n)
    ring = np.column_stack([radii * np.cos(angles), radii * np.sin(angles)])
    idx = np.sort(rng.choice(n, size=4, replace=False))
    chains = []
    for c in range(4):
        i0 = idx[c]
        if c < 3:
            chains.append(ring[i0 : idx[c + 1] + 1])
        else:
            chains.append(np.vstack([ring[i0:], ring[: idx[0] + 1]]))
    a1, a2, b1, b2 = rect
    return BoundaryParam(
        rect,
        bottom=(np.linspace(a1, a2, len(chains[0])), chains[0]),
        right=(np.linspace(b1, b2, len(chains[1])), chains[1]),
        top=(np.linspace(a1, a2, len(chains[2])), chains[2][::-1].copy()),
        left=(np.linspace(b1, b2, len(chains[3])), chains[3][::-1].copy()),
    )


# ---------------------------------------------------------------------------
# manhattan variation and line restrictions


def test_manhattan_variation_identity():
    h = _affine_homeo(np.eye(2))
    assert manhattan_variation(h) == pytest.approx(8.0, abs=1e-12)


def test_manhattan_variation_diag():
    h = _affine_homeo(np.diag([2.0, 3.0]))
    assert manhattan_variation(h) == pytest.approx(20.0, abs=1e-12)
    v1, v2 = variation_components(h)
    assert v1 == pytest.approx(8.0, abs=1e-12)
    assert v2 == pytest.approx(12.0, abs=1e-12)


def test_manhattan_variation_rotation_matches_line_oracle():
    h = _affine_homeo(np.array([[0.0, -1.0], [1.0, 0.0]]))
    var = manhattan_variation(h)
    assert var == pytest.approx(8.0, abs=1e-12)
    oracle = _line_integral_variation(h)
    assert var == pytest.approx(oracle, rel=1e-3)


def test_manhattan_variation_oracle_on_random_affine_maps():
    rng = np.random.default_rng(11)
    for _ in range(10):
        mat = rng.uniform(-1.5, 1.5, size=(2, 2))
        if np.linalg.det(mat) < 0.1:
            continue
        h = _affine_homeo(mat)
        assert manhattan_variation(h) == pytest.approx(
            _line_integral_variation(h), rel=1e-3
        )


def test_line_image_tracks_affine_pieces():
    h = _affine_homeo(np.eye(2))
    img = h.line_image("horizontal", 0.3)
    assert img.vertices[0] == pytest.approx([-1.0, 0.3])
    assert img.vertices[-1] == pytest.approx([1.0, 0.3])
    assert h.line_variation("horizontal", 0.3) == pytest.approx(2.0, abs=1e-12)
    assert h.line_variation("vertical", -0.5) == pytest.approx(2.0, abs=1e-12)


def test_eval_matches_affine_map():
    mat = np.array([[0.0, -1.0], [1.0, 0.0]])
    h = _affine_homeo(mat)
    rng = np.random.default_rng(3)
    pts = rng.uniform(-1, 1, size=(40, 2))
    out = h.evals(pts)
    assert np.allclose(out, pts @ mat.T, atol=1e-14)


# ---------------------------------------------------------------------------
# validation


def test_validate_accepts_identity():
    h = _affine_homeo(np.eye(2))
    h.validate()


def test_validate_rejects_flipped_image_triangle():
    img = CORNERS.copy()
    img[[1, 3]] = img[[3, 1]]  # swap two image corners, flipping one triangle
    h = PLHomeo(SQUARE, CORNERS, img, TWO_TRIANGLES)
    with pytest.raises(ExtensionFailed):
        h.validate()


def test_validate_rejects_t_junction():
    src = np.vstack([CORNERS, [(0.0, 0.0)]])
    img = src.copy()
    tris = [(0, 1, 4), (4, 1, 2), (0, 2, 3)]  # (0, 2) edge has vertex 4 inside
    h = PLHomeo(SQUARE, src, img, tris)
    with pytest.raises(ExtensionFailed):
        h.validate()


def test_validate_rejects_coverage_gap():
    # Two triangles covering only half the square.
    src = np.array([(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0)])
    h = PLHomeo(SQUARE, src, src.copy(), [(0, 1, 2)])
    with pytest.raises(ExtensionFailed):
        h.validate()


# ---------------------------------------------------------------------------
# minimal extension


def test_minimal_extension_identity_is_exact():
    phi = identity_boundary(SQUARE)
    h = minimal_extension(phi, 1e-6)
    h.validate(phi)
    assert manhattan_variation(h) == pytest.approx(8.0, abs=1e-9)
    rng = np.random.default_rng(5)
    pts = rng.uniform(-1, 1, size=(30, 2))
    assert np.allclose(h.evals(pts), pts, atol=1e-12)


def test_minimal_extension_affine_boundary():
    a, b = 0.7, 0.4
    phi = BoundaryParam(
        SQUARE,
        bottom=([-1, 1], [(-a, -b), (a, -b)]),
        right=([-1, 1], [(a, -b), (a, b)]),
        top=([-1, 1], [(-a, b), (a, b)]),
        left=([-1, 1], [(-a, -b), (-a, b)]),
    )
    h = minimal_extension(phi, 1e-6)
    h.validate(phi)
    assert manhattan_variation(h) == pytest.approx(4 * (a + b), abs=1e-6)


def test_minimal_extension_random_star_boundaries():
    rng = np.random.default_rng(17)
    eps = 1e-2
    for trial in range(50):
        phi = _random_star_boundary(rng)
        h = minimal_extension(phi, eps)
        h.validate(phi)
        psi = boundary_geodesic_integral(phi, n=32, tol=None, max_doublings=2)
        var = manhattan_variation(h)
        assert var <= psi.value + eps + psi.gap, f"trial {trial}"
        # The geodesic integral lower-bounds every extension.
        assert var >= psi.value - psi.gap - 1e-9, f"trial {trial}"


def test_minimal_extension_rejects_reversed_boundary():
    phi = BoundaryParam(
        SQUARE,
        bottom=([-1, 1], [(1, -1), (-1, -1)]),
        right=([-1, 1], [(-1, -1), (-1, 1)]),
        top=([-1, 1], [(1, 1), (-1, 1)]),
        left=([-1, 1], [(1, -1), (1, 1)]),
    )
    with pytest.raises(ExtensionFailed):
        minimal_extension(phi, 1e-3)


def test_split_identity_produces_identity_children():
    phi = identity_boundary(SQUARE)
    left, right = _split(phi, 0, 0.0)
    assert left.a2 == 0.0 and right.a1 == 0.0
    # The cut is the vertical segment x = 0 in the image.
    cut_ts, cut_pts = left.sides["right"]
    assert np.allclose(cut_pts[:, 0], 0.0, atol=1e-12)
    assert cut_ts[0] == -1.0 and cut_ts[-1] == 1.0
    # Shared arrays make the glue precondition bit-exact.
    assert left.sides["right"][1] is right.sides["left"][1]


# ---------------------------------------------------------------------------
# gluing


def _identity_cell(a1, a2, b1, b2) -> PLHomeo:
    src = np.array([(a1, b1), (a2, b1), (a2, b2), (a1, b2)])
    return PLHomeo((a1, a2, b1, b2), src, src.copy(), TWO_TRIANGLES)


def test_glue_identity_pieces():
    grid = SimpleNamespace(xs=np.array([-1.0, 0.0, 1.0]), ys=np.array([-1.0, 0.0, 1.0]))
    pieces = [
        _identity_cell(x1, x2, y1, y2)
        for y1, y2 in ((-1.0, 0.0), (0.0, 1.0))
        for x1, x2 in ((-1.0, 0.0), (0.0, 1.0))
    ]
    total = sum(manhattan_variation(p) for p in pieces)
    glued = glue(pieces, grid)
    glued.validate()
    assert glued.rect == (-1.0, 1.0, -1.0, 1.0)
    assert manhattan_variation(glued) == pytest.approx(total, abs=1e-12)
    rng = np.random.default_rng(9)
    pts = rng.uniform(-1, 1, size=(25, 2))
    assert np.allclose(glued.evals(pts), pts, atol=1e-12)


def test_glue_rejects_perturbed_shared_trace():
    grid = SimpleNamespace(xs=np.array([-1.0, 0.0, 1.0]), ys=np.array([-1.0, 1.0]))
    left = _identity_cell(-1.0, 0.0, -1.0, 1.0)
    right = _identity_cell(0.0, 1.0, -1.0, 1.0)
    right.img[0] = right.img[0] + np.array([1e-9, 0.0])  # vertex on shared edge x=0
    with pytest.raises(GlueMismatch):
        glue([left, right], grid)


def test_glue_rejects_missing_cell():
    grid = SimpleNamespace(xs=np.array([-1.0, 0.0, 1.0]), ys=np.array([-1.0, 1.0]))
    with pytest.raises(GlueMismatch):
        glue([_identity_cell(-1.0, 0.0, -1.0, 1.0)], grid)


def test_glued_extension_of_split_matches_variation_additivity():
    rng = np.random.default_rng(29)
    phi = _random_star_boundary(rng)
    h = minimal_extension(phi, 1e-2)
    # Re-split by hand and compare the glued children with the overall budget.
    left, right = _split(phi, 0, 0.0)
    hl = minimal_extension(left, 5e-3)
    hr = minimal_extension(right, 5e-3)
    grid = SimpleNamespace(xs=np.array([-1.0, 0.0, 1.0]), ys=np.array([-1.0, 1.0]))
    glued = glue([hl, hr], grid)
    glued.validate()
    total = manhattan_variation(hl) + manhattan_variation(hr)
    assert manhattan_variation(glued) == pytest.approx(total, abs=1e-12)
