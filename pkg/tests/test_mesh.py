"""Mesh generation: quality ladders, refinement, exact-boundary projection,
file format round-trip."""

import math

import numpy as np
import pytest

from spectral_ends.cli import analytic_area
from spectral_ends.geometry import build_preset
from spectral_ends.mesh import (
    MESH_HEADER,
    MeshFormatError,
    generate,
    read_mesh,
    refine,
    write_mesh,
)


def _ladder(name, params=None, levels=3):
    g = build_preset(name, params)
    m = generate(g)
    out = [m]
    for _ in range(levels):
        m = refine(m, g)
        out.append(m)
    return g, out


@pytest.mark.parametrize(
    "name,params",
    [
        ("rect-test", None),
        ("bent-waveguide", None),
        ("obstructed-strip", {"delta": 0.0, "radius": 0.3}),
        ("obstructed-strip", {"delta": 0.2, "radius": 0.5}),
        ("cshape-cavity", None),
        ("gaussian-potential", None),
    ],
)
def test_min_angle_ladder(name, params):
    _, ladder = _ladder(name, params, levels=2)
    for m in ladder:
        assert m.min_angle() >= 20.0


def test_all_triangles_ccw():
    for name in ("bent-waveguide", "cshape-cavity"):
        _, ladder = _ladder(name, levels=1)
        for m in ladder:
            assert (m.areas() > 0).all()


def test_refine_quadruples_and_halves():
    g = build_preset("rect-test")
    m0 = generate(g)
    m1 = refine(m0, g)
    assert len(m1.triangles) == 4 * len(m0.triangles)
    assert m1.max_edge_length() == pytest.approx(0.5 * m0.max_edge_length(), rel=1e-12)
    assert m1.total_area() == pytest.approx(1.0, abs=1e-12)


def test_refined_boundary_nodes_stay_on_exact_curves():
    # oracle: derived — every node on the artificial-circle boundary must sit
    # at the exact radius after projection-based refinement
    g = build_preset("gaussian-potential", {"rho_art": 2.0})
    m = generate(g)
    for _ in range(2):
        m = refine(m, g)
    edges = m.edges_with_tag(g.circle_tag)
    assert len(edges) > 0
    nodes = np.unique(edges[:, :2])
    r = np.hypot(m.nodes[nodes, 0], m.nodes[nodes, 1])
    assert np.abs(r - 2.0).max() <= 1e-9


def test_area_converges_to_analytic():
    # oracle: derived — polygonal area approaches the exact boundary area at
    # the O(h^2) rate as curved boundaries are re-projected
    g, ladder = _ladder("cshape-cavity", levels=3)
    exact = analytic_area(g)
    errs = [abs(m.total_area() - exact) for m in ladder]
    assert errs[-1] < errs[0] / 8
    assert errs[-1] / exact < 5e-4


def test_interface_edges_present():
    g = build_preset("bent-waveguide")
    m = refine(generate(g), g)
    for e in g.ends:
        edges = m.edges_with_tag(e.tag)
        assert len(edges) > 0
        # the interface edges together span the full attach line
        total = sum(
            np.linalg.norm(m.nodes[i] - m.nodes[j]) for i, j, _ in edges
        )
        assert total == pytest.approx(e.attach_line.length, rel=1e-9)


def test_mesh_file_round_trip(tmp_path):
    g = build_preset("obstructed-strip")
    m = refine(generate(g), g)
    path = tmp_path / "m.txt"
    write_mesh(m, path)
    back = read_mesh(path)
    assert np.allclose(back.nodes, m.nodes, atol=1e-15)
    assert (back.triangles == m.triangles).all()
    assert (back.boundary_edges == m.boundary_edges).all()


def test_mesh_format_errors(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("# not a mesh\n")
    with pytest.raises(MeshFormatError):
        read_mesh(bad)
    trunc = tmp_path / "trunc.txt"
    trunc.write_text(MESH_HEADER + "\n3 1 0\n0 0\n1 0\n")
    with pytest.raises(MeshFormatError):
        read_mesh(trunc)
