import xml.etree.ElementTree as ET

import numpy as np
import pytest

from volnmf import datagen, plotting
from volnmf.errors import ShapeMismatch

NS = {"svg": "http://www.w3.org/2000/svg"}


def polygons(svg):
    root = ET.fromstring(svg)
    polys = root.findall(".//svg:polygon", NS)
    dashed = [p for p in polys if p.get("stroke-dasharray")]
    solid = [p for p in polys if not p.get("stroke-dasharray")]
    return root, dashed, solid


def test_truth_vertices_at_corners():
    m = np.random.default_rng(0).uniform(size=(9, 3))
    coords = plotting.barycentric(m, m)
    assert np.allclose(coords, np.eye(3), atol=1e-12)
    assert np.allclose(plotting.embed(coords).T, plotting.CORNERS, atol=1e-12)


def test_basis_column_plots_on_vertex():
    m = np.random.default_rng(1).uniform(size=(9, 3))
    x = np.column_stack([m[:, 1], m @ [0.2, 0.3, 0.5]])
    xy = plotting.embed(plotting.barycentric(x, m))
    assert np.allclose(xy[:, 0], plotting.CORNERS[1], atol=1e-12)


def test_setting_three_points_inside_truth_triangle():
    ds = datagen.generate_synthetic(datagen.SyntheticSpec(setting="three-dense-rows"))
    svg, coords = plotting.plot_simplex(ds.m_true, m_true=ds.m_true, x=ds.x)
    assert np.all(coords >= -1e-9)
    root, dashed, solid = polygons(svg)
    assert len(dashed) == 1 and len(solid) == 1
    circles = root.find("svg:g[@id='data']", NS).findall("svg:circle", NS)
    assert len(circles) == 500


def test_svg_without_truth_has_no_solid_polygon():
    x = np.random.default_rng(2).dirichlet([1, 1, 1], size=30).T
    svg, _ = plotting.plot_simplex(np.eye(3), x=x)
    _, dashed, solid = polygons(svg)
    assert len(dashed) == 1 and len(solid) == 0


def test_pixel_coordinates_within_canvas():
    x = np.random.default_rng(3).dirichlet([1, 1, 1], size=30).T
    svg, _ = plotting.plot_simplex(np.eye(3), x=x)
    root = ET.fromstring(svg)
    for c in root.iter("{http://www.w3.org/2000/svg}circle"):
        assert 0 <= float(c.get("cx")) <= plotting.SIZE
        assert 0 <= float(c.get("cy")) <= plotting.SIZE


def test_plot_requires_rank_three():
    with pytest.raises(ShapeMismatch):
        plotting.plot_simplex(np.ones((5, 2)), x=np.ones((5, 4)))


def test_plot_requires_points():
    with pytest.raises(ValueError):
        plotting.plot_simplex(np.eye(3))
