"""Unit-sum slice plots of rank-3 factorizations as standalone SVG."""

import math
import xml.etree.ElementTree as ET

import numpy as np

from .errors import ShapeMismatch

# corners of the barycentric embedding, in plot units
CORNERS = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3.0) / 2.0]])

SIZE = 480
MARGIN = 40


def barycentric(points, basis=None):
    """Unit-sum coordinates of the columns of ``points`` in ``basis``.

    With ``basis=None`` the points must already have three rows. Otherwise
    coordinates are the least-squares solution of ``basis @ c = points``.
    Columns that sum to zero are left as NaN.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    if basis is None:
        if points.shape[0] != 3:
            raise ShapeMismatch("points need 3 rows when no basis is given")
        c = points.copy()
    else:
        basis = np.asarray(basis, dtype=float)
        if basis.shape[1] != 3:
            raise ShapeMismatch("only K = 3 factors can be plotted")
        c = np.linalg.lstsq(basis, points, rcond=None)[0]
    s = c.sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(np.abs(s) > 1e-15, c / s, np.nan)


def embed(coords):
    """Map unit-sum 3-vectors (columns) to the plane: ``c1*(0,0) + c2*(1,0) + c3*(1/2, sqrt(3)/2)``."""
    return (np.asarray(coords, dtype=float).T @ CORNERS).T


def _to_px(xy):
    scale = SIZE - 2 * MARGIN
    x = MARGIN + scale * xy[0]
    # plot height of the triangle is sqrt(3)/2; centre it vertically
    y = SIZE - MARGIN - scale * xy[1] - (SIZE - 2 * MARGIN) * (1 - math.sqrt(3) / 2) / 2
    return x, y


def _polygon(parent, coords, **attrs):
    xy = embed(coords)
    pts = " ".join(f"{x:.3f},{y:.3f}" for x, y in zip(*_to_px(xy)))
    return ET.SubElement(parent, "polygon", points=pts, fill="none", **attrs)


def simplex_svg(data_coords, est_coords, true_coords=None, title=None):
    """Build the SVG document and return it as a string.

    ``data_coords`` is (3, n); ``est_coords`` and ``true_coords`` are (3, 3)
    with one vertex per column.
    """
    svg = ET.Element(
        "svg",
        xmlns="http://www.w3.org/2000/svg",
        width=str(SIZE),
        height=str(SIZE),
        viewBox=f"0 0 {SIZE} {SIZE}",
    )
    ET.SubElement(svg, "rect", width=str(SIZE), height=str(SIZE), fill="white")
    if title:
        ET.SubElement(svg, "title").text = title

    pts = ET.SubElement(svg, "g", id="data")
    xy = embed(data_coords)
    for x, y in zip(*_to_px(xy)):
        if np.isfinite(x) and np.isfinite(y):
            ET.SubElement(pts, "circle", cx=f"{x:.3f}", cy=f"{y:.3f}", r="2.5",
                          fill="none", stroke="#1f77b4")

    if true_coords is not None:
        _polygon(svg, true_coords, id="truth", stroke="#1f77b4", **{"stroke-width": "1.5"})
    _polygon(svg, est_coords, id="estimate", stroke="#d62728",
             **{"stroke-width": "1.5", "stroke-dasharray": "6,4"})

    legend = ET.SubElement(svg, "g", id="legend", **{"font-family": "sans-serif", "font-size": "12"})
    rows = [("circle", "data columns", "#1f77b4")]
    if true_coords is not None:
        rows.append(("solid", "ground truth", "#1f77b4"))
    rows.append(("dashed", "estimate", "#d62728"))
    for n, (kind, label, color) in enumerate(rows):
        y = 16 + 16 * n
        if kind == "circle":
            ET.SubElement(legend, "circle", cx="14", cy=str(y - 4), r="3", fill="none", stroke=color)
        else:
            attrs = {"stroke-dasharray": "6,4"} if kind == "dashed" else {}
            ET.SubElement(legend, "line", x1="6", y1=str(y - 4), x2="22", y2=str(y - 4),
                          stroke=color, **attrs)
        ET.SubElement(legend, "text", x="28", y=str(y)).text = label
    return ET.tostring(svg, encoding="unicode", xml_declaration=False)


def plot_simplex(m_est, m_true=None, h_true=None, x=None):
    """Coordinates and SVG for an estimated rank-3 basis.

    The reference frame is ``m_true`` when given, otherwise the standard basis
    for 3-row data, otherwise ``m_est`` itself. Data points come from
    ``h_true`` (already in the truth frame) or from the columns of ``x``.

    Returns
    -------
    svg : str
    data_coords : (3, n) array
    """
    m_est = np.asarray(m_est, dtype=float)
    if m_est.ndim != 2 or m_est.shape[1] != 3:
        raise ShapeMismatch(f"only K = 3 can be plotted, got basis of shape {m_est.shape}")
    if m_true is not None:
        ref = np.asarray(m_true, dtype=float)
        if ref.shape[1] != 3:
            raise ShapeMismatch("m_true must have 3 columns")
    elif x is not None and np.asarray(x).shape[0] == 3:
        ref = None
    else:
        ref = m_est

    if h_true is not None and m_true is not None:
        data = barycentric(h_true)
    elif x is not None:
        data = barycentric(x, ref)
    else:
        raise ValueError("need h_true (with m_true) or x for the data points")

    est = barycentric(m_est, ref)
    truth = barycentric(ref, ref) if m_true is not None else None
    return simplex_svg(data, est, truth), data
