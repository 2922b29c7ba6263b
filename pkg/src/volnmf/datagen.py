"""Synthetic benchmark data, the bundled time-allocation table, and CSV I/O."""

import csv
import enum
import hashlib
import io
import itertools
import logging
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import List, Optional

import numpy as np

from .errors import (
    ParseError,
    RaggedRows,
    RejectionStall,
    SSCConstructionFailed,
    ZeroColumn,
)
from .geometry import Verdict, ssc_check_exact_k3

log = logging.getLogger(__name__)

TIME_ALLOCATION_SHA256 = "300918dd4ddbeb6c1d841cf0d669e1a7625d43b0291a7f4d842724dab32f3a72"
MAX_CONSECUTIVE_REJECTIONS = 10**6


class Setting(enum.Enum):
    """Dirichlet concentration of the coefficient columns."""

    ONE_DENSE_ROW = "one-dense-row"
    TWO_DENSE_ROWS = "two-dense-rows"
    THREE_DENSE_ROWS = "three-dense-rows"

    @property
    def alpha(self):
        return {
            Setting.ONE_DENSE_ROW: (2.0, 0.5, 0.5),
            Setting.TWO_DENSE_ROWS: (2.0, 2.0, 0.5),
            Setting.THREE_DENSE_ROWS: (2.0, 2.0, 2.0),
        }[self]


@dataclass(frozen=True)
class SyntheticSpec:
    setting: Setting = Setting.THREE_DENSE_ROWS
    i: int = 9
    j: int = 500
    k: int = 3
    cap: float = 0.75
    beta: float = 0.1
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "setting", Setting(self.setting))
        if self.k != 3:
            raise ValueError("only k = 3 is supported")
        if self.i != 9:
            raise ValueError("the basis is a 3-row random block over a 6-row SSC block, so i = 9")
        if not 0 < self.cap < 1:
            raise ValueError("cap must lie in (0, 1)")
        if not 0 <= self.beta < 0.5:
            raise ValueError("beta must lie in [0, 0.5)")
        if self.j < 1:
            raise ValueError("j must be positive")


@dataclass
class Dataset:
    x: np.ndarray
    m_true: Optional[np.ndarray] = None
    h_true: Optional[np.ndarray] = None
    row_labels: Optional[List[str]] = None
    col_labels: Optional[List[str]] = None


# Sampling -----------------------------------------------------------------


def _gamma(rng, alpha):
    """One Gamma(alpha, 1) variate (Marsaglia-Tsang, with the alpha < 1 boost)."""
    if alpha < 1.0:
        u = rng.random()
        return _gamma(rng, alpha + 1.0) * u ** (1.0 / alpha)
    d = alpha - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    while True:
        z = rng.standard_normal()
        v = 1.0 + c * z
        if v <= 0:
            continue
        v = v * v * v
        u = rng.random()
        if math.log(u) < 0.5 * z * z + d - d * v + d * math.log(v):
            return d * v


def sample_dirichlet(alpha, rng):
    """One Dirichlet(alpha) draw from normalized Gamma variates.

    ``rng`` is a ``numpy.random.Generator``; the stream it consumes is
    deterministic for a given state.
    """
    alpha = [float(a) for a in alpha]
    if any(a <= 0 for a in alpha):
        raise ValueError("Dirichlet parameters must be positive")
    while True:
        g = np.array([_gamma(rng, a) for a in alpha])
        s = g.sum()
        if s > 0:
            return g / s


def sample_coeffs_rejection(alpha, cap, j, seed, return_rate=False):
    """``j`` Dirichlet columns, each redrawn until every entry is ``<= cap``."""
    rng = np.random.default_rng(seed)
    cols = []
    tries = 0
    streak = 0
    while len(cols) < j:
        h = sample_dirichlet(alpha, rng)
        tries += 1
        if np.all(h <= cap):
            cols.append(h)
            streak = 0
        else:
            streak += 1
            if streak >= MAX_CONSECUTIVE_REJECTIONS:
                raise RejectionStall(f"{streak} consecutive rejections with cap={cap}")
    rate = j / tries
    log.info("rejection sampling alpha=%s cap=%s: acceptance rate %.4f", alpha, cap, rate)
    out = np.array(cols).T
    return (out, rate) if return_rate else out


def build_ssc_basis_block(k=3, beta=0.1):
    """Six rows ``(1-beta) e_i + beta e_j`` over ordered pairs ``i != j``.

    The block is checked with the exact K=3 SSC test before it is returned.
    """
    if k != 3:
        raise ValueError("only k = 3 is supported")
    if not 0 <= beta < 0.5:
        raise SSCConstructionFailed(f"beta={beta} outside [0, 0.5)")
    rows = []
    for i, j in itertools.permutations(range(k), 2):
        r = np.zeros(k)
        r[i] = 1.0 - beta
        r[j] = beta
        rows.append(r)
    block = np.array(rows)
    report = ssc_check_exact_k3(block)
    if report.ssc1 is not Verdict.HOLDS:
        raise SSCConstructionFailed(f"beta={beta}: SSC1 {report.ssc1.value}")
    return block


def generate_synthetic(spec):
    """Noiseless ``X = M H`` with a uniform top block over an SSC block in M."""
    rng = np.random.default_rng([spec.seed, 0])
    top = rng.uniform(size=(3, spec.k))
    m = np.vstack([top, build_ssc_basis_block(spec.k, spec.beta)])
    h = sample_coeffs_rejection(spec.setting.alpha, spec.cap, spec.j, [spec.seed, 1])
    return Dataset(x=m @ h, m_true=m, h_true=h)


# Bundled data -------------------------------------------------------------


def load_time_allocation():
    """The 18 x 30 time-allocation table (activities x gender/age/year groups)."""
    raw = resources.files("volnmf").joinpath("data/time_allocation.csv").read_bytes()
    digest = hashlib.sha256(raw).hexdigest()
    if digest != TIME_ALLOCATION_SHA256:
        raise RuntimeError("bundled time_allocation.csv failed its checksum")
    return _parse_csv(raw.decode("utf-8"), source="time_allocation.csv")


def normalize_columns(x):
    x = np.asarray(x, dtype=float)
    s = x.sum(axis=0)
    if np.any(s <= 0):
        raise ZeroColumn(f"column {int(np.argmax(s <= 0))} has nonpositive sum")
    return x / s


# CSV ------------------------------------------------------------------------


def format_float(v):
    """Shortest repr that round-trips; at most 17 significant digits."""
    v = float(v)
    if v == 0:
        return "0"
    return repr(v)


def _is_number(s):
    try:
        float(s)
    except ValueError:
        return False
    return True


def _parse_csv(text, source="<csv>"):
    rows = [r for r in csv.reader(io.StringIO(text))]
    while rows and not any(c.strip() for c in rows[-1]):
        rows.pop()
    if not rows:
        raise ParseError(f"{source}: empty file", line=1)
    header = None
    first_line = 1
    first = rows[0]
    # a header has a non-numeric cell past the first, or is a lone text cell
    if any(not _is_number(c) for c in first[1:]) or (len(first) == 1 and not _is_number(first[0])):
        header = first
        rows = rows[1:]
        first_line = 2
    if not rows:
        raise ParseError(f"{source}: no data rows", line=first_line)
    has_labels = any(not _is_number(r[0]) for r in rows if r)
    width = len(rows[0])
    data, labels = [], []
    for n, r in enumerate(rows):
        line = first_line + n
        if len(r) != width:
            raise RaggedRows(f"{source}: expected {width} fields, got {len(r)}", line=line)
        cells = r[1:] if has_labels else r
        if has_labels:
            labels.append(r[0])
        vals = []
        for c, cell in enumerate(cells):
            try:
                vals.append(float(cell))
            except ValueError:
                raise ParseError(
                    f"{source}: cannot parse {cell!r}",
                    line=line,
                    column=c + 1 + int(has_labels),
                ) from None
        data.append(vals)
    x = np.array(data, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ParseError(f"{source}: non-finite values", line=first_line)
    col_labels = None
    if header is not None:
        col_labels = header[1:] if has_labels else header
    return Dataset(x=x, row_labels=labels or None, col_labels=col_labels)


def load_csv(path):
    """Read a numeric CSV with optional header row and optional label column."""
    path = Path(path)
    return _parse_csv(path.read_text(encoding="utf-8"), source=str(path))


def write_csv(dataset, path):
    """Write ``dataset.x`` (or a bare array) with its labels, LF line endings."""
    if not isinstance(dataset, Dataset):
        dataset = Dataset(x=np.asarray(dataset, dtype=float))
    x = np.atleast_2d(np.asarray(dataset.x, dtype=float))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    rl = dataset.row_labels
    if dataset.col_labels is not None:
        w.writerow((["label"] if rl else []) + list(dataset.col_labels))
    for i, row in enumerate(x):
        cells = [format_float(v) for v in row]
        w.writerow(([rl[i]] if rl else []) + cells)
    Path(path).write_text(buf.getvalue(), encoding="utf-8", newline="\n")
