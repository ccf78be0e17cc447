"""Bracketed one-dimensional maximization: uniform coarse scan + golden section."""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
INV_PHI2 = (3.0 - math.sqrt(5.0)) / 2.0

# two coarse samples closer than this count as a tie; smallest abscissa wins
TIE_TOL = 1e-14
FLAT_TOL = 1e-14


class Maximum(NamedTuple):
    x: float
    value: float
    flat: bool


def golden_section_max(f, a, b, tol=1e-10, fa=None, fb=None):
    """Maximize a unimodal ``f`` on ``[a, b]`` until the bracket is narrower than ``tol``.

    Returns ``(x, f(x))`` for the best point seen, endpoints included when
    their values are supplied.
    """
    a, b = min(a, b), max(a, b)
    best_x, best_y = None, -math.inf
    for x, y in ((a, fa), (b, fb)):
        if y is not None and y > best_y:
            best_x, best_y = x, y

    width = b - a
    c = a + INV_PHI2 * width
    d = a + INV_PHI * width
    yc, yd = f(c), f(d)
    while width > tol:
        if yc >= yd:
            b, d, yd = d, c, yc
            width = b - a
            c = a + INV_PHI2 * width
            yc = f(c)
        else:
            a, c, yc = c, d, yd
            width = b - a
            d = a + INV_PHI * width
            yd = f(d)
    for x, y in ((c, yc), (d, yd)):
        # `>` keeps the earlier (smaller-x) candidate on exact ties
        if y > best_y or best_x is None:
            best_x, best_y = x, y
    return best_x, best_y


def scan_then_refine(f_vec, f, lo, hi, grid=257, tol=1e-10) -> Maximum:
    """Global maximum of ``f`` on ``[lo, hi]``.

    ``f_vec`` evaluates the objective on an array of abscissae (used for the
    coarse scan), ``f`` on a single float.  The best coarse sample is refined
    by golden section inside its neighbouring cells.  ``-inf`` values are
    allowed and simply never win.
    """
    xs = np.linspace(lo, hi, grid)
    ys = np.asarray(f_vec(xs), dtype=float)
    finite = ys[np.isfinite(ys)]
    ymax = ys.max()
    flat = finite.size == ys.size and float(ymax - ys.min()) <= FLAT_TOL
    if not np.isfinite(ymax):
        return Maximum(float(xs[0]), float(ymax), True)

    i = int(np.flatnonzero(ys >= ymax - TIE_TOL)[0])
    if flat:
        return Maximum(float(xs[i]), float(ys[i]), True)
    j0, j1 = max(i - 1, 0), min(i + 1, grid - 1)
    x, y = golden_section_max(f, xs[j0], xs[j1], tol, fa=ys[j0], fb=ys[j1])
    if not y > ys[i]:
        x, y = xs[i], ys[i]
    return Maximum(float(x), float(y), False)
