"""Field derivatives, critical-divergence fits and finite-size scaling.

Near the critical line the thermodynamic density has a log-divergent
field derivative for ``r > 0``,

    dE/dh ~ -ln|h - 1| / (2 pi r ln 2),

and an inverse-square-root divergence on the XX line,

    dE/dh(0, h) ~ -log2(pi/2) / (sqrt(2) pi sqrt(1 - h)).

At finite N the slope maximum grows like ``ln N`` and the ratio of the two
log amplitudes estimates the correlation-length exponent nu.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import curve_fit

from .model import ChainSpec, ModelPoint
from .optimize import golden_section_max
from .overlap import SuperpositionSpec, maximize_entanglement
from .thermo import QuadratureSpec, thermo_density

ISING_AMPLITUDE = 1.0 / (2.0 * math.pi * math.log(2.0))
XX_AMPLITUDE = math.log2(math.pi / 2.0) / (math.sqrt(2.0) * math.pi)
MIN_STEP, MAX_STEP = 1e-8, 1e-2
NONLINEAR_FRACTION = 0.05
XX_ASYMPTOTIC_BAND = 0.1
MIN_N_SPAN = 64
DEFAULT_OFFSETS = tuple(np.logspace(-5, -3, 9))


class FitQualityError(RuntimeError):
    """A scaling fit failed its internal consistency checks."""


@dataclass(frozen=True)
class ScanGrid:
    """Rectangular (r, h) grid; ``n=None`` selects the thermodynamic limit."""

    r_values: tuple
    h_values: tuple
    n: int | None = None
    sector: int = 0
    alpha: float | None = None

    def __post_init__(self):
        r = tuple(float(v) for v in self.r_values)
        h = tuple(float(v) for v in self.h_values)
        if not r or not h:
            raise ValueError("scan grid needs at least one r and one h value")
        for name, vals in (("r", r), ("h", h)):
            if any(b <= a for a, b in zip(vals, vals[1:])):
                raise ValueError(f"{name} values must be strictly increasing")
        for rv in r:
            for hv in (h[0], h[-1]):
                ModelPoint(rv, hv)
        if self.n is not None:
            ChainSpec(self.n, self.sector)
        if self.alpha is not None:
            SuperpositionSpec(self.alpha)
        object.__setattr__(self, "r_values", r)
        object.__setattr__(self, "h_values", h)

    def points(self):
        return [(r, h) for r in self.r_values for h in self.h_values]


@dataclass(frozen=True)
class DerivativeEstimate:
    value: float
    step: float
    scheme: str


@dataclass(frozen=True)
class ScanRow:
    r: float
    h: float
    n: int | None
    density: float
    derivative: float | None
    status: str = "ok"


@dataclass(frozen=True)
class AmplitudeFit:
    """Linear fit of a measured derivative against a divergent regressor.

    ``intercept`` holds one entry per fitted side of the critical field.
    """

    amplitude: float
    intercept: tuple
    residual: float
    nonlinear: bool
    expected: float
    offsets: tuple
    derivatives: tuple
    exponent: float | None = None
    nu_estimate: float | None = None


@dataclass(frozen=True)
class ScalingFit:
    amplitude: float
    intercept: float
    nu_estimate: float
    residual: float
    h_max_list: tuple
    max_slopes: tuple
    plain_amplitude: float
    plain_intercept: float
    thermo_amplitude: float
    correction: str | None
    correction_coef: float | None = None
    extra: dict = field(default_factory=dict)


def density(point: ModelPoint, n=None, sector=0, mix=None, quad=None, xi_tol=1e-10) -> float:
    """Entanglement density at finite ``n``, or in the thermodynamic limit."""
    if n is None:
        return thermo_density(point, quad, xi_tol=xi_tol).density
    return maximize_entanglement(point, ChainSpec(n, sector), mix, xi_tol=xi_tol).density


def _pick_scheme(h, step, thermo):
    if h - step < 0.0:
        return "one-sided-right"
    if thermo and (h - step <= 1.0 <= h + step):
        if h >= 1.0:
            return "one-sided-right"
        return "one-sided-left" if h - 2 * step >= 0.0 else "one-sided-right"
    return "central"


def field_derivative(
    point: ModelPoint,
    n: int | None = None,
    step: float = 1e-5,
    scheme: str = "auto",
    *,
    sector: int = 0,
    mix: SuperpositionSpec | None = None,
    quad: QuadratureSpec | None = None,
) -> DerivativeEstimate:
    """Finite-difference ``dE/dh`` at finite ``n`` or (``n=None``) at N = infinity.

    In the thermodynamic limit the stencil never straddles ``h = 1``: the
    ``"auto"`` scheme falls back to a second-order one-sided rule on the
    side of ``point``.
    """
    if not (MIN_STEP <= step <= MAX_STEP):
        raise ValueError(
            f"step {step!r} outside [{MIN_STEP}, {MAX_STEP}]; smaller steps sit below the optimizer noise floor"
        )
    thermo = n is None
    h = point.h
    if scheme == "auto":
        scheme = _pick_scheme(h, step, thermo)
    elif scheme == "central" and thermo:
        if h - step <= 1.0 <= h + step:
            raise ValueError("central stencil would straddle the critical field h = 1")
    elif scheme not in ("central", "one-sided-left", "one-sided-right"):
        raise ValueError(f"unknown scheme {scheme!r}")

    def f(hv):
        return density(point.with_h(hv), n, sector, mix, quad)

    if scheme == "central":
        value = (f(h + step) - f(h - step)) / (2 * step)
    elif scheme == "one-sided-right":
        value = (-3 * f(h) + 4 * f(h + step) - f(h + 2 * step)) / (2 * step)
    else:
        if h - 2 * step < 0.0:
            raise ValueError("left one-sided stencil reaches h < 0")
        if thermo and h > 1.0 and h - 2 * step <= 1.0:
            raise ValueError("left one-sided stencil would cross h = 1")
        value = (3 * f(h) - 4 * f(h - step) + f(h - 2 * step)) / (2 * step)
    return DerivativeEstimate(float(value), step, scheme)


def _offset_step(offset, fraction):
    return float(np.clip(fraction * offset, MIN_STEP, MAX_STEP))


def _check_offsets(offsets, lo, hi):
    offsets = tuple(float(e) for e in offsets)
    if len(offsets) < 3:
        raise ValueError("need at least 3 offsets from the critical field")
    if any(not (lo <= e < hi) for e in offsets):
        raise ValueError(f"offsets from h = 1 must lie in [{lo}, {hi})")
    return offsets


def ising_amplitude_fit(
    r: float,
    offsets=DEFAULT_OFFSETS,
    side: str = "both",
    *,
    step_fraction: float = 0.05,
    quad: QuadratureSpec | None = None,
) -> AmplitudeFit:
    """Amplitude ``a`` in ``dE/dh ~ -a ln|h - 1|`` from thermodynamic derivatives.

    ``offsets`` are the distances ``|h - 1|`` sampled.  With ``side="both"``
    both sides share one slope and get separate intercepts, which cancels
    the leading odd-in-(h-1) correction; ``"above"``/``"below"`` fit one side.
    """
    if not r > 0:
        raise ValueError("Ising-class fit needs r > 0; use xx_amplitude_fit at r = 0")
    offsets = _check_offsets(offsets, 1e-6, 1.0)
    signs = {"both": (1, -1), "above": (1,), "below": (-1,)}[side]

    rows, y = [], []
    for si, s in enumerate(signs):
        for e in offsets:
            p = ModelPoint(r, 1.0 + s * e)
            d = field_derivative(p, None, _offset_step(e, step_fraction), quad=quad)
            rows.append([-math.log(e)] + [1.0 if j == si else 0.0 for j in range(len(signs))])
            y.append(d.value)
    X, y = np.array(rows), np.array(y)
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = float(np.max(np.abs(X @ coef - y)))
    span = abs(coef[0]) * (X[:, 0].max() - X[:, 0].min())
    return AmplitudeFit(
        amplitude=float(coef[0]),
        intercept=tuple(float(c) for c in coef[1:]),
        residual=resid,
        nonlinear=resid > NONLINEAR_FRACTION * span,
        expected=ISING_AMPLITUDE / r,
        offsets=offsets,
        derivatives=tuple(y.tolist()),
    )


def _power_law(x, a, p, b):
    return a * x ** (-p) + b


def xx_amplitude_fit(
    offsets=DEFAULT_OFFSETS,
    *,
    step_fraction: float = 0.05,
    quad: QuadratureSpec | None = None,
) -> AmplitudeFit:
    """Amplitude ``c`` in ``dE/dh(0, h) ~ -c / sqrt(1 - h)`` as ``h -> 1-``.

    ``offsets`` are the values of ``1 - h``.  Also fits the divergence
    exponent ``p`` freely in ``-dE/dh = a (1-h)^-p + b``; with an intensive
    density the singular part scales as ``(1-h)^(nu d)``, so ``nu = 1 - p``.
    Offsets beyond the asymptotic band ``1 - h < 0.1`` are accepted but
    flag the fit as non-linear.
    """
    offsets = _check_offsets(offsets, 1e-6, 1.0)
    y = []
    for e in offsets:
        p = ModelPoint(0.0, 1.0 - e)
        y.append(-field_derivative(p, None, _offset_step(e, step_fraction), "one-sided-left", quad=quad).value)
    y = np.array(y)
    e = np.array(offsets)
    x = e ** -0.5
    X = np.stack([x, np.ones_like(x)], axis=1)
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = float(np.max(np.abs(X @ coef - y)))
    span = abs(coef[0]) * (x.max() - x.min())
    try:
        (_, expo, _), _ = curve_fit(_power_law, e, y, p0=(coef[0], 0.5, coef[1]), maxfev=20000)
        expo = float(expo)
    except RuntimeError:
        expo = math.nan
    return AmplitudeFit(
        amplitude=float(coef[0]),
        intercept=(float(coef[1]),),
        residual=resid,
        nonlinear=resid > NONLINEAR_FRACTION * span or max(offsets) >= XX_ASYMPTOTIC_BAND,
        expected=XX_AMPLITUDE,
        offsets=offsets,
        derivatives=tuple(y.tolist()),
        exponent=expo,
        nu_estimate=1.0 - expo,
    )


def slope_step(n: int) -> float:
    # the slope peak has width ~1/N in h
    return min(1e-4, 0.02 / n)


def slope_maximum(r: float, n: int, bracket=(0.9, 1.3), sector: int = 0, h_tol: float | None = None):
    """``(h_max, max slope)`` of the finite-``n`` density derivative in ``bracket``."""
    step = slope_step(n)
    h_tol = h_tol if h_tol is not None else 1e-4 / n

    def slope(h):
        return field_derivative(ModelPoint(r, h), n, step, "central", sector=sector).value

    lo, hi = bracket
    # coarse samples: uniform over the bracket plus a 1/N-scaled grid at h = 1
    hs = np.union1d(np.linspace(lo, hi, 41), 1.0 + np.linspace(-4.0, 8.0, 49) / n)
    hs = hs[(hs >= lo) & (hs <= hi)]
    ys = np.array([slope(h) for h in hs])
    i = int(np.argmax(ys))
    a, b = hs[max(i - 1, 0)], hs[min(i + 1, len(hs) - 1)]
    x, y = golden_section_max(slope, a, b, h_tol, fa=ys[max(i - 1, 0)], fb=ys[min(i + 1, len(hs) - 1)])
    if not y >= ys[i]:
        x, y = hs[i], ys[i]
    return float(x), float(y)


def finite_size_scaling(
    r: float,
    n_list,
    *,
    correction: str | None = "log_over_n",
    thermo_amplitude: float | None = None,
    sector: int = 0,
    bracket=(0.9, 1.3),
) -> ScalingFit:
    """Fit the max-slope growth ``A ln N + B`` and infer nu from the amplitude ratio.

    With ``correction="log_over_n"`` a ``C ln(N)/N`` correction-to-scaling
    column is included in the regression; the plain two-parameter fit is
    always reported alongside.  ``thermo_amplitude`` defaults to
    ``ising_amplitude_fit(r).amplitude``.
    """
    if not r > 0:
        raise ValueError("finite-size scaling needs r > 0")
    ns = sorted(int(n) for n in n_list)
    if len(ns) < 4 or ns[-1] < MIN_N_SPAN * ns[0]:
        raise ValueError(f"need >= 4 chain lengths spanning a factor >= {MIN_N_SPAN}")
    if correction not in (None, "log_over_n"):
        raise ValueError(f"unknown correction {correction!r}")

    peaks = [slope_maximum(r, n, bracket, sector) for n in ns]
    h_max = [p[0] for p in peaks]
    slopes = np.array([p[1] for p in peaks])
    for n, hm in zip(ns, h_max):
        if not (0.5 < hm < 1.5):
            raise FitQualityError(f"h_max for N={n} at {hm} outside (0.5, 1.5)")
    if any(b > a + 1e-9 for a, b in zip(h_max, h_max[1:])):
        raise FitQualityError(f"h_max,N not monotone in N: {h_max}")

    nn = np.array(ns, dtype=float)
    lnn = np.log(nn)
    plain, *_ = np.linalg.lstsq(np.stack([lnn, np.ones_like(lnn)], 1), slopes, rcond=None)
    if correction is None:
        X, coef = np.stack([lnn, np.ones_like(lnn)], 1), plain
        corr_coef = None
    else:
        X = np.stack([lnn, np.ones_like(lnn), lnn / nn], 1)
        coef, *_ = np.linalg.lstsq(X, slopes, rcond=None)
        corr_coef = float(coef[2])
    resid = float(np.max(np.abs(X @ coef - slopes)))
    if thermo_amplitude is None:
        thermo_amplitude = ising_amplitude_fit(r).amplitude
    return ScalingFit(
        amplitude=float(coef[0]),
        intercept=float(coef[1]),
        nu_estimate=float(thermo_amplitude / coef[0]),
        residual=resid,
        h_max_list=tuple(zip(ns, h_max)),
        max_slopes=tuple(slopes.tolist()),
        plain_amplitude=float(plain[0]),
        plain_intercept=float(plain[1]),
        thermo_amplitude=float(thermo_amplitude),
        correction=correction,
        correction_coef=corr_coef,
    )


def _scan_point(task):
    r, h, n, sector, alpha, with_derivative, step = task
    try:
        point = ModelPoint(r, h)
        mix = None if alpha is None else SuperpositionSpec(alpha)
        dens = density(point, n, sector, mix)
        deriv = None
        if with_derivative:
            deriv = field_derivative(point, n, step, sector=sector, mix=mix).value
        return ScanRow(r, h, n, dens, deriv)
    except (ValueError, ArithmeticError) as exc:
        reason = str(exc).replace(",", ";").replace("\n", " ")
        return ScanRow(r, h, n, math.nan, None, f"error:{reason}")


def surface_scan(grid: ScanGrid, derivative: bool = False, step: float = 1e-5, map_fn=map):
    """Entanglement density (and optionally ``dE/dh``) at every grid point.

    Rows come back in r-major order.  ``map_fn`` must preserve order, e.g.
    ``Executor.map``; failing points are reported in the row status.
    """
    tasks = [(r, h, grid.n, grid.sector, grid.alpha, derivative, step) for r, h in grid.points()]
    return list(map_fn(_scan_point, tasks))
