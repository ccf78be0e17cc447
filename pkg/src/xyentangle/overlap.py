"""Exact finite-N overlaps with the rotated product state, in log domain.

The overlap of the lowest state of sector ``a`` with

    |Phi(xi)> = exp(-i xi/2 sum_j Y_j) |up ... up>

is ``f_a(xi) * prod_m [cos th_m cos^2(xi/2) + sin th_m sin^2(xi/2) cot(k_m/2)]``.
Thousands of sub-unity factors underflow a float product at N ~ 1e4, so
everything is accumulated as a sum of logs with the sign carried separately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ChainSpec, ModelPoint, SpectrumData, spectrum
from .optimize import scan_then_refine

LN2 = math.log(2.0)
XI_GRID = 257
# single-sector objectives are log-concave in sin^2(xi/2), hence unimodal in xi
XI_GRID_UNIMODAL = 17
XI_TOL = 1e-10
_CHUNK = 1 << 21


@dataclass(frozen=True)
class ProductAnsatz:
    xi: float

    def __post_init__(self):
        if not (0.0 <= self.xi <= math.pi):
            raise ValueError(f"ansatz angle xi must lie in [0, pi], got {self.xi!r}")


@dataclass(frozen=True)
class SuperpositionSpec:
    """State ``cos(alpha) |Psi_0> + sin(alpha) |Psi_1>``."""

    alpha: float

    def __post_init__(self):
        if not (0.0 <= self.alpha <= math.pi / 2):
            raise ValueError(f"mixing angle alpha must lie in [0, pi/2], got {self.alpha!r}")


@dataclass(frozen=True)
class LogOverlap:
    log_abs: float
    sign: int

    def __post_init__(self):
        if (self.sign == 0) != (self.log_abs == -math.inf):
            raise ValueError("sign must be 0 exactly when log_abs is -inf")

    @property
    def value(self) -> float:
        return self.sign * math.exp(self.log_abs) if self.sign else 0.0


@dataclass(frozen=True)
class EntanglementResult:
    """Maximal overlap and derived entanglement.

    ``lambda_max`` may underflow to 0 for long chains; ``log_lambda`` keeps
    the exact value.  For the thermodynamic limit ``n``, ``lambda_max``,
    ``log_lambda`` and ``e_log2`` are ``None`` and only ``density`` is set.
    """

    lambda_max: float | None
    e_log2: float | None
    density: float
    xi_star: float
    n: int | None = None
    log_lambda: float | None = None
    sector: int | None = None
    alpha: float | None = None
    flat: bool = False
    accuracy: str = "ok"
    quad_error: float | None = None


def prefactor(n, sector, xi):
    """Unpaired-mode prefactor ``f_a(xi)``, via log|.| and sign arrays."""
    xi = np.asarray(xi, dtype=float)
    s, c = np.sin(0.5 * xi), np.cos(0.5 * xi)
    if n % 2 == 0:
        f = np.ones_like(xi) if sector == 0 else math.sqrt(n) * s * c
    else:
        f = c if sector == 0 else math.sqrt(n) * s
    with np.errstate(divide="ignore"):
        return np.log(np.abs(f)), np.sign(f)


def log_overlap_curve(sp: SpectrumData, xi):
    """``(log_abs, sign)`` arrays of the overlap at each angle in ``xi``."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    a_coef = np.cos(sp.theta)
    b_coef = np.sin(sp.theta) / np.tan(0.5 * sp.k)
    c2 = np.cos(0.5 * xi) ** 2
    s2 = np.sin(0.5 * xi) ** 2

    log_abs, sign = prefactor(sp.chain.n, sp.chain.sector, xi)
    log_abs = log_abs.copy()
    sign = sign.copy()
    m = max(len(sp), 1)
    step = max(1, _CHUNK // m)
    with np.errstate(divide="ignore"):
        for lo in range(0, len(xi), step):
            sl = slice(lo, lo + step)
            br = c2[sl, None] * a_coef + s2[sl, None] * b_coef
            log_abs[sl] += np.log(np.abs(br)).sum(axis=1)
            negatives = np.count_nonzero(br < 0, axis=1)
            zero = np.any(br == 0, axis=1)
            sign[sl] *= np.where(zero, 0.0, np.where(negatives % 2, -1.0, 1.0))
    log_abs[sign == 0] = -math.inf
    return log_abs, sign.astype(int)


def overlap(point: ModelPoint, chain: ChainSpec, ansatz: ProductAnsatz) -> LogOverlap:
    la, sg = log_overlap_curve(spectrum(point, chain), [ansatz.xi])
    return LogOverlap(float(la[0]), int(sg[0]))


def _combine(mix, la0, s0, la1, s1):
    """Log-safe ``cos(alpha) O_0 + sin(alpha) O_1`` on arrays."""
    ca, sa = math.cos(mix.alpha), math.sin(mix.alpha)
    with np.errstate(divide="ignore", invalid="ignore"):
        wa = np.where(s0 != 0, la0 + (math.log(ca) if ca > 0 else -math.inf), -math.inf)
        wb = np.where(s1 != 0, la1 + (math.log(sa) if sa > 0 else -math.inf), -math.inf)
        top = np.maximum(wa, wb)
        safe = np.where(np.isfinite(top), top, 0.0)
        val = s0 * np.exp(wa - safe) + s1 * np.exp(wb - safe)
        log_abs = np.where(val != 0, safe + np.log(np.abs(val)), -math.inf)
    return log_abs, np.sign(val).astype(int)


def overlap_superposition(
    point: ModelPoint, n: int, mix: SuperpositionSpec, ansatz: ProductAnsatz
) -> LogOverlap:
    """Overlap of ``cos(alpha) Psi_0 + sin(alpha) Psi_1`` with ``Phi(xi)``."""
    xi = [ansatz.xi]
    la0, s0 = log_overlap_curve(spectrum(point, ChainSpec(n, 0)), xi)
    la1, s1 = log_overlap_curve(spectrum(point, ChainSpec(n, 1)), xi)
    la, sg = _combine(mix, la0, s0, la1, s1)
    return LogOverlap(float(la[0]), int(sg[0]))


def objective(point: ModelPoint, chain: ChainSpec, mix: SuperpositionSpec | None = None):
    """``log |<Psi|Phi(xi)>|`` as a vectorized function of ``xi``."""
    if mix is None:
        sp = spectrum(point, chain)
        return lambda xi: log_overlap_curve(sp, xi)[0]
    sp0 = spectrum(point, ChainSpec(chain.n, 0))
    sp1 = spectrum(point, ChainSpec(chain.n, 1))

    def f(xi):
        return _combine(mix, *log_overlap_curve(sp0, xi), *log_overlap_curve(sp1, xi))[0]

    return f


def maximize_entanglement(
    point: ModelPoint,
    chain: ChainSpec,
    mix: SuperpositionSpec | None = None,
    *,
    grid: int | None = None,
    xi_tol: float = XI_TOL,
) -> EntanglementResult:
    """Maximal overlap over the symmetric ansatz, ``xi`` in ``[0, pi]``.

    With ``mix`` given the state is the superposition of both sectors and
    ``chain.sector`` is ignored.  The default coarse grid is 257 points for
    superpositions and 17 for single sectors, whose objective is unimodal.
    """
    if grid is None:
        grid = XI_GRID if mix is not None else XI_GRID_UNIMODAL
    f_vec = objective(point, chain, mix)
    best = scan_then_refine(f_vec, lambda x: float(f_vec([x])[0]), 0.0, math.pi, grid, xi_tol)
    log_lam = best.value
    if 0.0 < log_lam < 1e-12:
        log_lam = 0.0
    e_log2 = -2.0 * log_lam / LN2 + 0.0
    n = chain.n
    return EntanglementResult(
        lambda_max=math.exp(log_lam),
        e_log2=e_log2,
        density=e_log2 / n,
        xi_star=best.x,
        n=n,
        log_lambda=log_lam,
        sector=None if mix is not None else chain.sector,
        alpha=None if mix is None else mix.alpha,
        flat=best.flat,
    )
