"""Model parameters, parity sectors, wavevector grids and Bogoliubov angles.

The chain is

    H = -sum_j [ (1+r)/2 X_j X_{j+1} + (1-r)/2 Y_j Y_{j+1} + h Z_j ]

with periodic boundary conditions.  Sector ``a = 0`` is the even
(``prod Z = +1``) sector, whose lowest state is Psi_0; ``a = 1`` is the odd
sector holding Psi_1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# h - cos k == 0 (with r sin k == 0) counts as a degenerate mode below this
DEGENERATE_TOL = 1e-14


@dataclass(frozen=True)
class ModelPoint:
    """A point ``(r, h)`` of the XY phase diagram."""

    r: float
    h: float

    def __post_init__(self):
        r, h = float(self.r), float(self.h)
        if not (math.isfinite(r) and 0.0 <= r <= 1.0):
            raise ValueError(f"anisotropy r must lie in [0, 1], got {self.r!r}")
        if not (math.isfinite(h) and h >= 0.0):
            raise ValueError(f"field h must be finite and >= 0, got {self.h!r}")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "h", h)

    def with_h(self, h: float) -> "ModelPoint":
        return ModelPoint(self.r, h)


@dataclass(frozen=True)
class ChainSpec:
    """Chain length ``n`` and parity sector ``sector`` (0 or 1)."""

    n: int
    sector: int = 0

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 2:
            raise ValueError(f"chain length must be an integer >= 2, got {self.n!r}")
        if self.sector not in (0, 1) or isinstance(self.sector, bool):
            raise ValueError(f"sector must be 0 or 1, got {self.sector!r}")
        object.__setattr__(self, "n", int(self.n))


@dataclass(frozen=True)
class SpectrumData:
    """Per-mode wavevectors and Bogoliubov angles for one (point, chain) pair.

    ``degenerate`` marks modes where ``r sin k`` and ``h - cos k`` both vanish
    (only possible at ``r = 0``); their angle is pinned to 0.
    """

    point: ModelPoint
    chain: ChainSpec
    k: np.ndarray
    theta: np.ndarray
    degenerate: np.ndarray = field(repr=False)

    def __post_init__(self):
        for name in ("k", "theta", "degenerate"):
            getattr(self, name).setflags(write=False)

    @property
    def modes(self):
        return list(zip(self.k.tolist(), self.theta.tolist()))

    def __len__(self):
        return len(self.k)


def wavevectors(chain: ChainSpec) -> np.ndarray:
    """Paired-mode wavevectors entering the overlap product.

    The even sector uses half-odd-integer momenta ``2 pi (m + 1/2) / N`` for
    ``m = 0, 1, ...``; the odd sector uses integer momenta ``2 pi m / N`` for
    ``m = 1, 2, ...``.  Only ``0 < k < pi`` is kept: the unpaired ``k = 0`` and
    ``k = pi`` modes are carried by the prefactor of the overlap instead.
    """
    n, a = chain.n, chain.sector
    # integer arithmetic on 2*(m + (1-a)/2) avoids float error at k = pi
    twice = np.arange(2 * a + (1 - a), n, 2)
    return np.pi * twice / n


def mode_count(chain: ChainSpec) -> int:
    n, a = chain.n, chain.sector
    return n // 2 if a == 0 else (n - 1) // 2


def _field_offset(h, k):
    # h - cos k without cancellation near k = 0, h = 1
    return (h - 1.0) + 2.0 * np.sin(0.5 * k) ** 2


def bogoliubov_angle(point: ModelPoint, k):
    """Bogoliubov angle with ``tan 2 theta = r sin k / (h - cos k)``.

    Uses ``theta = atan2(r sin k, h - cos k) / 2`` so ``theta`` lies in
    ``[0, pi/2]`` for ``k`` in ``(0, pi)``. Works elementwise on arrays.
    """
    k = np.asarray(k, dtype=float)
    theta = 0.5 * np.arctan2(point.r * np.sin(k), _field_offset(point.h, k))
    return theta if theta.ndim else float(theta)


def spectrum(point: ModelPoint, chain: ChainSpec) -> SpectrumData:
    k = wavevectors(chain)
    y = point.r * np.sin(k)
    x = _field_offset(point.h, k)
    degenerate = (np.abs(y) <= DEGENERATE_TOL) & (np.abs(x) <= DEGENERATE_TOL)
    theta = np.where(degenerate, 0.0, 0.5 * np.arctan2(y, x))
    return SpectrumData(point, chain, k, theta, degenerate)


def phase_of(point: ModelPoint) -> str:
    """Phase label: ``"O"`` oscillatory, ``"F"`` ferromagnetic, ``"P"`` paramagnetic.

    ``h = 1`` counts as ordered and the disorder arc ``r**2 + h**2 = 1`` as
    ``"F"``.  The isotropic line ``r = 0, h <= 1`` is reported as ``"XX"``.
    """
    r, h = point.r, point.h
    if h > 1.0:
        return "P"
    if r == 0.0:
        return "XX"
    return "O" if r * r + h * h < 1.0 else "F"
