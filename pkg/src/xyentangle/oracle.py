"""Brute-force ground truth for short chains.

Dense states live in the Z product basis with site 1 as the most significant
bit and bit value 0 meaning spin up (Z = +1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.optimize import minimize_scalar

from .model import ModelPoint

MAX_N_DENSE = 12
MAX_N_FULL = 10
MAX_N_SUBSETS = 8
DEGENERACY_TOL = 1e-9

PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True)
class DenseState:
    amplitudes: np.ndarray

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex).ravel()
        n = amp.size.bit_length() - 1
        if amp.size != 1 << n or n < 1:
            raise ValueError("state length must be a power of two >= 2")
        if abs(np.linalg.norm(amp) - 1.0) > 1e-12:
            raise ValueError(f"state is not normalized (norm {np.linalg.norm(amp)!r})")
        amp.setflags(write=False)
        object.__setattr__(self, "amplitudes", amp)

    @property
    def n(self) -> int:
        return self.amplitudes.size.bit_length() - 1

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    @classmethod
    def normalized(cls, amplitudes) -> "DenseState":
        amp = np.asarray(amplitudes, dtype=complex)
        return cls(amp / np.linalg.norm(amp))

    def tensor(self):
        return self.amplitudes.reshape((2,) * self.n)


@dataclass(frozen=True)
class GeneralProductState:
    """Per-site ``sin(xi_i/2)|up> + exp(i phi_i) cos(xi_i/2)|down>``."""

    xi: tuple
    phi: tuple

    def __post_init__(self):
        xi = tuple(float(v) for v in self.xi)
        phi = tuple(float(v) % (2 * math.pi) for v in self.phi)
        if len(xi) != len(phi) or not xi:
            raise ValueError("xi and phi need one entry per site")
        if any(not (0.0 <= v <= math.pi) for v in xi):
            raise ValueError("polar angles must lie in [0, pi]")
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "phi", phi)

    @classmethod
    def from_site_vectors(cls, vectors) -> "GeneralProductState":
        xi, phi = [], []
        for v in vectors:
            up, down = v
            xi.append(2.0 * math.atan2(abs(up), abs(down)))
            phi.append(np.angle(down) - np.angle(up) if abs(up) > 0 and abs(down) > 0 else 0.0)
        return cls(tuple(xi), tuple(phi))

    def site_vectors(self):
        return [np.array([math.sin(x / 2), np.exp(1j * p) * math.cos(x / 2)]) for x, p in zip(self.xi, self.phi)]

    def vector(self) -> np.ndarray:
        return kron_all(self.site_vectors())


@dataclass(frozen=True)
class BlochDirection:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if abs(math.sqrt(self.x**2 + self.y**2 + self.z**2) - 1.0) > 1e-12:
            raise ValueError("Bloch direction must be a unit vector")

    @classmethod
    def from_angle(cls, xi: float) -> "BlochDirection":
        """Direction ``(sin xi, 0, cos xi)`` of the rotated product state Phi(xi)."""
        return cls(math.sin(xi), 0.0, math.cos(xi))

    def operator(self) -> np.ndarray:
        return self.x * PAULI["x"] + self.y * PAULI["y"] + self.z * PAULI["z"]

    def spinor(self) -> np.ndarray:
        theta = math.atan2(math.hypot(self.x, self.y), self.z)
        phi = math.atan2(self.y, self.x)
        return np.array([math.cos(theta / 2), np.exp(1j * phi) * math.sin(theta / 2)])


@dataclass(frozen=True)
class LowestStates:
    psi0: DenseState
    psi1: DenseState
    e0: float
    e1: float
    degenerate0: bool = False
    degenerate1: bool = False


@dataclass(frozen=True)
class FullMaximum:
    lambda_max: float
    state: GeneralProductState
    spread: float
    symmetric_start: float


@dataclass(frozen=True)
class Decomposition:
    """Subset expansion of ``|<Phi(r)|Psi>|^2`` grouped by subset size."""

    by_size: tuple
    partial_sums: tuple
    direct: float


def kron_all(vectors) -> np.ndarray:
    out = np.ones(1, dtype=complex)
    for v in vectors:
        out = (out[:, None] * v[None, :]).ravel()
    return out


def _bits(n):
    idx = np.arange(1 << n)
    # column j holds the bit of site j (site 0 = most significant)
    return (idx[:, None] >> (n - 1 - np.arange(n))) & 1


def parity_diagonal(n: int) -> np.ndarray:
    """Diagonal of ``prod_j Z_j``."""
    return 1 - 2 * (_bits(n).sum(axis=1) % 2)


def magnetization_diagonal(n: int) -> np.ndarray:
    return (1 - 2 * _bits(n)).sum(axis=1).astype(float)


def build_hamiltonian(point: ModelPoint, n: int) -> np.ndarray:
    """Dense real-symmetric XY Hamiltonian with periodic boundaries."""
    if not (2 <= n <= MAX_N_DENSE):
        raise ValueError(f"dense Hamiltonian needs 2 <= N <= {MAX_N_DENSE}, got {n}")
    dim = 1 << n
    bits = _bits(n)
    idx = np.arange(dim)
    H = np.zeros((dim, dim))
    H[idx, idx] = -point.h * magnetization_diagonal(n)
    for j in range(n):
        k = (j + 1) % n
        mask = (1 << (n - 1 - j)) | (1 << (n - 1 - k))
        # XX+YY hops antiparallel pairs with weight 1, XX-YY flips parallel pairs with weight r
        amp = np.where(bits[:, j] != bits[:, k], 1.0, point.r)
        np.add.at(H, (idx ^ mask, idx), -amp)
    return H


def _fix_phase(v):
    i = int(np.flatnonzero(np.abs(v) > 1e-12)[0])
    return v * (abs(v[i]) / v[i])


def _lowest_in_block(H, idx, field_op):
    w, v = np.linalg.eigh(H[np.ix_(idx, idx)])
    deg = np.flatnonzero(w - w[0] <= DEGENERACY_TOL * max(1.0, abs(w[0])))
    vec = v[:, 0]
    if deg.size > 1:
        # resolve as the h -> h+ limit: lowest of dH/dh inside the degenerate space
        sub = v[:, deg]
        ww, vv = np.linalg.eigh(sub.T @ (field_op[idx][:, None] * sub))
        vec = sub @ vv[:, 0]
    return float(w[0]), vec, deg.size > 1


def lowest_states(point: ModelPoint, n: int) -> LowestStates:
    """Lowest eigenstates of the even (Psi_0) and odd (Psi_1) parity sectors.

    Each vector is phased so its first non-zero amplitude is real positive.
    """
    H = build_hamiltonian(point, n)
    parity = parity_diagonal(n)
    field_op = -magnetization_diagonal(n)
    out = []
    for p in (1, -1):
        idx = np.flatnonzero(parity == p)
        e, vec, deg = _lowest_in_block(H, idx, field_op)
        full = np.zeros(1 << n, dtype=complex)
        full[idx] = vec
        out.append((e, DenseState(_fix_phase(full / np.linalg.norm(full))), deg))
    (e0, s0, d0), (e1, s1, d1) = out
    return LowestStates(s0, s1, e0, e1, d0, d1)


def symmetric_product(xi: float, n: int) -> np.ndarray:
    """``exp(-i xi/2 sum_j Y_j) |up ... up>`` as a dense vector."""
    return kron_all([np.array([math.cos(xi / 2), math.sin(xi / 2)], dtype=complex)] * n)


def symmetric_overlap_max(state: DenseState, grid: int = 721):
    """``(max_xi |<Phi(xi)|Psi>|, xi*)`` over ``xi`` in ``[0, pi]`` by brute force."""
    n = state.n
    amp = state.amplitudes

    def neg(xi):
        return -abs(np.vdot(symmetric_product(xi, n), amp))

    xs = np.linspace(0.0, math.pi, grid)
    vals = np.array([neg(x) for x in xs])
    i = int(np.argmin(vals))
    lo, hi = xs[max(i - 1, 0)], xs[min(i + 1, grid - 1)]
    res = minimize_scalar(neg, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    if res.fun < vals[i]:
        return float(-res.fun), float(res.x)
    return float(-vals[i]), float(xs[i])


def _environment(T, sites, i):
    n = T.ndim
    rest = kron_all([np.conj(sites[j]) for j in range(n) if j != i])
    return np.moveaxis(T, i, 0).reshape(2, -1) @ rest


def _sweep_until_converged(T, sites, tol, max_sweeps):
    n = T.ndim
    value = abs(np.vdot(kron_all(sites), T.ravel()))
    for _ in range(max_sweeps):
        for i in range(n):
            v = _environment(T, sites, i)
            nv = np.linalg.norm(v)
            if nv > 0:
                sites[i] = v / nv
        new = abs(np.vdot(kron_all(sites), T.ravel()))
        if new - value < tol:
            return max(new, value), sites
        value = new
    return value, sites


def maximize_overlap_full(
    state: DenseState, starts: int = 32, seed: int = 0, tol: float = 1e-12, max_sweeps: int = 10000
) -> FullMaximum:
    """Maximal overlap over all product states by alternating single-site updates.

    Each update replaces one site by its normalized environment vector, the
    exact optimum with the others held fixed.  Runs from the best symmetric
    product state plus ``starts`` random product states.
    """
    n = state.n
    if n > MAX_N_FULL:
        raise ValueError(f"full product-state search limited to N <= {MAX_N_FULL}")
    T = state.tensor()
    rng = np.random.default_rng(seed)
    sym_val, sym_xi = symmetric_overlap_max(state)
    inits = [[np.array([math.cos(sym_xi / 2), math.sin(sym_xi / 2)], dtype=complex) for _ in range(n)]]
    for _ in range(starts):
        z = rng.normal(size=(n, 2)) + 1j * rng.normal(size=(n, 2))
        inits.append([row / np.linalg.norm(row) for row in z])
    results = [_sweep_until_converged(T, sites, tol, max_sweeps) for sites in inits]
    values = [v for v, _ in results]
    best = int(np.argmax(values))
    return FullMaximum(
        lambda_max=float(values[best]),
        state=GeneralProductState.from_site_vectors(results[best][1]),
        spread=float(max(values) - min(values)),
        symmetric_start=sym_val,
    )


def _apply_site(T, op, j):
    return np.moveaxis(np.tensordot(op, T, axes=([1], [j])), 0, j)


def correlator_decomposition(state: DenseState, direction: BlochDirection) -> Decomposition:
    """Expand ``<Psi| prod_j (1 + r.sigma_j)/2 |Psi>`` over site subsets.

    ``by_size[s]`` is ``2^-N sum_{|S|=s} <prod_{j in S} r.sigma_j>``;
    ``partial_sums`` accumulates it, and its last entry equals ``direct``,
    the squared overlap with the product state pointing along ``direction``.
    """
    n = state.n
    if n > MAX_N_SUBSETS:
        raise ValueError(f"subset expansion limited to N <= {MAX_N_SUBSETS}")
    T = state.tensor()
    op = direction.operator()
    scale = 2.0**-n
    by_size = []
    for size in range(n + 1):
        acc = 0.0
        for subset in combinations(range(n), size):
            X = T
            for j in subset:
                X = _apply_site(X, op, j)
            acc += np.vdot(T.ravel(), X.ravel()).real
        by_size.append(scale * acc)
    direct = abs(np.vdot(kron_all([direction.spinor()] * n), state.amplitudes)) ** 2
    return Decomposition(tuple(by_size), tuple(np.cumsum(by_size).tolist()), float(direct))


def ghz_state(n: int) -> DenseState:
    amp = np.zeros(1 << n)
    amp[0] = amp[-1] = 1.0
    return DenseState.normalized(amp)


def bell_state() -> DenseState:
    return ghz_state(2)


def expectation(state: DenseState, H: np.ndarray) -> float:
    return float(np.vdot(state.amplitudes, H @ state.amplitudes).real)
