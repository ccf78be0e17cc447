import math
from functools import reduce

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from xyentangle import oracle as ed
from xyentangle.model import ChainSpec, ModelPoint
from xyentangle.overlap import maximize_entanglement


def kron_hamiltonian(r, h, n):
    """Textbook Pauli-string construction, used to check the bit-flip builder."""
    eye = np.eye(2)

    def site_op(op, j):
        return reduce(np.kron, [op if i == j else eye for i in range(n)])

    H = np.zeros((1 << n, 1 << n), dtype=complex)
    for j in range(n):
        nxt = (j + 1) % n
        for label, c in (("x", (1 + r) / 2), ("y", (1 - r) / 2)):
            H -= c * site_op(ed.PAULI[label], j) @ site_op(ed.PAULI[label], nxt)
        H -= h * site_op(ed.PAULI["z"], j)
    return H


@pytest.mark.parametrize("n", [2, 3, 5, 6])
@pytest.mark.parametrize("r, h", [(1.0, 0.0), (0.3, 0.7), (0.0, 1.4)])
def test_hamiltonian_matches_pauli_construction(r, h, n):
    np.testing.assert_allclose(ed.build_hamiltonian(ModelPoint(r, h), n), kron_hamiltonian(r, h, n), atol=1e-14)


def test_hamiltonian_examples():
    # both periodic bonds join the same pair, so H = -2 XX
    e = np.linalg.eigvalsh(ed.build_hamiltonian(ModelPoint(1.0, 0.0), 2))
    np.testing.assert_allclose(e, [-2, -2, 2, 2], atol=1e-14)
    H = ed.build_hamiltonian(ModelPoint(0.0, 5.0), 2)
    e, v = np.linalg.eigh(H)
    assert e[0] == pytest.approx(-10.0)
    assert abs(v[0, 0]) == pytest.approx(1.0)


@pytest.mark.parametrize("n", [3, 4, 7])
def test_hamiltonian_symmetric_and_parity_conserving(n):
    H = ed.build_hamiltonian(ModelPoint(0.6, 0.8), n)
    assert np.allclose(H, H.conj().T) and np.allclose(H.imag, 0)
    P = np.diag(ed.parity_diagonal(n))
    assert np.allclose(H @ P, P @ H)


def test_size_limits():
    with pytest.raises(ValueError):
        ed.build_hamiltonian(ModelPoint(1, 1), 13)
    with pytest.raises(ValueError):
        ed.build_hamiltonian(ModelPoint(1, 1), 1)
    with pytest.raises(ValueError):
        ed.maximize_overlap_full(ed.ghz_state(11))
    with pytest.raises(ValueError):
        ed.correlator_decomposition(ed.ghz_state(9), ed.BlochDirection(0, 0, 1))


@pytest.mark.parametrize("r, h", [(1.0, 0.0), (1.0, 3.0), (0.5, 0.5), (0.0, 0.3)])
def test_lowest_states_properties(r, h):
    n = 6
    s = ed.lowest_states(ModelPoint(r, h), n)
    H = ed.build_hamiltonian(ModelPoint(r, h), n)
    P = ed.parity_diagonal(n)
    for psi, e, par in ((s.psi0, s.e0, 1), (s.psi1, s.e1, -1)):
        assert np.vdot(psi.amplitudes, P * psi.amplitudes).real == pytest.approx(par, abs=1e-10)
        assert ed.expectation(psi, H) == pytest.approx(e, abs=1e-10)
        first = psi.amplitudes[np.flatnonzero(np.abs(psi.amplitudes) > 1e-12)[0]]
        assert first.real > 0 and abs(first.imag) < 1e-14


def test_gap_examples():
    # classical Ising at zero field: the two cat states are exactly degenerate
    s = ed.lowest_states(ModelPoint(1.0, 0.0), 4)
    assert s.e0 == pytest.approx(s.e1, abs=1e-12)
    s = ed.lowest_states(ModelPoint(1.0, 0.5), 4)
    assert 0 < abs(s.e1 - s.e0) < 0.5
    s = ed.lowest_states(ModelPoint(1.0, 3.0), 4)
    assert s.e0 < s.e1 - 1.0
    for h in (1.2, 2.0, 4.0):
        s = ed.lowest_states(ModelPoint(0.4, h), 7)
        assert s.e0 <= s.e1 + 1e-10


def test_degenerate_sector_resolved_deterministically():
    a = ed.lowest_states(ModelPoint(0.0, 0.0), 6)
    b = ed.lowest_states(ModelPoint(0.0, 0.0), 6)
    assert a.degenerate0 or a.degenerate1
    assert np.array_equal(a.psi0.amplitudes, b.psi0.amplitudes)
    # h -> 0+ limit: the degenerate state is the one the field would pick
    near = ed.lowest_states(ModelPoint(0.0, 1e-6), 6)
    assert abs(np.vdot(near.psi1.amplitudes, a.psi1.amplitudes)) == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("r, h, n", [(1.0, 0.5, 8), (0.3, 1.2, 9), (0.0, 0.4, 6), (0.7, 0.9, 5)])
def test_analytic_matches_oracle(r, h, n):
    p = ModelPoint(r, h)
    s = ed.lowest_states(p, n)
    for a, psi in ((0, s.psi0), (1, s.psi1)):
        ref, _ = ed.symmetric_overlap_max(psi)
        assert maximize_entanglement(p, ChainSpec(n, a)).lambda_max == pytest.approx(ref, abs=1e-8)


def test_product_and_ghz_normalization():
    up = np.zeros(16)
    up[0] = 1
    assert ed.maximize_overlap_full(ed.DenseState(up), starts=4).lambda_max == pytest.approx(1.0, abs=1e-12)
    for n in (2, 3, 5):
        assert ed.maximize_overlap_full(ed.ghz_state(n), starts=8).lambda_max == pytest.approx(1 / math.sqrt(2), abs=1e-9)


def test_two_bell_pairs_multiply():
    pairs = np.kron(ed.bell_state().amplitudes, ed.bell_state().amplitudes)
    assert ed.maximize_overlap_full(ed.DenseState(pairs), starts=8).lambda_max == pytest.approx(0.5, abs=1e-9)


@settings(max_examples=20, deadline=None)
@given(n=st.integers(2, 6), seed=st.integers(0, 10**6))
def test_full_search_beats_random_products(n, seed):
    rng = np.random.default_rng(seed)
    psi = ed.DenseState.normalized(rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n))
    best = ed.maximize_overlap_full(psi, starts=8, seed=seed)
    assert abs(np.vdot(best.state.vector(), psi.amplitudes)) == pytest.approx(best.lambda_max, abs=1e-9)
    for _ in range(20):
        z = rng.normal(size=(n, 2)) + 1j * rng.normal(size=(n, 2))
        phi = ed.kron_all([row / np.linalg.norm(row) for row in z])
        assert abs(np.vdot(phi, psi.amplitudes)) <= best.lambda_max + 1e-12
    assert best.spread >= 0 and best.lambda_max >= best.symmetric_start - 1e-12


def test_general_product_state_parametrization():
    g = ed.GeneralProductState((0.0, math.pi / 2), (0.0, math.pi))
    v = g.site_vectors()
    np.testing.assert_allclose(v[0], [0, 1])
    np.testing.assert_allclose(v[1], [math.sqrt(0.5), -math.sqrt(0.5)])
    with pytest.raises(ValueError):
        ed.GeneralProductState((4.0,), (0.0,))
    assert ed.GeneralProductState((1.0,), (7.0,)).phi[0] == pytest.approx(7.0 - 2 * math.pi)
    back = ed.GeneralProductState.from_site_vectors(g.site_vectors())
    assert abs(np.vdot(back.vector(), g.vector())) == pytest.approx(1.0)


def test_dense_state_validation():
    with pytest.raises(ValueError):
        ed.DenseState(np.ones(4))
    with pytest.raises(ValueError):
        ed.DenseState(np.ones(3) / math.sqrt(3))
    s = ed.DenseState.normalized(np.arange(8.0))
    assert s.n == 3 and s.norm == pytest.approx(1.0)


def test_bloch_direction():
    with pytest.raises(ValueError):
        ed.BlochDirection(1, 1, 0)
    d = ed.BlochDirection.from_angle(0.7)
    sp = d.spinor()
    # spinor expectation of sigma reproduces the direction
    vec = [np.vdot(sp, ed.PAULI[k] @ sp).real for k in "xyz"]
    np.testing.assert_allclose(vec, [d.x, d.y, d.z], atol=1e-14)
    np.testing.assert_allclose(np.abs(sp), [math.cos(0.35), math.sin(0.35)], atol=1e-14)


@settings(max_examples=15, deadline=None)
@given(n=st.integers(1, 6), seed=st.integers(0, 10**6), t=st.floats(0, math.pi), f=st.floats(0, 2 * math.pi))
def test_subset_expansion_complete(n, seed, t, f):
    rng = np.random.default_rng(seed)
    size = 1 << max(n, 1)
    psi = ed.DenseState.normalized(rng.normal(size=size) + 1j * rng.normal(size=size))
    d = ed.BlochDirection(math.sin(t) * math.cos(f), math.sin(t) * math.sin(f), math.cos(t))
    dec = ed.correlator_decomposition(psi, d)
    assert dec.partial_sums[-1] == pytest.approx(dec.direct, abs=1e-10)
    assert dec.by_size[0] == pytest.approx(2.0**-psi.n)


def test_subset_expansion_examples():
    up = np.zeros(4)
    up[0] = 1
    dec = ed.correlator_decomposition(ed.DenseState(up), ed.BlochDirection(0, 0, 1))
    np.testing.assert_allclose(dec.by_size, [0.25, 0.5, 0.25])
    assert dec.partial_sums[-1] == pytest.approx(1.0)


def test_subset_expansion_one_point_term_translation_invariant():
    # translation invariance collapses the single-site term to N <r.sigma_1> / 2^N
    p = ModelPoint(1.0, 0.5)
    psi = ed.lowest_states(p, 6).psi0
    lam, xi = ed.symmetric_overlap_max(psi)
    d = ed.BlochDirection.from_angle(xi)
    dec = ed.correlator_decomposition(psi, d)
    T = psi.tensor()
    one = np.vdot(T.ravel(), ed._apply_site(T, d.operator(), 0).ravel()).real
    assert dec.by_size[1] == pytest.approx(6 * one / 2**6, abs=1e-12)
    assert dec.direct == pytest.approx(lam**2, abs=1e-10)
