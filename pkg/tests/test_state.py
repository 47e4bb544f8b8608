import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cauchyborn.configspace import All, Everything, Exists, make_M_P, outcome_vectors, site_set
from cauchyborn.lattice import (Basis, Gate, GateCircuit, InvalidCut, LatticeCut, StateVector, apply_projector,
                                evolution_operator, evolve, factorize, greatest_valid_below)
from cauchyborn.lattice.state import (BasisError, Projector, dense_evolution_oracle, embed, local_index,
                                      local_masks, projector_diagonal, sector_numbers)

N, DEPTH = 8, 6


def circuit_with_controls(seed=0):
    c = GateCircuit.brickwork(N, DEPTH, seed)
    c = c.with_gate(Gate(2, 4, 1.0, 0.3, kind="pair"))
    return c.with_gate(Gate(1, 1, 0.4, 0.2, kind="remote", control=6, theta_on=1.3))


def cuts(depth=DEPTH, n=N):
    return st.lists(st.integers(0, depth), min_size=n, max_size=n).map(lambda p: greatest_valid_below(p, depth))


@settings(max_examples=25, deadline=None)
@given(cuts(), cuts(), st.integers(0, 5))
def test_sparse_evolution_matches_dense_oracle(a, b, seed):
    c = circuit_with_controls(seed)
    basis = Basis.full(N)
    u = evolution_operator(c, a, b, basis)
    assert np.allclose(u, dense_evolution_oracle(c, a, b), atol=1e-12)
    assert np.allclose(u.conj().T @ u, np.eye(basis.dim), atol=1e-10)


@settings(max_examples=25, deadline=None)
@given(cuts(), cuts(), cuts(), st.integers(0, 100))
def test_path_independence_and_round_trip(a, b, c_, seed):
    c = GateCircuit.brickwork(N, DEPTH, seed)
    basis = Basis.sector(N, 2)
    psi = StateVector.random(a, basis, np.random.default_rng(seed))
    direct = evolve(c, psi, b)
    via = evolve(c, evolve(c, psi, c_), b)
    assert np.linalg.norm(direct.amps - via.amps) < 1e-10
    assert abs(direct.norm() - 1) < 1e-10
    back = evolve(c, direct, a)
    assert np.linalg.norm(back.amps - psi.amps) < 1e-10
    assert np.array_equal(evolve(c, psi, a).amps, psi.amps)


def test_single_particle_transport():
    c = GateCircuit.identity(4, 1).with_gate(Gate(0, 0, math.pi / 2, 0.5))
    basis = Basis.full(4)
    psi = StateVector.basis_state(c.flat_cut(0), basis, 0b0001)
    out = evolve(c, psi, c.flat_cut(1))
    i = basis.index_of([0b0010])[0]
    assert out.amps[i] == pytest.approx(-1j * np.exp(0.5j))
    assert np.count_nonzero(np.abs(out.amps) > 1e-15) == 1


def test_vacuum_fixed_with_phase_one():
    c = GateCircuit.brickwork(10, 8, seed=3)
    vac = StateVector.basis_state(c.flat_cut(0), Basis.full(10), 0)
    out = evolve(c, vac, c.flat_cut(8))
    assert out.amps[0] == 1 and np.count_nonzero(out.amps) == 1


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 6), st.integers(0, 1000))
def test_number_conservation(k, seed):
    c = GateCircuit.brickwork(N, DEPTH, seed)
    full = Basis.full(N)
    psi = embed(StateVector.random(c.flat_cut(0), Basis.sector(N, k), np.random.default_rng(seed)), full)
    out = evolve(c, psi, c.flat_cut(DEPTH))
    assert sector_numbers(StateVector(full, np.where(np.abs(out.amps) > 1e-12, out.amps, 0), out.cut)) == {k}


def test_sector_basis_not_invariant_under_pair_gate():
    c = circuit_with_controls()
    psi = StateVector.random(c.flat_cut(0), Basis.sector(N, 2), np.random.default_rng(0))
    with pytest.raises(BasisError):
        evolve(c, psi, c.flat_cut(DEPTH))


def test_evolve_rejects_invalid_cut():
    c = GateCircuit.brickwork(N, DEPTH, 0)
    psi = StateVector.basis_state(c.flat_cut(0), Basis.full(N), 1)
    with pytest.raises(InvalidCut):
        evolve(c, psi, LatticeCut((0, 2, 2, 2, 2, 2, 2, 2)))


def test_apply_projector_examples():
    cut = LatticeCut((0, 0))
    basis = Basis.full(2)
    psi = StateVector.from_amplitudes(cut, basis, {0b10: 1 / math.sqrt(2), 0b01: 1 / math.sqrt(2)})
    out, w = apply_projector(psi, Exists(site_set([0])))
    assert w == pytest.approx(0.5)
    assert out.amps[basis.index_of([0b01])[0]] == pytest.approx(1 / math.sqrt(2))
    assert out.amps[basis.index_of([0b10])[0]] == 0
    same, w1 = apply_projector(psi, Everything())
    assert w1 == pytest.approx(1) and np.array_equal(same.amps, psi.amps)
    twice, w2 = apply_projector(out, Exists(site_set([0])))
    assert np.array_equal(twice.amps, out.amps) and w2 == pytest.approx(w)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 3), st.randoms(use_true_random=False), st.integers(0, 100))
def test_projector_weights_sum_to_one(r, rnd, seed):
    n = 10
    sites = list(range(n))
    rnd.shuffle(sites)
    part = [site_set(sites[3 * i:3 * i + 2]) for i in range(r)]
    psi = StateVector.random(LatticeCut((0,) * n), Basis.full(n), np.random.default_rng(seed))
    total = sum(apply_projector(psi, make_M_P(part, L))[1] for L in outcome_vectors(r))
    assert total == pytest.approx(1, abs=1e-12)


@given(st.integers(0, 255), st.integers(0, 255))
def test_projectors_idempotent_and_commuting(a, b):
    basis = Basis.full(8)
    p, q = Projector(Exists(a)).matrix(basis), Projector(All(b)).matrix(basis)
    assert np.array_equal(p @ p, p)
    assert np.array_equal(p @ q, q @ p)


def test_factorize_product_state():
    n = 6
    basis = Basis.full(n)
    q = 0b101101
    psi = StateVector.basis_state(LatticeCut((0,) * n), basis, q)
    a = site_set([1, 2, 3])
    view = factorize(psi, a)
    ea = np.zeros(8)
    eb = np.zeros(8)
    ea[local_index(q, view.a_sites)] = 1
    eb[local_index(q, view.b_sites)] = 1
    assert np.array_equal(view.matrix, np.outer(ea, eb))
    assert np.array_equal(view.reconstruct(basis), psi.amps)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 63), st.integers(0, 63))
def test_Pfactor2_tensor_of_restrictions(a, b):
    """P(All(B)) equals P_A(All(B & A)) (x) P_rest(All(B - A)) under the factorisation."""
    n = 6
    basis = Basis.full(n)
    direct = projector_diagonal(All(b), basis)
    view = factorize(StateVector(basis, direct.astype(complex), LatticeCut((0,) * n)), a)
    la = local_masks(view.a_sites)
    lb = local_masks(view.b_sites)
    pa = All(b & a).evaluate(la)
    pb = All(b & ~a).evaluate(lb)
    assert np.array_equal(view.matrix.real.astype(bool), np.outer(pa, pb))


def test_three_way_associativity():
    """Splitting A|B|C as (A|B)|C or A|(B|C) gives the same index map."""
    n = 6
    groups = [[0, 3], [1, 4], [2, 5]]
    q = np.arange(1 << n)
    ia, ib, ic = (local_index(q, g) for g in groups)
    ab = local_index(q, groups[0] + groups[1])
    bc = local_index(q, groups[1] + groups[2])
    left = (ab, ic)
    right = (ia, bc)
    # compose the explicit permutations: (ab -> (a, b)) and (bc -> (b, c))
    a_from_ab = ab & 0b11
    b_from_ab = ab >> 2
    b_from_bc = bc & 0b11
    c_from_bc = bc >> 2
    assert np.array_equal(a_from_ab, ia) and np.array_equal(b_from_ab, ib)
    assert np.array_equal(b_from_bc, ib) and np.array_equal(c_from_bc, ic)
    assert len(set(zip(*left))) == len(set(zip(*right))) == 1 << n


def test_state_json_roundtrip():
    psi = StateVector.random(LatticeCut((1, 1, 0, 0)), Basis.full(4), np.random.default_rng(2))
    back = StateVector.from_json(psi.to_json())
    assert np.allclose(back.amps, psi.amps) and back.cut == psi.cut


def test_basis_errors():
    with pytest.raises(BasisError):
        Basis(3, [9])
    with pytest.raises(BasisError):
        StateVector.from_amplitudes(LatticeCut((0, 0)), Basis.sector(2, 1), {0b11: 1.0})
    with pytest.raises(BasisError):
        StateVector(Basis.full(2), np.zeros(3), LatticeCut((0, 0)))
    assert list(Basis.full(3).index_of([0, 7, 8])) == [0, 7, -1]
