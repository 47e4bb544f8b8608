import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cauchyborn.configspace import (ConfigSpaceError, intersect_all, make_M_k, make_M_P, outcome_matrices,
                                    outcome_vectors, site_set)
from cauchyborn.detection import (DetectionPlan, FlatPiece, NonCommutingError, PlanError, SequentialSampler,
                                  chi_square_test, curved_born, flat_measure, flat_pieces, parallel_process,
                                  post_measurement_ensembles, random_plan, sequential_process)
from cauchyborn.lattice import Basis, GateCircuit, LatticeCut, StateVector, evolution_operator, evolve
from cauchyborn.lattice.state import projector_diagonal

PLAN_SEEDS = range(12)


def bell_plan():
    c = GateCircuit.identity(2, 0)
    basis = Basis.full(2)
    psi = StateVector.from_amplitudes(c.flat_cut(0), basis, {0b01: 1 / math.sqrt(2), 0b10: 1 / math.sqrt(2)})
    return DetectionPlan(c, psi, c.flat_cut(0), (site_set([0]),))


def born_by_s_oracle(plan):
    """Dense oracle: ||P(cap_k M_k(s_k)) Psi||^2 on the target cut for every s."""
    psi = evolve(plan.circuit, plan.psi0, plan.target)
    cells = plan.cells()
    out = {}
    for s in outcome_matrices([[int(c) for c in row] for row in cells]):
        m = intersect_all([make_M_k(row, [int(c) for c in cr]) for row, cr in zip(s, cells)])
        w = float(np.sum(np.abs(psi.amps[projector_diagonal(m, plan.basis)]) ** 2))
        if w > 1e-15:
            out[tuple(tuple(int(v) for v in row) for row in s)] = w
    return out


def test_flat_measure_examples():
    c = GateCircuit.identity(2, 0)
    vac = StateVector.basis_state(c.flat_cut(0), Basis.full(2), 0)
    no, yes = flat_measure(vac, site_set([0]))
    assert yes.prob == 0 and yes.dead and no.prob == 1
    psi = bell_plan().psi0
    no, yes = flat_measure(psi, site_set([0]))
    assert yes.prob == pytest.approx(0.5) and no.prob == pytest.approx(0.5)
    assert np.allclose(yes.state.amps, StateVector.basis_state(psi.cut, psi.basis, 0b01).amps)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 1000), st.integers(1, 255))
def test_flat_measure_random(seed, cell):
    psi = StateVector.random(LatticeCut((0,) * 8), Basis.full(8), np.random.default_rng(seed))
    branches = flat_measure(psi, cell)
    assert sum(b.prob for b in branches) == pytest.approx(1, abs=1e-12)
    q = psi.basis.masks
    p1 = float(np.sum(np.abs(psi.amps[(q & cell) != 0]) ** 2))
    assert branches[1].prob == pytest.approx(p1, abs=1e-14)
    for b in branches:
        if not b.dead:
            again = flat_measure(b.state, cell)
            assert again[b.outcome].prob == pytest.approx(1, abs=1e-12)


def test_flat_pieces_examples():
    pieces = flat_pieces(LatticeCut((1, 2, 3, 4, 4, 3, 2, 1)))
    assert pieces[0] == FlatPiece(0, 3, 1)
    assert set(pieces) == {FlatPiece(0, 3, 1), FlatPiece(3, 1, 0), FlatPiece(4, 3, -1), FlatPiece(7, 1, 0)}
    assert flat_pieces(LatticeCut((3,) * 6)) == [FlatPiece(0, 6, 0)]
    wrap = flat_pieces(LatticeCut((2, 2, 3, 3, 2, 2)))
    assert wrap[0] == FlatPiece(4, 3, 0) and 0 in wrap[0].sites(6)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_pieces_partition_sites_and_hyperplanes_agree(seed):
    plan = random_plan(seed)
    n = plan.num_sites
    covered = 0
    for k, piece in enumerate(plan.pieces):
        m = piece.mask(n)
        assert covered & m == 0
        covered |= m
        e = plan.hyperplane(k)
        assert plan.circuit.is_valid(e)
        assert all(e.tau[x] == plan.target.tau[x] for x in piece.sites(n))
    assert covered == (1 << n) - 1
    assert 2 <= len(plan.pieces) <= 4 and len(plan.active_pieces()) >= 2
    assert 10 <= n <= 14 and 6 <= plan.circuit.depth <= 10 and 1 <= plan.r <= 3


def test_two_site_example():
    plan = bell_plan()
    for dist in (sequential_process(plan), parallel_process(plan), curved_born(plan)):
        assert dist.by_L[(1,)] == pytest.approx(0.5) and dist.by_L[(0,)] == pytest.approx(0.5)


@pytest.mark.parametrize("seed", PLAN_SEEDS)
def test_triple_equality_and_normalisation(seed):
    plan = random_plan(seed)
    seq = sequential_process(plan)
    par = parallel_process(plan)
    born = curved_born(plan)
    assert seq.max_abs_diff(par) < 1e-10 and par.max_abs_diff(born) < 1e-10
    assert seq.max_abs_diff_s(par) < 1e-10
    for d in (seq, par, born):
        assert abs(d.total() - 1) < 1e-9
        assert min(d.by_L.values()) >= -1e-15
    oracle = born_by_s_oracle(plan)
    assert set(oracle) <= set(seq.by_s) | {k for k in oracle if oracle[k] < 1e-14}
    assert max(abs(seq.by_s.get(k, 0.0) - p) for k, p in oracle.items()) < 1e-10


@pytest.mark.parametrize("seed", [1, 5, 11, 13])
def test_order_invariance(seed):
    plan = random_plan(seed)
    act = plan.active_pieces()
    ref = sequential_process(plan)
    rng = np.random.default_rng(seed)
    orders = list(itertools.permutations(act))
    picks = [orders[i] for i in rng.integers(len(orders), size=5)] + [tuple(act[::-1])]
    for order in picks:
        d = sequential_process(plan, order=order)
        assert ref.max_abs_diff_s(d) < 1e-10 and ref.max_abs_diff(d) < 1e-10


def test_three_active_pieces_both_orders():
    plan = next(p for p in map(random_plan, range(50)) if len(p.active_pieces()) == 3 and p.basis.dim > 14)
    a = sequential_process(plan)
    b = sequential_process(plan, order=plan.active_pieces()[::-1])
    assert a.max_abs_diff(b) < 1e-10 and a.max_abs_diff(curved_born(plan)) < 1e-10


def test_basis_state_gives_deterministic_L():
    c = GateCircuit.identity(8, 4)
    q = 0b10000010  # sites 1 and 7
    psi = StateVector.basis_state(c.flat_cut(0), Basis.full(8), q)
    target = LatticeCut((1, 2, 3, 3, 2, 1, 1, 1))
    assert c.is_valid(target)
    plan = DetectionPlan(c, psi, target, (site_set([0, 1]), site_set([4, 5]), site_set([7])))
    born = curved_born(plan)
    assert born.by_L[(1, 0, 1)] == 1
    assert sequential_process(plan).by_L[(1, 0, 1)] == pytest.approx(1)


def test_vacuum_never_clicks():
    plan = random_plan(3)
    vac = StateVector.basis_state(plan.initial_cut, Basis.sector(plan.num_sites, 0), 0)
    p = DetectionPlan(plan.circuit, vac, plan.target, plan.partition)
    seq = sequential_process(p)
    assert seq.by_L[(0,) * p.r] == 1 and len(seq.by_s) == 1


def test_dead_branches_are_pruned():
    c = GateCircuit.identity(4, 2)
    psi = StateVector.basis_state(c.flat_cut(0), Basis.full(4), 0b0001)
    target = LatticeCut((1, 2, 2, 1))
    plan = DetectionPlan(c, psi, target, (site_set([0]), site_set([2])))
    seq = sequential_process(plan)
    assert all(p > 0 for p in seq.by_s.values())
    assert seq.by_L[(1, 0)] == 1


@pytest.mark.parametrize("seed", [0, 4, 7])
def test_disjoint_M_sets_sum(seed):
    """Sum over s compatible with L of prob(s) equals ||P(M(L)) Psi||^2, and the
    compatibility sets for distinct s are disjoint."""
    plan = random_plan(seed)
    par = parallel_process(plan)
    cells = plan.cells()
    diags = {}
    for s in outcome_matrices([[int(c) for c in row] for row in cells]):
        m = intersect_all([make_M_k(row, [int(c) for c in cr]) for row, cr in zip(s, cells)])
        diags[tuple(map(tuple, s))] = projector_diagonal(m, plan.basis)
    stack = np.array(list(diags.values()))
    assert np.all(stack.sum(axis=0) == 1)
    psi = evolve(plan.circuit, plan.psi0, plan.target)
    for L in outcome_vectors(plan.r):
        total = sum(p for s, p in par.by_s.items() if tuple(int(v) for v in np.array(s).any(axis=0)) == tuple(L))
        w = float(np.sum(np.abs(psi.amps[projector_diagonal(make_M_P(plan.partition, L), plan.basis)]) ** 2))
        assert total == pytest.approx(w, abs=1e-12)


@pytest.mark.parametrize("seed", [1, 6, 11])
def test_collapse_consistency(seed):
    """Condition on the first piece's outcome, restart from the collapsed state
    and re-measure: the conditional distribution of the full run comes back."""
    plan = random_plan(seed)
    order = plan.measurement_order()
    k0 = order[0]
    joint = sequential_process(plan)
    cells = plan.cells()
    plane = plan.hyperplane(k0)
    on_plane = evolve(plan.circuit, plan.psi0, plane)
    for row in outcome_matrices([[int(c) for c in cells[k0]]]):
        m = make_M_k(row[0], [int(c) for c in cells[k0]])
        keep = projector_diagonal(m, plan.basis)
        w = float(np.sum(np.abs(on_plane.amps[keep]) ** 2))
        if w < 1e-12:
            continue
        collapsed = StateVector(plan.basis, np.where(keep, on_plane.amps, 0) / math.sqrt(w), plane)
        sub = DetectionPlan(plan.circuit, collapsed, plan.target, plan.partition, order=order)
        cond = sequential_process(sub)
        for s, p in joint.by_s.items():
            want = p / w if tuple(s[k0]) == tuple(int(v) for v in row[0]) else 0.0
            assert cond.by_s.get(s, 0.0) == pytest.approx(want, abs=1e-10)


@pytest.mark.parametrize("seed", [0, 2, 9])
def test_pulled_back_projectors_as_matrices(seed):
    """U(E_k -> target) P(M_k(s_k)) U(target -> E_k) equals the diagonal projector on the target."""
    plan = random_plan(seed)
    cells = plan.cells()
    for k in plan.active_pieces():
        e = plan.hyperplane(k)
        u = evolution_operator(plan.circuit, e, plan.target, plan.basis)
        for row in outcome_matrices([[int(c) for c in cells[k]]]):
            m = make_M_k(row[0], [int(c) for c in cells[k]])
            p = np.diag(projector_diagonal(m, plan.basis).astype(complex))
            assert np.abs(u @ p @ u.conj().T - p).max() < 1e-10


def test_wrong_hyperplane_is_detected():
    plan = random_plan(4)
    k = plan.active_pieces()[0]
    plan._hyper[k] = plan.circuit.flat_cut(0)
    with pytest.raises(NonCommutingError):
        parallel_process(plan)


@pytest.mark.parametrize("seed", [1, 5])
def test_post_measurement_ensembles(seed):
    plan = random_plan(seed)
    fine, coarse = post_measurement_ensembles(plan)
    for L in outcome_vectors(plan.r):
        w, state = coarse[tuple(L)]
        parts = [(p, st) for s, (p, st) in fine.items() if tuple(int(v) for v in np.array(s).any(axis=0)) == tuple(L)]
        assert sum(p for p, _ in parts) == pytest.approx(w, abs=1e-12)
        if state is None:
            continue
        # sum_s sqrt(p_s) psi_s reproduces P(M(L)) Psi
        acc = sum(math.sqrt(p) * st.amps for p, st in parts)
        assert np.linalg.norm(acc - math.sqrt(w) * state.amps) < 1e-10


def test_plan_validation():
    plan = random_plan(0)
    with pytest.raises(ConfigSpaceError):
        DetectionPlan(plan.circuit, plan.psi0, plan.target, (0b11, 0b110))
    with pytest.raises(PlanError):
        DetectionPlan(plan.circuit, plan.psi0, plan.target, (0,))
    with pytest.raises(PlanError):
        DetectionPlan(plan.circuit, plan.psi0, plan.target, plan.partition, order=(0, 0))
    data = plan.to_json()
    assert data["target_cut"] == list(plan.target.tau) and len(data["pieces"]) == len(plan.pieces)
    assert random_plan(0).to_json() == data


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_monte_carlo_matches_exact(seed):
    plan = random_plan(seed)
    counts = SequentialSampler(plan, seed=100 + seed).sample(10000)
    _, p, _ = chi_square_test(counts, curved_born(plan))
    assert p > 1e-3


def test_chi_square_rejects_wrong_distribution():
    plan = random_plan(1)
    counts = SequentialSampler(plan, seed=0).sample(10000)
    wrong = curved_born(plan)
    keys = sorted(wrong.by_L, key=wrong.by_L.get)
    wrong.by_L[keys[-1]] -= 0.1
    wrong.by_L[keys[-2]] += 0.1
    _, p, _ = chi_square_test(counts, wrong)
    assert p < 1e-6
