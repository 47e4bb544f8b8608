"""Causal structure of a brickwork circuit and the two locality checks.

The discrete causal relation between the sites of two cuts comes from
tracking supports through the gate sequence that connects them: each gate
merges the source sets reaching its two sites.  Growing a site set ``A``
gives every target site reached from ``A``; shrinking gives every target
site reached only from ``A``.

Propagation locality (PL): states supported on configurations inside ``A``
evolve into states supported inside the grown set.  Interaction locality
(IL): if two cuts agree on the sites of ``A``, the evolution between them
is the identity on ``A`` tensored with a unitary on the rest.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..configspace import All, full_set, sites_of
from .circuit import GateCircuit, LatticeCut
from .state import Basis, StateVector, evolve, evolve_block, local_masks, projector_diagonal


class PreconditionError(ValueError):
    pass


def lightcone_relation(circuit: GateCircuit, source: LatticeCut, target: LatticeCut) -> np.ndarray:
    """Boolean matrix ``R[x, y]``: source site ``x`` can influence target site ``y``."""
    n = circuit.num_sites
    undo, do = circuit.gates_between(source, target)
    reach = np.eye(n, dtype=bool)  # column y: source sites reaching y
    for t, b in list(undo) + list(do):
        i, j = circuit.sites(b)
        merged = reach[:, i] | reach[:, j]
        reach[:, i] = merged
        reach[:, j] = merged
    return reach


def grown_sites(circuit: GateCircuit, a: int, source: LatticeCut, target: LatticeCut) -> int:
    rel = lightcone_relation(circuit, source, target)
    rows = sites_of(a)
    if not rows:
        return 0
    hit = rel[rows].any(axis=0)
    return sum(1 << int(y) for y in np.flatnonzero(hit))


def shrunk_sites(circuit: GateCircuit, a: int, source: LatticeCut, target: LatticeCut) -> int:
    rel = lightcone_relation(circuit, source, target)
    outside = [x for x in range(circuit.num_sites) if not (a >> x) & 1]
    if not outside:
        return full_set(circuit.num_sites)
    hit = rel[outside].any(axis=0)
    return sum(1 << int(y) for y in np.flatnonzero(~hit))


@dataclass
class PLReport:
    passed: bool
    max_leakage: float
    grown: int
    columns_checked: int
    random_trials: int


def check_PL(circuit: GateCircuit, a: int, source: LatticeCut, target: LatticeCut,
             basis: Basis | None = None, trials: int = 10, rng=None, tol: float = 1e-10) -> PLReport:
    """Leakage of ``U P(All(A))`` outside ``P(All(Gr A))``.

    Every basis configuration inside ``A`` is evolved (this spans the range
    of the projector), followed by random superpositions of them.
    """
    basis = basis or Basis.full(circuit.num_sites)
    rng = rng if rng is not None else np.random.default_rng(0)
    grown = grown_sites(circuit, a, source, target)
    inside = projector_diagonal(All(a), basis)
    keep = projector_diagonal(All(grown), basis)
    cols = np.flatnonzero(inside)
    block = np.zeros((basis.dim, len(cols)), dtype=complex)
    block[cols, np.arange(len(cols))] = 1
    if trials:
        mix = rng.normal(size=(len(cols), trials)) + 1j * rng.normal(size=(len(cols), trials))
        mix /= np.linalg.norm(mix, axis=0)
        rand = np.zeros((basis.dim, trials), dtype=complex)
        rand[cols] = mix
        block = np.concatenate([block, rand], axis=1)
    out = evolve_block(circuit, source, target, basis, block)
    leak = np.linalg.norm(out[~keep], axis=0)
    worst = float(leak.max()) if leak.size else 0.0
    return PLReport(bool(worst < tol), worst, grown, len(cols), trials)


@dataclass
class ILReport:
    passed: bool
    factorization_residual: float
    commutation_residual: float
    unitarity_residual: float
    probes: int
    details: dict = field(default_factory=dict)


def _split(circuit, a):
    n = circuit.num_sites
    a_sites = sites_of(a)
    b_sites = [x for x in range(n) if x not in a_sites]
    return a_sites, b_sites, local_masks(a_sites), local_masks(b_sites)


def _check_agreement(a: int, source: LatticeCut, target: LatticeCut):
    bad = [x for x in sites_of(a) if source.tau[x] != target.tau[x]]
    if bad:
        raise PreconditionError(f"cuts differ on sites {bad} of A")


def check_IL(circuit: GateCircuit, a: int, source: LatticeCut, target: LatticeCut,
             probes: int = 4, rng=None, tol: float = 1e-10) -> ILReport:
    """Test ``U = 1_A (x) V`` for the evolution between cuts that agree on ``A``.

    For random states ``phi`` of the complement and every configuration
    ``e_a`` of ``A`` the image of ``e_a (x) phi`` must equal ``e_a (x) V phi``
    with one common ``V``.  A random unitary ``X`` on ``A`` must commute with
    the evolution.
    """
    _check_agreement(a, source, target)
    rng = rng if rng is not None else np.random.default_rng(0)
    basis = Basis.full(circuit.num_sites)
    a_sites, b_sites, ma, mb = _split(circuit, a)
    na, nb = len(ma), len(mb)
    # full-space index of e_a (x) e_b is ma[a] | mb[b] since the basis is the full range
    index = ma[:, None] | mb[None, :]
    fact, unit = 0.0, 0.0
    for _ in range(probes):
        phi = rng.normal(size=nb) + 1j * rng.normal(size=nb)
        phi /= np.linalg.norm(phi)
        block = np.zeros((basis.dim, na), dtype=complex)
        for k in range(na):
            block[index[k], k] = phi
        out = evolve_block(circuit, source, target, basis, block)
        ref = out[index[0], 0]
        unit = max(unit, float(abs(np.linalg.norm(ref) - 1)))
        for k in range(na):
            img = out[:, k][index]
            off = np.delete(img, k, axis=0)
            fact = max(fact, float(np.abs(off).max()) if off.size else 0.0,
                       float(np.abs(img[k] - ref).max()))
    # commutation with a random unitary acting on A
    q, _ = np.linalg.qr(rng.normal(size=(na, na)) + 1j * rng.normal(size=(na, na)))
    comm = 0.0
    for _ in range(probes):
        psi = StateVector.random(source, basis, rng)
        x_psi = _apply_local(q, psi.amps, index)
        lhs = evolve(circuit, StateVector(basis, x_psi, source), target).amps
        rhs = _apply_local(q, evolve(circuit, psi, target).amps, index)
        comm = max(comm, float(np.linalg.norm(lhs - rhs)))
    passed = bool(fact < tol and comm < tol and unit < tol)
    return ILReport(passed, fact, comm, unit, probes, {"A": a_sites})


def _apply_local(x, amps, index):
    """Apply ``x (x) 1`` to a full-space vector using the product index table."""
    mat = amps[index]
    out = np.empty_like(amps)
    out[index] = x @ mat
    return out


def extract_V(circuit: GateCircuit, a: int, source: LatticeCut, target: LatticeCut) -> np.ndarray:
    """Dense factor ``V`` on the complement of ``A``, read off from ``e_0 (x) e_b`` columns."""
    _check_agreement(a, source, target)
    basis = Basis.full(circuit.num_sites)
    _, _, ma, mb = _split(circuit, a)
    if len(mb) > 1 << 12:
        raise ValueError("complement too large for a dense factor")
    index = ma[:, None] | mb[None, :]
    block = np.zeros((basis.dim, len(mb)), dtype=complex)
    block[index[0], np.arange(len(mb))] = 1
    out = evolve_block(circuit, source, target, basis, block)
    return out[index[0]]
