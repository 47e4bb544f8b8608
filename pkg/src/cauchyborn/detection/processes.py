"""Outcome distributions of the sequential, parallel and curved-surface detection
processes, plus a Monte Carlo sampler for the sequential one.

Outcome matrices ``s`` have one row per flat piece (in the plan's canonical
piece order, whatever the measurement order) and one column per detector
region; ``s[k, l] = 1`` means the cell of region ``l`` inside piece ``k``
clicked.  The coarse outcome ``L`` records which regions clicked anywhere.
"""
from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from ..configspace import Empty, Exists, compatible, make_M_k, make_M_P, outcome_vectors
from ..lattice.circuit import LatticeCut
from ..lattice.state import StateVector, apply_projector, evolve, projector_diagonal
from .plan import DetectionPlan

ZERO = 1e-15


class NonCommutingError(RuntimeError):
    pass


@dataclass
class Branch:
    outcome: int
    prob: float
    state: StateVector | None

    @property
    def dead(self) -> bool:
        return self.state is None


def flat_measure(psi: StateVector, cell: int) -> list[Branch]:
    """Click/no-click measurement of one detector cell on the state's own cut.

    Returns the two post-measurement branches with normalised states; a
    branch of zero probability is kept with ``state=None``.
    """
    out = []
    for outcome, s in ((0, Empty(cell)), (1, Exists(cell))):
        proj, w = apply_projector(psi, s)
        state = StateVector(proj.basis, proj.amps / np.sqrt(w), proj.cut) if w > ZERO else None
        out.append(Branch(outcome, w, state))
    return out


def _key(s: np.ndarray) -> tuple:
    return tuple(tuple(int(v) for v in row) for row in s)


@dataclass
class OutcomeDistribution:
    r: int
    by_L: dict = field(default_factory=dict)  # tuple L -> prob
    by_s: dict | None = None  # tuple-of-tuples s -> prob
    label: str = ""
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        for L in outcome_vectors(self.r):
            self.by_L.setdefault(tuple(L), 0.0)

    def vector(self) -> np.ndarray:
        return np.array([self.by_L[tuple(L)] for L in outcome_vectors(self.r)])

    def total(self) -> float:
        return float(sum(self.by_L.values()))

    def max_abs_diff(self, other: OutcomeDistribution) -> float:
        return float(np.abs(self.vector() - other.vector()).max())

    def max_abs_diff_s(self, other: OutcomeDistribution) -> float:
        keys = set(self.by_s or {}) | set(other.by_s or {})
        return max((abs((self.by_s or {}).get(k, 0.0) - (other.by_s or {}).get(k, 0.0)) for k in keys),
                   default=0.0)

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "r": self.r,
            "by_L": [{"L": list(L), "p": p} for L, p in sorted(self.by_L.items())],
        }


def _from_s(plan: DetectionPlan, by_s: dict, label: str) -> OutcomeDistribution:
    by_L = {}
    for key, p in by_s.items():
        s = np.array(key)
        L = tuple(int(v) for v in s.any(axis=0))
        assert compatible(s, L)
        by_L[L] = by_L.get(L, 0.0) + p
    return OutcomeDistribution(plan.r, by_L, dict(by_s), label)


def _piece_outcomes(cells_row):
    """All outcome rows for one piece: regions without a cell never click."""
    free = [l for l, c in enumerate(cells_row) if c]
    for bits in itertools.product((0, 1), repeat=len(free)):
        row = np.zeros(len(cells_row), dtype=np.int8)
        row[free] = bits
        yield row


def sequential_process(plan: DetectionPlan, order=None, keep_states: bool = False) -> OutcomeDistribution:
    """Measure the pieces one after another, each on its own hyperplane.

    Within a piece the region cells are measured one at a time with
    :func:`flat_measure`; branches carry normalised states.  With
    ``keep_states`` the final state of every branch, evolved to the target
    cut, is stored in ``diagnostics["states"]`` keyed like ``by_s``.
    """
    cells = plan.cells()
    order = tuple(order) if order is not None else plan.measurement_order()
    if sorted(order) != sorted(plan.active_pieces()):
        raise ValueError("order must be a permutation of the active pieces")
    start = np.zeros(cells.shape, dtype=np.int8)
    branches = [(start, 1.0, plan.psi0)]
    for k in order:
        plane = plan.hyperplane(k)
        nxt = []
        for s, p, psi in branches:
            sub = [(s, p, evolve(plan.circuit, psi, plane))]
            for l, cell in enumerate(cells[k]):
                if not cell:
                    continue
                grown = []
                for s2, p2, phi in sub:
                    for br in flat_measure(phi, int(cell)):
                        if br.dead:
                            continue
                        s3 = s2.copy()
                        s3[k, l] = br.outcome
                        grown.append((s3, p2 * br.prob, br.state))
                sub = grown
            nxt.extend(sub)
        branches = nxt
    by_s = {}
    for s, p, _ in branches:
        by_s[_key(s)] = by_s.get(_key(s), 0.0) + p
    out = _from_s(plan, by_s, "sequential")
    if keep_states:
        out.diagnostics["states"] = {_key(s): evolve(plan.circuit, psi, plan.target) for s, _, psi in branches}
    return out


def post_measurement_ensembles(plan: DetectionPlan):
    """Fine and coarse post-measurement descriptions on the target cut.

    ``fine`` maps every outcome matrix ``s`` to ``(prob, state)`` as produced
    by the sequential process; ``coarse`` maps every ``L`` to
    ``(prob, P(M(L)) Psi / norm)``, the collapse by the curved projector.
    """
    seq = sequential_process(plan, keep_states=True)
    fine = {k: (p, seq.diagnostics["states"][k]) for k, p in seq.by_s.items()}
    psi = evolve(plan.circuit, plan.psi0, plan.target)
    coarse = {}
    for L in outcome_vectors(plan.r):
        proj, w = apply_projector(psi, make_M_P(plan.partition, L))
        coarse[tuple(L)] = (w, proj.normalized() if w > ZERO else None)
    return fine, coarse


def pulled_back_projector(plan: DetectionPlan, k: int, row, vec: np.ndarray) -> np.ndarray:
    """Apply ``U(E_k -> target) P(M_k(row)) U(target -> E_k)`` to a vector on the target cut."""
    circuit = plan.circuit
    cells = plan.cells()[k]
    plane = plan.hyperplane(k)
    psi = evolve(circuit, StateVector(plan.basis, vec, plan.target), plane)
    m = make_M_k(row, [int(c) for c in cells], scope=plan.pieces[k].mask(plan.num_sites))
    proj, _ = apply_projector(psi, m)
    return evolve(circuit, proj, plan.target).amps


def verify_pullbacks(plan: DetectionPlan, probes: int = 3, rng=None) -> dict:
    """Residuals showing that the pulled-back single-cell projectors equal the
    diagonal projectors on the target cut and commute with each other."""
    rng = rng if rng is not None else np.random.default_rng(12345)
    cells = plan.cells()
    gens = [(k, l) for k in plan.active_pieces() for l in range(plan.r) if cells[k, l]]
    dim = plan.basis.dim
    diag_err, comm_err = 0.0, 0.0
    for _ in range(probes):
        v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        v /= np.linalg.norm(v)
        images = {}
        for k, l in gens:
            qv = _pull_single(plan, k, int(cells[k, l]), v)
            direct = np.where(projector_diagonal(Exists(int(cells[k, l])), plan.basis), v, 0)
            diag_err = max(diag_err, float(np.linalg.norm(qv - direct)))
            images[(k, l)] = qv
        for a, b in itertools.combinations(gens, 2):
            ab = _pull_single(plan, a[0], int(cells[a]), images[b])
            ba = _pull_single(plan, b[0], int(cells[b]), images[a])
            comm_err = max(comm_err, float(np.linalg.norm(ab - ba)))
    return {"pullback_residual": diag_err, "commutator_residual": comm_err, "generators": len(gens)}


def _pull_single(plan, k, cell, vec):
    circuit = plan.circuit
    psi = evolve(circuit, StateVector(plan.basis, vec, plan.target), plan.hyperplane(k))
    proj, _ = apply_projector(psi, Exists(cell))
    return evolve(circuit, proj, plan.target).amps


def parallel_process(plan: DetectionPlan, tol: float = 1e-10, probes: int = 3) -> OutcomeDistribution:
    """Joint measurement on the target cut of the commuting pulled-back projectors.

    ``prob(s) = || prod_k U_k^* P(M_k(s_k)) U_k  Psi ||^2`` with ``Psi`` evolved
    to the target cut; commutativity is verified on random probes first.
    """
    diag = verify_pullbacks(plan, probes)
    if diag["commutator_residual"] > tol or diag["pullback_residual"] > tol:
        raise NonCommutingError(f"pulled-back projectors do not commute: {diag}")
    cells = plan.cells()
    psi = evolve(plan.circuit, plan.psi0, plan.target)
    nodes = [(np.zeros(cells.shape, dtype=np.int8), psi.amps)]
    for k in plan.active_pieces():
        nxt = []
        for s, vec in nodes:
            for row in _piece_outcomes(cells[k]):
                w = pulled_back_projector(plan, k, row, vec)
                if np.vdot(w, w).real <= ZERO:
                    continue
                s2 = s.copy()
                s2[k] = row
                nxt.append((s2, w))
        nodes = nxt
    by_s = {_key(s): float(np.vdot(v, v).real) for s, v in nodes}
    out = _from_s(plan, by_s, "parallel")
    out.diagnostics = diag
    return out


def curved_born(plan: DetectionPlan, cut: LatticeCut | None = None, partition=None) -> OutcomeDistribution:
    """Born rule for the detector regions on a curved cut (the plan's target by default)."""
    cut = cut or plan.target
    partition = partition or plan.partition
    psi = evolve(plan.circuit, plan.psi0, cut)
    by_L = {}
    for L in outcome_vectors(len(partition)):
        _, w = apply_projector(psi, make_M_P(partition, L))
        by_L[tuple(L)] = w
    return OutcomeDistribution(len(partition), by_L, None, "curved_born")


class SequentialSampler:
    """Monte Carlo shots of the sequential process.

    Each shot walks down the branch tree drawing every flat measurement from
    its Born probabilities; branch data are memoised by outcome prefix so a
    large number of shots costs little more than one exact expansion.
    """

    def __init__(self, plan: DetectionPlan, seed: int | None = None):
        self.plan = plan
        self.rng = np.random.default_rng(seed)
        self.cells = plan.cells()
        self.order = plan.measurement_order()
        self.steps = [(k, l, int(self.cells[k, l])) for k in self.order
                      for l in range(plan.r) if self.cells[k, l]]
        self._memo = {}

    def _branches(self, prefix: tuple, step: int, psi: StateVector):
        key = (prefix, step)
        if key not in self._memo:
            k, _, cell = self.steps[step]
            plane = self.plan.hyperplane(k)
            if psi.cut != plane:
                psi = evolve(self.plan.circuit, psi, plane)
            self._memo[key] = flat_measure(psi, cell)
        return self._memo[key]

    def shot(self) -> np.ndarray:
        s = np.zeros(self.cells.shape, dtype=np.int8)
        psi = self.plan.psi0
        prefix = ()
        for step, (k, l, _) in enumerate(self.steps):
            br = self._branches(prefix, step, psi)
            p1 = br[1].prob / (br[0].prob + br[1].prob)
            click = self.rng.random() < p1
            b = br[1] if (click and not br[1].dead) or br[0].dead else br[0]
            s[k, l] = b.outcome
            psi = b.state
            prefix = prefix + (b.outcome,)
        return s

    def sample(self, shots: int) -> Counter:
        counts = Counter()
        for _ in range(shots):
            s = self.shot()
            counts[tuple(int(v) for v in s.any(axis=0))] += 1
        return counts


def chi_square_test(counts: Counter, dist: OutcomeDistribution, min_expected: float = 5.0):
    """Pearson test of sampled coarse outcomes against exact probabilities.

    Bins with small expected counts are pooled together.  Returns
    ``(statistic, p_value, dof)``.
    """
    shots = sum(counts.values())
    keys = [tuple(L) for L in outcome_vectors(dist.r)]
    exp = np.array([dist.by_L[k] * shots for k in keys])
    obs = np.array([counts.get(k, 0) for k in keys], dtype=float)
    if np.any(obs[exp <= 1e-12 * shots] > 0):
        return float("inf"), 0.0, 0
    small = exp < min_expected
    e = list(exp[~small])
    o = list(obs[~small])
    if small.any() and exp[small].sum() > 0:
        e.append(exp[small].sum())
        o.append(obs[small].sum())
    e, o = np.array(e), np.array(o)
    e *= o.sum() / e.sum()
    if len(e) < 2:
        return 0.0, 1.0, 0
    res = stats.chisquare(o, e)
    return float(res.statistic), float(res.pvalue), len(e) - 1
