"""Squeeze bounds between detection on a lower cut and the Born rule on the final cut.

For a lower cut ``upsilon`` and detector regions ``P_l`` on ``sigma``, the
regions seen on ``upsilon`` are the same sites.  Shrinking and growing them
through the circuit gives inner and outer site sets on ``sigma`` and hence
configuration sets ``M_hat <= M_P(L) <= M_check``.  Evolved to ``sigma`` the
detection projector on ``upsilon`` is squeezed between the projectors of
``M_hat`` and ``M_check``, and so is the Born projector of ``M_P(L)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..configspace import make_M_P, make_squeeze_sets, outcome_vectors
from ..lattice.circuit import GateCircuit, InvalidCut, LatticeCut, greatest_valid_below
from ..lattice.locality import grown_sites, shrunk_sites
from ..lattice.state import StateVector, apply_projector, evolve, projector_diagonal
from .plan import DetectionPlan
from .processes import curved_born, sequential_process


class SqueezeViolation(AssertionError):
    pass


@dataclass
class SqueezeRow:
    n: int
    L: tuple
    p_hat: float
    p_B: float
    p_P: float
    p_check: float

    @property
    def gap(self) -> float:
        return self.p_check - self.p_hat

    def violation(self) -> float:
        """Largest amount by which either chain of inequalities fails (0 if none)."""
        return max(0.0, self.p_hat - self.p_B, self.p_B - self.p_check,
                   self.p_hat - self.p_P, self.p_P - self.p_check)


def squeeze_sets(circuit: GateCircuit, partition, sigma: LatticeCut, upsilon: LatticeCut, L):
    grown = [grown_sites(circuit, p, upsilon, sigma) for p in partition]
    shrunk = [shrunk_sites(circuit, p, upsilon, sigma) for p in partition]
    return make_squeeze_sets(partition, grown, shrunk, L)


def squeeze_bounds(circuit: GateCircuit, psi0: StateVector, partition, sigma: LatticeCut,
                   upsilon: LatticeCut, n: int = 0, tol: float = 1e-10, strict: bool = True) -> list[SqueezeRow]:
    """Rows ``(P_hat, P_B, P_P, P_check)`` for every outcome vector ``L``.

    ``P_B`` is the Born probability on ``upsilon`` of the regions projected
    there; ``P_P`` the Born probability on ``sigma``.
    """
    if not upsilon <= sigma:
        raise InvalidCut("the lower cut must lie below the final cut")
    psi_s = evolve(circuit, psi0, sigma)
    psi_u = evolve(circuit, psi0, upsilon)
    rows = []
    for L in outcome_vectors(len(partition)):
        hat, check = squeeze_sets(circuit, partition, sigma, upsilon, L)
        m = make_M_P(partition, L)
        rows.append(SqueezeRow(n, tuple(L), apply_projector(psi_s, hat)[1], apply_projector(psi_u, m)[1],
                               apply_projector(psi_s, m)[1], apply_projector(psi_s, check)[1]))
    worst = max(r.violation() for r in rows)
    if strict and worst > tol:
        raise SqueezeViolation(f"squeeze chain violated by {worst:.3g}")
    return rows


def operator_squeeze_residual(circuit: GateCircuit, basis, partition, sigma: LatticeCut,
                              upsilon: LatticeCut, L, probes: int = 10, rng=None) -> float:
    """Worst violation of ``P(M_hat) <= U P(M) U^* <= P(M_check)`` on random vectors.

    The operator order is tested through quadratic forms ``<v, A v> <= <v, B v>``.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    hat, check = squeeze_sets(circuit, partition, sigma, upsilon, L)
    m = make_M_P(partition, L)
    d_hat = projector_diagonal(hat, basis)
    d_check = projector_diagonal(check, basis)
    worst = 0.0
    for _ in range(probes):
        v = rng.normal(size=basis.dim) + 1j * rng.normal(size=basis.dim)
        v /= np.linalg.norm(v)
        w = evolve(circuit, StateVector(basis, v, sigma), upsilon)
        _, q = apply_projector(w, m)
        a = float(np.vdot(v[d_hat], v[d_hat]).real)
        c = float(np.vdot(v[d_check], v[d_check]).real)
        worst = max(worst, a - q, q - c)
    return worst


def rising_sequence(circuit: GateCircuit, sigma: LatticeCut) -> list[LatticeCut]:
    """Two layers below, one layer below, and the final cut itself."""
    two = LatticeCut(tuple(max(v - 2, 0) for v in sigma.tau))
    if not circuit.is_valid(two):
        two = greatest_valid_below(two.tau, circuit.depth)
    one = greatest_valid_below([v - 1 for v in sigma.tau], circuit.depth)
    return [two, one, sigma]


@dataclass
class ConvergenceResult:
    rows: list[SqueezeRow]
    strong_residuals: list[float]
    checks: dict = field(default_factory=dict)

    def table(self) -> list[dict]:
        return [{"n": r.n, "L": "".join(str(v) for v in r.L), "P_hat": r.p_hat, "P_B": r.p_B,
                 "P_check": r.p_check, "gap": r.gap} for r in self.rows]

    @property
    def passed(self) -> bool:
        return all(c["pass"] for c in self.checks.values())


def strong_residual(circuit: GateCircuit, basis, partition, sigma: LatticeCut, upsilon: LatticeCut,
                    states: int = 20, rng=None) -> float:
    """``max || (U P_upsilon(M(L)) U^* - P_sigma(M(L))) Psi ||`` over random states and all ``L``."""
    rng = rng if rng is not None else np.random.default_rng(0)
    worst = 0.0
    for _ in range(states):
        psi = StateVector.random(sigma, basis, rng)
        down = evolve(circuit, psi, upsilon)
        for L in outcome_vectors(len(partition)):
            m = make_M_P(partition, L)
            pu, _ = apply_projector(down, m)
            lhs = evolve(circuit, pu, sigma).amps
            rhs, _ = apply_projector(psi, m)
            worst = max(worst, float(np.linalg.norm(lhs - rhs.amps)))
    return worst


def convergence_experiment(plan: DetectionPlan, cuts: list[LatticeCut] | None = None, tol: float = 1e-10,
                           strong_tol: float = 1e-8, states: int = 20, seed: int = 0) -> ConvergenceResult:
    """Squeeze rows along a rising sequence of cuts ending at the plan's target.

    Where the lower cut admits hyperplane extensions, ``P_B`` is also
    recomputed with the sequential process and compared with the Born value.
    """
    circuit, sigma = plan.circuit, plan.target
    cuts = cuts or rising_sequence(circuit, sigma)
    for a, b in zip(cuts, cuts[1:]):
        if not a <= b:
            raise InvalidCut("cuts must rise monotonically")
    if cuts[-1] != sigma:
        raise InvalidCut("the sequence must end at the plan's target cut")
    rng = np.random.default_rng(seed)
    rows, strong, seq_diff = [], [], 0.0
    hats, checks = [], []
    for n, ups in enumerate(cuts, start=1):
        r = squeeze_bounds(circuit, plan.psi0, plan.partition, sigma, ups, n=n, tol=tol, strict=False)
        rows.extend(r)
        strong.append(strong_residual(circuit, plan.basis, plan.partition, sigma, ups, states, rng))
        try:
            sub = DetectionPlan(circuit, plan.psi0, ups, plan.partition, label=f"{plan.label}/n{n}")
            seq = sequential_process(sub)
            born = curved_born(sub)
            seq_diff = max(seq_diff, seq.max_abs_diff(born),
                           max(abs(seq.by_L[x.L] - x.p_B) for x in r))
        except InvalidCut:
            pass
        hats.append([projector_diagonal(squeeze_sets(circuit, plan.partition, sigma, ups, x.L)[0], plan.basis)
                     for x in r])
        checks.append([projector_diagonal(squeeze_sets(circuit, plan.partition, sigma, ups, x.L)[1], plan.basis)
                       for x in r])
    by_L = {}
    for row in rows:
        by_L.setdefault(row.L, []).append(row)
    monotone = max(max((b.gap - a.gap for a, b in zip(rs, rs[1:])), default=0.0) for rs in by_L.values())
    final_gap = max(rs[-1].gap for rs in by_L.values())
    born_gap = max(abs(r.p_B - r.p_P) - r.gap for r in rows)
    chain = max(r.violation() for r in rows)
    sets_ok = all(
        np.all(h0 <= h1) and np.all(c1 <= c0)
        for n in range(len(cuts) - 1)
        for h0, h1, c0, c1 in zip(hats[n], hats[n + 1], checks[n], checks[n + 1]))
    res = ConvergenceResult(rows, strong)
    res.checks = {
        "gap_non_increasing": {"pass": monotone <= tol, "residual": max(monotone, 0.0)},
        "final_gap": {"pass": final_gap < tol, "residual": final_gap},
        "born_within_gap": {"pass": born_gap <= tol, "residual": max(born_gap, 0.0)},
        "squeeze_chains": {"pass": chain <= tol, "residual": chain},
        "nested_sets": {"pass": bool(sets_ok), "residual": 0.0 if sets_ok else 1.0},
        "sequential_equals_born": {"pass": seq_diff < tol, "residual": seq_diff},
        "strong_convergence": {"pass": strong[-1] < strong_tol, "residual": strong[-1]},
    }
    return res
