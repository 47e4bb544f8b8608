"""Detection plans: a state, a piecewise-flat target cut and detector regions.

A lattice cut splits into flat pieces, maximal cyclic runs of sites over
which the slope ``tau(x+1) - tau(x)`` is constant.  Site ``x`` belongs to
the run containing the step from ``x`` to ``x + 1``.  Each piece extends to
a full-width sloped cut (its hyperplane) that agrees with the target on the
piece; measurements of the detector cells inside the piece can be made
there.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..configspace import ConfigSpaceError, site_set, sites_of
from ..lattice.circuit import GateCircuit, InvalidCut, LatticeCut, greatest_valid_below
from ..lattice.state import Basis, StateVector


class PlanError(ValueError):
    pass


@dataclass(frozen=True)
class FlatPiece:
    start: int
    length: int
    slope: int

    def sites(self, num_sites: int) -> list[int]:
        return [(self.start + j) % num_sites for j in range(self.length)]

    def mask(self, num_sites: int) -> int:
        return site_set(self.sites(num_sites))


def flat_pieces(cut: LatticeCut) -> list[FlatPiece]:
    """Flat pieces in order of their first site (the one containing site 0 first)."""
    tau = cut.array()
    n = len(tau)
    steps = np.roll(tau, -1) - tau
    if np.all(steps == steps[0]):
        return [FlatPiece(0, n, int(steps[0]))]
    # start the scan just after a slope change so no run wraps past the scan origin
    origin = next(x for x in range(n) if steps[x] != steps[x - 1])
    pieces = []
    j = 0
    while j < n:
        x = (origin + j) % n
        k = j
        while k + 1 < n and steps[(origin + k + 1) % n] == steps[x]:
            k += 1
        pieces.append(FlatPiece(x, k - j + 1, int(steps[x])))
        j = k + 1
    pieces.sort(key=lambda p: -1 if 0 in p.sites(n) else p.start)
    return pieces


def hyperplane_extension(cut: LatticeCut, piece: FlatPiece, depth: int) -> LatticeCut:
    """Largest valid cut below the piece's slope line extended across the chain.

    The line is continued from the piece's low end so the wrap-around jump
    sits at the far side of the ring.  Raises when the result does not agree
    with ``cut`` on the piece (pieces longer than about half the ring).
    """
    tau = cut.tau
    n = len(tau)
    profile = np.empty(n, dtype=np.int64)
    if piece.slope >= 0:
        base = piece.start
        for j in range(n):
            profile[(base + j) % n] = tau[base] + piece.slope * j
    else:
        end = (piece.start + piece.length - 1) % n
        for j in range(n):
            profile[(end - j) % n] = tau[end] - piece.slope * j
    ext = greatest_valid_below(profile, depth)
    bad = [x for x in piece.sites(n) if ext.tau[x] != tau[x]]
    if bad:
        raise InvalidCut(f"hyperplane of piece at {piece.start} does not reproduce the cut on sites {bad}")
    return ext


@dataclass(eq=False)
class DetectionPlan:
    circuit: GateCircuit
    psi0: StateVector
    target: LatticeCut
    partition: tuple[int, ...]
    order: tuple[int, ...] | None = None
    label: str = ""
    pieces: list[FlatPiece] = field(init=False)

    def __post_init__(self):
        self.circuit.validate(self.psi0.cut)
        self.circuit.validate(self.target)
        self.partition = tuple(int(p) for p in self.partition)
        seen = 0
        for i, p in enumerate(self.partition):
            if p == 0:
                raise PlanError(f"detector region {i} is empty")
            if p >> self.circuit.num_sites:
                raise PlanError(f"detector region {i} exceeds the chain")
            if p & seen:
                raise ConfigSpaceError(f"detector region {i} overlaps an earlier one")
            seen |= p
        self.pieces = flat_pieces(self.target)
        self._hyper = {}
        if self.order is not None:
            if sorted(self.order) != sorted(self.active_pieces()):
                raise PlanError("order must be a permutation of the active pieces")
            self.order = tuple(self.order)

    @property
    def num_sites(self) -> int:
        return self.circuit.num_sites

    @property
    def initial_cut(self) -> LatticeCut:
        return self.psi0.cut

    @property
    def basis(self) -> Basis:
        return self.psi0.basis

    @property
    def r(self) -> int:
        return len(self.partition)

    def cells(self) -> np.ndarray:
        """Matrix ``B[k, l]`` of detector cells (site masks) per piece and region."""
        n = self.num_sites
        out = np.zeros((len(self.pieces), self.r), dtype=np.int64)
        for k, piece in enumerate(self.pieces):
            pm = piece.mask(n)
            for l, region in enumerate(self.partition):
                out[k, l] = pm & region
        return out

    def active_pieces(self) -> list[int]:
        return [k for k, row in enumerate(self.cells()) if np.any(row)]

    def measurement_order(self) -> tuple[int, ...]:
        return self.order if self.order is not None else tuple(self.active_pieces())

    def hyperplane(self, k: int) -> LatticeCut:
        if k not in self._hyper:
            self._hyper[k] = hyperplane_extension(self.target, self.pieces[k], self.circuit.depth)
        return self._hyper[k]

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "circuit": self.circuit.to_json(),
            "state": self.psi0.to_json(),
            "target_cut": list(self.target.tau),
            "partition": [sites_of(p) for p in self.partition],
            "pieces": [[p.start, p.length, p.slope] for p in self.pieces],
            "order": list(self.measurement_order()),
        }


def _template(num_sites: int, rng) -> tuple[list[int], list[int]]:
    """Slopes and run lengths of a closed profile: flat, rise, flat, fall.

    A valid cut cannot turn from rising to falling in a single site (the
    gate parities of the two bonds disagree), so every extremum needs a
    flat run and four runs is the least a non-flat cut can have.
    """
    up = int(rng.integers(1, num_sites // 2))
    rest = num_sites - 2 * up
    first = int(rng.integers(1, rest))
    return [0, 1, 0, -1], [first, up, rest - first, up]


def random_target_cut(circuit: GateCircuit, rng, min_height: int = 2, tries: int = 200) -> LatticeCut:
    """Random valid four-piece cut whose hyperplanes all exist."""
    n, depth = circuit.num_sites, circuit.depth
    for _ in range(tries):
        slopes, lengths = _template(n, rng)
        steps = np.concatenate([[s] * l for s, l in zip(slopes, lengths)])
        steps = np.roll(steps, int(rng.integers(n)))
        rel = np.concatenate([[0], np.cumsum(steps)[:-1]])
        span = rel.max() - rel.min()
        if min_height + span > depth:
            continue
        base = int(rng.integers(min_height, depth - span + 1)) - rel.min()
        for shift in (0, 1, -1):
            tau = tuple(int(v) for v in rel + base + shift)
            cut = LatticeCut(tau)
            if min(tau) < min_height or max(tau) > depth or not circuit.is_valid(cut):
                continue
            pieces = flat_pieces(cut)
            if not 2 <= len(pieces) <= 4:
                continue
            try:
                for p in pieces:
                    hyperplane_extension(cut, p, depth)
            except InvalidCut:
                continue
            return cut
    raise PlanError("could not generate a target cut")


def random_partition(num_sites: int, r: int, rng, max_len: int = 3) -> tuple[int, ...]:
    for _ in range(1000):
        used = 0
        regions = []
        for _ in range(r):
            start = int(rng.integers(num_sites))
            length = int(rng.integers(1, max_len + 1))
            mask = site_set([(start + j) % num_sites for j in range(length)])
            if mask & used:
                break
            used |= mask
            regions.append(mask)
        if len(regions) == r:
            return tuple(regions)
    raise PlanError("could not place disjoint detector regions")


def random_plan(seed: int, num_sites: int | None = None, depth: int | None = None,
                particles: int | None = None, r: int | None = None) -> DetectionPlan:
    """Seeded plan: random brickwork circuit, random state in a fixed particle-number
    sector on the bottom cut, random target cut and detector regions.

    Plans whose detectors all fall in a single piece are redrawn so that at
    least two pieces take part.
    """
    rng = np.random.default_rng(seed)
    num_sites = num_sites or int(rng.choice([10, 12, 14]))
    depth = depth or int(rng.integers(6, 11))
    particles = particles or int(rng.integers(1, 4))
    r = r or int(rng.integers(1, 4))
    circuit = GateCircuit.brickwork(num_sites, depth, seed=int(rng.integers(2 ** 32)))
    basis = Basis.sector(num_sites, particles)
    psi0 = StateVector.random(circuit.flat_cut(0), basis, rng)
    for _ in range(100):
        target = random_target_cut(circuit, rng)
        partition = random_partition(num_sites, r, rng)
        plan = DetectionPlan(circuit, psi0, target, partition, label=f"seed{seed}")
        if len(plan.active_pieces()) >= 2:
            return plan
    raise PlanError("could not generate a plan with two active pieces")
