"""Brickwork circuits of two-site gates on a periodic chain, and cuts through them.

Sites ``0 .. N-1`` form a ring (``N`` even).  Layer ``t`` holds one gate on
every bond ``b`` with ``b = t (mod 2)``; bond ``b`` couples sites ``b`` and
``b + 1 (mod N)``.  A cut is a height profile ``tau`` with ``0 <= tau(x) <=
depth``: the gate at ``(t, b)`` lies below the cut when ``t < tau(b)``.  A
cut is valid when no gate straddles it, i.e. both endpoints of every bond
agree on which of its gates are below.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

GATE_KINDS = ("hop", "pair", "remote")


class CircuitError(ValueError):
    pass


class InvalidCut(CircuitError):
    pass


def hop_matrix(theta: float, phi: float) -> np.ndarray:
    """Number-conserving two-site gate in the ``|n_i n_j>`` basis (00, 01, 10, 11)."""
    c, s = math.cos(theta), math.sin(theta)
    e = np.exp(1j * phi)
    return np.array([
        [1, 0, 0, 0],
        [0, c, -1j * e * s, 0],
        [0, -1j * np.conj(e) * s, c, 0],
        [0, 0, 0, e],
    ], dtype=complex)


def pair_matrix(theta: float, phi: float) -> np.ndarray:
    """Gate that mixes ``|00>`` with ``|11>``: creates and destroys particle pairs."""
    c, s = math.cos(theta), math.sin(theta)
    e = np.exp(1j * phi)
    return np.array([
        [c, 0, 0, -1j * e * s],
        [0, 1, 0, 0],
        [0, 0, 1, 0],
        [-1j * np.conj(e) * s, 0, 0, c],
    ], dtype=complex)


@dataclass(frozen=True)
class Gate:
    """One two-site gate.

    ``kind="remote"`` is a hop gate whose angle is ``theta`` when the site
    ``control`` is empty and ``theta_on`` when it is occupied; the control
    can sit anywhere on the ring, so such a gate acts non-locally.
    """

    layer: int
    bond: int
    theta: float
    phi: float
    kind: str = "hop"
    control: int | None = None
    theta_on: float | None = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise CircuitError(f"unknown gate kind {self.kind!r}")
        if self.kind == "remote" and (self.control is None or self.theta_on is None):
            raise CircuitError("remote gate needs a control site and theta_on")

    def matrix(self, control_occupied: bool = False) -> np.ndarray:
        if self.kind == "pair":
            return pair_matrix(self.theta, self.phi)
        if self.kind == "remote" and control_occupied:
            return hop_matrix(self.theta_on, self.phi)
        return hop_matrix(self.theta, self.phi)

    def to_json(self) -> dict:
        out = {"layer": self.layer, "bond": self.bond, "theta": self.theta, "phi": self.phi}
        if self.kind != "hop":
            out["kind"] = self.kind
        if self.kind == "remote":
            out["control"] = self.control
            out["theta_on"] = self.theta_on
        return out


@dataclass(frozen=True)
class LatticeCut:
    tau: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "tau", tuple(int(v) for v in self.tau))

    @classmethod
    def flat(cls, num_sites: int, level: int) -> LatticeCut:
        return cls((level,) * num_sites)

    @property
    def num_sites(self) -> int:
        return len(self.tau)

    def array(self) -> np.ndarray:
        return np.array(self.tau, dtype=np.int64)

    def __le__(self, other: LatticeCut) -> bool:
        return all(a <= b for a, b in zip(self.tau, other.tau))

    def __ge__(self, other: LatticeCut) -> bool:
        return other <= self

    def meet(self, other: LatticeCut) -> LatticeCut:
        return LatticeCut(tuple(min(a, b) for a, b in zip(self.tau, other.tau)))

    def join(self, other: LatticeCut) -> LatticeCut:
        return LatticeCut(tuple(max(a, b) for a, b in zip(self.tau, other.tau)))

    def shifted(self, dt: int) -> LatticeCut:
        return LatticeCut(tuple(v + dt for v in self.tau))

    def to_json(self) -> list[int]:
        return list(self.tau)


def cut_violations(tau, depth: int) -> list[str]:
    """Reasons why ``tau`` is not a valid cut (empty list when valid)."""
    tau = np.asarray(tau, dtype=np.int64)
    n = len(tau)
    out = []
    if n < 2 or n % 2:
        out.append(f"chain length {n} must be even and at least 2")
        return out
    if np.any(tau < 0) or np.any(tau > depth):
        out.append(f"heights must lie in [0, {depth}]")
    for x in range(n):
        y = (x + 1) % n
        lo, hi = sorted((int(tau[x]), int(tau[y])))
        first = lo if (lo - x) % 2 == 0 else lo + 1
        if first < hi and first < depth:
            out.append(f"gate at layer {first} on bond {x} straddles the cut")
    return out


def is_valid_cut(tau, depth: int) -> bool:
    return not cut_violations(tau, depth)


def validate_cut(cut: LatticeCut, depth: int) -> LatticeCut:
    problems = cut_violations(cut.tau, depth)
    if problems:
        raise InvalidCut("; ".join(problems))
    return cut


def greatest_valid_below(profile, depth: int) -> LatticeCut:
    """Largest valid cut lying pointwise at or below ``profile``.

    Valid cuts are closed under pointwise max, so this is well defined; it
    is reached by repeatedly lowering the higher endpoint of a violated bond
    to the first layer of that bond at or above the lower endpoint.
    """
    w = np.clip(np.asarray(profile, dtype=np.int64), 0, depth)
    n = len(w)
    if n < 2 or n % 2:
        raise InvalidCut("chain length must be even and at least 2")
    changed = True
    while changed:
        changed = False
        for x in range(n):
            y = (x + 1) % n
            a, b = (x, y) if w[x] <= w[y] else (y, x)
            lo, hi = w[a], w[b]
            first = lo if (lo - x) % 2 == 0 else lo + 1
            if first < hi and first < depth:
                w[b] = first
                changed = True
    return LatticeCut(tuple(w))


@dataclass(eq=False)
class GateCircuit:
    num_sites: int
    depth: int
    gates: dict = field(default_factory=dict)  # (layer, bond) -> Gate
    seed: int | None = None

    def __post_init__(self):
        if self.num_sites < 2 or self.num_sites % 2:
            raise CircuitError("number of sites must be even and at least 2")
        if self.depth < 0:
            raise CircuitError("depth must be non-negative")
        expected = {(t, b) for t in range(self.depth) for b in range(self.num_sites) if b % 2 == t % 2}
        if set(self.gates) != expected:
            missing = sorted(expected - set(self.gates))[:3]
            extra = sorted(set(self.gates) - expected)[:3]
            raise CircuitError(f"gate table does not match the brickwork layout (missing {missing}, extra {extra})")
        for key, g in self.gates.items():
            if (g.layer, g.bond) != key:
                raise CircuitError(f"gate stored under {key} claims position {(g.layer, g.bond)}")
            if g.kind == "remote" and not 0 <= g.control < self.num_sites:
                raise CircuitError("control site out of range")
            if g.kind == "remote" and g.control in self.sites(g.bond):
                raise CircuitError("control site must differ from the gate's own sites")
        self._ops = {}

    @classmethod
    def brickwork(cls, num_sites: int, depth: int, seed: int | None = None) -> GateCircuit:
        """Random hop gates with angles drawn from ``seed``."""
        rng = np.random.default_rng(seed)
        gates = {}
        for t in range(depth):
            for b in range(t % 2, num_sites, 2):
                theta, phi = rng.uniform(0, 2 * math.pi, 2)
                gates[(t, b)] = Gate(t, b, float(theta), float(phi))
        return cls(num_sites, depth, gates, seed)

    @classmethod
    def identity(cls, num_sites: int, depth: int) -> GateCircuit:
        gates = {(t, b): Gate(t, b, 0.0, 0.0) for t in range(depth) for b in range(t % 2, num_sites, 2)}
        return cls(num_sites, depth, gates)

    def with_gate(self, gate: Gate) -> GateCircuit:
        gates = dict(self.gates)
        gates[(gate.layer, gate.bond)] = gate
        return GateCircuit(self.num_sites, self.depth, gates, self.seed)

    def sites(self, bond: int) -> tuple[int, int]:
        return bond, (bond + 1) % self.num_sites

    @property
    def number_conserving(self) -> bool:
        return all(g.kind != "pair" for g in self.gates.values())

    def flat_cut(self, level: int) -> LatticeCut:
        return LatticeCut.flat(self.num_sites, level)

    def validate(self, cut: LatticeCut) -> LatticeCut:
        if cut.num_sites != self.num_sites:
            raise InvalidCut(f"cut has {cut.num_sites} sites, circuit has {self.num_sites}")
        return validate_cut(cut, self.depth)

    def is_valid(self, cut: LatticeCut) -> bool:
        return cut.num_sites == self.num_sites and is_valid_cut(cut.tau, self.depth)

    def greatest_valid_below(self, profile) -> LatticeCut:
        return greatest_valid_below(profile, self.depth)

    def gates_below(self, cut: LatticeCut) -> set:
        return {(t, b) for (t, b) in self.gates if t < cut.tau[b]}

    def gates_between(self, source: LatticeCut, target: LatticeCut):
        """Gate sequence taking states on ``source`` to states on ``target``.

        Returns ``(undo, do)``: gates below ``source`` but not ``target`` (to
        be un-applied, latest first) and gates below ``target`` but not
        ``source`` (to be applied, earliest first).
        """
        self.validate(source)
        self.validate(target)
        below_s = self.gates_below(source)
        below_t = self.gates_below(target)
        undo = sorted(below_s - below_t, key=lambda k: (-k[0], k[1]))
        do = sorted(below_t - below_s)
        return undo, do

    def to_json(self) -> dict:
        return {
            "num_sites": self.num_sites,
            "depth": self.depth,
            "seed": self.seed,
            "gates": [self.gates[k].to_json() for k in sorted(self.gates)],
        }

    @classmethod
    def from_json(cls, data: dict) -> GateCircuit:
        if "gates" not in data:
            return cls.brickwork(int(data["num_sites"]), int(data["depth"]), data.get("seed"))
        gates = {}
        for g in data["gates"]:
            gate = Gate(int(g["layer"]), int(g["bond"]), float(g["theta"]), float(g["phi"]),
                        g.get("kind", "hop"), g.get("control"), g.get("theta_on"))
            if (gate.layer, gate.bond) in gates:
                raise CircuitError(f"duplicate gate at {(gate.layer, gate.bond)}")
            gates[(gate.layer, gate.bond)] = gate
        return cls(int(data["num_sites"]), int(data["depth"]), gates, data.get("seed"))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1, sort_keys=True))

    @classmethod
    def load(cls, path) -> GateCircuit:
        return cls.from_json(json.loads(Path(path).read_text()))
