"""Fock-space states on lattice cuts and their evolution between cuts.

The Hilbert space of every cut is spanned by occupation configurations of
the ``N`` sites (bitmasks).  A :class:`Basis` is either the full space of
``2**N`` configurations or a union of fixed particle-number sectors, which
the number-conserving gates leave invariant.  Since every cut carries a copy
of the same space, the identification between the space of a cut and the
tensor product over any subset of sites is the identity.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..configspace import ConfigSet, popcount_array, sites_of
from .circuit import CircuitError, GateCircuit, LatticeCut


class BasisError(ValueError):
    pass


class Basis:
    """Sorted array of configuration bitmasks spanning a subspace of Fock space."""

    def __init__(self, num_sites: int, masks, label: str = "custom"):
        masks = np.unique(np.asarray(masks, dtype=np.int64))
        if len(masks) and (masks[0] < 0 or masks[-1] >= 1 << num_sites):
            raise BasisError("configuration out of range")
        self.num_sites = num_sites
        self.masks = masks
        self.label = label

    @staticmethod
    @functools.lru_cache(maxsize=None)
    def full(num_sites: int) -> Basis:
        return Basis(num_sites, np.arange(1 << num_sites), "full")

    @staticmethod
    @functools.lru_cache(maxsize=None)
    def sector(num_sites: int, numbers) -> Basis:
        if isinstance(numbers, int):
            numbers = (numbers,)
        numbers = tuple(sorted(set(numbers)))
        allq = np.arange(1 << num_sites, dtype=np.int64)
        keep = np.isin(popcount_array(allq), numbers)
        return Basis(num_sites, allq[keep], f"sector{numbers}")

    @property
    def key(self):
        return (self.num_sites, self.label, len(self.masks))

    @property
    def dim(self) -> int:
        return len(self.masks)

    def index_of(self, masks) -> np.ndarray:
        """Positions of ``masks`` in the basis, ``-1`` where absent."""
        m = np.asarray(masks, dtype=np.int64)
        pos = np.searchsorted(self.masks, m)
        pos = np.clip(pos, 0, max(self.dim - 1, 0))
        ok = self.masks[pos] == m if self.dim else np.zeros(m.shape, bool)
        return np.where(ok, pos, -1)

    def __repr__(self):
        return f"Basis(N={self.num_sites}, {self.label}, dim={self.dim})"


@dataclass(eq=False)
class StateVector:
    basis: Basis
    amps: np.ndarray
    cut: LatticeCut

    def __post_init__(self):
        self.amps = np.asarray(self.amps, dtype=complex)
        if self.amps.shape != (self.basis.dim,):
            raise BasisError(f"amplitude vector has shape {self.amps.shape}, basis dim {self.basis.dim}")
        if self.cut.num_sites != self.basis.num_sites:
            raise BasisError("cut and basis disagree on the number of sites")

    @classmethod
    def from_amplitudes(cls, cut: LatticeCut, basis: Basis, entries) -> StateVector:
        """Build from ``(mask, amplitude)`` pairs or a dict."""
        items = entries.items() if isinstance(entries, dict) else entries
        amps = np.zeros(basis.dim, dtype=complex)
        for mask, a in items:
            i = basis.index_of([mask])[0]
            if i < 0:
                raise BasisError(f"configuration {mask} is not in the basis")
            amps[i] += a
        return cls(basis, amps, cut)

    @classmethod
    def basis_state(cls, cut: LatticeCut, basis: Basis, mask: int) -> StateVector:
        return cls.from_amplitudes(cut, basis, [(mask, 1.0)])

    @classmethod
    def random(cls, cut: LatticeCut, basis: Basis, rng, support=None) -> StateVector:
        """Normalised state with complex Gaussian amplitudes (optionally on a subset of masks)."""
        amps = rng.normal(size=basis.dim) + 1j * rng.normal(size=basis.dim)
        if support is not None:
            amps = amps * np.asarray(support, dtype=bool)
        return cls(basis, amps / np.linalg.norm(amps), cut)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def normalized(self) -> StateVector:
        n = self.norm()
        if n == 0:
            raise BasisError("cannot normalise the zero vector")
        return StateVector(self.basis, self.amps / n, self.cut)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def copy(self) -> StateVector:
        return StateVector(self.basis, self.amps.copy(), self.cut)

    def inner(self, other: StateVector) -> complex:
        return complex(np.vdot(self.amps, other.amps))

    def to_json(self) -> dict:
        nz = np.flatnonzero(self.amps)
        return {
            "num_sites": self.basis.num_sites,
            "cut": list(self.cut.tau),
            "amplitudes": [[int(self.basis.masks[i]), float(self.amps[i].real), float(self.amps[i].imag)]
                           for i in nz],
        }

    @classmethod
    def from_json(cls, data: dict, basis: Basis | None = None) -> StateVector:
        n = int(data["num_sites"])
        basis = basis or Basis.full(n)
        cut = LatticeCut(tuple(data["cut"]))
        return cls.from_amplitudes(cut, basis, [(int(m), complex(re, im)) for m, re, im in data["amplitudes"]])


# ---------------------------------------------------------------- projectors

def projector_diagonal(s: ConfigSet, basis: Basis) -> np.ndarray:
    """Diagonal of the multiplication operator by the indicator of ``s``."""
    return np.asarray(s.evaluate(basis.masks), dtype=bool)


@dataclass(frozen=True)
class Projector:
    """Spectral projector of a configuration set; diagonal in the occupation basis."""

    configs: ConfigSet

    def diagonal(self, basis: Basis) -> np.ndarray:
        return projector_diagonal(self.configs, basis)

    def matrix(self, basis: Basis) -> np.ndarray:
        return np.diag(self.diagonal(basis).astype(complex))

    def apply(self, psi: StateVector) -> tuple[StateVector, float]:
        return apply_projector(psi, self.configs)


def apply_projector(psi: StateVector, s: ConfigSet) -> tuple[StateVector, float]:
    """Project ``psi`` onto the configurations in ``s``; returns ``(P psi, ||P psi||^2)``."""
    keep = projector_diagonal(s, psi.basis)
    out = StateVector(psi.basis, np.where(keep, psi.amps, 0), psi.cut)
    return out, float(np.vdot(out.amps, out.amps).real)


# ---------------------------------------------------------------- gates

def gate_operator(circuit: GateCircuit, layer: int, bond: int, basis: Basis) -> sp.csr_matrix:
    """Sparse matrix of one gate on ``basis``; cached on the circuit."""
    key = (layer, bond, basis.key)
    op = circuit._ops.get(key)
    if op is not None:
        return op
    gate = circuit.gates[(layer, bond)]
    i, j = circuit.sites(bond)
    q = basis.masks
    ni = (q >> i) & 1
    nj = (q >> j) & 1
    local = 2 * ni + nj
    cleared = q & ~((1 << i) | (1 << j))
    rows, cols, vals = [], [], []
    mats = {False: gate.matrix(False)}
    if gate.kind == "remote":
        mats[True] = gate.matrix(True)
        ctrl = ((q >> gate.control) & 1).astype(bool)
    else:
        ctrl = np.zeros(len(q), dtype=bool)
    col_idx = np.arange(len(q))
    for flag, m in mats.items():
        sel = ctrl == flag
        for o in range(4):
            amp = m[o, local[sel]]
            nzm = np.abs(amp) > 0
            if not np.any(nzm):
                continue
            newq = cleared[sel][nzm] | ((o >> 1) << i) | ((o & 1) << j)
            r = basis.index_of(newq)
            if np.any(r < 0):
                raise BasisError(f"basis {basis.label} is not invariant under the gate at {(layer, bond)}")
            rows.append(r)
            cols.append(col_idx[sel][nzm])
            vals.append(amp[nzm])
    op = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                       shape=(basis.dim, basis.dim))
    circuit._ops[key] = op
    return op


def _apply_sequence(circuit, undo, do, basis, amps):
    for t, b in undo:
        amps = gate_operator(circuit, t, b, basis).conj().T @ amps
    for t, b in do:
        amps = gate_operator(circuit, t, b, basis) @ amps
    return amps


def evolve(circuit: GateCircuit, psi: StateVector, target: LatticeCut) -> StateVector:
    """Move ``psi`` from its cut to ``target`` through the circuit."""
    undo, do = circuit.gates_between(psi.cut, target)
    amps = _apply_sequence(circuit, undo, do, psi.basis, psi.amps)
    return StateVector(psi.basis, amps, target)


def evolve_block(circuit: GateCircuit, source: LatticeCut, target: LatticeCut, basis: Basis,
                 block: np.ndarray) -> np.ndarray:
    """Evolve the columns of ``block`` (dim x k)."""
    undo, do = circuit.gates_between(source, target)
    return _apply_sequence(circuit, undo, do, basis, block)


def evolution_operator(circuit: GateCircuit, source: LatticeCut, target: LatticeCut,
                       basis: Basis) -> np.ndarray:
    """Dense matrix of the evolution from ``source`` to ``target``."""
    if basis.dim > 1 << 13:
        raise BasisError("basis too large for a dense evolution operator")
    return evolve_block(circuit, source, target, basis, np.eye(basis.dim, dtype=complex))


# ---------------------------------------------------------------- factorisation

def local_masks(sites: list[int]) -> np.ndarray:
    """All configurations of the given sites, as global bitmasks, in binary order."""
    n = len(sites)
    idx = np.arange(1 << n, dtype=np.int64)
    out = np.zeros(1 << n, dtype=np.int64)
    for k, x in enumerate(sites):
        out |= ((idx >> k) & 1) << x
    return out


def local_index(masks, sites: list[int]) -> np.ndarray:
    """Index of the restriction of each mask to ``sites`` (inverse of :func:`local_masks`)."""
    m = np.asarray(masks, dtype=np.int64)
    out = np.zeros(m.shape, dtype=np.int64)
    for k, x in enumerate(sites):
        out |= ((m >> x) & 1) << k
    return out


@dataclass(eq=False)
class BipartiteView:
    """Amplitudes of a state as a matrix ``[config of A, config of the rest]``."""

    a_sites: list[int]
    b_sites: list[int]
    matrix: np.ndarray

    def reconstruct(self, basis: Basis) -> np.ndarray:
        ia = local_index(basis.masks, self.a_sites)
        ib = local_index(basis.masks, self.b_sites)
        return self.matrix[ia, ib]


def factorize(psi: StateVector, a: int) -> BipartiteView:
    """View ``psi`` in ``H(A) (x) H(rest)`` for the site set ``a`` (bitmask)."""
    n = psi.basis.num_sites
    a_sites = sites_of(a)
    if any(x >= n for x in a_sites):
        raise BasisError("site set exceeds the chain")
    b_sites = [x for x in range(n) if x not in a_sites]
    mat = np.zeros((1 << len(a_sites), 1 << len(b_sites)), dtype=complex)
    ia = local_index(psi.basis.masks, a_sites)
    ib = local_index(psi.basis.masks, b_sites)
    mat[ia, ib] = psi.amps
    return BipartiteView(a_sites, b_sites, mat)


def dense_evolution_oracle(circuit: GateCircuit, source: LatticeCut, target: LatticeCut) -> np.ndarray:
    """Reference evolution on the full ``2**N`` space via explicit tensor contractions.

    Used in tests as an implementation independent of the sparse path.
    """
    n = circuit.num_sites
    if n > 12:
        raise BasisError("dense oracle limited to 12 sites")
    undo, do = circuit.gates_between(source, target)
    dim = 1 << n
    # tensor axes ordered so that axis k holds the bit of site k (little endian)
    u = np.eye(dim, dtype=complex).reshape((2,) * n + (dim,))

    def apply(tensor, gate, adjoint):
        i, j = circuit.sites(gate.bond)
        # axis for site x is n-1-x when reshaping a little-endian index in C order
        ai, aj = n - 1 - i, n - 1 - j
        if gate.kind == "remote":
            ac = n - 1 - gate.control
            out = np.empty_like(tensor)
            for c in (0, 1):
                m = gate.matrix(bool(c))
                m = m.conj().T if adjoint else m
                sl = [slice(None)] * tensor.ndim
                sl[ac] = c
                sub = tensor[tuple(sl)]
                bi = ai - (1 if ac < ai else 0)
                bj = aj - (1 if ac < aj else 0)
                out[tuple(sl)] = _contract(sub, m, bi, bj)
            return out
        m = gate.matrix()
        m = m.conj().T if adjoint else m
        return _contract(tensor, m, ai, aj)

    for key in undo:
        u = apply(u, circuit.gates[key], True)
    for key in do:
        u = apply(u, circuit.gates[key], False)
    return u.reshape(dim, dim)


def _contract(tensor, m, ai, aj):
    g = m.reshape(2, 2, 2, 2)  # out_i, out_j, in_i, in_j
    moved = np.moveaxis(tensor, (ai, aj), (0, 1))
    res = np.einsum("abcd,cd...->ab...", g, moved)
    return np.moveaxis(res, (0, 1), (ai, aj))


def sector_numbers(psi: StateVector) -> set[int]:
    counts = popcount_array(psi.basis.masks[np.abs(psi.amps) > 0])
    return set(int(c) for c in counts)


def embed(psi: StateVector, basis: Basis) -> StateVector:
    """Re-express ``psi`` in a larger basis."""
    idx = basis.index_of(psi.basis.masks)
    if np.any(idx[np.abs(psi.amps) > 0] < 0):
        raise BasisError("target basis misses part of the support")
    amps = np.zeros(basis.dim, dtype=complex)
    ok = idx >= 0
    amps[idx[ok]] = psi.amps[ok]
    return StateVector(basis, amps, psi.cut)


__all__ = [
    "Basis", "BasisError", "BipartiteView", "Projector", "StateVector", "apply_projector", "dense_evolution_oracle",
    "embed", "evolution_operator", "evolve", "evolve_block", "factorize", "gate_operator", "local_index",
    "local_masks", "projector_diagonal", "sector_numbers", "CircuitError",
]

