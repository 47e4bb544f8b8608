"""Finite configuration space over the sites of a lattice cut.

A configuration is a finite set of occupied sites, stored as an integer
bitmask (bit ``x`` set means site ``x`` is occupied).  Site sets use the same
encoding.  :class:`ConfigSet` is a small symbolic expression tree over the
atoms ``Exists(A)``, ``Empty(A)`` and ``All(A)``; it can be evaluated on a
single configuration or vectorised over a numpy array of configurations.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

MAX_SITES = 24


class ConfigSpaceError(ValueError):
    pass


def site_set(sites: Iterable[int]) -> int:
    mask = 0
    for x in sites:
        if x < 0 or x >= MAX_SITES:
            raise ConfigSpaceError(f"site {x} out of range")
        mask |= 1 << int(x)
    return mask


def sites_of(mask: int) -> list[int]:
    out, x = [], 0
    while mask:
        if mask & 1:
            out.append(x)
        mask >>= 1
        x += 1
    return out


def popcount(mask: int) -> int:
    return bin(mask).count("1")


def full_set(num_sites: int) -> int:
    return (1 << num_sites) - 1


def complement(mask: int, num_sites: int) -> int:
    return full_set(num_sites) & ~mask


def all_configurations(num_sites: int) -> np.ndarray:
    if num_sites > MAX_SITES:
        raise ConfigSpaceError(f"at most {MAX_SITES} sites supported")
    return np.arange(1 << num_sites, dtype=np.int64)


def popcount_array(configs: np.ndarray) -> np.ndarray:
    c = np.asarray(configs, dtype=np.int64).copy()
    count = np.zeros(c.shape, dtype=np.int64)
    while np.any(c):
        count += c & 1
        c >>= 1
    return count


class ConfigSet:
    """Symbolic subset of configuration space."""

    def evaluate(self, configs) -> np.ndarray:
        raise NotImplementedError

    def __contains__(self, q: int) -> bool:
        return bool(self.evaluate(np.array([q], dtype=np.int64))[0])

    def __and__(self, other: ConfigSet) -> ConfigSet:
        return Intersection((self, other))

    def __or__(self, other: ConfigSet) -> ConfigSet:
        return Union((self, other))

    def __invert__(self) -> ConfigSet:
        return Complement(self)

    def __sub__(self, other: ConfigSet) -> ConfigSet:
        return Intersection((self, Complement(other)))

    def materialize(self, num_sites: int) -> np.ndarray:
        """Boolean membership table over all ``2**num_sites`` configurations."""
        return self.evaluate(all_configurations(num_sites))

    def members(self, num_sites: int) -> list[int]:
        return [int(q) for q in np.flatnonzero(self.materialize(num_sites))]

    def is_subset(self, other: ConfigSet, num_sites: int) -> bool:
        a = self.materialize(num_sites)
        b = other.materialize(num_sites)
        return bool(np.all(~a | b))

    def equals(self, other: ConfigSet, num_sites: int) -> bool:
        return bool(np.array_equal(self.materialize(num_sites), other.materialize(num_sites)))


def _as_configs(configs) -> np.ndarray:
    return np.asarray(configs, dtype=np.int64)


@dataclass(frozen=True)
class Exists(ConfigSet):
    sites: int

    def evaluate(self, configs):
        return (_as_configs(configs) & self.sites) != 0


@dataclass(frozen=True)
class Empty(ConfigSet):
    sites: int

    def evaluate(self, configs):
        return (_as_configs(configs) & self.sites) == 0


@dataclass(frozen=True)
class All(ConfigSet):
    sites: int

    def evaluate(self, configs):
        return (_as_configs(configs) & ~self.sites) == 0


@dataclass(frozen=True)
class Everything(ConfigSet):
    def evaluate(self, configs):
        return np.ones(np.shape(configs), dtype=bool)


@dataclass(frozen=True)
class Nothing(ConfigSet):
    def evaluate(self, configs):
        return np.zeros(np.shape(configs), dtype=bool)


@dataclass(frozen=True)
class Intersection(ConfigSet):
    parts: tuple[ConfigSet, ...]

    def evaluate(self, configs):
        out = np.ones(np.shape(configs), dtype=bool)
        for p in self.parts:
            out &= p.evaluate(configs)
        return out


@dataclass(frozen=True)
class Union(ConfigSet):
    parts: tuple[ConfigSet, ...]

    def evaluate(self, configs):
        out = np.zeros(np.shape(configs), dtype=bool)
        for p in self.parts:
            out |= p.evaluate(configs)
        return out


@dataclass(frozen=True)
class Complement(ConfigSet):
    part: ConfigSet

    def evaluate(self, configs):
        return ~self.part.evaluate(configs)


@dataclass(frozen=True)
class Scoped(ConfigSet):
    """A set of configurations of the sub-region ``scope``.

    Evaluating on a configuration of the whole cut tests ``q & scope``, which
    is the cylinder extension ``inner x Gamma(rest)``.
    """

    inner: ConfigSet
    scope: int

    def evaluate(self, configs):
        return self.inner.evaluate(_as_configs(configs) & self.scope)

    def local_configurations(self) -> np.ndarray:
        sites = sites_of(self.scope)
        out = np.zeros(1 << len(sites), dtype=np.int64)
        for i, x in enumerate(sites):
            out |= ((np.arange(1 << len(sites)) >> i) & 1).astype(np.int64) << x
        return out

    def local_members(self) -> np.ndarray:
        q = self.local_configurations()
        return q[self.inner.evaluate(q)]


def intersect_all(parts: Sequence[ConfigSet]) -> ConfigSet:
    if not parts:
        return Everything()
    if len(parts) == 1:
        return parts[0]
    return Intersection(tuple(parts))


def union_all(parts: Sequence[ConfigSet]) -> ConfigSet:
    if not parts:
        return Nothing()
    if len(parts) == 1:
        return parts[0]
    return Union(tuple(parts))


def _check_disjoint(regions: Sequence[int]) -> None:
    seen = 0
    for i, a in enumerate(regions):
        if a & seen:
            raise ConfigSpaceError(f"region {i} overlaps an earlier region")
        seen |= a


def outcome_set(region: int, outcome: int) -> ConfigSet:
    """``Exists(region)`` for a click, ``Empty(region)`` otherwise."""
    return Exists(region) if outcome else Empty(region)


def make_M_P(partition: Sequence[int], L: Sequence[int]) -> ConfigSet:
    """Configurations compatible with the outcome vector ``L``."""
    if len(partition) != len(L):
        raise ConfigSpaceError("partition and outcome vector differ in length")
    _check_disjoint(partition)
    return intersect_all([outcome_set(p, l) for p, l in zip(partition, L)])


def compatible(s, L) -> bool:
    """Whether the outcome matrix ``s`` (pieces x detectors) is compatible with ``L``."""
    s = np.asarray(s, dtype=bool)
    L = np.asarray(L, dtype=bool)
    if s.ndim != 2 or s.shape[1] != L.shape[0]:
        raise ConfigSpaceError(f"shape mismatch: s {s.shape}, L {L.shape}")
    clicked = s.any(axis=0)
    return bool(np.array_equal(clicked, L))


def make_M_k(s_k: Sequence[int], cells: Sequence[int], scope: int | None = None) -> ConfigSet:
    """Configurations compatible with the outcomes ``s_k`` of one flat piece.

    ``cells[l]`` is the detector cell of region ``l`` inside the piece.  With a
    ``scope`` the result lives on the configuration space of that sub-region.
    """
    if len(s_k) != len(cells):
        raise ConfigSpaceError("outcome row and cell list differ in length")
    if scope is not None:
        for c in cells:
            if c & ~scope:
                raise ConfigSpaceError("detector cell lies outside the scope")
    expr = intersect_all([outcome_set(c, s) for c, s in zip(cells, s_k)])
    return Scoped(expr, scope) if scope is not None else expr


def make_squeeze_sets(partition: Sequence[int], grown: Sequence[int], shrunk: Sequence[int],
                      L: Sequence[int]) -> tuple[ConfigSet, ConfigSet]:
    """Inner and outer compatibility sets built from shrunk and grown regions.

    Returns ``(M_hat, M_check)`` with ``M_hat <= M_P(L) <= M_check``.
    """
    if not (len(partition) == len(grown) == len(shrunk) == len(L)):
        raise ConfigSpaceError("length mismatch")
    for p, g, c in zip(partition, grown, shrunk):
        if c & ~p or p & ~g:
            raise ConfigSpaceError("need shrunk <= region <= grown for every detector")
    hat = [Exists(c) if l else Empty(g) for g, c, l in zip(grown, shrunk, L)]
    check = [Exists(g) if l else Empty(c) for g, c, l in zip(grown, shrunk, L)]
    return intersect_all(hat), intersect_all(check)


def outcome_vectors(r: int) -> Iterator[tuple[int, ...]]:
    return itertools.product((0, 1), repeat=r)


def outcome_matrices(cells: Sequence[Sequence[int]]) -> Iterator[np.ndarray]:
    """All 0/1 matrices ``s`` with ``s[k, l] = 0`` wherever the cell is empty."""
    cells = np.asarray(cells, dtype=np.int64)
    free = list(zip(*np.nonzero(cells)))
    for bits in itertools.product((0, 1), repeat=len(free)):
        s = np.zeros(cells.shape, dtype=np.int8)
        for (k, l), b in zip(free, bits):
            s[k, l] = b
        yield s


def restrict_to_sectors(configs: np.ndarray, numbers: Iterable[int]) -> np.ndarray:
    """Keep only configurations whose particle number is in ``numbers``."""
    counts = popcount_array(configs)
    return configs[np.isin(counts, list(numbers))]
