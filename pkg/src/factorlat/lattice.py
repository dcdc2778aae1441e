"""Finite bipartite lattices: chains and square lattices.

Sites are indexed row-major, ``site = x + Lx * y``; site ``i`` is stored in
bit ``i`` of a computational-basis index.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Literal

import numpy as np

Boundary = Literal["periodic", "open"]


class LatticeError(ValueError):
    """Invalid lattice geometry."""


class BipartiteError(LatticeError):
    """Periodic lattice with an odd length cannot be two-colored."""


class SizeError(LatticeError):
    """Lattice too small or too large."""


@dataclass(frozen=True)
class LatticeSpec:
    dimension: int
    lengths: tuple[int, ...]
    boundary: Boundary = "periodic"

    def __post_init__(self):
        object.__setattr__(self, "lengths", tuple(int(n) for n in self.lengths))
        if self.dimension not in (1, 2):
            raise LatticeError(f"dimension must be 1 or 2, got {self.dimension}")
        if len(self.lengths) != self.dimension:
            raise LatticeError(f"expected {self.dimension} lengths, got {self.lengths}")
        if self.boundary not in ("periodic", "open"):
            raise LatticeError(f"unknown boundary {self.boundary!r}")
        for n in self.lengths:
            if n < 2:
                raise SizeError(f"lattice lengths must be >= 2, got {self.lengths}")
            if self.boundary == "periodic":
                if n % 2:
                    raise BipartiteError(
                        f"periodic length {n} is odd; lattice is not bipartite")
                # L=2 rings double every bond
                if n < 3:
                    raise SizeError("periodic lengths must be >= 3 (L=2 doubles bonds)")

    @classmethod
    def chain(cls, length: int, boundary: Boundary = "periodic") -> "LatticeSpec":
        return cls(1, (length,), boundary)

    @classmethod
    def square(cls, lx: int, ly: int | None = None,
               boundary: Boundary = "periodic") -> "LatticeSpec":
        return cls(2, (lx, lx if ly is None else ly), boundary)

    @property
    def n_sites(self) -> int:
        return int(np.prod(self.lengths))

    @property
    def periodic(self) -> bool:
        return self.boundary == "periodic"

    def coords(self, site: int) -> tuple[int, ...]:
        if self.dimension == 1:
            return (site,)
        lx = self.lengths[0]
        return (site % lx, site // lx)

    def site(self, *coords: int) -> int:
        if self.dimension == 1:
            return coords[0] % self.lengths[0] if self.periodic else coords[0]
        lx, ly = self.lengths
        x, y = coords
        if self.periodic:
            x, y = x % lx, y % ly
        return x + lx * y

    @cached_property
    def bonds(self) -> np.ndarray:
        return build_lattice(self)[0]

    @cached_property
    def labels(self) -> np.ndarray:
        return build_lattice(self)[1]

    @cached_property
    def signs(self) -> np.ndarray:
        """+1 on sublattice 1, -1 on sublattice 2."""
        return np.where(self.labels == 1, 1.0, -1.0)

    @cached_property
    def shells(self) -> "list[Shell]":
        return neighbor_shells(self)

    def describe(self) -> dict:
        return {"dimension": self.dimension, "lengths": list(self.lengths),
                "boundary": self.boundary, "n_sites": self.n_sites}


def build_lattice(spec: LatticeSpec) -> tuple[np.ndarray, np.ndarray]:
    """Nearest-neighbour bonds and sublattice labels.

    Returns
    -------
    bonds : (n_bonds, 2) int array
        Sorted pairs ``(i, j)`` with ``i < j``.
    labels : (n_sites,) int array
        Sublattice label, ``((x + y) mod 2) + 1``.
    """
    bonds = set()
    labels = np.empty(spec.n_sites, dtype=np.int64)
    for s in range(spec.n_sites):
        c = spec.coords(s)
        labels[s] = sum(c) % 2 + 1
        for axis in range(spec.dimension):
            nxt = list(c)
            nxt[axis] += 1
            if not spec.periodic and nxt[axis] >= spec.lengths[axis]:
                continue
            t = spec.site(*nxt)
            bonds.add((min(s, t), max(s, t)))
    bond_arr = np.array(sorted(bonds), dtype=np.int64).reshape(-1, 2)
    if np.any(labels[bond_arr[:, 0]] == labels[bond_arr[:, 1]]):
        raise BipartiteError("bond joins equal sublattices")
    return bond_arr, labels


def coordination(spec: LatticeSpec, site: int | None = None) -> int:
    """Bulk coordination number, or the neighbour count of one ``site``."""
    if site is None:
        return 2 * spec.dimension
    return int(np.count_nonzero(spec.bonds == site))


def displacement(spec: LatticeSpec, i: int, j: int) -> tuple[int, ...]:
    """Minimum-image |displacement| between two sites, one entry per axis."""
    out = []
    for a, b, n in zip(spec.coords(i), spec.coords(j), spec.lengths):
        d = abs(b - a)
        if spec.periodic:
            d = min(d, n - d)
        out.append(d)
    return tuple(out)


def distance_classes(spec: LatticeSpec) -> dict[tuple[int, int], int | tuple[int, int]]:
    """Map every pair ``(i, j)``, ``i < j``, to its translation class.

    The class is the minimum-image distance (chain) or the per-axis
    minimum-image displacement ``(dx, dy)`` (square lattice).  Open lattices
    are not translation invariant; their pairs are classed by raw
    displacement and a warning is issued.
    """
    if not spec.periodic:
        warnings.warn("open boundaries: pairs classed by raw displacement",
                      stacklevel=2)
    n = spec.n_sites
    out = {}
    for i in range(n):
        for j in range(i + 1, n):
            d = displacement(spec, i, j)
            out[(i, j)] = d[0] if spec.dimension == 1 else d
    return out


@dataclass(frozen=True)
class Shell:
    """A translation class of site pairs.

    ``multiplicity`` counts the partners ``j`` of a single site in this
    class, which is the weight of the class in a per-site sum over ``j != i``.
    """
    key: int | tuple[int, int]
    distance: float
    multiplicity: int
    pairs: tuple[tuple[int, int], ...] = field(repr=False)

    @property
    def label(self) -> str:
        if isinstance(self.key, tuple):
            return "d" + "_".join(str(k) for k in self.key)
        return f"d{self.key}"


def neighbor_shells(spec: LatticeSpec) -> list[Shell]:
    """Translation classes ordered by Euclidean distance (nearest first)."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        classes = distance_classes(spec)
    grouped: dict = {}
    for pair, key in classes.items():
        grouped.setdefault(key, []).append(pair)
    shells = []
    for key, pairs in grouped.items():
        vec = key if isinstance(key, tuple) else (key,)
        dist = float(np.hypot(*vec)) if len(vec) == 2 else float(vec[0])
        mult = sum(1 for p in pairs if 0 in p)
        shells.append(Shell(key, dist, mult, tuple(pairs)))
    shells.sort(key=lambda s: (s.distance, s.key))
    return shells
