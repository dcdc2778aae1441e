import numpy as np
import pytest
from hypothesis import given, strategies as st

from factorlat.lattice import (BipartiteError, LatticeSpec, SizeError, build_lattice,
                               coordination, distance_classes, neighbor_shells)


def test_ring_of_four_bonds():
    bonds, labels = build_lattice(LatticeSpec.chain(4))
    assert {tuple(b) for b in bonds} == {(0, 1), (1, 2), (2, 3), (0, 3)}
    assert list(labels) == [1, 2, 1, 2]


def test_square_4x4_has_32_bonds():
    bonds, _ = build_lattice(LatticeSpec.square(4, 4))
    assert len(bonds) == 32


def test_odd_ring_rejected():
    with pytest.raises(BipartiteError):
        LatticeSpec.chain(5)


@pytest.mark.parametrize("make", [lambda: LatticeSpec.chain(1, "open"),
                                  lambda: LatticeSpec.chain(2),
                                  lambda: LatticeSpec.square(2, 4)])
def test_size_errors(make):
    with pytest.raises(SizeError):
        make()


def test_coordination():
    assert coordination(LatticeSpec.chain(6)) == 2
    assert coordination(LatticeSpec.square(4, 4)) == 4
    open4 = LatticeSpec.chain(4, "open")
    assert coordination(open4, 0) == coordination(open4, 3) == 1
    assert coordination(open4, 1) == 2


def test_distance_classes_examples():
    ch = distance_classes(LatticeSpec.chain(6))
    assert ch[(0, 3)] == 3
    assert ch[(0, 5)] == 1
    sq = LatticeSpec.square(4, 4)
    assert distance_classes(sq)[(0, sq.site(1, 1))] == (1, 1)


def test_open_distance_classes_warn():
    with pytest.warns(UserWarning):
        distance_classes(LatticeSpec.chain(4, "open"))


def test_square_shell_multiplicities():
    shells = neighbor_shells(LatticeSpec.square(4, 4))
    # x and y bonds are separate classes keyed by per-axis displacement
    assert [sh.label for sh in shells[:3]] == ["d0_1", "d1_0", "d1_1"]
    assert shells[0].multiplicity + shells[1].multiplicity == 4
    assert sum(sh.multiplicity for sh in shells) == 15


even = st.integers(2, 6).map(lambda k: 2 * k)


@given(st.one_of(even.map(LatticeSpec.chain),
                 st.tuples(even.filter(lambda n: n <= 6), even.filter(lambda n: n <= 6))
                 .map(lambda t: LatticeSpec.square(*t))))
def test_bond_count_coloring_and_partition(spec):
    bonds, labels = build_lattice(spec)
    n = spec.n_sites
    assert len(bonds) == (n if spec.dimension == 1 else 2 * n)
    assert np.all(bonds[:, 0] < bonds[:, 1])
    assert len({tuple(b) for b in bonds}) == len(bonds)
    assert np.all(labels[bonds[:, 0]] != labels[bonds[:, 1]])
    classes = distance_classes(spec)
    assert len(classes) == n * (n - 1) // 2
    shells = spec.shells
    assert sum(len(sh.pairs) for sh in shells) == n * (n - 1) // 2
    assert sum(sh.multiplicity for sh in shells) == n - 1


@given(st.integers(2, 9))
def test_open_chain_bonds(n):
    bonds, labels = build_lattice(LatticeSpec.chain(n, "open"))
    assert len(bonds) == n - 1
    assert np.all(labels[bonds[:, 0]] != labels[bonds[:, 1]])
