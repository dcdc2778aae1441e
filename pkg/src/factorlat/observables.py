"""Magnetizations, two-site correlators and reduced density matrices.

All quantities act directly on basis-state amplitudes (bit ``i`` = 0 means
spin ``i`` up).  Functions here work in whatever frame ``v`` is in;
:func:`measure` reports the rotated (ferromagnetic-xy) frame used for
sweep output.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .lattice import LatticeSpec, Shell

AXES = {"x": 0, "y": 1, "z": 2}
NORM_TOL = 1e-8


class NormalizationError(ValueError):
    pass


def _axis(axis) -> int:
    if isinstance(axis, str):
        return AXES[axis]
    if axis not in (0, 1, 2):
        raise ValueError(f"bad axis {axis!r}")
    return axis


def _n_sites(v: np.ndarray) -> int:
    n = int(v.shape[0]).bit_length() - 1
    if v.ndim != 1 or 2 ** n != v.shape[0]:
        raise ValueError("state vector length must be a power of two")
    return n


def check_normalized(v: np.ndarray) -> None:
    norm = float(np.linalg.norm(v))
    if abs(norm - 1.0) > NORM_TOL:
        raise NormalizationError(f"state norm {norm:.12g} deviates from 1")


def _index(dim: int) -> np.ndarray:
    return np.arange(dim, dtype=np.int64)


def _flip_overlap(v: np.ndarray, idx: np.ndarray, mask: int) -> np.ndarray:
    return np.conj(v) * v[idx ^ mask]


def site_magnetization(v: np.ndarray, site: int) -> np.ndarray:
    """(<Sx>, <Sy>, <Sz>) on one site."""
    idx = _index(v.shape[0])
    down = (idx >> site) & 1
    prob = np.abs(v) ** 2
    mz = 0.5 * float(np.sum(prob * (1 - 2 * down)))
    ov = _flip_overlap(v, idx, 1 << site)
    mx = 0.5 * float(np.sum(ov).real)
    # <up|Sy|down> = -i/2, <down|Sy|up> = +i/2
    my = 0.5 * float(np.sum(ov * np.where(down, 1j, -1j)).real)
    return np.array([mx, my, mz])


def magnetization(v: np.ndarray, axis, site: int | None = None) -> float:
    """<S^axis> on ``site``, or its average over all sites."""
    check_normalized(v)
    a = _axis(axis)
    if site is not None:
        return float(site_magnetization(v, site)[a])
    n = _n_sites(v)
    return float(np.mean([site_magnetization(v, i)[a] for i in range(n)]))


def site_magnetizations(v: np.ndarray) -> np.ndarray:
    """(N, 3) array of per-site magnetizations."""
    check_normalized(v)
    return np.array([site_magnetization(v, i) for i in range(_n_sites(v))])


def _pair_correlators(v: np.ndarray, i: int, j: int) -> np.ndarray:
    idx = _index(v.shape[0])
    same = ((idx >> i) & 1) == ((idx >> j) & 1)
    prob = np.abs(v) ** 2
    gzz = 0.25 * float(np.sum(np.where(same, prob, -prob)))
    ov = _flip_overlap(v, idx, (1 << i) | (1 << j))
    gxx = 0.25 * float(np.sum(ov).real)
    # sigma^y sigma^y maps |uu> -> -|dd> and |ud> -> +|du>
    gyy = 0.25 * float(np.sum(np.where(same, -ov, ov)).real)
    return np.array([gxx, gyy, gzz])


def correlator(v: np.ndarray, i: int, j: int, axis) -> float:
    """<S^a_i S^a_j> for ``i != j``."""
    if i == j:
        raise ValueError("correlator needs two distinct sites (S^a_i S^a_i = 1/4)")
    check_normalized(v)
    return float(_pair_correlators(v, i, j)[_axis(axis)])


def correlators(v: np.ndarray, i: int, j: int) -> np.ndarray:
    """(gxx, gyy, gzz) for the pair ``(i, j)``."""
    if i == j:
        raise ValueError("correlator needs two distinct sites")
    check_normalized(v)
    return _pair_correlators(v, i, j)


def reduced_density_matrix(v: np.ndarray, sites) -> np.ndarray:
    """Partial trace onto one or two sites.

    Local basis order is (up, down); for two sites the first listed site is
    the left tensor factor.
    """
    sites = [int(s) for s in np.atleast_1d(sites)]
    if len(sites) not in (1, 2) or len(set(sites)) != len(sites):
        raise ValueError("reduced density matrix supports one or two distinct sites")
    n = _n_sites(v)
    check_normalized(v)
    # C-order reshape puts site n-1 on axis 0
    psi = v.reshape((2,) * n)
    keep = [n - 1 - s for s in sites]
    rest = [a for a in range(n) if a not in keep]
    mat = np.transpose(psi, keep + rest).reshape(2 ** len(sites), -1)
    rho = mat @ mat.conj().T
    return 0.5 * (rho + rho.conj().T)


def structure_factor_xx(v: np.ndarray, lattice: LatticeSpec,
                        staggered: bool = False) -> float:
    """S_xx(q=0) = (1/N) sum_ij <Sx_i Sx_j>, on-site terms included.

    ``staggered=True`` weights each pair by the sublattice signs, i.e.
    evaluates the q=0 structure factor of the rotated frame.
    """
    if not lattice.periodic:
        warnings.warn("structure factor on open lattice: raw sum returned",
                      stacklevel=2)
    check_normalized(v)
    n = lattice.n_sites
    s = lattice.signs if staggered else np.ones(n)
    total = 0.25 * n
    for i in range(n):
        for j in range(i + 1, n):
            total += 2 * s[i] * s[j] * _pair_correlators(v, i, j)[0]
    return total / n


@dataclass
class ObservableSet:
    """Site-averaged magnetizations and class-averaged correlators.

    In-plane components are in the rotated frame: ``M[0]``, ``M[1]`` are
    staggered averages and ``g`` carries ``s_i s_j`` on its xx and yy parts.
    ``site_M`` keeps the raw per-site values.
    """
    M: np.ndarray
    site_M: np.ndarray
    g: dict
    sxx0: float


def measure(v: np.ndarray, lattice: LatticeSpec,
            shells: list[Shell] | None = None) -> ObservableSet:
    shells = lattice.shells if shells is None else shells
    site_M = site_magnetizations(v)
    s = lattice.signs
    M = np.array([np.mean(s * site_M[:, 0]), np.mean(s * site_M[:, 1]),
                  np.mean(site_M[:, 2])])
    g = {}
    n = lattice.n_sites
    sxx = 0.25 * n
    for shell in shells:
        acc = np.zeros(3)
        for i, j in shell.pairs:
            c = _pair_correlators(v, i, j)
            c[:2] *= s[i] * s[j]
            acc += c
            sxx += 2 * c[0]
        g[shell.key] = acc / len(shell.pairs)
    covered = sum(len(sh.pairs) for sh in shells)
    sxx0 = sxx / n if covered == n * (n - 1) // 2 else float("nan")
    return ObservableSet(M, site_M, g, sxx0)
