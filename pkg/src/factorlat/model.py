"""XYZ antiferromagnet in a uniform field: parameters and matrix-free action.

    H = sum_<ij> J [Sx_i Sx_j + dy Sy_i Sy_j + dz Sz_i Sz_j] - sum_i h . S_i
        - eps sum_i s_i S^a_i

where ``s_i = +1 (-1)`` on sublattice 1 (2) and ``a`` is the order axis
(x for dy <= 1, y for dy > 1).  The pinning term is staggered because the
ordered state is staggered in this (antiferromagnetic) frame.

Basis convention: bit ``i`` of a basis index is 0 when spin ``i`` is up.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace
from typing import Literal

import numpy as np
import scipy.sparse as sp

from . import _kernels_py, kernels
from .lattice import LatticeSpec, SizeError, coordination

Frame = Literal["original", "transformed"]

MAX_SITES = 24
DENSE_MAX_SITES = 12

SX = np.array([[0.0, 0.5], [0.5, 0.0]])
SY = np.array([[0.0, -0.5j], [0.5j, 0.0]])
SZ = np.array([[0.5, 0.0], [0.0, -0.5]])


@dataclass(frozen=True)
class ModelParams:
    """Anisotropies, field and pinning; ``exchange`` is the per-bond J.

    Use :meth:`for_lattice` to get the normalization in which the chain and
    the square lattice share one factorizing-field ellipsoid and one
    factorized energy per site (J = 4 / coordination).
    """
    delta_y: float = 1.0
    delta_z: float = 1.0
    field: tuple[float, float, float] = (0.0, 0.0, 0.0)
    pinning: float = 0.0
    exchange: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "field", tuple(float(h) for h in self.field))
        if len(self.field) != 3:
            raise ValueError("field must be a 3-vector")
        vals = (self.delta_y, self.delta_z, self.pinning, self.exchange) + self.field
        if not np.all(np.isfinite(vals)):
            raise ValueError("model parameters must be finite")
        if self.delta_y < 0 or self.delta_z < 0:
            raise ValueError("anisotropies must be non-negative")
        if self.pinning < 0:
            raise ValueError("pinning field must be non-negative")

    @classmethod
    def for_lattice(cls, lattice: LatticeSpec, **kwargs) -> "ModelParams":
        kwargs.setdefault("exchange", 4.0 / coordination(lattice))
        return cls(**kwargs)

    @property
    def order_axis(self) -> int:
        return 1 if self.delta_y > 1 else 0

    def with_field(self, field) -> "ModelParams":
        return replace(self, field=tuple(field))

    def scaled(self, factor: float) -> "ModelParams":
        """Same Hamiltonian multiplied by ``factor``."""
        return replace(self, exchange=self.exchange * factor,
                       field=tuple(factor * h for h in self.field),
                       pinning=self.pinning * factor)

    def site_fields(self, lattice: LatticeSpec) -> np.ndarray:
        """(N, 3) effective field on every site, pinning included."""
        h = np.tile(np.asarray(self.field, dtype=float), (lattice.n_sites, 1))
        if self.pinning:
            h[:, self.order_axis] += self.pinning * lattice.signs
        return h

    def describe(self) -> dict:
        return {"delta_y": self.delta_y, "delta_z": self.delta_z,
                "field": list(self.field), "pinning": self.pinning,
                "exchange": self.exchange}


def _check_size(n_sites: int, cap: int) -> None:
    if n_sites > cap:
        raise SizeError(f"N={n_sites} exceeds the site cap of {cap}")


def spins(n_sites: int) -> np.ndarray:
    """(2^N, N) array of +-1 (up = +1) for every basis state."""
    idx = np.arange(2 ** n_sites, dtype=np.int64)
    return 1 - 2 * ((idx[:, None] >> np.arange(n_sites)) & 1)


def parity_of_states(n_sites: int) -> np.ndarray:
    """Eigenvalue of prod_i sigma^z_i (+1 or -1) per basis state."""
    idx = np.arange(2 ** n_sites, dtype=np.uint64)
    return 1 - 2 * (np.bitwise_count(idx).astype(np.int64) & 1)


def _default_threads() -> int:
    return int(os.environ.get("FACTORLAT_THREADS", os.cpu_count() or 1))


class Hamiltonian:
    """Matrix-free XYZ Hamiltonian on a lattice.

    The state vector is real when no site carries a y field, complex
    otherwise; :attr:`dtype` reports which.
    """

    def __init__(self, params: ModelParams, lattice: LatticeSpec,
                 frame: Frame = "original", max_sites: int = MAX_SITES,
                 n_threads: int | None = None):
        if frame not in ("original", "transformed"):
            raise ValueError(f"unknown frame {frame!r}")
        _check_size(lattice.n_sites, max_sites)
        self.params = params
        self.lattice = lattice
        self.frame = frame
        self.n_sites = n = lattice.n_sites
        self.dim = 2 ** n
        self.n_threads = n_threads or _default_threads()

        bonds = lattice.bonds
        self._bond_i = np.ascontiguousarray(bonds[:, 0], dtype=np.int64)
        self._bond_j = np.ascontiguousarray(bonds[:, 1], dtype=np.int64)
        J, dy, dz = params.exchange, params.delta_y, params.delta_z
        sign = -1.0 if frame == "transformed" else 1.0
        nb = len(bonds)
        self._c_par = np.full(nb, sign * J * (1 - dy) / 4)
        self._c_anti = np.full(nb, sign * J * (1 + dy) / 4)

        h = params.site_fields(lattice)
        if frame == "transformed":
            h[:, :2] *= lattice.signs[:, None]
        self.site_fields = h
        self.parity_symmetric = not np.any(h[:, :2])
        self.dtype = np.complex128 if np.any(h[:, 1]) else np.float64
        self._f_real = np.ascontiguousarray(-h[:, 0] / 2)
        self._f_up = np.ascontiguousarray(-h[:, 0] / 2 + 0.5j * h[:, 1])
        self._f_down = np.ascontiguousarray(-h[:, 0] / 2 - 0.5j * h[:, 1])
        self.diagonal = self._diagonal(h[:, 2], J * dz / 4)

    def _diagonal(self, hz: np.ndarray, czz: float) -> np.ndarray:
        idx = np.arange(self.dim, dtype=np.int64)
        diag = np.zeros(self.dim)
        for i, j in zip(self._bond_i, self._bond_j):
            parallel = ((idx >> i) & 1) == ((idx >> j) & 1)
            diag += np.where(parallel, czz, -czz)
        for i in range(self.n_sites):
            if hz[i]:
                up = ((idx >> i) & 1) == 0
                diag -= np.where(up, 0.5, -0.5) * hz[i]
        return diag

    def apply(self, v: np.ndarray, out: np.ndarray | None = None,
              backend: str | None = None) -> np.ndarray:
        """Return ``H @ v`` without forming ``H``."""
        if v.shape != (self.dim,):
            raise ValueError(f"vector has shape {v.shape}, expected ({self.dim},)")
        impl = kernels.backend(backend)
        if self.dtype == np.float64 and not np.iscomplexobj(v):
            v = np.ascontiguousarray(v, dtype=np.float64)
            if out is None:
                out = np.empty(self.dim)
            impl.apply_real(v, out, self.diagonal, self._bond_i, self._bond_j,
                            self._c_par, self._c_anti, self._f_real, self.n_threads)
            return out
        v = np.ascontiguousarray(v, dtype=np.complex128)
        if out is None:
            out = np.empty(self.dim, dtype=np.complex128)
        impl.apply_complex(v, out, self.diagonal, self._bond_i, self._bond_j,
                           self._c_par, self._c_anti, self._f_up, self._f_down,
                           self.n_threads)
        return out

    __call__ = apply

    def __matmul__(self, v):
        return self.apply(v)

    def expectation(self, v: np.ndarray) -> float:
        return float(np.vdot(v, self.apply(v)).real / np.vdot(v, v).real)

    def sector(self, parity: int) -> "ParitySector":
        if not self.parity_symmetric:
            raise ValueError("Hamiltonian does not conserve spin-flip parity")
        return ParitySector(self, parity)


class ParitySector:
    """Restriction of a parity-conserving Hamiltonian to one parity sector.

    Sector index ``r`` stands for the basis state ``b = (r << 1) | bit0``,
    with bit 0 fixed by the parity, so the sector has dimension 2^(N-1).
    """

    def __init__(self, ham: Hamiltonian, parity: int):
        if parity not in (1, -1):
            raise ValueError("parity must be +1 or -1")
        self.ham = ham
        self.parity = parity
        self.odd = 0 if parity == 1 else 1
        self.dim = ham.dim // 2
        self.dtype = np.float64
        self.indices = _kernels_py.sector_states(self.dim, self.odd)

    def embed(self, x: np.ndarray) -> np.ndarray:
        v = np.zeros(self.ham.dim, dtype=x.dtype)
        v[self.indices] = x
        return v

    def apply(self, x: np.ndarray, backend: str | None = None) -> np.ndarray:
        h = self.ham
        x = np.ascontiguousarray(x, dtype=np.float64)
        out = np.empty(self.dim)
        kernels.backend(backend).apply_sector_real(
            x, out, h.diagonal, h._bond_i, h._bond_j, h._c_par, h._c_anti,
            self.odd, h.n_threads)
        return out

    __call__ = apply


def apply_hamiltonian(params: ModelParams, lattice: LatticeSpec,
                      v: np.ndarray, max_sites: int = MAX_SITES) -> np.ndarray:
    """``H @ v`` in the original frame for a one-off application."""
    n = lattice.n_sites
    _check_size(n, max_sites)
    if v.shape != (2 ** n,):
        raise ValueError(f"vector dimension {v.shape} does not match 2^{n}")
    return Hamiltonian(params, lattice, max_sites=max_sites).apply(v)


def _site_op(op, i: int, n: int) -> sp.csr_matrix:
    # site n-1 is the most significant bit, i.e. the leftmost Kronecker factor
    left = sp.identity(2 ** (n - 1 - i), format="csr")
    right = sp.identity(2 ** i, format="csr")
    return sp.kron(sp.kron(left, sp.csr_matrix(op)), right, format="csr")


def dense_matrix(params: ModelParams, lattice: LatticeSpec,
                 frame: Frame = "original") -> np.ndarray:
    """Full matrix built from Kronecker products of spin operators.

    Independent of the bitwise kernels; used as the small-N oracle.
    """
    n = lattice.n_sites
    if n > DENSE_MAX_SITES:
        raise SizeError(f"dense matrix refused for N={n} > {DENSE_MAX_SITES}")
    ops = [[_site_op(o, i, n) for o in (SX, SY, SZ)] for i in range(n)]
    J = params.exchange
    couplings = np.array([1.0, params.delta_y, params.delta_z]) * J
    h = params.site_fields(lattice)
    if frame == "transformed":
        couplings[:2] *= -1
        h[:, :2] *= lattice.signs[:, None]
    m = sp.csr_matrix((2 ** n, 2 ** n), dtype=complex)
    for i, j in lattice.bonds:
        for a in range(3):
            m = m + couplings[a] * (ops[i][a] @ ops[j][a])
    for i in range(n):
        for a in range(3):
            if h[i, a]:
                m = m - h[i, a] * ops[i][a]
    dense = m.toarray()
    if not np.any(h[:, 1]):
        dense = dense.real.copy()
    return dense


def canonical_transform(v: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Apply prod_{i in sublattice 2} (2 Sz_i) to ``v``.

    Conjugating with this unitary flips Sx and Sy on sublattice 2, which
    turns the antiferromagnetic xy exchange ferromagnetic.  It is its own
    inverse.
    """
    labels = np.asarray(labels)
    n = len(labels)
    if v.shape != (2 ** n,):
        raise ValueError("vector dimension does not match the labels")
    mask = 0
    for i in np.flatnonzero(labels == 2):
        mask |= 1 << int(i)
    idx = np.arange(2 ** n, dtype=np.uint64)
    downs = np.bitwise_count(idx & np.uint64(mask)).astype(np.int64)
    return np.where(downs & 1, -v, v)
