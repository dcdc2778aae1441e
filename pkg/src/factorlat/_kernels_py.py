"""Pure numpy implementation of the Hamiltonian action kernels.

Same signatures and semantics as the compiled ``_kernels`` module.
"""

import numpy as np


def _index(dim):
    return np.arange(dim, dtype=np.int64)


def _bond_terms(v, out, idx, bond_i, bond_j, c_par, c_anti):
    for i, j, cp, ca in zip(bond_i, bond_j, c_par, c_anti):
        parallel = ((idx >> i) & 1) == ((idx >> j) & 1)
        m = (1 << int(i)) | (1 << int(j))
        out += np.where(parallel, cp, ca) * v[idx ^ m]


def apply_real(v, out, diag, bond_i, bond_j, c_par, c_anti, f_site, n_threads=1):
    idx = _index(v.shape[0])
    np.multiply(diag, v, out=out)
    _bond_terms(v, out, idx, bond_i, bond_j, c_par, c_anti)
    for k, f in enumerate(f_site):
        if f != 0.0:
            out += f * v[idx ^ (1 << k)]


def apply_complex(v, out, diag, bond_i, bond_j, c_par, c_anti, f_up, f_down,
                  n_threads=1):
    idx = _index(v.shape[0])
    np.multiply(diag, v, out=out)
    _bond_terms(v, out, idx, bond_i, bond_j, c_par, c_anti)
    for k, (fu, fd) in enumerate(zip(f_up, f_down)):
        if fu == 0 and fd == 0:
            continue
        down = ((idx >> k) & 1).astype(bool)
        out += np.where(down, fd, fu) * v[idx ^ (1 << k)]


def sector_states(dim, odd):
    """Basis state ``b`` of every sector index ``r`` (see the compiled kernel)."""
    r = np.arange(dim, dtype=np.int64)
    bit0 = (np.bitwise_count(r.astype(np.uint64)).astype(np.int64) & 1) ^ odd
    return (r << 1) | bit0


def apply_sector_real(x, out, diag, bond_i, bond_j, c_par, c_anti, odd, n_threads=1):
    b = sector_states(x.shape[0], odd)
    np.multiply(diag[b], x, out=out)
    for i, j, cp, ca in zip(bond_i, bond_j, c_par, c_anti):
        parallel = ((b >> i) & 1) == ((b >> j) & 1)
        m = (1 << int(i)) | (1 << int(j))
        out += np.where(parallel, cp, ca) * x[(b ^ m) >> 1]
