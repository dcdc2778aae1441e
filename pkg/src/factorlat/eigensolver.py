"""Lanczos ground states with full reorthogonalization, and a dense oracle."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as sla

from .model import DENSE_MAX_SITES, Hamiltonian
from .lattice import SizeError


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, best_residual: float):
        super().__init__(f"{message} (best residual {best_residual:.3e})")
        self.best_residual = best_residual


@dataclass(frozen=True)
class SolverConfig:
    tolerance: float = 1e-10
    max_iterations: int = 500
    seed: int = 0
    k: int = 1
    # Krylov vectors kept before an explicit restart from the current Ritz vector
    krylov_size: int = 150

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.k not in (1, 2):
            raise ValueError("k must be 1 or 2")
        if self.max_iterations < 1 or self.krylov_size < 2:
            raise ValueError("max_iterations >= 1 and krylov_size >= 2 required")

    @property
    def degeneracy_threshold(self) -> float:
        return 100 * self.tolerance


@dataclass
class EigenResult:
    energies: np.ndarray
    vectors: list[np.ndarray]
    residuals: np.ndarray
    iterations: int
    degenerate: bool = False

    @property
    def energy(self) -> float:
        return float(self.energies[0])

    @property
    def vector(self) -> np.ndarray:
        return self.vectors[0]


def _random_start(dim: int, dtype, rng: np.random.Generator) -> np.ndarray:
    v = rng.uniform(-1.0, 1.0, dim)
    if np.dtype(dtype).kind == "c":
        v = v + 1j * rng.uniform(-1.0, 1.0, dim)
    return v


def _project_out(w: np.ndarray, basis: list[np.ndarray]) -> np.ndarray:
    for d in basis:
        w -= d * np.vdot(d, w)
    return w


def _lowest(apply: Callable, dim: int, dtype, v: np.ndarray, config: SolverConfig,
            deflate: list[np.ndarray]) -> tuple[float, np.ndarray, float, int]:
    """Lowest eigenpair of ``apply`` on the complement of ``deflate``."""
    tol = config.tolerance
    size = min(config.krylov_size, dim - len(deflate))
    used = 0
    best = math.inf
    complex_ = np.dtype(dtype).kind == "c"
    v = _project_out(v.astype(dtype), deflate)
    v /= np.linalg.norm(v)
    while used < config.max_iterations:
        V = np.empty((size, dim), dtype=dtype)
        V[0] = v
        alpha: list[float] = []
        beta: list[float] = []
        for m in range(size):
            w = apply(V[m])
            used += 1
            _project_out(w, deflate)
            a = float(np.vdot(V[m], w).real)
            alpha.append(a)
            w -= a * V[m]
            if m:
                w -= beta[-1] * V[m - 1]
            # full reorthogonalization, repeated while the norm collapses (DGKS)
            basis = V[:m + 1]
            b = float(np.linalg.norm(w))
            for _ in range(3):
                coeff = (basis.conj() if complex_ else basis) @ w
                w -= basis.T @ coeff
                b_new = float(np.linalg.norm(w))
                if b_new > 0.7071 * b:
                    break
                b = b_new
            b = b_new
            if deflate:
                _project_out(w, deflate)
                b = float(np.linalg.norm(w))
            if m == 0:
                theta, s = np.array([a]), np.ones((1, 1))
            else:
                theta, s = sla.eigh_tridiagonal(np.array(alpha), np.array(beta),
                                                select="i", select_range=(0, 0))
            estimate = b * abs(s[-1, 0])
            last = m == size - 1 or used >= config.max_iterations
            if estimate > 0.1 * tol and b > 1e-14 and not last:
                beta.append(b)
                V[m + 1] = w / b
                continue
            y = V[:m + 1].T @ s[:, 0]
            y /= np.linalg.norm(y)
            hy = apply(y)
            e = float(np.vdot(y, hy).real)
            res = float(np.linalg.norm(hy - e * y))
            best = min(best, res)
            if res <= tol:
                return e, y, res, used
            if b <= 1e-14 and res > tol:
                # invariant subspace reached without a converged vector: perturb
                y = y + 1e-3 * _random_start(dim, dtype, np.random.default_rng(used))
                _project_out(y, deflate)
                y /= np.linalg.norm(y)
            v = y
            break
    raise ConvergenceError(
        f"Lanczos did not converge in {config.max_iterations} iterations", best)


def lanczos_ground(apply: Callable, dim: int, config: SolverConfig = SolverConfig(),
                   dtype=np.float64) -> EigenResult:
    """``config.k`` lowest eigenpairs of a Hermitian linear map.

    The second pair is found by a fresh Lanczos run deflated against the
    converged ground vector.  Runs are deterministic in ``config.seed``.
    """
    rng = np.random.default_rng(config.seed)
    energies, vectors, residuals = [], [], []
    total = 0
    for n in range(config.k):
        if n >= dim:
            break
        e, y, r, used = _lowest(apply, dim, dtype, _random_start(dim, dtype, rng),
                                config, vectors)
        energies.append(e)
        vectors.append(y)
        residuals.append(r)
        total += used
    order = np.argsort(energies, kind="stable")
    energies = np.asarray(energies)[order]
    result = EigenResult(energies, [vectors[i] for i in order],
                         np.asarray(residuals)[order], total)
    if len(energies) == 2:
        result.degenerate = bool(energies[1] - energies[0] < config.degeneracy_threshold)
    return result


def dense_ground(matrix: np.ndarray, k: int = 1) -> EigenResult:
    """``k`` lowest eigenpairs of a dense Hermitian matrix, ascending."""
    dim = matrix.shape[0]
    if dim > 2 ** DENSE_MAX_SITES:
        raise SizeError(f"dense solve refused for dimension {dim}")
    w, v = np.linalg.eigh(matrix)
    k = min(k, dim)
    vecs = [v[:, i] for i in range(k)]
    res = np.array([np.linalg.norm(matrix @ x - e * x) for e, x in zip(w[:k], vecs)])
    return EigenResult(w[:k].copy(), vecs, res, 0)


def energy_gap(apply: Callable, dim: int, config: SolverConfig = SolverConfig(),
               dtype=np.float64) -> tuple[float, bool]:
    """``E1 - E0`` and whether it falls below the degeneracy threshold."""
    res = lanczos_ground(apply, dim, SolverConfig(
        config.tolerance, config.max_iterations, config.seed, 2, config.krylov_size),
        dtype)
    gap = max(float(res.energies[1] - res.energies[0]), 0.0)
    return gap, res.degenerate


@dataclass
class GroundState:
    """Ground state of a :class:`~factorlat.model.Hamiltonian`.

    ``gap`` is E1 - E0 over the whole spectrum.  When the Hamiltonian
    conserves spin-flip parity the ground state is taken with definite
    parity and ``gap_sector`` is the excitation gap inside its sector;
    otherwise ``gap_sector`` equals ``gap``.
    """
    energy: float
    vector: np.ndarray
    residual: float
    iterations: int
    gap: float = math.nan
    gap_sector: float = math.nan
    degenerate: bool = False
    parity: int = 0
    extra: dict = field(default_factory=dict)


def ground_state(ham: Hamiltonian, config: SolverConfig = SolverConfig(),
                 want_gap: bool = True, use_parity: bool = True) -> GroundState:
    if not (use_parity and ham.parity_symmetric and ham.n_sites >= 2):
        k = 2 if want_gap else 1
        res = lanczos_ground(ham.apply, ham.dim, SolverConfig(
            config.tolerance, config.max_iterations, config.seed, k,
            config.krylov_size), ham.dtype)
        gap = float(res.energies[1] - res.energies[0]) if want_gap else math.nan
        return GroundState(res.energy, res.vector, float(res.residuals.max()),
                           res.iterations, gap, gap, res.degenerate)

    one = SolverConfig(config.tolerance, config.max_iterations, config.seed, 1,
                       config.krylov_size)
    sectors = {p: ham.sector(p) for p in (1, -1)}
    lows = {p: lanczos_ground(s.apply, s.dim, one, ham.dtype) for p, s in sectors.items()}
    split = lows[-1].energy - lows[1].energy
    degenerate = abs(split) < config.degeneracy_threshold
    p0 = 1 if split > -config.degeneracy_threshold else -1
    low = lows[p0]
    iters = sum(r.iterations for r in lows.values())
    residual = max(float(r.residuals[0]) for r in lows.values())
    gap = gap_sector = math.nan
    if want_gap:
        sec = sectors[p0]
        second = _lowest(sec.apply, sec.dim, ham.dtype,
                         _random_start(sec.dim, ham.dtype,
                                       np.random.default_rng(config.seed + 1)),
                         one, [low.vector]) if sec.dim > 1 else (math.inf, None, 0.0, 0)
        e1, _, r1, used = second
        iters += used
        residual = max(residual, r1)
        gap_sector = e1 - low.energy
        gap = max(min(e1, lows[-p0].energy) - low.energy, 0.0)
    return GroundState(low.energy, sectors[p0].embed(low.vector), residual, iters,
                       gap, gap_sector, degenerate, p0)
