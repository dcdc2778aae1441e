"""One-tangle, concurrence, tau_2, entanglement ratio and the CKW check."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import mpmath
import numpy as np

from .lattice import LatticeSpec, Shell
from .observables import ObservableSet, measure, reduced_density_matrix

PSD_TOL = 1e-12
TAU1_AGREEMENT = 1e-12
RADICAND_TOL = 1e-12
RATIO_THRESHOLD = 1e-8
CKW_TOL = 1e-9

SIGMA_YY = np.array([[0, 0, 0, -1],
                     [0, 0, 1, 0],
                     [0, 1, 0, 0],
                     [-1, 0, 0, 0]], dtype=complex)


class EntanglementError(ValueError):
    """Inputs inconsistent with a physical state."""


class CutoffError(EntanglementError):
    """Concurrence has not died out at the outermost included shell."""


def _check_psd(rho: np.ndarray) -> None:
    if np.max(np.abs(rho - rho.conj().T)) > PSD_TOL:
        raise EntanglementError("density matrix is not Hermitian")
    w = np.linalg.eigvalsh(rho)
    if w[0] < -PSD_TOL:
        raise EntanglementError(f"density matrix has eigenvalue {w[0]:.3e} < 0")
    if abs(np.trace(rho).real - 1) > PSD_TOL * 10:
        raise EntanglementError("density matrix trace differs from 1")


def one_tangle(rho: np.ndarray | None = None,
               magnetization: Sequence[float] | None = None) -> float:
    """tau_1 = 4 det rho1 = 1 - 4 sum_a (M^a)^2.

    With both arguments the two forms are compared and must agree to
    1e-12; the determinant form is returned.
    """
    if rho is None and magnetization is None:
        raise TypeError("one_tangle needs rho or magnetization")
    from_m = None
    if magnetization is not None:
        m = np.asarray(magnetization, dtype=float)
        from_m = 1.0 - 4.0 * float(m @ m)
    if rho is None:
        return from_m
    rho = np.asarray(rho)
    if rho.shape != (2, 2):
        raise ValueError("one-tangle needs a one-site density matrix")
    _check_psd(rho)
    from_det = 4.0 * float(np.linalg.det(rho).real)
    if from_m is not None and abs(from_det - from_m) > TAU1_AGREEMENT:
        raise EntanglementError(
            f"one-tangle forms disagree: det {from_det!r} vs magnetization {from_m!r}")
    return from_det


class Concurrence(NamedTuple):
    value: float
    branch: str  # "1", "2" or "zero"
    c1: float
    c2: float


def concurrence_formula(gxx: float, gyy: float, gzz: float, mz: float) -> Concurrence:
    """Closed-form concurrence of a parity-symmetric, real two-site state.

    C = 2 max(0, C1, C2) with C1 = gzz - 1/4 + |gxx - gyy| and
    C2 = |gxx + gyy| - sqrt((1/4 + gzz)^2 - mz^2).
    """
    radicand = (0.25 + gzz) ** 2 - mz ** 2
    if radicand < -RADICAND_TOL:
        raise EntanglementError(f"negative radicand {radicand:.3e}: inconsistent inputs")
    c1 = gzz - 0.25 + abs(gxx - gyy)
    c2 = abs(gxx + gyy) - math.sqrt(max(radicand, 0.0))
    best = max(0.0, c1, c2)
    if best == 0.0:
        branch = "zero"
    else:
        branch = "1" if c1 >= c2 else "2"
    return Concurrence(2.0 * best, branch, c1, c2)


def concurrence_wootters(rho: np.ndarray, digits: int = 40) -> float:
    """Wootters concurrence max(0, l1 - l2 - l3 - l4) of a two-qubit state.

    The ``l`` are the square roots of the eigenvalues of
    rho (sy x sy) rho* (sy x sy), found in extended precision so that
    near-zero eigenvalues do not leak square-root noise into C.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ValueError("Wootters concurrence needs a 4x4 density matrix")
    _check_psd(rho)
    with mpmath.workdps(digits):
        r = mpmath.matrix(rho.tolist())
        y = mpmath.matrix(SIGMA_YY.tolist())
        rt = r * y * r.conjugate() * y
        ev = mpmath.eig(rt, left=False, right=False)
        lam = sorted((mpmath.sqrt(max(mpmath.re(e), 0)) for e in ev), reverse=True)
        c = lam[0] - lam[1] - lam[2] - lam[3]
        return float(max(c, 0))


def tau_two(concurrences: Sequence[float], multiplicities: Sequence[int],
            cutoff: int | None = None, tol: float = 1e-12) -> float:
    """tau_2 = sum_{j != i} C_ij^2 over shells.

    ``cutoff=None`` means the shells given are every shell of the lattice.
    Otherwise only the first ``cutoff`` shells are summed and the
    concurrence of the last one must vanish.
    """
    c = np.asarray(concurrences, dtype=float)
    mult = np.asarray(multiplicities, dtype=float)
    if c.shape != mult.shape:
        raise ValueError("one multiplicity per shell is required")
    if cutoff is not None:
        if not 1 <= cutoff <= len(c):
            raise ValueError(f"cutoff {cutoff} outside 1..{len(c)}")
        c, mult = c[:cutoff], mult[:cutoff]
        if c[-1] > tol:
            raise CutoffError(
                f"concurrence {c[-1]:.3e} at shell {cutoff}; increase the cutoff")
    return float(np.sum(mult * c ** 2))


def entanglement_ratio(tau1: float, tau2: float,
                       threshold: float = RATIO_THRESHOLD) -> float | None:
    """R = tau2 / tau1, or ``None`` when tau1 is below ``threshold``."""
    if tau1 < 0 or tau2 < 0:
        raise ValueError("tangles must be non-negative")
    if tau1 < threshold:
        return None
    return tau2 / tau1


def ckw_check(tau1: float, tau2: float) -> tuple[bool, float]:
    margin = tau1 - tau2
    return margin >= -CKW_TOL, margin


@dataclass
class EntanglementReport:
    tau1: float
    concurrences: list[Concurrence]
    shells: list[Shell]
    tau2: float
    ratio: float | None
    ckw_satisfied: bool
    ckw_margin: float
    tau1_deviation: float = 0.0
    wootters: list[float] = field(default_factory=list)

    @property
    def wootters_deviation(self) -> float:
        if not self.wootters:
            return math.nan
        return max(abs(w - c.value) for w, c in zip(self.wootters, self.concurrences))


def entanglement_report(v: np.ndarray, lattice: LatticeSpec,
                        obs: ObservableSet | None = None,
                        cutoff: int | None = None,
                        oracle: bool = True) -> EntanglementReport:
    """All entanglement estimators for a state on a periodic lattice.

    Concurrences use class-averaged correlators; the Wootters oracle is
    evaluated on the class-averaged two-site density matrix, which is the
    same two-site state.
    """
    shells = lattice.shells
    obs = measure(v, lattice, shells) if obs is None else obs
    n = lattice.n_sites

    tangles = []
    deviation = 0.0
    for i in range(n):
        rho1 = reduced_density_matrix(v, i)
        t_det = one_tangle(rho1)
        t_m = one_tangle(magnetization=obs.site_M[i])
        deviation = max(deviation, abs(t_det - t_m))
        tangles.append(t_det)
    tau1 = float(np.mean(tangles))

    mz = float(obs.M[2])
    conc = [concurrence_formula(*obs.g[sh.key], mz) for sh in shells]
    woot = []
    if oracle:
        for sh in shells:
            rho2 = sum(reduced_density_matrix(v, pair) for pair in sh.pairs) / len(sh.pairs)
            woot.append(concurrence_wootters(rho2))

    tau2 = tau_two([c.value for c in conc], [sh.multiplicity for sh in shells], cutoff)
    ok, margin = ckw_check(tau1, tau2)
    return EntanglementReport(
        tau1=tau1, concurrences=conc, shells=shells, tau2=tau2,
        ratio=entanglement_ratio(max(tau1, 0.0), tau2),
        ckw_satisfied=ok, ckw_margin=margin, tau1_deviation=deviation,
        wootters=woot)
