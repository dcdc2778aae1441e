"""Exactly factorized ground states of the XYZ antiferromagnet.

Fields and energies use the coordination-normalized exchange
(``ModelParams.for_lattice``), in which the factorizing-field ellipsoid and
the factorized energy per site do not depend on the lattice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .eigensolver import SolverConfig, ground_state
from .lattice import LatticeSpec
from .model import MAX_SITES, Hamiltonian, ModelParams

RESIDUAL_TOL = 1e-9
GROUND_TOL_PER_SITE = 1e-8


class FactorizationError(ValueError):
    pass


def _ellipsoid_axes(delta_y: float, delta_z: float) -> tuple[float, float, float]:
    a = (1 + delta_y) * (1 + delta_z)
    b = (1 + delta_y) * (delta_y + delta_z)
    c = (1 + delta_z) * (delta_y + delta_z)
    if min(1 + delta_y, 1 + delta_z, delta_y + delta_z) <= 0:
        raise FactorizationError("anisotropies give a degenerate ellipsoid")
    return a, b, c


def ellipsoid_value(h, delta_y: float, delta_z: float) -> float:
    """hx^2/A + hy^2/B + hz^2/C, equal to 4 on the factorizing ellipsoid."""
    a, b, c = _ellipsoid_axes(delta_y, delta_z)
    hx, hy, hz = np.asarray(h, dtype=float)
    return hx ** 2 / a + hy ** 2 / b + hz ** 2 / c


def ellipsoid_field(delta_y: float, delta_z: float, direction) -> np.ndarray:
    """Factorizing field along ``direction`` (normalized internally)."""
    a, b, c = _ellipsoid_axes(delta_y, delta_z)
    u = np.asarray(direction, dtype=float)
    norm = float(np.linalg.norm(u))
    if u.shape != (3,) or norm == 0 or not np.isfinite(norm):
        raise FactorizationError("direction must be a non-zero 3-vector")
    u = u / norm
    s = 2.0 / math.sqrt(u[0] ** 2 / a + u[1] ** 2 / b + u[2] ** 2 / c)
    return s * u


def factorizing_field_xyx(delta_y: float) -> float:
    """|h_f| for Delta_z = 1 and the field along z."""
    return 2.0 * math.sqrt(2.0 * (1.0 + delta_y))


def factorized_energy(delta_y: float, delta_z: float) -> float:
    """Energy per site of the factorized state, -(1 + Dy + Dz) / 2."""
    return -(1.0 + delta_y + delta_z) / 2.0


def _wrap_phi(phi: float) -> float:
    phi = math.remainder(phi, 2 * math.pi)
    return math.pi if phi <= -math.pi else phi


@dataclass(frozen=True)
class ProductAngles:
    """Polar and azimuthal angles of the spin direction on each sublattice."""
    theta1: float
    phi1: float
    theta2: float
    phi2: float

    @classmethod
    def canonical(cls, theta1, phi1, theta2, phi2) -> "ProductAngles":
        """Map arbitrary angles onto theta in [0, pi], phi in (-pi, pi]."""
        out = []
        for th, ph in ((theta1, phi1), (theta2, phi2)):
            th = math.remainder(th, 2 * math.pi)
            if th < 0:
                th, ph = -th, ph + math.pi
            out += [th, _wrap_phi(ph)]
        return cls(*out)

    def directions(self) -> np.ndarray:
        """(2, 3) unit vectors n_1, n_2."""
        return np.array([_unit(self.theta1, self.phi1), _unit(self.theta2, self.phi2)])

    def mirrored(self) -> "ProductAngles":
        """Both in-plane components reversed (phi -> phi + pi)."""
        return ProductAngles.canonical(self.theta1, self.phi1 + math.pi,
                                       self.theta2, self.phi2 + math.pi)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.theta1, self.phi1, self.theta2, self.phi2)

    def describe(self) -> dict:
        return dict(theta1=self.theta1, phi1=self.phi1,
                    theta2=self.theta2, phi2=self.phi2)


def _unit(theta: float, phi: float) -> np.ndarray:
    return np.array([math.cos(phi) * math.sin(theta), math.sin(phi) * math.sin(theta),
                     math.cos(theta)])


def product_angles_xyx(delta_y: float) -> ProductAngles:
    """Closed-form sublattice angles at the XYX factorizing field along z."""
    if not delta_y > 0:
        raise FactorizationError("delta_y must be positive")
    if delta_y < 1:
        theta = math.acos(math.sqrt((1 + delta_y) / 2))
        return ProductAngles(theta, 0.0, theta, math.pi)
    if delta_y > 1:
        theta = math.acos(math.sqrt(2 / (1 + delta_y)))
        return ProductAngles(theta, math.pi / 2, theta, -math.pi / 2)
    return ProductAngles(0.0, 0.0, 0.0, 0.0)


def product_state(angles: ProductAngles, labels, n_sites: int | None = None,
                  max_sites: int = MAX_SITES) -> np.ndarray:
    """Tensor product of the sublattice spinors (cos(t/2), e^{i p} sin(t/2))."""
    labels = np.asarray(labels)
    n = len(labels) if n_sites is None else int(n_sites)
    if n != len(labels):
        raise ValueError("one sublattice label per site is required")
    if n > max_sites:
        raise FactorizationError(f"N={n} exceeds the site cap of {max_sites}")
    spinors = {
        1: np.array([math.cos(angles.theta1 / 2),
                     np.exp(1j * angles.phi1) * math.sin(angles.theta1 / 2)]),
        2: np.array([math.cos(angles.theta2 / 2),
                     np.exp(1j * angles.phi2) * math.sin(angles.theta2 / 2)]),
    }
    psi = np.ones(1, dtype=complex)
    # site n-1 is the leftmost factor
    for site in range(n - 1, -1, -1):
        psi = np.kron(psi, spinors[int(labels[site])])
    if np.all(np.abs(psi.imag) == 0):
        psi = psi.real.copy()
    return psi


def product_energy(angles, params: ModelParams, lattice: LatticeSpec) -> float:
    """<psi|H|psi> of a two-sublattice product state, without any 2^N vector."""
    if isinstance(angles, ProductAngles):
        angles = angles.as_tuple()
    n1, n2 = _unit(angles[0], angles[1]), _unit(angles[2], angles[3])
    return _energy(n1, n2, *_energy_terms(params, lattice))


def _energy_terms(params: ModelParams, lattice: LatticeSpec):
    labels = lattice.labels
    for i, j in lattice.bonds:
        if labels[i] == labels[j]:
            raise FactorizationError("bond inside one sublattice")
    d = params.exchange / 4 * np.array([1.0, params.delta_y, params.delta_z])
    h = params.site_fields(lattice)
    f1 = h[labels == 1].sum(axis=0) / 2
    f2 = h[labels == 2].sum(axis=0) / 2
    return len(lattice.bonds) * d, f1, f2


def _energy(n1, n2, d, f1, f2) -> float:
    return float(np.sum(d * n1 * n2) - f1 @ n1 - f2 @ n2)


def _polish(n1, n2, d, f1, f2, sweeps: int = 100000, tol: float = 1e-15):
    """Alternating exact minimization over one sublattice direction at a time.

    For fixed n2 the energy is linear in n1, minimized by n1 = -g1/|g1|; each
    step lowers the energy, and the fixed point is a stationary point.
    """
    for _ in range(sweeps):
        g1 = d * n2 - f1
        m1 = -g1 / np.linalg.norm(g1) if np.linalg.norm(g1) > 0 else n1
        g2 = d * m1 - f2
        m2 = -g2 / np.linalg.norm(g2) if np.linalg.norm(g2) > 0 else n2
        change = max(np.max(np.abs(m1 - n1)), np.max(np.abs(m2 - n2)))
        n1, n2 = m1, m2
        if change < tol:
            break
    return n1, n2


def _angles_of(n) -> tuple[float, float]:
    theta = math.acos(max(-1.0, min(1.0, float(n[2]))))
    phi = math.atan2(float(n[1]), float(n[0])) if math.hypot(n[0], n[1]) > 0 else 0.0
    return theta, phi


def variational_product_solve(params: ModelParams, lattice: LatticeSpec,
                              seeds: int = 16, seed: int = 0,
                              xatol: float = 1e-10) -> tuple[ProductAngles, float]:
    """Lowest two-sublattice product-state energy and its angles.

    Nelder-Mead from ``seeds`` random starts, then the best simplex is
    polished by alternating exact minimization over each sublattice direction.
    """
    terms = _energy_terms(params, lattice)
    rng = np.random.default_rng(seed)

    def energy(x):
        return _energy(_unit(x[0], x[1]), _unit(x[2], x[3]), *terms)

    best = None
    for _ in range(seeds):
        x0 = rng.uniform([0, -math.pi, 0, -math.pi], [math.pi, math.pi, math.pi, math.pi])
        res = optimize.minimize(energy, x0, method="Nelder-Mead",
                                options=dict(xatol=xatol, fatol=1e-15, maxiter=20000,
                                             maxfev=40000))
        if best is None or res.fun < best.fun:
            best = res
    if best is None or not np.isfinite(best.fun):
        raise FactorizationError("variational search failed for every seed")
    x, e = best.x, float(best.fun)
    n1, n2 = _polish(_unit(x[0], x[1]), _unit(x[2], x[3]), *terms)
    if _energy(n1, n2, *terms) <= e + 1e-14:
        x = _angles_of(n1) + _angles_of(n2)
        e = _energy(n1, n2, *terms)
    return ProductAngles.canonical(*x), e


@dataclass
class FactorizationCertificate:
    field: np.ndarray
    energy_per_site: float
    residual: float
    is_ground: bool
    angles: ProductAngles
    ground_energy_per_site: float = math.nan
    n_sites: int = 0

    @property
    def valid(self) -> bool:
        return self.residual <= RESIDUAL_TOL and self.is_ground

    def describe(self) -> dict:
        return {"field": [float(h) for h in self.field],
                "angles": self.angles.describe(),
                "energy_per_site": self.energy_per_site,
                "ground_energy_per_site": self.ground_energy_per_site,
                "residual": self.residual, "is_ground": self.is_ground,
                "valid": self.valid, "n_sites": self.n_sites}


def certify_factorization(params: ModelParams, lattice: LatticeSpec,
                          angles: ProductAngles,
                          solver: SolverConfig = SolverConfig()) -> FactorizationCertificate:
    """Check that the product state is an eigenstate and the ground state.

    A failed check is reported in the certificate, not raised.
    """
    ham = Hamiltonian(params, lattice)
    psi = product_state(angles, lattice.labels)
    hpsi = ham.apply(psi)
    e = float(np.vdot(psi, hpsi).real)
    residual = float(np.linalg.norm(hpsi - e * psi))
    gs = ground_state(ham, solver, want_gap=False)
    n = lattice.n_sites
    return FactorizationCertificate(
        field=np.asarray(params.field, dtype=float), energy_per_site=e / n,
        residual=residual, is_ground=abs(e - gs.energy) <= GROUND_TOL_PER_SITE * n,
        angles=angles, ground_energy_per_site=gs.energy / n, n_sites=n)


def xyx_params(delta_y: float, lattice: LatticeSpec) -> ModelParams:
    """Coordination-normalized XYX parameters at the factorizing field along z."""
    return ModelParams.for_lattice(lattice, delta_y=delta_y, delta_z=1.0,
                                   field=(0.0, 0.0, factorizing_field_xyx(delta_y)))
