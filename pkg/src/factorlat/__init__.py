"""Exact diagonalization of the XYZ antiferromagnet in a field, with
entanglement estimators and factorized-ground-state certification."""

__version__ = "0.1.0"

from .eigensolver import ConvergenceError, GroundState, SolverConfig, ground_state
from .entanglement import (concurrence_formula, concurrence_wootters,
                           entanglement_report, one_tangle)
from .factorization import (ProductAngles, certify_factorization, ellipsoid_field,
                            factorized_energy, product_angles_xyx, product_state,
                            variational_product_solve)
from .kernels import BACKEND
from .lattice import LatticeSpec, build_lattice
from .model import Hamiltonian, ModelParams
from .observables import measure
from .sweep import SweepGrid, run_sweep

__all__ = [
    "BACKEND", "ConvergenceError", "GroundState", "Hamiltonian", "LatticeSpec",
    "ModelParams", "ProductAngles", "SolverConfig", "SweepGrid", "build_lattice",
    "certify_factorization", "concurrence_formula", "concurrence_wootters",
    "ellipsoid_field", "entanglement_report", "factorized_energy", "ground_state",
    "measure", "one_tangle", "product_angles_xyx", "product_state", "run_sweep",
    "variational_product_solve",
]
