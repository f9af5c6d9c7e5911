"""Exact computations for curved cyclic L-infinity algebras, formal L-manifolds,
tree spaces H_S and the weighted graph complex."""
from .cohft import build_I, check_axioms, y_tau
from .exactnum import RowReducer, SparseMatrix, nullspace_basis, quotient_dimension, rank
from .formal import (
    FormalLManifold,
    TruncatedSuperSeries,
    euler_check,
    example_generator,
    lie_condition_residual,
    operations_to_potential,
    potential_to_operations,
)
from .graphcx import cohomology_dimension, d_squared_failures
from .linfty import LinftyStructure, check_all_jacobi, gl_structure, jacobi_residual, validate_structure
from .superlin import PairingForm, SuperSpace, koszul_sign
from .treespace import h_dimension, metric_stable_tree_count, presentation_check

__version__ = "0.1.0"
