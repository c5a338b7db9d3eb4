"""Index theory for Hermitian polynomial matrix pencils.

A pencil ``P(lam) = sum_k lam**k L_k - g(lam) I`` with Hermitian ``L_k``
and real ``g`` has real eigenvalue curves ``mu_j(lam)``.  Their zeros are
the real characteristic values; the order and sign with which each curve
vanishes fix its Krein signature, and counts of negative curves tie all
signatures together.
"""

from .branches import (BranchDerivatives, BranchFamily, CharacteristicValue,
                       branch_derivatives, curves_csv, find_characteristic_values,
                       negative_count, tau_cluster, tau_zero, track_branches)
from .hamiltonian import (JLSpectrum, KernelFormD, generalized_kernel, jl_spectrum,
                          kernel_form, theorem1_check, theorem2_bound)
from .index_counts import (IndexReport, analyze, companion_oracle, compute_K_infinity,
                           kernel_identities, match_oracle, quadratic_counts, verify_global,
                           verify_local, z_at_infinity, z_formula, z_local, z_table)
from .krein import (KernelRecursionState, RootChain, chain_from_branch, chain_residuals,
                    graphical_krein, gram_matrix_linear, gram_matrix_quadratic,
                    kernel_recursion, krein_signature_of_cv, lambda_operators)
from .pencil_model import (GridSpec, HamiltonianProblem, InvalidProblemError,
                           InvariantBreach, NumericalFailure, PencilError, PolyPencil,
                           eval_pencil, eval_pencil_batch, load_problem,
                           problem_from_dict, problem_to_dict, save_problem)

__version__ = "0.1.0"
