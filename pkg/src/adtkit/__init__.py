"""Operator-algebra equations of motion and Green's functions for small spin-1/2 systems."""
from .algebra import (
    OperatorSum,
    PauliWord,
    anticommutator,
    commutator,
    expand_operator,
    spin,
    structure_constants,
    trace_inner_product,
    word_product,
)
from .cobs import (
    GradedBasis,
    StateSpec,
    cumulant,
    cumulant_operator,
    density_matrix_from_expectations,
    enumerate_cobs,
    expectations_from_state,
    grade2_pair,
    two_spin_state,
)
from .greens import GreensFunction
from .models import ModelSpec, build_hubbard_atom, build_kondo_local, build_qsm_bond, build_qsm_lattice
from .oracle import compare_greens, exact_diagonalize, lehmann_greens, time_evolve_expectation
from .perturbation import exact_response_slope, hierarchy_response, naive_response, response_report
from .sdeom import (
    SdeomSystem,
    adjoint_action,
    assemble,
    assemble_conjugate,
    eigenstate_residual,
    krylov_closure,
    moment_series,
    pivotal_channels,
    solve_frequency,
)

__version__ = "0.1.0"
