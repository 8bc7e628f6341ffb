"""Graded-mesh L1 / finite-element solver for variable-exponent subdiffusion."""
from .errors import ConfigError, NumericalError
from .kernel import (ExponentModel, constant_exponent, digamma_fn, eval_g_tilde,
                     example1_exponent, example2_exponent, gamma_fn)
from .mesh import (GradedMesh, build_graded_mesh, check_lemma_bounds, complementary_kernels,
                   conv_weight_row, l1_weight_row)
from .space import SpatialGrid, build_operators, interpolate_nodal, solve_system
from .solver import GeneralMemorySpec, ProblemSpec, SolutionHistory, march, march_general
from .harness import ExperimentConfig, RateTable, run_invariant_suite, run_sweep

__version__ = "0.1.0"
