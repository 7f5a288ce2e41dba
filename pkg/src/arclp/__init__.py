"""Arc-search infeasible interior-point solvers for linear programming."""

from ._kernels import BACKEND as kernel_backend
from .arc import (ArcDerivatives, SigmaAlphaResult, StepThresholds,
                  alpha_s_case, alpha_x_case, derivatives, ellipse_point,
                  first_derivatives, max_alpha_for_sigma, mu_of_sigma_alpha,
                  second_derivative_split, select_sigma_alpha, thresholds)
from .bench import (BenchRecord, ProfileTable, performance_profile,
                    read_records_csv, run_single, run_suite,
                    write_profile_csv, write_records_csv)
from .kkt import (NormalEqFactor, NormalEqSolver, NumericalFailureError,
                  SymbolicFactor, factor, solve as solve_normal_equations,
                  symbolic_analyze)
from .model import (ALGORITHMS, Iterate, IterationStats, LpStructureError,
                    SolverConfig, SolveReport, SolveStatus, StandardLp,
                    composite_stop_metric, compute_residuals, duality_measure)
from .mps import (GeneralLp, ModelError, MpsParseError, StandardizeMap,
                  UnsupportedFeatureError, load_mps, parse_mps,
                  recover_solution, to_standard_form)
from .presolve import (ModelStatus, PresolveResult, PresolveTrace, postsolve,
                       presolve, scaling_ratio)
from .solvers import (check_termination, initial_point, rescale_alpha, solve,
                      step_algorithm1, step_algorithm2, step_mehrotra)

__version__ = "0.1.0"
