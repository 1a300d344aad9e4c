"""Target-eigenstate dynamics of driven quantum systems under dephasing noise.

The amplitude on a chosen instantaneous eigenstate obeys a closed
integro-differential equation with a memory kernel; this package builds the
kernel, solves the equation three ways, and averages over noise paths.
"""

from .eigenframe import (EigenFrame, GapClosureError, GaugeTwist, MatrixModel, PhaseRecord,
                         accumulate_phases, build_frame_path, coupling, frame_analytic, frame_numeric)
from .ensemble import EnsembleResult, averaged_kernel_run, metrics, run_ensemble
from .grid import TimeGrid
from .kernel import KernelContext, build_context, kernel_averaged, kernel_generic, kernel_tls
from .models import (FieldSample, ModelError, ModelKind, ModelSpec, eval_fields, generic_tls,
                     hamiltonian_matrix, linear_sweep, map_modelB_to_tls, model_a, model_b,
                     validate_dfs)
from .noise import (NoiseKind, NoisePath, NoiseSpec, UnsupportedNoiseError, analytic_dephasing,
                    noise_phase, sample_path, trajectory_rng)
from .solver import (Method, ResolutionError, SolverConfig, TrajectoryResult, adiabatic_residual,
                     solve_auxiliary, solve_components, solve_volterra)

__version__ = "0.1.0"
