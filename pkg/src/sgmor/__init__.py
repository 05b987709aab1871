"""Stochastic spectral projection and stability-preserving model reduction.

Pipeline: describe a linear dynamical system whose matrices depend affinely
on random parameters, project it onto an orthonormal polynomial chaos basis,
reduce the large coupled system with a Krylov method, and, where plain
reduction loses asymptotic stability, restore a dissipative structure that
every projection provably preserves.
"""

from .frequency import DEFAULT_NODES, FrequencyRule, default_rule
from .pce import (Distribution, PCBasis, QuadratureRule, basis_count,
                  build_basis, eval_basis, eval_basis_outer, moment_matrix,
                  monte_carlo_rule, tensor_rule)
from .systems import (AffineParamSystem, DissipativityCheck,
                      H2DivergenceError, LTISystem, PencilSpectrum, eval_at,
                      h2_norm, h2_relative_error, is_asymptotically_stable,
                      is_dissipative, pencil_spectrum, spectral_abscissa,
                      time_domain_error_bound, transfer_eval,
                      transfer_on_grid)
from .galerkin import (GalerkinSystem, assemble, assemble_output,
                       assemble_via_quadrature, expand_qoi, qoi_stats)
from .lyapunov import (accuracy_bound, freq_projection, lyap_residual,
                       solve_lyap_direct, solve_lyap_param)
from .stabilize import (CommutationReport, RegularizationParams,
                        StabilizationOutcome, regularization_commutes,
                        regularize, regularize_affine, technique_i,
                        technique_ii, technique_iii, theta_family)
from .mor import (ArnoldiResult, ProjectionPair, ReducedSystem,
                  StabilityReport, SweepRow, arnoldi, reduce,
                  stability_sweep)
from .bench import (BpfConfig, MsdConfig, RunConfig, build_bandpass,
                    build_msd, run_experiment)
from .mmio import load_system, save_system

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
