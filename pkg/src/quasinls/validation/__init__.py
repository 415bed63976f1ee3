"""Residuals, error studies, normal-form kernels and the modified energy."""

from .convergence import (ConvergenceReport, ConvergenceScenario, ErrorSeries, StudyError, convergence_study,
                          error_vs_approximation, report_from_errors, run_scenario)
from .energy import (EnergyBreakdown, EquivalenceStats, ErrorDecomposition, closed_form_eps0,
                     energy_equivalence_check, energy_ratio, eps0_ratio_bounds, modified_energy)
from .kernels import (KernelSetup, KernelSingularity, adjoint_discrepancy, n_kernel, nf_adjoint_apply, nf_apply,
                      nf_identity_residual, t_kernel, trilinear_apply)
from .residual import (FitError, PowerLawFit, ResidualStudy, ResidualValue, fit_power_law, packet_residual,
                       residual, residual_fields, residual_scaling_study)
