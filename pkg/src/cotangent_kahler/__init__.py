"""Numerical verification of a Kaehler-Einstein structure on the cotangent bundle of a space form."""

from .adapted_frame import (AdaptedFrame, CotangentPoint, bracket_coefficients,
                            bracket_residual, energy_density, frame_directional_derivative)
from .connection_curvature import (AdaptedConnection, CurvatureData, ReadingReport,
                                   connection_axiom_residuals, connection_closed_form,
                                   covariant_derivative_J, covariant_derivative_K,
                                   curvature_closed_form, curvature_numeric,
                                   holomorphic_sectional_curvature, koszul_connection,
                                   reading_consistency, ricci_and_einstein)
from .exceptions import ConfigError, DomainViolation, FrameMismatchError, PreconditionError
from .kaehler_lift import (LiftParameters, LiftedMetric, almost_complex_J, fundamental_form,
                           hermitian_residual, j_squared_residual, lifted_metric_components,
                           metric_G, nijenhuis_closed_form, nijenhuis_definition, tube_check)
from .space_form import (SpaceFormModel, base_geometry, chart_metric, christoffel, riemann,
                         space_form_residual)
from .tensor_calculus import FrameTensor, Jet, check_positive_definite, invert_spd, jet_eval
from .verification import (CHECK_NAMES, RunConfig, VerificationReport, run_verification,
                           sample_points, sweep_tube)

__version__ = "0.1.0"
