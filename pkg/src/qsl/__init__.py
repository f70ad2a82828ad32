"""Orthogonalization times, quantum speed limits and bound-approaching states."""

__version__ = "0.1.0"

from .state_model import (AmplitudeState, MixedEnsemble, Moments, SpectralState, StateError,
                          UnitConvention, collapse_to_spectral, load_state, moments, parse_state)
from .survival import (OrthoResult, ZeroFinderConfig, first_orthogonal_time, survival_amplitude,
                       survival_prob_derivative)
from .bounds import (BoundReport, bound_report, fold_spectrum, keel_bound, reduce_spectrum,
                     reflect_spectrum, trig_margin_a, trig_margin_b)
from .families import (FamilyAParams, FamilyBParams, FamilyState, family_a_refine, family_a_seed,
                       family_b, predicted_tau)
from .mixed import (ensemble_moments, mixed_nonattainability_check, rank2_counterexample,
                    trace_overlap)
from .optimizer import OptProblem, OptResult, bound_violation_scan, minimize_tau
