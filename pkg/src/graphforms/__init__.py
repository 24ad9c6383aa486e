"""Energy forms, capacities, completeness and boundary calculus on weighted graphs."""

from .boundary import (BoundaryForm, GraphWithBoundary, HostForm, RobinSpec, dtn_form,
                       extract_graph_from_form, form_from_boundary_data, harmonic_extension,
                       harmonic_measure, kasue_constant, normal_derivative, robin_form,
                       robin_operator, royden_decompose, sandwich_check, trace_form)
from .capacity import (RecurrenceOptions, boundary_capacity_profile, capacity, energy_capacity,
                       escape_function, null_sequence, recurrence_verdict)
from .completeness import (canonical_alpha_harmonic, cutoff_inequality_check, grigoryan_integral,
                           heat_mass_profile, karp_integral, path_mass_search,
                           subharmonic_witness_check, yau_hypothesis_report)
from .energy import (STANDARD_CONTRACTIONS, NormalContraction, contraction_check, energy,
                     form_matrix, greens_defect, laplacian_apply, laplacian_matrix)
from .errors import GraphFormsError, HorizonError, InputError, SolverError
from .exhaustion import (ExhaustionSchedule, FiniteModel, heat_apply, monotone_limit,
                         resolvent_solve, solve_spd, truncate)
from .graph import Graph, GraphFamily, connected_components, generate, validate
from .metrics import (EdgeWeights, Pseudometric, ball_profile, escape_series, hopf_rinow_check,
                      is_intrinsic, lipschitz_energy_bound_check, metric_from_function, path_metric)
from .report import AnalysisConfig, Report, emit_report, parse_graph_spec, run_analysis

__version__ = "0.1.0"
