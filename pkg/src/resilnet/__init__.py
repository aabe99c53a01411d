"""resilnet: resilience analysis of interconnected linear control
networks under partial loss of control authority."""

__version__ = "0.1.0"

from .errors import (DimensionMismatch, EmptySetError, NotControllable,
                     NotFullRowRank, NotHurwitz, PolicyInfeasible,
                     ResilnetError, RiccatiFailure, ScenarioError,
                     TooManyVertices)
from .network import (LossSpec, NetworkSpec, PartitionedNetwork, Subsystem,
                      apply_loss, assemble, partition, stack_losses)
from .margins import (LyapunovCertificate, MarginReport, ctrb, ctrb_rank,
                      distance_to_uncontrollability, gamma_gain, is_hurwitz,
                      margin_report, p_norm, real_stability_radius_lb,
                      solve_lyapunov, spectral_abscissa)
from .sets import (Hypercube, ZSet, ZonotopeImage, b_min, build_Z,
                   contains_negCW_in_BU, member_BU, member_Z, product_Z,
                   support_Z, z_max, z_prime)
from .verdicts import (Conclusion, Evidence, Sufficiency, Verdict, brammer,
                       network_resiliently_stabilizable, network_stabilizable,
                       resilient_NS, resilient_full_dim, sontag,
                       sufficient_network_conditions)
from .bounds import (AdmissibilityReport, BoundParams, Envelope,
                     admissibility_underactuated, chi_envelope,
                     chi_envelope_underactuated, constants_fully_actuated,
                     constants_underactuated, solve_bound_coefficients,
                     synthesize_gain, finite_time_verdict, xN_closed_envelope,
                     xN_closed_envelope_underactuated, xN_integral_bound)
from .sim import (BestResponsePolicy, ConstantPolicy, LinearFeedbackPolicy,
                  NormDirectionPolicy, PolicyBundle, Trajectory,
                  ViolationReport, WorstVertexPolicy, check_envelopes,
                  simulate, worst_vertex)
from .scenario import (ReportBundle, RunResult, Scenario, emit_scenario,
                       parse_scenario, run, scenario_from_dict,
                       scenario_to_dict)

__all__ = [name for name in dir() if not name.startswith("_")]
