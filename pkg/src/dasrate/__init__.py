"""Ergodic sum-rate analysis and transmission-mode selection for distributed antenna systems."""

from .geometry import (DEFAULT_CELL_RADIUS, CellLayout, LinkBudget, Position, build_pathloss_matrix,
                       distance_matrix, pathloss, place_ports, sample_uniform_users)
from .modes import (CandidateLimitError, CandidateSet, ModeGroups, TransmissionMode, derive_groups,
                    enumerate_ideal, generate_min_distance_candidates, ideal_count, proposed_count)
from .montecarlo import (CurveRow, DropExperimentConfig, McConfig, McEstimate, cell_average_experiment,
                         instantaneous_user_rate, make_stream, mc_ergodic_sum_rate, sample_fading,
                         select_best_mode)
from .rates import (EvalPolicy, QuadratureError, UserRateBreakdown, ergodic_sum_rate_closed,
                    ergodic_user_rate_closed, ergodic_user_rate_quadrature, interference_pdf,
                    signal_pdf, sinr_pdf)
from .special import exp_e1_scaled

__version__ = "0.1.0"
