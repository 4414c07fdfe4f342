"""Channel capacity and entropy-homogenizing transforms on gridded densities."""

from .capacity import CapacitySolution, StationarityReport, solve_capacity, verify_stationarity
from .casebook import (CASES, CaseSpec, case_fig1, case_fig2, case_fig3, case_gauss,
                       case_independent, get_case, invariance_experiment, run_case,
                       variance_impossibility_experiment)
from .channel import (Channel, InputDistribution, JointSummary, ReverseSummary,
                      channel_from_function, cond_entropy_profile, gaussian_channel,
                      marginal_q, mutual_information, read_channel_csv, reverse_quantities,
                      uniform_rows_channel, write_channel_csv)
from .density import (Density, Grid, IncreasingMap, cdf_map, entropy, mean, pushforward,
                      pushforward_rows, transport_matrix, variance)
from .errors import (DomainMismatch, GridMismatch, HomogenizerError, InteriorZeroRegion,
                     NonPositiveSlope, NotConverged, UndefinedPosterior)
from .slow_change import (SlowChangeProfile, alignment_errors, certify_corollary3,
                          certify_corollary4, homogenize_slow_change, slow_change_capacity,
                          slow_change_input)
from .transforms import (HomogenizedSystem, build_homogenized, certify_theorem1,
                         homogenize_input, mi_invariance_check, transform_channel)

__version__ = "0.1.0"
