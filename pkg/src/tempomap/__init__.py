"""Spreading dynamics on networks as weighted shortest paths.

Generalized SIR processes are mapped to ensembles of networks whose edge
weights are sampled propagation delays (infinite where recovery preempts
transmission). Weighted shortest paths then give infection arrival times
from every potential source at once, which powers propagation-time
estimation, source detection, and time-critical vaccination.
"""

from .accel import NUMBA_ENABLED
from .analysis import (DisorderScalingReport, PropagationTimeMatrix,
                       TimescaleRanking, characteristic_timescale,
                       disorder_scaling, outbreak_curve, propagation_matrix,
                       reach_probability)
from .applications import (DetectionEvaluation, SourceScores,
                           VaccinationOutcome, read_snapshot, similarity,
                           source_detect_direct_mc, source_detect_temporal,
                           source_detect_topological,
                           source_detection_evaluation, vaccination_compare,
                           vaccination_run, vaccination_survival,
                           write_snapshot)
from .distributions import (Deterministic, Exponential, Geometric,
                            InterEventDistribution, LogNormal, Weibull)
from .ensemble import (ChainState, EnsembleEstimate, GibbsSampler,
                       IndependentSampler, estimate, gibbs_step_exact,
                       gibbs_step_meanfield, make_sampler, recompute_affected)
from .errors import ConfigError, EdgeListError, EstimationError, TempomapError
from .graphs import (StaticNetwork, all_pairs, barabasi_albert, build_network,
                     chain_toy, erdos_renyi, generate_graph, hop_distances,
                     lattice, load_edge_list, reachable_within,
                     shortest_paths_from, write_edge_list, write_label_map)
from .mapping import (EXACT, MEAN_FIELD, MappingSpec, Snapshot,
                      WeightedInstance, extract_snapshot, sample_exact_instance,
                      sample_instance, sample_meanfield_instance)
from .percolation import (bond_percolation_component,
                          bond_percolation_mean_size, general_table_provider,
                          p_nk_general, p_nk_poisson, poisson_table_provider,
                          toy_network_prob, transmissibility)
from .rng import stream
from .simulate import (SimState, advance_discrete, discrete_step,
                       gillespie_run, init_state, states_at)

__version__ = "0.1.0"
