"""Distributed randomized gradient-free mirror descent over time-varying networks."""

from .netgraph import (Graph, MixingMatrix, TopologySchedule, ScheduleError,
                       metropolis_matrix, random_geometric_graph, random_schedule,
                       transition_product, mixing_bound_check, MixingCertificate)
from .geometry import (DomainDescriptor, DomainError, MirrorMap, EuclideanMap,
                       EntropyMap, simplex_projection, bregman, mirror_step)
from .objective import (LocalObjective, ProblemInstance, GradientFreeOracle,
                        nesterov_problem, strongly_convex_problem, lp_optimum,
                        oracle_sample, mix_seed)
from .solver import (AlgorithmConfig, StepSchedule, BoundConstants, RunAborted,
                     UnsupportedBound, run, simulate, bound_constants)
from .lab import (Metric, TrialSummary, trial_average, rate_slope, bound_overlay,
                  run_paper_suite)

__version__ = "0.1.0"
