"""Quantitative fractional Helly and (p,q) pipelines with checkable ellipsoid certificates."""
from .errors import *  # noqa: F401,F403
from .geometry import DEFAULT_TOL, Ellipsoid, Halfspace, HPolytope, HullOfEllipsoids, Tolerances
from .ellipsoids import (DEFAULT_CFG, SolverConfig, determining_subset, lowest_ellipsoid,
                         max_inscribed_ellipsoid, solve_max_inscribed)
from .lp import LPProblem, LPSolution, solve_lp
from .helly import (ConvexFamily, HellyAudit, QFHResult, classical_fractional_helly,
                    enumerate_good_tuples, qfh_large, qfh_small, quantitative_helly_audit)
from .tverberg import (EllipsoidMultiset, EpsNetResult, SelectionResult, TverbergCertificate,
                       WeightedFamily, equal_parts_partition, greedy_weak_epsilon_net,
                       selection_lemma, tverberg_partition)
from .transversal import (EllipsoidHypergraph, PQParams, TransversalCertificate,
                          bounded_v_transversal, build_ellipsoid_hypergraph,
                          check_pq_hypothesis, fractional_transversal_duality, pq_piercing)
from .harness import ExperimentReport, GenConfig, gen_family, gen_multiset, run_sweep
from .kernels import BACKEND

__version__ = "0.1.0"
