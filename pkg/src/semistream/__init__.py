"""Online facility location and streaming k-median under partially adversarial stream orders."""

__version__ = "0.1.0"

from .compress import bitree_two_color, compress_b, nearest_neighbor_map
from .errors import (
    InputError,
    InvariantViolation,
    ParameterError,
    ParseError,
    ProtocolViolation,
    SemistreamError,
    SizeError,
)
from .io import ingest_points
from .kmedian import ClusterRunReport, ClusterState, cluster_amplified, cluster_ram, cluster_stream, default_m, extract_centers
from .lowerbound import TreeInstance, build_tree_instance, opt_certificate, run_lowerbound_experiment
from .metric import Measure, Point, WeightedPointSet, beta_of, dissimilarity, euclidean_dataset, parse_measure
from .ofl import OflState, ofl_run, ofl_step
from .oracle import cost, local_search_kmedian, opt_bar_exact
from .order import AdversaryTrace, apply_adversary, min_bound, random_shuffle, semirandom_stream

__all__ = [
    "AdversaryTrace", "ClusterRunReport", "ClusterState", "InputError", "InvariantViolation", "Measure",
    "OflState", "ParameterError", "ParseError", "Point", "ProtocolViolation", "SemistreamError", "SizeError",
    "TreeInstance", "WeightedPointSet", "apply_adversary", "beta_of", "bitree_two_color", "build_tree_instance",
    "cluster_amplified", "cluster_ram", "cluster_stream", "compress_b", "cost", "default_m", "dissimilarity",
    "euclidean_dataset", "extract_centers", "ingest_points", "local_search_kmedian", "min_bound",
    "nearest_neighbor_map", "ofl_run", "ofl_step", "opt_bar_exact", "opt_certificate", "parse_measure",
    "random_shuffle", "run_lowerbound_experiment", "semirandom_stream",
]
