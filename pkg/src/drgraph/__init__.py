"""drgraph: multi-level sampled-gradient layout of large undirected graphs."""

from .graph import (
    Graph,
    NeighborDistances,
    ParseError,
    all_k_neighborhoods,
    bfs_k_neighborhood,
    connected_components,
    format_edge_list,
    from_edges,
    parse_edge_list,
    parse_matrix_market,
)
from .metrics import (
    MetricError,
    MetricsReport,
    compute_metrics,
    count_crossings,
    crosslessness,
    minimum_angle,
    neighborhood_preservation,
    stress,
)
from .multilevel import (
    Hierarchy,
    build_hierarchy,
    coarsen_once,
    compose_maps,
    prolong,
)
from .optimizer import (
    AliasTable,
    Layout,
    OptimizerParams,
    attractive_gradient,
    build_alias_table,
    build_negative_sampler,
    build_positive_sampler,
    layout_graph,
    repulsive_gradient,
    sgd_epoch,
)
from .output import SvgStyle, read_coords, write_coords, write_svg
from .similarity import (
    SimilarityParams,
    SparseSimilarity,
    build_sparse_similarity,
    conditional_similarity_row,
    precompute_gaussian_table,
    search_sigma,
)

__version__ = "0.1.0"

__all__ = [
    "Graph", "NeighborDistances", "ParseError", "parse_edge_list",
    "parse_matrix_market", "from_edges", "format_edge_list",
    "bfs_k_neighborhood", "all_k_neighborhoods", "connected_components",
    "SimilarityParams", "SparseSimilarity", "build_sparse_similarity",
    "conditional_similarity_row", "search_sigma", "precompute_gaussian_table",
    "Hierarchy", "coarsen_once", "build_hierarchy", "compose_maps", "prolong",
    "OptimizerParams", "Layout", "AliasTable", "build_alias_table",
    "build_positive_sampler", "build_negative_sampler",
    "attractive_gradient", "repulsive_gradient", "sgd_epoch", "layout_graph",
    "MetricsReport", "MetricError", "neighborhood_preservation", "stress",
    "count_crossings", "crosslessness", "minimum_angle", "compute_metrics",
    "SvgStyle", "write_coords", "read_coords", "write_svg",
    "__version__",
]
