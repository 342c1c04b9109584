"""Weight-dependent random connection models: simulation, combinatorics, and
numerical verification of the percolation phase boundary gamma = delta/(delta+1)."""

__version__ = "0.1.0"

from .model import (
    AlphaWindow,
    Box,
    Kernel,
    ModelParams,
    Profile,
    ProofConstants,
    SphereConstants,
    Torus,
    Vertex,
    alpha_window,
    connection_probability,
    critical_gamma,
    i_rho_closed_form,
    indicator_support,
    kernel_eval,
    pc_lower_bound,
    polynomial_knee,
    profile_eval,
    proof_constants,
    scale_free_exponent,
    sphere_constants,
)
from .rng import derive_seed, pair_uniform
from .sampling import (
    MarkedGraph,
    PointSet,
    add_palm_origin,
    build_graph_celllist,
    build_graph_exact,
    graph_from_text,
    graph_to_text,
    percolate_bonds,
    read_graph,
    sample_ppp,
    write_graph,
)
from .clusters import (
    ClusterReport,
    OriginStats,
    ThetaEstimate,
    UnionFind,
    connected_components,
    origin_cluster_stats,
    pc_sweep,
    small_component_fraction,
    theta_estimate,
    wilson_interval,
)
from .paths import (
    MarkedPath,
    Skeleton,
    TreeNode,
    catalan,
    classify_regularity,
    count_two_skeleton_paths,
    find_shortcut,
    path_to_tree,
    shortcut_free_reduction,
    skeleton_local_maxima,
    skeleton_scan,
    tree_to_path,
)
from .hierarchy import (
    ChainResult,
    HierarchyChain,
    Hop,
    RegionSampler,
    build_chain,
    hierarchy_step,
    success_curve,
)
from .aba import (
    GrowingGraph,
    TailFit,
    degree_tail_fit,
    giant_fraction_trajectory,
    grow_aba,
    rescale_map,
)
from .verify import (
    VerificationReport,
    default_grid,
    random_admissible_pair,
    verify_appendix_lemma,
    verify_i_rho,
    verify_lemma_grid,
    verify_two_connection,
)
from .experiments import ExperimentConfig, ConfigError, RunResult, run
