"""Random-projection dimension reduction for projective clustering."""

from .geometry import (
    PROBLEMS,
    Dataset,
    WeightedSet,
    CenterSet,
    Subspace,
    Flat,
    Line,
    LineSet,
    project_subspace,
    project_flat,
    project_line,
    distances,
    assignment,
    cost_pow,
    cost,
    read_dataset,
    write_dataset,
)
from .jl import (
    JLMap,
    sample_jl,
    identity_map,
    apply,
    moment_bound_statistic,
    moment_bound_threshold,
    is_subspace_embedding,
    distortion_range,
)
from .sensitivity import (
    SensitivityProfile,
    clustering_sensitivity,
    subspace_sensitivity,
    flat_sensitivity,
    line_sensitivity,
    sup_ratio,
    sup_ratios,
    event_e4_statistic,
    event_e4_bound,
)
from .coreset import (
    Coreset,
    sensitivity_sample,
    line_coreset_1d,
    line_coreset_klines,
    coreset_size_bound,
    PeelingPartition,
    peel_partition,
)
from .solvers import (
    SolveReport,
    solve,
    solve_clustering,
    solve_subspace,
    solve_flat,
    solve_lines,
)
from .counterexamples import (
    gen_medoid_instance,
    gen_css_instance,
    medoid_cost,
    css_cost,
    counterexample_trial,
)
from .cli import preset_t

__all__ = [
    "PROBLEMS",
    "Dataset",
    "WeightedSet",
    "CenterSet",
    "Subspace",
    "Flat",
    "Line",
    "LineSet",
    "project_subspace",
    "project_flat",
    "project_line",
    "distances",
    "assignment",
    "cost_pow",
    "cost",
    "read_dataset",
    "write_dataset",
    "JLMap",
    "sample_jl",
    "identity_map",
    "apply",
    "moment_bound_statistic",
    "moment_bound_threshold",
    "is_subspace_embedding",
    "distortion_range",
    "SensitivityProfile",
    "clustering_sensitivity",
    "subspace_sensitivity",
    "flat_sensitivity",
    "line_sensitivity",
    "sup_ratio",
    "sup_ratios",
    "event_e4_statistic",
    "event_e4_bound",
    "Coreset",
    "sensitivity_sample",
    "line_coreset_1d",
    "line_coreset_klines",
    "coreset_size_bound",
    "PeelingPartition",
    "peel_partition",
    "SolveReport",
    "solve",
    "solve_clustering",
    "solve_subspace",
    "solve_flat",
    "solve_lines",
    "gen_medoid_instance",
    "gen_css_instance",
    "medoid_cost",
    "css_cost",
    "counterexample_trial",
    "preset_t",
]

__version__ = "0.1.0"
