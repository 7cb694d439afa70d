"""Clustering by synchronisation dynamics: ESynC, grid-indexed ESynC, SSynC and MSynC."""

from .baselines import DbscanParams, dbscan, kmeans
from .core import (
    ModelParams,
    NeighborLists,
    PointState,
    StateVector,
    delta_neighbors,
    ek_update,
    euclidean_dis,
    lv_update,
    neighbor_lists,
    ov_update,
    weighted_core_update,
)
from .datagen import (
    GenSpec,
    LabeledDataSet,
    PRESETS,
    delta_bounds,
    generate_dataset,
    mst_edge_weights,
    preset,
    property1_interval,
)
from .errors import (
    GridCapExceeded,
    IndexCorruptionError,
    InfeasibleSpecError,
    InvalidInputError,
    SyncError,
)
from .esync import RunOptions, RunReport, delta_sweep, esync_run
from .grid import Grid, GridCell, GridSpec, build_grid, grid_delta_neighbors, iesync_run, relocate
from .metrics import (
    ClusterLabels,
    DeltaGraph,
    ave_len,
    build_delta_graph,
    cluster_order_parameter,
    extract_clusters,
    match_labels,
)
from .msync import MSyncReport, collect_root_cores, msync_run, partition_random
from .ssync import Core, CoreKind, SSyncReport, classify_core, find_root, ssync_run

__version__ = "0.1.0"
