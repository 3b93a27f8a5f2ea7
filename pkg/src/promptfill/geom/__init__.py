from .cloud import (
    PointCloud,
    as_points,
    load_xyz,
    load_xyz_binary,
    normalize_unit_sphere,
    save_xyz,
    save_xyz_binary,
)
from .kdtree import SpatialIndex
from .metrics import MetricsConfig, chamfer_l2, fps, fscore, knn, mmd, tmd, uhd

__all__ = [
    "PointCloud",
    "SpatialIndex",
    "MetricsConfig",
    "as_points",
    "chamfer_l2",
    "fps",
    "fscore",
    "knn",
    "load_xyz",
    "load_xyz_binary",
    "mmd",
    "normalize_unit_sphere",
    "save_xyz",
    "save_xyz_binary",
    "tmd",
    "uhd",
]
