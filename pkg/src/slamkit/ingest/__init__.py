"""Converters from public dataset layouts into datafiles, plus a synthetic generator."""

from slamkit.ingest.common import (
    BadCsvHeader,
    ConversionSummary,
    IngestError,
    InvalidConfig,
    MalformedPointCloud,
    MissingListFile,
    MissingRaster,
    UnparseableLine,
)
from slamkit.ingest.euroc import convert_euroc
from slamkit.ingest.icl_nuim import convert_icl_nuim, load_scene_cloud
from slamkit.ingest.synthetic import (
    SyntheticSceneConfig,
    camera_pose,
    generate_synthetic,
    parse_synthetic_config,
    render_depth,
    wall_point_cloud,
)
from slamkit.ingest.tum import TUM_DEPTH_SCALE, convert_tum

__all__ = [
    "BadCsvHeader",
    "ConversionSummary",
    "IngestError",
    "InvalidConfig",
    "MalformedPointCloud",
    "MissingListFile",
    "MissingRaster",
    "SyntheticSceneConfig",
    "TUM_DEPTH_SCALE",
    "UnparseableLine",
    "camera_pose",
    "convert_euroc",
    "convert_icl_nuim",
    "convert_tum",
    "generate_synthetic",
    "load_scene_cloud",
    "parse_synthetic_config",
    "render_depth",
    "wall_point_cloud",
]
