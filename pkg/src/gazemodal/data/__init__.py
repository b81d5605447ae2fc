"""Study schema on disk, gaze heatmaps, synthetic datasets and folds."""

from gazemodal.data.folds import grouped_kfold
from gazemodal.data.heatmaps import amalgamate_heatmaps, render_fixation_heatmap, resize_grid, temporal_heatmaps
from gazemodal.data.loader import load_dataset
from gazemodal.data.pgm import read_pgm, write_pgm
from gazemodal.data.synthetic import DatasetManifest, GenerationConfig, generate_synthetic_dataset

__all__ = [
    "DatasetManifest",
    "GenerationConfig",
    "amalgamate_heatmaps",
    "generate_synthetic_dataset",
    "grouped_kfold",
    "load_dataset",
    "read_pgm",
    "render_fixation_heatmap",
    "resize_grid",
    "temporal_heatmaps",
    "write_pgm",
]
