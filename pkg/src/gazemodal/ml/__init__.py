"""Architectures, losses and training for the multi-modal classifiers."""

from gazemodal.ml.architectures import (
    ForwardGraph,
    forward,
    fusion_forward,
    gaze_supervised_unet_forward,
    image_classifier_forward,
    static_heatmap_classifier_forward,
    temporal_classifier_forward,
    temporal_image_fusion_forward,
    text_classifier_forward,
)
from gazemodal.ml.inputs import ModelInputs, prepare_inputs
from gazemodal.ml.params import init_params
from gazemodal.ml.persistence import load_params, save_params
from gazemodal.ml.training import TrainResult, combined_loss, predict, train_model

__all__ = [
    "ForwardGraph",
    "ModelInputs",
    "TrainResult",
    "combined_loss",
    "forward",
    "fusion_forward",
    "gaze_supervised_unet_forward",
    "image_classifier_forward",
    "init_params",
    "load_params",
    "predict",
    "prepare_inputs",
    "save_params",
    "static_heatmap_classifier_forward",
    "temporal_classifier_forward",
    "temporal_image_fusion_forward",
    "text_classifier_forward",
    "train_model",
]
