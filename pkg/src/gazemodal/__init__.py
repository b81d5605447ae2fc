"""gazemodal - multi-modal chest X-ray, eye-gaze and report classification with attention explainability."""

__version__ = "0.1.0"
__author__ = "gazemodal developers"
__description__ = "Chest X-ray, eye-gaze heatmap and report text classifiers on seeded synthetic studies"

__all__ = ["__version__"]
