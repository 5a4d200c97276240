"""Spectral energy centroid (SEC) tools for implicit neural representations."""

__version__ = "0.1.0"

from .spectral import DEFAULT_VARIANT, SpectrumVariant, energy_spectrum, image_sec, sec  # noqa: E402
from .models import ModelConfig, init_network, model_sec, render  # noqa: E402
from .trainer import TrainConfig, train  # noqa: E402
from .calibration import (  # noqa: E402
    CalibrationSet,
    ParamGrid,
    build_calibration_set,
    fresh_select,
    frequency_match,
    sec_conf_select,
)

__all__ = [
    "DEFAULT_VARIANT", "SpectrumVariant", "energy_spectrum", "image_sec", "sec",
    "ModelConfig", "init_network", "model_sec", "render",
    "TrainConfig", "train",
    "CalibrationSet", "ParamGrid", "build_calibration_set", "fresh_select", "frequency_match", "sec_conf_select",
]
