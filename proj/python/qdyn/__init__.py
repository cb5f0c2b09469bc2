"""Transformer forecaster for long-time spin-boson population dynamics."""

from ._core import (  # noqa: F401
    DataError,
    ModelConfig,
    NumericError,
    ShapeError,
    TransformerForecaster,
    count_params,
    embed,
    generate_surrogate,
    init_params,
    load_checkpoint,
    load_trajectory,
    mae,
    mse_loss,
    positional_encoding,
    run_cli,
    window_slice,
)

__all__ = [
    "DataError",
    "ModelConfig",
    "NumericError",
    "ShapeError",
    "TransformerForecaster",
    "count_params",
    "embed",
    "generate_surrogate",
    "init_params",
    "load_checkpoint",
    "load_trajectory",
    "mae",
    "mse_loss",
    "positional_encoding",
    "run_cli",
    "window_slice",
]
