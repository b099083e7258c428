"""Motor-imagery EEG classification with a learnable sinc bandpass filter bank."""

from .data import TrialSet, generate_synthetic, preprocess, read_container, write_container
from .network import Model, ModelConfig, build_model, count_parameters
from .sincfilters import (
    SincFilterBank,
    frequency_response,
    init_filter_bank,
    materialize_kernel,
    reparameterize_cutoffs,
)
from .tensor import Tape, Tensor
from .training import EvalReport, TrainConfig, evaluate, split_dataset, train

__all__ = [
    "EvalReport",
    "Model",
    "ModelConfig",
    "SincFilterBank",
    "Tape",
    "Tensor",
    "TrainConfig",
    "TrialSet",
    "build_model",
    "count_parameters",
    "evaluate",
    "frequency_response",
    "generate_synthetic",
    "init_filter_bank",
    "materialize_kernel",
    "preprocess",
    "read_container",
    "reparameterize_cutoffs",
    "split_dataset",
    "train",
    "write_container",
]
