"""Adversarial attacks and saliency-mask defense for a toy monocular depth network."""

from ._depthguard import (
    Dataset,
    Error,
    Network,
    attack,
    build_network,
    load_checkpoint,
    load_dataset,
    metrics,
    predict_depth,
    predict_saliency,
    reproduce,
    split,
    synth_generate,
)

__all__ = [
    "Dataset",
    "Error",
    "Network",
    "attack",
    "build_network",
    "load_checkpoint",
    "load_dataset",
    "metrics",
    "predict_depth",
    "predict_saliency",
    "reproduce",
    "split",
    "synth_generate",
]
