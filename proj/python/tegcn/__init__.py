"""TE-GCN: temporal enhanced graph convolution for skeleton action recognition."""

from ._core import (
    ConfigError,
    DataError,
    Model,
    NumericError,
    argmax,
    backbone_layers,
    batch_input,
    build_partitions,
    chain_graph,
    derive_bone,
    derive_motion,
    fuse_streams,
    gradcheck,
    lr_at,
    normalize_scores,
    ntu_edges,
    ntu_graph,
    preprocess_skeleton,
    softmax,
    synth_dataset,
)

__all__ = [
    "ConfigError",
    "DataError",
    "Model",
    "NumericError",
    "argmax",
    "backbone_layers",
    "batch_input",
    "build_partitions",
    "chain_graph",
    "derive_bone",
    "derive_motion",
    "fuse_streams",
    "gradcheck",
    "lr_at",
    "normalize_scores",
    "ntu_edges",
    "ntu_graph",
    "preprocess_skeleton",
    "softmax",
    "synth_dataset",
]


def model_config(num_classes=60, frames=300, bodies=2, graph="ntu", joints=25, layers=None, kernel=9, heads=4,
                 relevance="feature-calculated", seed=1, edges=(), center=0, in_channels=3, **backbone):
    """Config dict for Model(). Layers default to the backbone plan; extra keywords go to backbone_layers."""
    if layers is None:
        layers = backbone_layers(in_channels=in_channels, **backbone)
    return {
        "num_classes": num_classes,
        "in_channels": in_channels,
        "frames": frames,
        "bodies": bodies,
        "graph": graph,
        "joints": joints,
        "center": center,
        "edges": [list(e) for e in edges],
        "layers": list(layers),
        "kernel": kernel,
        "heads": heads,
        "relevance": relevance,
        "seed": seed,
    }


__all__.append("model_config")
