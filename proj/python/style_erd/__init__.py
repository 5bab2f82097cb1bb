"""Online motion style transfer with a residual recurrent generator."""

from ._core import (
    DomainError,
    Model,
    ParseError,
    Protocol,
    RangeError,
    ShapeError,
    Stream,
    frechet_distance,
    load_bvh,
    parse_bvh,
    save_bvh,
    serialize_bvh,
    synthetic_dataset,
)

__all__ = [
    "DomainError",
    "Model",
    "ParseError",
    "Protocol",
    "RangeError",
    "ShapeError",
    "Stream",
    "frechet_distance",
    "load_bvh",
    "parse_bvh",
    "save_bvh",
    "serialize_bvh",
    "synthetic_dataset",
]
