"""Python access to the ttp codec, fusion primitives and command line."""

from ._ttp import (
    Error,
    ParseError,
    cross_entropy,
    decode,
    encode,
    mfb,
    modalities,
    run_cli,
    signed_sqrt_l2,
    synthetic_video,
    trilinear_pool,
    trilinear_pool_maps,
)

__all__ = [
    "Error",
    "ParseError",
    "cross_entropy",
    "decode",
    "encode",
    "mfb",
    "modalities",
    "run_cli",
    "signed_sqrt_l2",
    "synthetic_video",
    "trilinear_pool",
    "trilinear_pool_maps",
]
