"""Generator/scorer consensus benchmark harness."""

from ._pic import (
    __version__,
    blockworld_eval,
    config_hash,
    decode_answer,
    diffusion_sample,
    frechet_gaussian,
    run_matrix,
    seqgen_eval,
)

__all__ = [
    "__version__",
    "blockworld_eval",
    "config_hash",
    "decode_answer",
    "diffusion_sample",
    "frechet_gaussian",
    "run_matrix",
    "seqgen_eval",
]
