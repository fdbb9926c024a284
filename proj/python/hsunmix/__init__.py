"""Nonlinear hyperspectral unmixing toolkit.

Mixing-model simulators (LMM/GBM/PPNMM), VCA endmember extraction, a
dilated-transformer autoencoder with a PPNMM physics decoder, and the
standard unmixing metrics. The heavy lifting happens in the C++ core.
"""

from ._core import (  # noqa: F401
    InputError,
    NumericError,
    ShapeError,
    evaluate,
    farthest_point_init,
    gen_dataset,
    gradcheck,
    lmm_pixel,
    ppnmm_image,
    ppnmm_pixel,
    train_unmix,
    vca,
    __version__,
)

__all__ = [
    "InputError",
    "NumericError",
    "ShapeError",
    "evaluate",
    "farthest_point_init",
    "gen_dataset",
    "gradcheck",
    "lmm_pixel",
    "ppnmm_image",
    "ppnmm_pixel",
    "train_unmix",
    "vca",
    "__version__",
]
