"""Reference pipelines: smooth-prior deconvolution and TV inpainting."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..io import bundled_image_path, read_image


@dataclass
class EstimateBundle:
    mmse_x: np.ndarray
    mmse_z: np.ndarray | None = None
    mmse_u: np.ndarray | None = None
    ci_low: np.ndarray | None = None
    ci_high: np.ndarray | None = None
    metrics: dict = field(default_factory=dict)
    record: object = None  # ChainRecord, or None for optimisers
    residuals: list | None = None  # ADMM (iteration, primal, dual) rows


BUNDLED_IMAGES = {
    "cameraman": "cameraman64.pgm",
    "coins": "coins64.pgm",
    "cameraman256": "cameraman256.pgm",
}


def load_bundled(name: str) -> np.ndarray:
    try:
        fname = BUNDLED_IMAGES[name]
    except KeyError:
        raise KeyError(f"unknown bundled image {name!r}; choose from {sorted(BUNDLED_IMAGES)}") from None
    return read_image(bundled_image_path(fname))


from .deconv import DeconvParams, DeconvProblem, run_deconv, synthesize_deconv  # noqa: E402
from .inpaint import InpaintParams, InpaintProblem, run_inpaint, synthesize_inpaint  # noqa: E402
from . import metrics  # noqa: E402

__all__ = [
    "EstimateBundle",
    "load_bundled",
    "BUNDLED_IMAGES",
    "DeconvParams",
    "DeconvProblem",
    "run_deconv",
    "synthesize_deconv",
    "InpaintParams",
    "InpaintProblem",
    "run_inpaint",
    "synthesize_inpaint",
    "metrics",
]
