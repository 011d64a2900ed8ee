"""Density sharpening: diagnose and repair a model-0 with LP comparison densities."""

__version__ = "0.1.0"

from .distributions import BaseModel, Sample, parse_spec  # noqa: E402
from .lp_basis import LPBasis, build_basis  # noqa: E402
from .sharpening import (  # noqa: E402
    DSharpModel,
    SharpeningFit,
    estimate_raw,
    fit,
    make_dsharp,
    open_select,
    resharpen,
    sample_dsharp,
)

__all__ = [
    "BaseModel",
    "DSharpModel",
    "LPBasis",
    "Sample",
    "SharpeningFit",
    "build_basis",
    "estimate_raw",
    "fit",
    "make_dsharp",
    "open_select",
    "parse_spec",
    "resharpen",
    "sample_dsharp",
]
