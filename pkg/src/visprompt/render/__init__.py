"""Deterministic plot rendering for sensor windows."""

from .tools import (
    DEFAULT_PALETTE,
    DEFAULT_SPECTROGRAM_PARAMS,
    SINGLE_PLOT,
    SUBPLOTS,
    TARGET_TITLE,
    TOOL_IDS,
    TOOL_INFO,
    PlotImage,
    RenderStyle,
    VizTool,
    channel_legend,
    decode_png,
    encode_png,
    render,
    render_labeled_example,
)

__all__ = [
    "DEFAULT_PALETTE",
    "DEFAULT_SPECTROGRAM_PARAMS",
    "SINGLE_PLOT",
    "SUBPLOTS",
    "TARGET_TITLE",
    "TOOL_IDS",
    "TOOL_INFO",
    "PlotImage",
    "RenderStyle",
    "VizTool",
    "channel_legend",
    "decode_png",
    "encode_png",
    "render",
    "render_labeled_example",
]
