"""GDF 2.x to EEGT v1 trial-container converter."""

from .convert import (
    ConversionError,
    ConversionSpec,
    SessionTrials,
    convert,
    convert_session,
    extract_trials,
    load_labels,
    write_container,
)
from .gdf import GdfError, GdfRecording, read_gdf

__all__ = [
    "ConversionError",
    "ConversionSpec",
    "SessionTrials",
    "GdfError",
    "GdfRecording",
    "convert",
    "convert_session",
    "extract_trials",
    "load_labels",
    "read_gdf",
    "write_container",
]
