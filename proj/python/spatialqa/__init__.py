"""Spatial question generation, scoring and tool-using agent, backed by the C++ core."""

from ._core import (
    ConfigError,
    DomainError,
    Error,
    InsufficientDataError,
    LoadError,
    ParseError,
    RegistryError,
    ShapeError,
    UnitError,
    ValidationError,
    __version__,
    centimeters_per,
    classify_motion,
    convert_length_to_cm,
    fit_homography,
    load_manifest,
    main,
    manifest_stats,
    metric_distractors,
    motion_distractors,
    mra,
    mra_values,
    parse_answer,
    ransac_homography,
    run_agent,
    sample_frames,
    score_sample,
    simulate,
    tool_names,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
