"""Face morph generation and morphing-attack vulnerability evaluation."""

from ._core import (
    MorphkitError,
    __version__,
    cosine_score,
    count_trials,
    delaunay,
    fmr,
    fnmr,
    format_landmarks,
    format_percent,
    load_image,
    mmpmr,
    morph_pair,
    parse_landmarks,
    run,
    save_image,
    threshold_at_fmr,
)

__all__ = [
    "MorphkitError",
    "__version__",
    "cosine_score",
    "count_trials",
    "delaunay",
    "fmr",
    "fnmr",
    "format_landmarks",
    "format_percent",
    "load_image",
    "mmpmr",
    "morph_pair",
    "parse_landmarks",
    "run",
    "save_image",
    "threshold_at_fmr",
]
