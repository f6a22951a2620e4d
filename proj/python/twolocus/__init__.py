"""Two-locus Moran model: exact simulation and fixation-time predictions."""

from ._core import (
    IoError,
    Parameters,
    ScheduleError,
    bd_survival,
    classify_regime,
    fixation_times,
    integrate,
    phase_times,
    ruin_before,
    simulate,
    t_star,
)

__all__ = [
    "IoError",
    "Parameters",
    "ScheduleError",
    "bd_survival",
    "classify_regime",
    "fixation_times",
    "integrate",
    "phase_times",
    "ruin_before",
    "simulate",
    "t_star",
]
