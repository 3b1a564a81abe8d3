# Version: 0.2
# Last Modified: 2026-10-18
# Changes: Coefficient-table formatting (stars, coefficient cells, percents)
"""
Formatting helpers for fit tables and reports
"""
import math
from typing import Optional

STAR_LEVELS = ((0.01, "***"), (0.05, "**"), (0.10, "*"))


def format_stars(p_value: float) -> str:
    """Significance stars: *** p<0.01, ** p<0.05, * p<0.10."""
    if p_value is None or math.isnan(p_value):
        return ""
    for level, stars in STAR_LEVELS:
        if p_value < level:
            return stars
    return ""


def format_coefficient(value: float, p_value: Optional[float] = None, digits: int = 4) -> str:
    if value is None or math.isnan(value):
        return ""
    stars = format_stars(p_value) if p_value is not None else ""
    return f"{value:.{digits}f}{stars}"


def format_se(value: float, digits: int = 4) -> str:
    if value is None or math.isnan(value):
        return ""
    return f"({value:.{digits}f})"


def format_percent(value: float, digits: int = 2) -> str:
    return f"{value:.{digits}f}%"


def format_float(value: float) -> str:
    """Stable text form used in key: value artifacts."""
    return f"{value:.10g}"
