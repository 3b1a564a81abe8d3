# Version: 0.1
# Last Modified: 2026-10-18
# Changes: Variable construction recipes for the satisfaction and delay models
"""
Per-record variable recipes.

Each function is a scalar recipe for one variable family. The vectorized
two-pass construction over a whole sample lives in features.design and calls
these same rules.
"""
import math
from datetime import date, datetime
from enum import Enum
from typing import Dict, Iterable, Optional, Sequence

from satisfaction_app.data.records import (
    AgeBracket,
    DestScope,
    FlightRecord,
    Purpose,
    Schooling,
    SurveyResponse,
    TerminalHourStats,
    WeatherObservation,
)
from satisfaction_app.errors import ClassificationError, ContractError, DataError

# Weather minima for adverse conditions at a station.
CEILING_LIMIT_FT = 600.0
VISIBILITY_LIMIT_M = 1500.0
GUST_LIMIT_WET_KT = 27.0
GUST_LIMIT_DRY_KT = 33.0

# Bracket midpoints used to place a respondent in a birth cohort.
AGE_BRACKET_MIDPOINTS: Dict[AgeBracket, float] = {
    AgeBracket.UP_TO_21: 19.0,
    AgeBracket.FROM_22_TO_25: 23.5,
    AgeBracket.FROM_26_TO_34: 30.0,
    AgeBracket.FROM_35_TO_44: 39.5,
    AgeBracket.FROM_45_TO_54: 49.5,
    AgeBracket.FROM_55_TO_64: 59.5,
    AgeBracket.FROM_65_TO_75: 70.0,
    AgeBracket.FROM_76: 80.0,
}

# (label, first birth year, last birth year)
GENERATIONS = (
    ("GENSILEN", 1900, 1945),
    ("GENBOOM", 1946, 1964),
    ("GENX", 1965, 1976),
    ("GENMILLEN", 1977, 1995),
    ("GENZ", 1996, 2015),
)

SCHOOLING_DUMMIES: Dict[Schooling, Optional[str]] = {
    Schooling.ILLITERATE: "SCHLELEM",
    Schooling.ELEMENTARY: "SCHLELEM",
    Schooling.MIDDLE: "SCHLMIDD",
    Schooling.HIGH: "SCHLHIGH",
    Schooling.UNFINISHED_COLLEGE: None,
    Schooling.COLLEGE: None,
}

DOMESTIC_BOARDING_MIN = 40.0
INTERNATIONAL_BOARDING_MIN = 60.0


class BoardWindow(str, Enum):
    NOT = "NOT"
    CALL = "CALL"
    NOW = "NOW"


def rescale_unit(ratings: Sequence[int], inverse: bool = False) -> float:
    """Mean of 0-5 ratings mapped to [0,1]; inverse=True gives (5 - mean)/5."""
    if len(ratings) == 0:
        raise ContractError("rescale_unit needs at least one rating")
    mean = sum(ratings) / len(ratings)
    return (5.0 - mean) / 5.0 if inverse else mean / 5.0


def top_box(ratings: Sequence[int]) -> int:
    """1 when every listed item was rated 4 or 5."""
    if len(ratings) == 0:
        raise ContractError("top_box needs at least one rating")
    return int(min(ratings) >= 4)


def dissat_ratio(rating: int, peer_ratings: Sequence[int], include_self: bool = False) -> float:
    """Own dissatisfaction (5 - rating) relative to the mean dissatisfaction of peers.

    peer_ratings excludes the respondent. With no other peers the mean falls back
    to one that includes the respondent.
    """
    own = 5 - rating
    peers = [5 - r for r in peer_ratings]
    if include_self or not peers:
        peers = peers + [own]
    mean = sum(peers) / len(peers)
    if mean == 0:
        return 0.0
    return own / mean


def terminal_metrics(stats: TerminalHourStats) -> Dict[str, float]:
    pax = stats.pax_hour
    return {
        "TERMDEN": 10.0 * pax / stats.terminal_area_m2,
        "TERMDIS": stats.pax_delayed_hour / pax if pax > 0 else 0.0,
        "BUSYDAY": stats.pax_day / 10_000.0,
        "BUSYHOUR": pax / 1_000.0,
    }


def runway_metrics(stats: TerminalHourStats) -> Dict[str, float]:
    if stats.declared_capacity <= 0:
        raise DataError(f"declared capacity must be positive, got {stats.declared_capacity}")

    def share(numerator: int, denominator: int) -> float:
        return numerator / denominator if denominator > 0 else 0.0

    return {
        "RUNWAYCONG": stats.movements_hour / stats.declared_capacity,
        "RUNWAYDIS": share(stats.disrupted_hour, stats.movements_hour),
        "CASCAD (DEP)": share(stats.dep_delayed_3h, stats.dep_total_3h),
        "CASCAD (ARR)": share(stats.arr_delayed_3h, stats.arr_total_3h),
    }


def weather_flags(obs: Optional[WeatherObservation]) -> bool:
    """Adverse weather: low ceiling or visibility, strong gusts, storms or hail."""
    if obs is None:
        return False
    if obs.ceiling_ft is not None and obs.ceiling_ft < CEILING_LIMIT_FT:
        return True
    if obs.visibility_m is not None and obs.visibility_m < VISIBILITY_LIMIT_M:
        return True
    if obs.gust_kt is not None:
        limit = GUST_LIMIT_WET_KT if obs.wet_runway else GUST_LIMIT_DRY_KT
        if obs.gust_kt > limit:
            return True
    return bool(obs.thunderstorm or obs.hail)


def generation_of(age_bracket: AgeBracket, interview_year: int) -> str:
    birth_year = math.floor(interview_year - AGE_BRACKET_MIDPOINTS[age_bracket])
    for label, first, last in GENERATIONS:
        if first <= birth_year <= last:
            return label
    raise ClassificationError(
        f"age bracket '{age_bracket.value}' in {interview_year} puts birth in {birth_year}, "
        "outside every generation"
    )


def flier_type(boardings_12m: int) -> str:
    if boardings_12m == 0:
        return "FIRSTTFLIER"
    if boardings_12m <= 2:
        return "EXPERCDFLIER"
    return "FREQFLIER"


def classify_respondent(survey: SurveyResponse) -> Dict[str, int]:
    """Generation, schooling, flier-type and purpose dummies (references dropped)."""
    dummies = {label: 0 for label in ("GENSILEN", "GENBOOM", "GENMILLEN", "GENZ")}
    generation = generation_of(survey.age_bracket, survey.interview_at.year)
    if generation in dummies:
        dummies[generation] = 1
    for label in ("SCHLELEM", "SCHLMIDD", "SCHLHIGH"):
        dummies[label] = 0
    school = SCHOOLING_DUMMIES[survey.schooling]
    if school:
        dummies[school] = 1
    flier = flier_type(survey.boardings_12m)
    dummies["FIRSTTFLIER"] = int(flier == "FIRSTTFLIER")
    dummies["FREQFLIER"] = int(flier == "FREQFLIER")
    dummies["LSRFLIER"] = int(survey.purpose == Purpose.LEISURE)
    return dummies


def minutes_to_flight(interview_at: datetime, sched_dep: datetime) -> float:
    return (sched_dep - interview_at).total_seconds() / 60.0


def board_window(interview_at: datetime, sched_dep: datetime, dest_scope: DestScope,
                 quantile_threshold: float) -> BoardWindow:
    """NOW inside the boarding limit (or after departure), NOT at/after the threshold, else CALL."""
    t = minutes_to_flight(interview_at, sched_dep)
    limit = INTERNATIONAL_BOARDING_MIN if dest_scope == DestScope.INTERNATIONAL else DOMESTIC_BOARDING_MIN
    if t <= limit:
        return BoardWindow.NOW
    if t >= quantile_threshold:
        return BoardWindow.NOT
    return BoardWindow.CALL


def delay_minutes(flight: FlightRecord) -> float:
    if flight.actual_dep is None:
        raise ContractError(f"flight {flight.flight_no} on {flight.date} is canceled")
    return (flight.actual_dep - flight.sched_dep).total_seconds() / 60.0


def delay_outcomes(flight: FlightRecord, threshold_min: int = 15) -> Dict[str, float]:
    minutes = delay_minutes(flight)
    delayed = minutes > threshold_min
    duration = max(0.0, minutes / 60.0) if delayed else 0.0
    return {"DEL": int(delayed), "DELDUR": duration, "DELDUR2": duration * duration}


def pandemic_dummies(day: date) -> Dict[str, int]:
    """PRE for 2019, EARLY from March 2020, LATER from 2021; other dates are the reference."""
    early = day.year == 2020 and day.month >= 3
    return {
        "PANDEMIC (PRE)": int(day.year == 2019),
        "PANDEMIC (EARLY)": int(early),
        "PANDEMIC (LATER)": int(day.year >= 2021),
    }


def is_red_eye(sched_dep: datetime) -> int:
    return int(sched_dep.hour >= 23 or sched_dep.hour <= 5)


def flight_metrics(flight: FlightRecord) -> Dict[str, float]:
    return {
        "LOADFAC": min(flight.pax / flight.seats, 1.0),
        "AIRCSIZE": flight.seats / 100.0,
        "CARGO": flight.cargo_kg / 1000.0 / 10.0,
        "DISTANCE": flight.distance_mi / 1000.0,
        "PRCONNECT": flight.connecting_pax / flight.pax if flight.pax > 0 else 0.0,
        "JETBRIDGE": int(flight.jetbridge),
        "REDEYE": is_red_eye(flight.sched_dep),
    }


def time_bin(minutes: float, edges: Iterable[float]) -> int:
    """Index of the first bin whose upper edge is >= minutes; later bins absorb overflow."""
    edges = list(edges)
    for i, upper in enumerate(edges):
        if minutes <= upper:
            return i
    return len(edges) - 1
