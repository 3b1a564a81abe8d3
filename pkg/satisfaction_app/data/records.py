# Version: 0.1
# Last Modified: 2026-10-18
# Changes: Record model for surveys, flights, weather and terminal-hour statistics
"""
Record model for the passenger-satisfaction survey pipeline.

Surveys, flights and weather observations are loaded from CSV into these
immutable records. The joining stage then combines them into JoinedRecord
instances.
"""
from dataclasses import dataclass, field
from datetime import date, datetime
from enum import Enum
from typing import Dict, List, Optional, Tuple


class Terminal(str, Enum):
    T1 = "T1"
    T2 = "T2"
    T3 = "T3"


class AgeBracket(str, Enum):
    UP_TO_21 = "up to 21"
    FROM_22_TO_25 = "22 to 25"
    FROM_26_TO_34 = "26 to 34"
    FROM_35_TO_44 = "35 to 44"
    FROM_45_TO_54 = "45 to 54"
    FROM_55_TO_64 = "55 to 64"
    FROM_65_TO_75 = "65 to 75"
    FROM_76 = "76 or more"


class Schooling(str, Enum):
    ILLITERATE = "illiterate or unfinished elementary"
    ELEMENTARY = "elementary"
    MIDDLE = "middle school"
    HIGH = "high school"
    UNFINISHED_COLLEGE = "unfinished college"
    COLLEGE = "college"


class Purpose(str, Enum):
    LEISURE = "leisure"
    BUSINESS = "business"
    OTHER = "other"


class DestScope(str, Enum):
    DOMESTIC = "domestic"
    INTERNATIONAL = "international"


DOMAIN_QUESTIONS: Tuple[str, ...] = (
    "curbside",
    "checkin_time",
    "wayfinding",
    "walk_distance",
    "flight_info",
    "security_time",
    "airline_staff",
    "shop_quality",
    "shop_variety",
    "food_quality",
    "food_variety",
    "shop_price",
    "food_price",
    "wifi",
)

ORIGIN_STATION = "origin"


@dataclass(frozen=True)
class SurveyResponse:
    respondent_id: str
    interview_at: datetime
    terminal: Terminal
    flight_no: str
    global_rating: int
    domain_ratings: Dict[str, int]
    age_bracket: AgeBracket
    schooling: Schooling
    boardings_12m: int
    purpose: Purpose
    dest_scope: DestScope
    is_connecting: bool


@dataclass(frozen=True)
class FlightRecord:
    flight_no: str
    date: date
    sched_dep: datetime
    actual_dep: Optional[datetime]
    airline: str
    destination: str
    distance_mi: float
    seats: int
    pax: int
    connecting_pax: int
    cargo_kg: float
    jetbridge: bool
    terminal: Terminal

    @property
    def canceled(self) -> bool:
        return self.actual_dep is None

    @property
    def overbooked(self) -> bool:
        """pax above seats is admissible but flagged; LOADFAC is capped at 1."""
        return self.pax > self.seats


@dataclass(frozen=True)
class WeatherObservation:
    station: str
    at: datetime
    ceiling_ft: Optional[float]
    visibility_m: Optional[float]
    gust_kt: Optional[float]
    wet_runway: bool
    thunderstorm: bool
    hail: bool


@dataclass(frozen=True)
class TerminalHourStats:
    terminal: Terminal
    hour: datetime
    pax_hour: int
    pax_day: int
    pax_delayed_hour: int
    dep_total_3h: int
    dep_delayed_3h: int
    arr_total_3h: int
    arr_delayed_3h: int
    movements_hour: int
    declared_capacity: int
    disrupted_hour: int
    terminal_area_m2: float


@dataclass(frozen=True)
class JoinedRecord:
    survey: SurveyResponse
    flight: FlightRecord
    weather_org: bool
    weather_dst: bool
    terminal_hour: TerminalHourStats
    weather_obs_org: Optional[WeatherObservation] = None
    weather_obs_dst: Optional[WeatherObservation] = None


@dataclass
class JoinResult:
    joined: List[JoinedRecord]
    rejects: List[Tuple[SurveyResponse, str]] = field(default_factory=list)


@dataclass
class FilterResult:
    kept: List[JoinedRecord]
    dropped: List[Tuple[JoinedRecord, str]] = field(default_factory=list)

    def reason_counts(self) -> Dict[str, int]:
        counts: Dict[str, int] = {}
        for _, reason in self.dropped:
            counts[reason] = counts.get(reason, 0) + 1
        return counts
