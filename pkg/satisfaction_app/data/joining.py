# Version: 0.1
# Last Modified: 2026-10-18
# Changes: Survey/flight/weather join, sample filters and terminal-hour derivation
"""
Joining and filtering of the source tables.

A survey is matched to the flight with the same flight number whose scheduled
departure is nearest the interview. Weather is matched to the nearest
observation within 90 minutes of scheduled departure, at the origin station
and at the destination station. Surveys that find no flight go to the rejects
list with a reason code. Records removed by filter_sample carry one as well.
"""
import bisect
from collections import defaultdict
from datetime import datetime, timedelta
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from satisfaction_app.data.records import (
    ORIGIN_STATION,
    FilterResult,
    FlightRecord,
    JoinedRecord,
    JoinResult,
    SurveyResponse,
    Terminal,
    TerminalHourStats,
    WeatherObservation,
)
from satisfaction_app.features.variables import delay_minutes, weather_flags
from satisfaction_app.utils.logger import get_logger

logger = get_logger(__name__)

WEATHER_WINDOW = timedelta(minutes=90)
INTERVIEW_WINDOW = timedelta(hours=2)
DELAY_RULE_MIN = 15.0
DEFAULT_DECLARED_CAPACITY = 57
DEFAULT_TERMINAL_AREAS_M2: Dict[Terminal, float] = {
    Terminal.T1: 22_000.0,
    Terminal.T2: 80_000.0,
    Terminal.T3: 60_000.0,
}

REASON_NO_FLIGHT = "no-flight-match"
REASON_CANCELED = "canceled"
REASON_CONNECTING = "connecting"
REASON_TIME_WINDOW = "time-window"


def truncate_hour(moment: datetime) -> datetime:
    return moment.replace(minute=0, second=0, microsecond=0)


class _StationIndex:
    """Time-sorted observations per station for nearest-in-time lookups."""

    def __init__(self, observations: Sequence[WeatherObservation]):
        by_station: Dict[str, List[WeatherObservation]] = defaultdict(list)
        for obs in observations:
            by_station[obs.station].append(obs)
        self._obs = {s: sorted(rows, key=lambda o: o.at) for s, rows in by_station.items()}
        self._times = {s: [o.at for o in rows] for s, rows in self._obs.items()}

    def nearest(self, station: str, moment: datetime,
                window: timedelta = WEATHER_WINDOW) -> Optional[WeatherObservation]:
        times = self._times.get(station)
        if not times:
            return None
        pos = bisect.bisect_left(times, moment)
        best: Optional[WeatherObservation] = None
        best_gap: Optional[timedelta] = None
        # earlier candidate first so that equal gaps keep the earlier observation
        for idx in (pos - 1, pos):
            if 0 <= idx < len(times):
                gap = abs(times[idx] - moment)
                if gap <= window and (best_gap is None or gap < best_gap):
                    best, best_gap = self._obs[station][idx], gap
        return best


def _empty_hour(terminal: Terminal, hour: datetime, areas: Mapping[Terminal, float],
                capacity: int) -> TerminalHourStats:
    return TerminalHourStats(
        terminal=terminal, hour=hour, pax_hour=0, pax_day=0, pax_delayed_hour=0,
        dep_total_3h=0, dep_delayed_3h=0, arr_total_3h=0, arr_delayed_3h=0,
        movements_hour=0, declared_capacity=capacity, disrupted_hour=0,
        terminal_area_m2=areas[terminal],
    )


def derive_terminal_hours(flights: Sequence[FlightRecord],
                          areas: Optional[Mapping[Terminal, float]] = None,
                          capacity: int = DEFAULT_DECLARED_CAPACITY) -> List[TerminalHourStats]:
    """Terminal-hour statistics from departures alone (arrival counts stay 0)."""
    areas = dict(areas or DEFAULT_TERMINAL_AREAS_M2)
    pax_hour: Dict[Tuple[Terminal, datetime], int] = defaultdict(int)
    pax_delayed: Dict[Tuple[Terminal, datetime], int] = defaultdict(int)
    pax_day: Dict[Tuple[Terminal, object], int] = defaultdict(int)
    movements: Dict[datetime, int] = defaultdict(int)
    late: Dict[datetime, int] = defaultdict(int)
    disrupted: Dict[datetime, int] = defaultdict(int)

    for flight in flights:
        hour = truncate_hour(flight.sched_dep)
        key = (flight.terminal, hour)
        pax_hour[key] += flight.pax
        pax_day[(flight.terminal, hour.date())] += flight.pax
        movements[hour] += 1
        if flight.canceled:
            disrupted[hour] += 1
            continue
        if delay_minutes(flight) > DELAY_RULE_MIN:
            pax_delayed[key] += flight.pax
            late[hour] += 1
            disrupted[hour] += 1

    stats = []
    for (terminal, hour), pax in sorted(pax_hour.items(), key=lambda kv: (kv[0][1], kv[0][0].value)):
        window = [hour - timedelta(hours=h) for h in (1, 2, 3)]
        stats.append(TerminalHourStats(
            terminal=terminal,
            hour=hour,
            pax_hour=pax,
            pax_day=pax_day[(terminal, hour.date())],
            pax_delayed_hour=pax_delayed[(terminal, hour)],
            dep_total_3h=sum(movements.get(h, 0) for h in window),
            dep_delayed_3h=sum(late.get(h, 0) for h in window),
            arr_total_3h=0,
            arr_delayed_3h=0,
            movements_hour=movements[hour],
            declared_capacity=capacity,
            disrupted_hour=disrupted.get(hour, 0),
            terminal_area_m2=areas[terminal],
        ))
    return stats


def join_records(surveys: Sequence[SurveyResponse], flights: Sequence[FlightRecord],
                 weather: Sequence[WeatherObservation],
                 terminal_hours: Optional[Sequence[TerminalHourStats]] = None,
                 areas: Optional[Mapping[Terminal, float]] = None,
                 capacity: int = DEFAULT_DECLARED_CAPACITY) -> JoinResult:
    """Match surveys to flights, weather and terminal-hour context."""
    areas = dict(areas or DEFAULT_TERMINAL_AREAS_M2)
    if terminal_hours is None:
        terminal_hours = derive_terminal_hours(flights, areas, capacity)
    hour_index = {(s.terminal, s.hour): s for s in terminal_hours}
    stations = _StationIndex(weather)

    flights_by_no: Dict[str, List[FlightRecord]] = defaultdict(list)
    for flight in flights:
        flights_by_no[flight.flight_no].append(flight)
    for rows in flights_by_no.values():
        rows.sort(key=lambda f: f.sched_dep)

    joined: List[JoinedRecord] = []
    rejects: List[Tuple[SurveyResponse, str]] = []
    missing_hours = 0
    for survey in sorted(surveys, key=lambda s: s.respondent_id):
        candidates = flights_by_no.get(survey.flight_no)
        if not candidates:
            rejects.append((survey, REASON_NO_FLIGHT))
            continue
        # min() keeps the first (earliest) flight on equal gaps
        flight = min(candidates, key=lambda f: abs(f.sched_dep - survey.interview_at))
        obs_org = stations.nearest(ORIGIN_STATION, flight.sched_dep)
        obs_dst = stations.nearest(flight.destination, flight.sched_dep)
        hour = truncate_hour(flight.sched_dep)
        stats = hour_index.get((survey.terminal, hour))
        if stats is None:
            missing_hours += 1
            stats = _empty_hour(survey.terminal, hour, areas, capacity)
        joined.append(JoinedRecord(
            survey=survey,
            flight=flight,
            weather_org=weather_flags(obs_org),
            weather_dst=weather_flags(obs_dst),
            terminal_hour=stats,
            weather_obs_org=obs_org,
            weather_obs_dst=obs_dst,
        ))

    if missing_hours:
        logger.warning(f"{missing_hours} joined records had no terminal-hour row; zero-traffic hour used")
    if rejects:
        logger.warning(f"{len(rejects)} surveys rejected ({REASON_NO_FLIGHT})")
    logger.info(f"joined {len(joined)} of {len(surveys)} surveys")
    return JoinResult(joined=joined, rejects=rejects)


def drop_reason(record: JoinedRecord) -> Optional[str]:
    if record.flight.canceled:
        return REASON_CANCELED
    if record.survey.is_connecting:
        return REASON_CONNECTING
    if abs(record.survey.interview_at - record.flight.sched_dep) > INTERVIEW_WINDOW:
        return REASON_TIME_WINDOW
    return None


def filter_sample(joined: Sequence[JoinedRecord]) -> FilterResult:
    """Drop canceled flights, connecting passengers and interviews more than 2h from departure."""
    kept: List[JoinedRecord] = []
    dropped: List[Tuple[JoinedRecord, str]] = []
    for record in joined:
        reason = drop_reason(record)
        if reason is None:
            kept.append(record)
        else:
            dropped.append((record, reason))
    result = FilterResult(kept=kept, dropped=dropped)
    logger.info(f"sample filter kept {len(kept)} records; dropped {result.reason_counts()}")
    return result
