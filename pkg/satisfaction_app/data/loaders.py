# Version: 0.1
# Last Modified: 2026-10-18
# Changes: CSV ingestion for surveys, flights, weather and terminal-hour tables
"""
CSV loaders for the four source tables.

Every file is UTF-8 with a header row. Columns are parsed one at a time with
pandas. The first offending cell raises SchemaError, which names the CSV line
number (header = line 1) and the column.
"""
import os
from typing import Dict, List, Optional, Sequence, Type, Union

import numpy as np
import pandas as pd

from satisfaction_app.data.records import (
    DOMAIN_QUESTIONS,
    AgeBracket,
    DestScope,
    FlightRecord,
    Purpose,
    Schooling,
    SurveyResponse,
    Terminal,
    TerminalHourStats,
    WeatherObservation,
)
from satisfaction_app.errors import DataError, DuplicateKeyError, SchemaError
from satisfaction_app.utils.logger import get_logger

logger = get_logger(__name__)

TIMESTAMP_FORMAT = "%Y-%m-%d %H:%M"
DATE_FORMAT = "%Y-%m-%d"
MISSING_MARKERS = ("", "-", "NA", "null")

SURVEY_COLUMNS = (
    ("respondent_id", "interview_at", "terminal", "flight_no", "global_rating")
    + DOMAIN_QUESTIONS
    + ("age_bracket", "schooling", "boardings_12m", "purpose", "dest_scope", "is_connecting")
)
FLIGHT_COLUMNS = (
    "flight_no", "date", "sched_dep", "actual_dep", "airline", "destination", "distance_mi",
    "seats", "pax", "connecting_pax", "cargo_kg", "jetbridge", "terminal",
)
WEATHER_COLUMNS = (
    "station", "at", "ceiling_ft", "visibility_m", "gust_kt", "wet_runway", "thunderstorm", "hail",
)
TERMINAL_HOUR_COLUMNS = (
    "terminal", "hour", "pax_hour", "pax_day", "pax_delayed_hour", "dep_total_3h",
    "dep_delayed_3h", "arr_total_3h", "arr_delayed_3h", "movements_hour",
    "declared_capacity", "disrupted_hour", "terminal_area_m2",
)

TableSource = Union[str, pd.DataFrame]

_TRUE = {"1", "true", "yes", "y", "t"}
_FALSE = {"0", "false", "no", "n", "f"}


def _source_name(source: TableSource) -> str:
    return os.path.basename(source) if isinstance(source, str) else "<frame>"


def _read_table(source: TableSource, columns: Sequence[str]) -> pd.DataFrame:
    """A string-typed table from a CSV path or an in-memory frame."""
    if isinstance(source, pd.DataFrame):
        frame = source.astype(object).where(source.notna(), "").astype(str).reset_index(drop=True)
    else:
        if not os.path.exists(source):
            raise FileNotFoundError(f"input file not found: {source}")
        frame = pd.read_csv(source, dtype=str, keep_default_na=False, encoding="utf-8")
    frame.columns = [str(c).strip() for c in frame.columns]
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise SchemaError(f"{_source_name(source)} header lacks columns {missing}")
    return frame


def _line(frame: pd.DataFrame, mask: np.ndarray) -> int:
    return int(np.flatnonzero(mask)[0]) + 2


def _is_missing(values: pd.Series) -> np.ndarray:
    return values.str.strip().isin(MISSING_MARKERS).to_numpy()


def _numbers(frame: pd.DataFrame, column: str, optional: bool = False) -> np.ndarray:
    raw = frame[column].str.strip()
    missing = raw.isin(MISSING_MARKERS).to_numpy()
    parsed = pd.to_numeric(raw.where(~missing), errors="coerce").to_numpy(dtype=float)
    bad = np.isnan(parsed) & ~missing
    if not optional:
        bad |= missing
    if bad.any():
        raise SchemaError(f"not a number: '{frame[column].iloc[np.flatnonzero(bad)[0]]}'",
                          row=_line(frame, bad), column=column)
    return parsed


def _integers(frame: pd.DataFrame, column: str, low: float, high: float,
              missing_as: Optional[int] = None) -> np.ndarray:
    raw = frame[column].str.strip()
    missing = raw.isin(MISSING_MARKERS).to_numpy()
    parsed = pd.to_numeric(raw.where(~missing), errors="coerce").to_numpy(dtype=float)
    if missing_as is not None:
        parsed[missing] = missing_as
    bad = np.isnan(parsed) | (parsed != np.round(parsed)) | (parsed < low) | (parsed > high)
    if bad.any():
        raise SchemaError(
            f"value '{frame[column].iloc[np.flatnonzero(bad)[0]]}' outside integer range [{low}, {high}]",
            row=_line(frame, bad), column=column,
        )
    return parsed.astype(np.int64)


def _booleans(frame: pd.DataFrame, column: str) -> np.ndarray:
    raw = frame[column].str.strip().str.lower()
    bad = ~raw.isin(_TRUE | _FALSE).to_numpy()
    if bad.any():
        raise SchemaError(f"not a boolean: '{frame[column].iloc[np.flatnonzero(bad)[0]]}'",
                          row=_line(frame, bad), column=column)
    return raw.isin(_TRUE).to_numpy()


def _timestamps(frame: pd.DataFrame, column: str, fmt: str = TIMESTAMP_FORMAT,
                optional: bool = False) -> List[Optional[pd.Timestamp]]:
    raw = frame[column].str.strip()
    missing = raw.isin(MISSING_MARKERS).to_numpy()
    parsed = pd.to_datetime(raw.where(~missing), format=fmt, errors="coerce")
    bad = parsed.isna().to_numpy() & ~missing
    if not optional:
        bad |= missing
    if bad.any():
        raise SchemaError(f"timestamp '{frame[column].iloc[np.flatnonzero(bad)[0]]}' does not match {fmt}",
                          row=_line(frame, bad), column=column)
    return [None if pd.isna(ts) else ts.to_pydatetime() for ts in parsed]


def _enums(frame: pd.DataFrame, column: str, enum_type: Type) -> List:
    lookup = {member.value.lower(): member for member in enum_type}
    raw = frame[column].str.strip().str.lower()
    bad = ~raw.isin(list(lookup)).to_numpy()
    if bad.any():
        valid = ", ".join(member.value for member in enum_type)
        raise SchemaError(
            f"unknown label '{frame[column].iloc[np.flatnonzero(bad)[0]]}'; valid labels: {valid}",
            row=_line(frame, bad), column=column,
        )
    return [lookup[value] for value in raw]


def _texts(frame: pd.DataFrame, column: str) -> List[str]:
    raw = frame[column].str.strip()
    bad = (raw == "").to_numpy()
    if bad.any():
        raise SchemaError("empty value", row=_line(frame, bad), column=column)
    return raw.tolist()


def load_surveys(source: TableSource) -> List[SurveyResponse]:
    """Load surveys.csv; empty domain-rating cells are stored as 0."""
    frame = _read_table(source, SURVEY_COLUMNS)
    respondent_ids = _texts(frame, "respondent_id")
    interview_at = _timestamps(frame, "interview_at")
    terminals = _enums(frame, "terminal", Terminal)
    flight_nos = _texts(frame, "flight_no")
    global_rating = _integers(frame, "global_rating", 1, 10)
    domains: Dict[str, np.ndarray] = {
        q: _integers(frame, q, 0, 5, missing_as=0) for q in DOMAIN_QUESTIONS
    }
    ages = _enums(frame, "age_bracket", AgeBracket)
    schooling = _enums(frame, "schooling", Schooling)
    boardings = _integers(frame, "boardings_12m", 0, np.inf)
    purposes = _enums(frame, "purpose", Purpose)
    scopes = _enums(frame, "dest_scope", DestScope)
    connecting = _booleans(frame, "is_connecting")

    records = [
        SurveyResponse(
            respondent_id=respondent_ids[i],
            interview_at=interview_at[i],
            terminal=terminals[i],
            flight_no=flight_nos[i],
            global_rating=int(global_rating[i]),
            domain_ratings={q: int(domains[q][i]) for q in DOMAIN_QUESTIONS},
            age_bracket=ages[i],
            schooling=schooling[i],
            boardings_12m=int(boardings[i]),
            purpose=purposes[i],
            dest_scope=scopes[i],
            is_connecting=bool(connecting[i]),
        )
        for i in range(len(frame))
    ]
    logger.info(f"loaded {len(records)} survey rows from {_source_name(source)}")
    return records


def load_flights(source: TableSource) -> List[FlightRecord]:
    """Load flights.csv; a blank actual_dep marks a canceled flight."""
    frame = _read_table(source, FLIGHT_COLUMNS)
    flight_nos = _texts(frame, "flight_no")
    dates = _timestamps(frame, "date", fmt=DATE_FORMAT)
    sched = _timestamps(frame, "sched_dep")
    actual = _timestamps(frame, "actual_dep", optional=True)
    airlines = _texts(frame, "airline")
    destinations = _texts(frame, "destination")
    distance = _numbers(frame, "distance_mi")
    seats = _integers(frame, "seats", 1, np.inf)
    pax = _integers(frame, "pax", 0, np.inf)
    connecting = _integers(frame, "connecting_pax", 0, np.inf)
    cargo = _numbers(frame, "cargo_kg")
    jetbridge = _booleans(frame, "jetbridge")
    terminals = _enums(frame, "terminal", Terminal)

    bad = distance <= 0
    if bad.any():
        raise SchemaError("distance_mi must be positive", row=_line(frame, bad), column="distance_mi")
    bad = cargo < 0
    if bad.any():
        raise SchemaError("cargo_kg must be non-negative", row=_line(frame, bad), column="cargo_kg")
    bad = connecting > pax
    if bad.any():
        raise SchemaError("connecting_pax exceeds pax", row=_line(frame, bad), column="connecting_pax")

    seen: Dict[tuple, int] = {}
    for i, key in enumerate(zip(flight_nos, (d.date() for d in dates))):
        if key in seen:
            raise DuplicateKeyError(
                f"duplicate flight key {key[0]} on {key[1]} at lines {seen[key] + 2} and {i + 2}"
            )
        seen[key] = i

    records = [
        FlightRecord(
            flight_no=flight_nos[i],
            date=dates[i].date(),
            sched_dep=sched[i],
            actual_dep=actual[i],
            airline=airlines[i],
            destination=destinations[i],
            distance_mi=float(distance[i]),
            seats=int(seats[i]),
            pax=int(pax[i]),
            connecting_pax=int(connecting[i]),
            cargo_kg=float(cargo[i]),
            jetbridge=bool(jetbridge[i]),
            terminal=terminals[i],
        )
        for i in range(len(frame))
    ]
    overbooked = sum(r.overbooked for r in records)
    if overbooked:
        logger.warning(f"{overbooked} flights carry more passengers than seats; LOADFAC capped at 1")
    logger.info(f"loaded {len(records)} flights ({sum(r.canceled for r in records)} canceled)")
    return records


def load_weather(source: TableSource) -> List[WeatherObservation]:
    """Load weather.csv; sensor gaps ('-' or blank) stay absent, never zero."""
    frame = _read_table(source, WEATHER_COLUMNS)
    stations = _texts(frame, "station")
    at = _timestamps(frame, "at")
    ceiling = _numbers(frame, "ceiling_ft", optional=True)
    visibility = _numbers(frame, "visibility_m", optional=True)
    gust = _numbers(frame, "gust_kt", optional=True)
    wet = _booleans(frame, "wet_runway")
    thunder = _booleans(frame, "thunderstorm")
    hail = _booleans(frame, "hail")

    def _optional(values: np.ndarray, i: int) -> Optional[float]:
        return None if np.isnan(values[i]) else float(values[i])

    records = [
        WeatherObservation(
            station=stations[i],
            at=at[i],
            ceiling_ft=_optional(ceiling, i),
            visibility_m=_optional(visibility, i),
            gust_kt=_optional(gust, i),
            wet_runway=bool(wet[i]),
            thunderstorm=bool(thunder[i]),
            hail=bool(hail[i]),
        )
        for i in range(len(frame))
    ]
    logger.info(f"loaded {len(records)} weather observations")
    return records


def load_terminal_hours(source: TableSource) -> List[TerminalHourStats]:
    frame = _read_table(source, TERMINAL_HOUR_COLUMNS)
    terminals = _enums(frame, "terminal", Terminal)
    hours = _timestamps(frame, "hour")
    counts = {
        c: _integers(frame, c, 0, np.inf)
        for c in TERMINAL_HOUR_COLUMNS
        if c not in ("terminal", "hour", "terminal_area_m2")
    }
    area = _numbers(frame, "terminal_area_m2")
    for numerator, denominator in (
        ("pax_delayed_hour", "pax_hour"),
        ("dep_delayed_3h", "dep_total_3h"),
        ("arr_delayed_3h", "arr_total_3h"),
    ):
        bad = counts[numerator] > counts[denominator]
        if bad.any():
            raise SchemaError(f"{numerator} exceeds {denominator}", row=_line(frame, bad), column=numerator)
    bad = area <= 0
    if bad.any():
        raise SchemaError("terminal_area_m2 must be positive", row=_line(frame, bad), column="terminal_area_m2")

    records = [
        TerminalHourStats(
            terminal=terminals[i],
            hour=hours[i],
            terminal_area_m2=float(area[i]),
            **{c: int(values[i]) for c, values in counts.items()},
        )
        for i in range(len(frame))
    ]
    keys = {(r.terminal, r.hour) for r in records}
    if len(keys) != len(records):
        raise DuplicateKeyError("terminal_hours.csv repeats a (terminal, hour) key")
    logger.info(f"loaded {len(records)} terminal-hour rows")
    return records


def require_file(path: Optional[str], label: str) -> str:
    if not path:
        raise DataError(f"no path configured for {label}")
    if not os.path.exists(path):
        raise FileNotFoundError(f"{label} not found: {path}")
    return path
