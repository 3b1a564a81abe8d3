# Version: 0.1
# Last Modified: 2026-10-18
# Changes: Calibrated synthetic survey, flight, weather and terminal-hour generator
"""
Synthetic airport-survey data with a known data-generating process.

The generator draws one interviewed passenger per survey row. A latent
personality factor enters every domain rating and the global-rating index.
Congestion in the passenger's terminal-hour raises the delay propensity and
shifts the same factor, so a naive satisfaction model confounds delays with
personality. The truth record keeps the parameters needed to score an
estimator against the true delay effect.

Calibration:
    APTSAT  category shares of a discretized normal matched to (mean, sd)
    DEL     probit intercept solved so the sample delay share hits the target
    LOADFAC Beta draws with the target mean and sd
"""
import calendar
import os
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.optimize import brentq, least_squares
from scipy.stats import norm

from satisfaction_app.data.joining import DEFAULT_DECLARED_CAPACITY, DEFAULT_TERMINAL_AREAS_M2
from satisfaction_app.data.loaders import (
    DATE_FORMAT,
    FLIGHT_COLUMNS,
    SURVEY_COLUMNS,
    TERMINAL_HOUR_COLUMNS,
    TIMESTAMP_FORMAT,
    WEATHER_COLUMNS,
)
from satisfaction_app.data.records import DOMAIN_QUESTIONS, ORIGIN_STATION, AgeBracket, Schooling, Terminal
from satisfaction_app.errors import ConfigError
from satisfaction_app.features.variables import AGE_BRACKET_MIDPOINTS, GENERATIONS, SCHOOLING_DUMMIES
from satisfaction_app.utils.logger import get_logger

logger = get_logger(__name__)

DEFAULT_CALIBRATION_TARGETS: Dict[str, Tuple[float, float]] = {
    "APTSAT": (8.07, 1.72),
    "DEL": (0.17, 0.37),
    "LOADFAC": (0.82, 0.17),
}

TERMINALS = (Terminal.T1, Terminal.T2, Terminal.T3)


@dataclass(frozen=True)
class SyntheticConfig:
    n_respondents: int = 13071
    seed: int = 20180201
    trait_loading: float = 0.5
    delay_effect_true: float = -0.30
    confound_strength: float = 0.3
    calibration_targets: Mapping[str, Tuple[float, float]] = field(
        default_factory=lambda: dict(DEFAULT_CALIBRATION_TARGETS))
    internal_blame_only: bool = False
    trait_sd: float = 0.5
    rating_noise: float = 1.0
    congestion_loading: float = 0.8
    weather_org_rate: float = 0.03
    weather_dst_rate: float = 0.09
    weather_org_effect: float = 0.6
    weather_dst_effect: float = 0.6
    survey_days_per_month: int = 6
    terminal_shares: Tuple[float, float, float] = (0.08, 0.70, 0.22)
    connecting_rate: float = 0.03
    canceled_rate: float = 0.01
    unmatched_rate: float = 0.005

    def __post_init__(self):
        if self.n_respondents <= 0:
            raise ConfigError(f"n_respondents must be positive, got {self.n_respondents}")
        if not 1 <= self.survey_days_per_month <= 28:
            raise ConfigError("survey_days_per_month must lie in [1, 28]")
        shares = np.asarray(self.terminal_shares, dtype=float)
        if len(shares) != 3 or np.any(shares < 0) or not np.isclose(shares.sum(), 1.0):
            raise ConfigError(f"terminal_shares must be three non-negative shares summing to 1, got {self.terminal_shares}")
        for name, rate in (("weather_org_rate", self.weather_org_rate), ("weather_dst_rate", self.weather_dst_rate),
                           ("connecting_rate", self.connecting_rate), ("canceled_rate", self.canceled_rate),
                           ("unmatched_rate", self.unmatched_rate)):
            if not 0.0 <= rate < 1.0:
                raise ConfigError(f"{name} must lie in [0, 1), got {rate}")
        if self.trait_sd < 0 or self.rating_noise <= 0:
            raise ConfigError("trait_sd must be non-negative and rating_noise positive")
        targets = dict(DEFAULT_CALIBRATION_TARGETS)
        targets.update(self.calibration_targets)
        unknown = set(targets) - set(DEFAULT_CALIBRATION_TARGETS)
        if unknown:
            raise ConfigError(f"no calibration rule for {sorted(unknown)}")
        for name, (mean, sd) in targets.items():
            if not (mean > 0 and sd > 0):
                raise ConfigError(f"calibration target {name} needs positive mean and sd, got ({mean}, {sd})")
        object.__setattr__(self, "calibration_targets", targets)


@dataclass
class SyntheticTruth:
    """Parameters of one synthetic draw, plus per-respondent latent terms."""

    seed: int
    n_respondents: int
    trait_loading: float
    trait_sd: float
    delay_effect_true: float
    confound_strength: float
    internal_blame_only: bool
    congestion_loading: float
    delay_intercept: float
    weather_org_effect: float
    weather_dst_effect: float
    cutpoints: Tuple[float, ...]
    category_shares: Tuple[float, ...]
    roster_effects: Dict[str, float]
    respondent_ids: np.ndarray
    composite_error: np.ndarray
    delayed: np.ndarray
    delayed_internal: np.ndarray
    congestion: np.ndarray

    def to_text(self) -> str:
        lines = [
            f"seed: {self.seed}",
            f"n_respondents: {self.n_respondents}",
            f"trait_loading: {self.trait_loading:.10g}",
            f"trait_sd: {self.trait_sd:.10g}",
            f"delay_effect_true: {self.delay_effect_true:.10g}",
            f"confound_strength: {self.confound_strength:.10g}",
            f"internal_blame_only: {str(self.internal_blame_only).lower()}",
            f"congestion_loading: {self.congestion_loading:.10g}",
            f"delay_intercept: {self.delay_intercept:.10g}",
            f"weather_org_effect: {self.weather_org_effect:.10g}",
            f"weather_dst_effect: {self.weather_dst_effect:.10g}",
            f"cutpoints: {', '.join(f'{c:.10g}' for c in self.cutpoints)}",
            f"category_shares: {', '.join(f'{s:.10g}' for s in self.category_shares)}",
            f"sample_del_mean: {float(np.mean(self.delayed)):.10g}",
        ]
        lines += [f"roster.{name}: {value:.10g}" for name, value in self.roster_effects.items()]
        return "\n".join(lines) + "\n"


@dataclass
class SyntheticDataset:
    surveys: pd.DataFrame
    flights: pd.DataFrame
    weather: pd.DataFrame
    terminal_hours: pd.DataFrame
    truth: SyntheticTruth


def rating_category_shares(mean: float, sd: float, levels: int = 10) -> np.ndarray:
    """Shares of ratings 1..levels from a normal censored at both ends and rounded.

    The latent mean and sd are fitted so the discrete distribution has the
    requested moments.
    """
    if not 1.0 < mean < levels or sd <= 0:
        raise ConfigError(f"rating target ({mean}, {sd}) is outside the 1..{levels} scale")
    edges = np.arange(1.5, levels, 1.0)
    values = np.arange(1, levels + 1, dtype=float)

    def shares(params: np.ndarray) -> np.ndarray:
        cdf = norm.cdf((edges - params[0]) / np.exp(params[1]))
        return np.diff(np.concatenate([[0.0], cdf, [1.0]]))

    def residual(params: np.ndarray) -> np.ndarray:
        p = shares(params)
        m = p @ values
        return np.array([m - mean, np.sqrt(p @ (values - m) ** 2) - sd])

    fit = least_squares(residual, x0=np.array([mean, np.log(sd)]), xtol=1e-12, ftol=1e-12, gtol=1e-12)
    if np.max(np.abs(fit.fun)) > 1e-6:
        raise ConfigError(f"no discretized normal on 1..{levels} has mean {mean} and sd {sd}")
    return shares(fit.x)


def beta_parameters(mean: float, sd: float) -> Tuple[float, float]:
    variance = sd * sd
    if not 0.0 < mean < 1.0 or variance >= mean * (1.0 - mean):
        raise ConfigError(f"no Beta distribution has mean {mean} and sd {sd}")
    k = mean * (1.0 - mean) / variance - 1.0
    return mean * k, (1.0 - mean) * k


def solve_delay_intercept(index: np.ndarray, target: float) -> float:
    """Intercept a such that mean(Phi(a + index)) equals the target delay share."""
    if not 0.0 < target < 1.0:
        raise ConfigError(f"delay share target must lie in (0, 1), got {target}")
    return float(brentq(lambda a: norm.cdf(a + index).mean() - target, -30.0, 30.0, xtol=1e-12))


class SyntheticSurveyGenerator:
    def __init__(self, config: SyntheticConfig):
        self.config = config
        self.rng = np.random.default_rng(config.seed)

        # survey calendar: months in the field and the period each belongs to
        self.periods = ("2018", "PRE", "EARLY", "LATER")
        self.period_shares = (0.40, 0.43, 0.03, 0.14)

        self.age_shares = {
            AgeBracket.UP_TO_21: 0.05, AgeBracket.FROM_22_TO_25: 0.08, AgeBracket.FROM_26_TO_34: 0.22,
            AgeBracket.FROM_35_TO_44: 0.25, AgeBracket.FROM_45_TO_54: 0.18, AgeBracket.FROM_55_TO_64: 0.12,
            AgeBracket.FROM_65_TO_75: 0.07, AgeBracket.FROM_76: 0.03,
        }
        self.schooling_shares = {
            Schooling.ILLITERATE: 0.005, Schooling.ELEMENTARY: 0.015, Schooling.MIDDLE: 0.03,
            Schooling.HIGH: 0.14, Schooling.UNFINISHED_COLLEGE: 0.11, Schooling.COLLEGE: 0.70,
        }
        self.purpose_shares = {"leisure": 0.62, "business": 0.30, "other": 0.08}
        self.international_by_terminal = {Terminal.T1: 0.0, Terminal.T2: 0.175, Terminal.T3: 0.85}
        self.jetbridge_rate = {Terminal.T1: 0.0, Terminal.T2: 0.84, Terminal.T3: 0.84}

        self.domestic_routes = {
            "POA": 530, "REC": 1310, "SSA": 900, "BSB": 540, "CNF": 310, "CWB": 210, "FOR": 1470,
            "BEL": 1520, "FLN": 300, "GYN": 500, "MAO": 1680, "NAT": 1440, "VIX": 460, "CGB": 830,
        }
        self.international_routes = {
            "MIA": 4150, "JFK": 4770, "LIS": 4930, "MAD": 5220, "CDG": 5870, "FRA": 6070, "EZE": 1040,
            "SCL": 1610, "LIM": 2150, "BOG": 2680, "MCO": 4290, "LHR": 5880, "AMS": 6000, "DXB": 7550,
        }
        self.domestic_airlines = ("G3", "AD", "JJ")
        self.international_airlines = ("JJ", "AA", "TP", "AF", "LH", "LA", "IB")
        self.domestic_seats = ((70, 120, 150, 180, 220), (0.10, 0.20, 0.35, 0.25, 0.10))
        self.international_seats = ((180, 220, 300, 350, 400), (0.15, 0.25, 0.30, 0.20, 0.10))

        # terminal traffic per hour at full activity
        self.base_pax_hour = {Terminal.T1: 400.0, Terminal.T2: 2000.0, Terminal.T3: 1500.0}
        self.hour_profile = np.array([0.25] * 5 + [0.6] + [1.0] * 16 + [0.6, 0.6])
        self.sched_hour_weights = np.array([0.017] * 6 + [0.88 / 17] * 17 + [0.017])
        self.terminal_delay_shift = {Terminal.T1: 0.9, Terminal.T2: 0.0, Terminal.T3: 0.4}
        self.loadfac_delay_effect = 0.5

        # domain rating latent means and missing-answer rates
        self.domain_means = {q: 0.5 for q in DOMAIN_QUESTIONS}
        self.domain_means["wifi"] = 0.0
        self.missing_rates = {q: 0.02 for q in DOMAIN_QUESTIONS}
        self.missing_rates["wifi"] = 0.25
        self.rating_cuts = np.array([-1.3, -0.6, 0.1, 0.8])

        self.roster_effects = {
            "GENSILEN": 0.20, "GENBOOM": 0.10, "GENMILLEN": -0.05, "GENZ": -0.10,
            "SCHLELEM": 0.30, "SCHLMIDD": 0.20, "SCHLHIGH": 0.10,
            "FIRSTTFLIER": 0.10, "FREQFLIER": -0.10, "LSRFLIER": 0.05,
            "INTNLDEST": 0.05, "REDEYE": -0.05, "SMALLTERM": -0.20, "INTNLTERM": 0.10,
            "TERMDEN": -0.30, "JETBRIDGE": 0.10, "SHOPS": 0.60, "FOOD": 0.50,
            "EXPENSIVE": -0.40, "WIFI": 0.30,
        }

    # ------------------------------------------------------------------ calendar
    def survey_calendar(self) -> Tuple[List[date], List[List[int]]]:
        """Survey days and, per period, the indices of its days."""
        months: List[Tuple[int, int, str]] = []
        for year, first, last in ((2018, 2, 12), (2019, 1, 12), (2020, 1, 3), (2021, 1, 7)):
            for month in range(first, last + 1):
                if year == 2018 or (year == 2020 and month < 3):
                    period = "2018"
                elif year == 2019:
                    period = "PRE"
                elif year == 2020:
                    period = "EARLY"
                else:
                    period = "LATER"
                months.append((year, month, period))

        days: List[date] = []
        by_period: Dict[str, List[int]] = {p: [] for p in self.periods}
        for year, month, period in months:
            n_days = calendar.monthrange(year, month)[1]
            picked = np.sort(self.rng.choice(n_days, size=min(self.config.survey_days_per_month, n_days),
                                             replace=False)) + 1
            for day in picked:
                by_period[period].append(len(days))
                days.append(date(year, month, int(day)))
        return days, [by_period[p] for p in self.periods]

    # ------------------------------------------------------------------ congestion
    def generate_congestion(self, n_days: int) -> Tuple[np.ndarray, np.ndarray]:
        """Airport-hour congestion and its terminal-hour version, both standard normal."""
        z_air = self.rng.standard_normal((n_days, 24))
        local = self.rng.standard_normal((n_days, 24, len(TERMINALS)))
        z_term = 0.7 * z_air[:, :, None] + np.sqrt(1.0 - 0.49) * local
        return z_air, z_term

    # ------------------------------------------------------------------ respondents
    def generate_respondents(self, days: List[date], period_days: List[List[int]]) -> pd.DataFrame:
        cfg, rng, n = self.config, self.rng, self.config.n_respondents
        period = rng.choice(len(self.periods), size=n, p=self.period_shares)
        day_idx = np.array([period_days[p][rng.integers(len(period_days[p]))] for p in period])
        hour = rng.choice(24, size=n, p=self.sched_hour_weights / self.sched_hour_weights.sum())
        minute = 5 * rng.integers(0, 12, size=n)

        ttf = 20.0 + rng.gamma(4.0, 12.0, size=n)
        late = rng.random(n) < 0.01
        ttf = np.round(np.where(late, rng.uniform(-30.0, 0.0, size=n), ttf)).astype(int)

        terminal_idx = rng.choice(len(TERMINALS), size=n, p=np.asarray(cfg.terminal_shares, dtype=float))
        terminals = [TERMINALS[i] for i in terminal_idx]
        intl_rate = np.array([self.international_by_terminal[t] for t in terminals])
        international = rng.random(n) < intl_rate

        ages = list(self.age_shares)
        schools = list(self.schooling_shares)
        purposes = list(self.purpose_shares)
        frame = pd.DataFrame({
            "day_idx": day_idx,
            "hour": hour,
            "minute": minute,
            "ttf": ttf,
            "terminal_idx": terminal_idx,
            "international": international,
            "age_bracket": [ages[i] for i in rng.choice(len(ages), size=n, p=list(self.age_shares.values()))],
            "schooling": [schools[i] for i in rng.choice(len(schools), size=n,
                                                         p=list(self.schooling_shares.values()))],
            "purpose": [purposes[i] for i in rng.choice(len(purposes), size=n,
                                                        p=list(self.purpose_shares.values()))],
        })
        kind = rng.choice(3, size=n, p=[0.31, 0.30, 0.39])
        frame["boardings_12m"] = np.where(kind == 0, 0,
                                          np.where(kind == 1, rng.integers(1, 3, size=n), rng.integers(3, 21, size=n)))
        frame["is_connecting"] = rng.random(n) < cfg.connecting_rate
        frame["sched_dep"] = [datetime.combine(days[d], datetime.min.time()) + timedelta(hours=int(h), minutes=int(m))
                              for d, h, m in zip(day_idx, hour, minute)]
        frame["interview_at"] = frame["sched_dep"] - pd.to_timedelta(frame["ttf"], unit="m")
        return frame

    def generate_flights(self, resp: pd.DataFrame) -> pd.DataFrame:
        cfg, rng, n = self.config, self.rng, len(resp)
        a, b = beta_parameters(*cfg.calibration_targets["LOADFAC"])
        intl = resp["international"].to_numpy()

        dom_codes, intl_codes = list(self.domestic_routes), list(self.international_routes)
        dest_dom = rng.integers(len(dom_codes), size=n)
        dest_intl = rng.integers(len(intl_codes), size=n)
        destination = np.where(intl, np.asarray(intl_codes)[dest_intl], np.asarray(dom_codes)[dest_dom])
        routes = {**self.domestic_routes, **self.international_routes}
        distance = np.array([routes[c] for c in destination]) * rng.uniform(0.97, 1.03, size=n)

        air_dom = rng.integers(len(self.domestic_airlines), size=n)
        air_intl = rng.integers(len(self.international_airlines), size=n)
        airline = np.where(intl, np.asarray(self.international_airlines)[air_intl],
                           np.asarray(self.domestic_airlines)[air_dom])

        seats_dom = rng.choice(self.domestic_seats[0], size=n, p=self.domestic_seats[1])
        seats_intl = rng.choice(self.international_seats[0], size=n, p=self.international_seats[1])
        seats = np.where(intl, seats_intl, seats_dom)
        loadfac = rng.beta(a, b, size=n)
        pax = np.maximum(np.round(seats * loadfac), 1).astype(int)
        connecting = rng.binomial(pax, rng.beta(0.5, 9.5, size=n))
        cargo = np.where(intl, rng.exponential(6000.0, size=n), rng.exponential(1200.0, size=n))
        terminals = [TERMINALS[i] for i in resp["terminal_idx"]]
        jetbridge = rng.random(n) < np.array([self.jetbridge_rate[t] for t in terminals])

        flights = pd.DataFrame({
            "destination": destination,
            "distance_mi": np.round(distance, 1),
            "airline": airline,
            "seats": seats,
            "pax": pax,
            "connecting_pax": connecting,
            "cargo_kg": np.round(cargo, 1),
            "jetbridge": jetbridge,
            "loadfac": pax / seats,
        })
        # flight numbers are unique per departure date
        serial = resp.groupby("day_idx").cumcount().to_numpy()
        flights["flight_no"] = [f"{code}{1000 + k}" for code, k in zip(airline, serial)]
        return flights

    # ------------------------------------------------------------------ weather
    def observation_fields(self, adverse: np.ndarray) -> Dict[str, np.ndarray]:
        """Sensor readings consistent with the adverse flag; nominal rows never trip a limit."""
        rng, n = self.rng, len(adverse)
        cause = rng.integers(0, 4, size=n)
        ceiling = np.where(adverse & (cause == 0), rng.uniform(200, 590, size=n), rng.uniform(1500, 5000, size=n))
        ceiling = np.where(~adverse & (rng.random(n) < 0.05), np.nan, np.round(ceiling))
        visibility = np.round(np.where(adverse & (cause == 1), rng.uniform(400, 1400, size=n),
                                       rng.uniform(3000, 10000, size=n)))
        gusty = adverse & (cause == 2)
        wet = gusty | (rng.random(n) < 0.2)
        gust = np.where(gusty, rng.uniform(28, 40, size=n),
                        np.where(rng.random(n) < 0.3, rng.uniform(5, 25, size=n), np.nan))
        storm = adverse & (cause == 3)
        hail = storm & (rng.random(n) < 0.1)
        return {
            "ceiling_ft": ceiling,
            "visibility_m": visibility,
            "gust_kt": np.round(gust),
            "wet_runway": wet,
            "thunderstorm": storm,
            "hail": hail,
        }

    def generate_origin_weather(self, days: List[date]) -> pd.Series:
        """Adverse flag per hourly origin observation, including midnight after each survey day."""
        stamps = sorted({datetime.combine(d, datetime.min.time()) + timedelta(hours=h)
                         for d in days for h in range(25)})
        adverse = self.rng.random(len(stamps)) < self.config.weather_org_rate
        return pd.Series(adverse, index=pd.DatetimeIndex(stamps))

    # ------------------------------------------------------------------ assembly
    def generate(self) -> SyntheticDataset:
        cfg, rng = self.config, self.rng
        n = cfg.n_respondents
        days, period_days = self.survey_calendar()
        z_air, z_term = self.generate_congestion(len(days))
        resp = self.generate_respondents(days, period_days)
        flights = self.generate_flights(resp)

        day_idx = resp["day_idx"].to_numpy()
        hour = resp["hour"].to_numpy()
        terminal_idx = resp["terminal_idx"].to_numpy()
        terminals = [TERMINALS[i] for i in terminal_idx]
        congestion = z_term[day_idx, hour, terminal_idx]

        # origin weather: nearest hourly observation, ties to the earlier one
        origin = self.generate_origin_weather(days)
        nearest = resp["sched_dep"].dt.floor("h") + pd.to_timedelta((resp["minute"] > 30).astype(int), unit="h")
        w_org = origin.loc[pd.DatetimeIndex(nearest)].to_numpy()
        # destination weather: one observation per (station, scheduled departure)
        dst_keys = pd.DataFrame({"station": flights["destination"], "at": resp["sched_dep"]})
        unique_dst = dst_keys.drop_duplicates().reset_index(drop=True)
        unique_dst["adverse"] = rng.random(len(unique_dst)) < cfg.weather_dst_rate
        w_dst = dst_keys.merge(unique_dst, on=["station", "at"], how="left")["adverse"].to_numpy(bool)

        # delay propensity
        small = np.array([t == Terminal.T1 for t in terminals], dtype=float)
        intl_term = np.array([t == Terminal.T3 for t in terminals], dtype=float)
        internal_index = (cfg.congestion_loading * congestion
                          + np.array([self.terminal_delay_shift[t] for t in terminals])
                          + self.loadfac_delay_effect * (flights["loadfac"].to_numpy() - cfg.calibration_targets["LOADFAC"][0]))
        weather_index = cfg.weather_org_effect * w_org + cfg.weather_dst_effect * w_dst
        intercept = solve_delay_intercept(internal_index + weather_index, cfg.calibration_targets["DEL"][0])
        shock = rng.standard_normal(n)
        latent_internal = intercept + internal_index + shock
        delayed = latent_internal + weather_index > 0
        delayed_internal = latent_internal > 0

        delay_min = np.where(delayed, 16 + np.floor(rng.exponential(30.0, size=n)),
                             rng.integers(-5, 16, size=n)).astype(int)
        canceled = rng.random(n) < cfg.canceled_rate

        # personality and domain ratings
        personality = -cfg.confound_strength * congestion + cfg.trait_sd * rng.standard_normal(n)
        ratings: Dict[str, np.ndarray] = {}
        for question in DOMAIN_QUESTIONS:
            latent = (self.domain_means[question] + cfg.trait_loading * personality
                      + cfg.rating_noise * rng.standard_normal(n))
            rating = 1 + np.searchsorted(self.rating_cuts, latent)
            ratings[question] = np.where(rng.random(n) < self.missing_rates[question], 0, rating)

        # terminal-hour traffic, needed for TERMDEN in the satisfaction index
        pax_hour = np.empty_like(z_term)
        for k, terminal in enumerate(TERMINALS):
            noise = np.exp(0.25 * rng.standard_normal(z_term.shape[:2]) - 0.03125)
            pax_hour[:, :, k] = np.round(self.base_pax_hour[terminal] * self.hour_profile[None, :] * noise)
        areas = np.array([DEFAULT_TERMINAL_AREAS_M2[t] for t in TERMINALS])

        roster = self.roster_values(resp, flights, ratings, small, intl_term,
                                    10.0 * pax_hour[day_idx, hour, terminal_idx] / areas[terminal_idx], days)
        blame = delayed_internal if cfg.internal_blame_only else delayed
        composite = cfg.trait_loading * personality + rng.standard_normal(n)
        index = roster @ np.array(list(self.roster_effects.values())) + cfg.delay_effect_true * (blame & ~canceled)
        satisfaction_index = index + composite

        shares = rating_category_shares(*cfg.calibration_targets["APTSAT"])
        cutpoints = np.quantile(satisfaction_index, np.cumsum(shares)[:-1])
        global_rating = 1 + np.searchsorted(cutpoints, satisfaction_index, side="left")

        terminal_hours = self.terminal_hour_table(days, z_air, z_term, pax_hour, areas, intercept)
        weather = self.weather_table(origin, unique_dst)

        respondent_ids = np.array([f"R{i + 1:06d}" for i in range(n)])
        unmatched = rng.random(n) < cfg.unmatched_rate
        surveys = pd.DataFrame({
            "respondent_id": respondent_ids,
            "interview_at": resp["interview_at"].dt.strftime(TIMESTAMP_FORMAT),
            "terminal": [t.value for t in terminals],
            "flight_no": np.where(unmatched, flights["flight_no"] + "U", flights["flight_no"]),
            "global_rating": global_rating,
            **ratings,
            "age_bracket": [a.value for a in resp["age_bracket"]],
            "schooling": [s.value for s in resp["schooling"]],
            "boardings_12m": resp["boardings_12m"],
            "purpose": resp["purpose"],
            "dest_scope": np.where(resp["international"], "international", "domestic"),
            "is_connecting": resp["is_connecting"].astype(int),
        })[list(SURVEY_COLUMNS)]

        actual = resp["sched_dep"] + pd.to_timedelta(delay_min, unit="m")
        flight_table = flights.assign(
            date=[days[d].strftime(DATE_FORMAT) for d in day_idx],
            sched_dep=resp["sched_dep"].dt.strftime(TIMESTAMP_FORMAT),
            actual_dep=np.where(canceled, "", actual.dt.strftime(TIMESTAMP_FORMAT)),
            jetbridge=flights["jetbridge"].astype(int),
            terminal=[t.value for t in terminals],
        )[list(FLIGHT_COLUMNS)]

        truth = SyntheticTruth(
            seed=cfg.seed,
            n_respondents=n,
            trait_loading=cfg.trait_loading,
            trait_sd=cfg.trait_sd,
            delay_effect_true=cfg.delay_effect_true,
            confound_strength=cfg.confound_strength,
            internal_blame_only=cfg.internal_blame_only,
            congestion_loading=cfg.congestion_loading,
            delay_intercept=intercept,
            weather_org_effect=cfg.weather_org_effect,
            weather_dst_effect=cfg.weather_dst_effect,
            cutpoints=tuple(float(c) for c in cutpoints),
            category_shares=tuple(float(s) for s in shares),
            roster_effects=dict(self.roster_effects),
            respondent_ids=respondent_ids,
            composite_error=composite,
            delayed=delayed.astype(int),
            delayed_internal=delayed_internal.astype(int),
            congestion=congestion,
        )
        logger.info(f"synthesized {n} surveys over {len(days)} survey days "
                    f"(delay share {delayed.mean():.3f}, mean rating {global_rating.mean():.2f})")
        return SyntheticDataset(surveys=surveys, flights=flight_table, weather=weather,
                                terminal_hours=terminal_hours, truth=truth)

    def roster_values(self, resp: pd.DataFrame, flights: pd.DataFrame, ratings: Mapping[str, np.ndarray],
                      small: np.ndarray, intl_term: np.ndarray, termden: np.ndarray,
                      days: Sequence[date]) -> np.ndarray:
        """Satisfaction roster columns in roster order, from the same recipes the features use."""
        years = np.array([days[d].year for d in resp["day_idx"]])
        midpoints = np.array([AGE_BRACKET_MIDPOINTS[a] for a in resp["age_bracket"]])
        birth = np.floor(years - midpoints)
        generation = np.full(len(resp), "", dtype=object)
        for label, first, last in GENERATIONS:
            generation[(birth >= first) & (birth <= last)] = label
        school = np.array([SCHOOLING_DUMMIES[s] or "" for s in resp["schooling"]], dtype=object)
        boardings = resp["boardings_12m"].to_numpy()

        def mean_of(*questions: str) -> np.ndarray:
            return np.mean([ratings[q] for q in questions], axis=0) / 5.0

        columns = {
            "GENSILEN": generation == "GENSILEN",
            "GENBOOM": generation == "GENBOOM",
            "GENMILLEN": generation == "GENMILLEN",
            "GENZ": generation == "GENZ",
            "SCHLELEM": school == "SCHLELEM",
            "SCHLMIDD": school == "SCHLMIDD",
            "SCHLHIGH": school == "SCHLHIGH",
            "FIRSTTFLIER": boardings == 0,
            "FREQFLIER": boardings > 2,
            "LSRFLIER": resp["purpose"].to_numpy() == "leisure",
            "INTNLDEST": resp["international"].to_numpy(),
            "REDEYE": (resp["hour"].to_numpy() >= 23) | (resp["hour"].to_numpy() <= 5),
            "SMALLTERM": small,
            "INTNLTERM": intl_term,
            "TERMDEN": termden,
            "JETBRIDGE": flights["jetbridge"].to_numpy(),
            "SHOPS": mean_of("shop_quality", "shop_variety"),
            "FOOD": mean_of("food_quality", "food_variety"),
            "EXPENSIVE": 1.0 - mean_of("shop_price", "food_price"),
            "WIFI": mean_of("wifi"),
        }
        return np.column_stack([np.asarray(columns[name], dtype=float) for name in self.roster_effects])

    def terminal_hour_table(self, days: Sequence[date], z_air: np.ndarray, z_term: np.ndarray,
                            pax_hour: np.ndarray, areas: np.ndarray, intercept: float) -> pd.DataFrame:
        rng, cfg = self.rng, self.config
        n_days = len(days)
        shift = np.array([self.terminal_delay_shift[t] for t in TERMINALS])
        flights_per_cell = np.maximum(np.round(pax_hour / 100.0), 1).astype(int)
        delayed_flights = rng.binomial(flights_per_cell,
                                       norm.cdf(intercept + cfg.congestion_loading * z_term + shift[None, None, :]))
        pax_delayed = np.round(delayed_flights * pax_hour / flights_per_cell)
        pax_day = np.repeat(pax_hour.sum(axis=1, keepdims=True), 24, axis=1)

        capacity = DEFAULT_DECLARED_CAPACITY
        movements = np.round(capacity * np.clip(0.61 + 0.12 * z_air + 0.08 * rng.standard_normal(z_air.shape),
                                                0.02, 1.16)).astype(int)
        disrupted = rng.binomial(movements, norm.cdf(-1.2 + 0.6 * z_air))
        dep_total = rng.poisson(60.0, size=z_air.shape)
        dep_delayed = rng.binomial(dep_total, norm.cdf(-1.15 + 0.6 * z_air))
        arr_total = rng.poisson(60.0, size=z_air.shape)
        arr_delayed = rng.binomial(arr_total, norm.cdf(-1.45 + 0.6 * z_air))

        d_idx, h_idx, t_idx = np.meshgrid(np.arange(n_days), np.arange(24), np.arange(len(TERMINALS)), indexing="ij")
        d_idx, h_idx, t_idx = d_idx.ravel(), h_idx.ravel(), t_idx.ravel()
        hours = [datetime.combine(days[d], datetime.min.time()) + timedelta(hours=int(h)) for d, h in zip(d_idx, h_idx)]
        table = pd.DataFrame({
            "terminal": [TERMINALS[t].value for t in t_idx],
            "hour": [h.strftime(TIMESTAMP_FORMAT) for h in hours],
            "pax_hour": pax_hour.ravel().astype(int),
            "pax_day": pax_day.ravel().astype(int),
            "pax_delayed_hour": pax_delayed.ravel().astype(int),
            "dep_total_3h": dep_total[d_idx, h_idx],
            "dep_delayed_3h": dep_delayed[d_idx, h_idx],
            "arr_total_3h": arr_total[d_idx, h_idx],
            "arr_delayed_3h": arr_delayed[d_idx, h_idx],
            "movements_hour": movements[d_idx, h_idx],
            "declared_capacity": capacity,
            "disrupted_hour": disrupted[d_idx, h_idx],
            "terminal_area_m2": areas[t_idx],
        })
        return table[list(TERMINAL_HOUR_COLUMNS)]

    def weather_table(self, origin: pd.Series, destinations: pd.DataFrame) -> pd.DataFrame:
        stations = np.concatenate([np.full(len(origin), ORIGIN_STATION), destinations["station"].to_numpy()])
        stamps = list(origin.index.to_pydatetime()) + list(pd.to_datetime(destinations["at"]).dt.to_pydatetime())
        adverse = np.concatenate([origin.to_numpy(bool), destinations["adverse"].to_numpy(bool)])
        fields = self.observation_fields(adverse)
        table = pd.DataFrame({
            "station": stations,
            "at": [s.strftime(TIMESTAMP_FORMAT) for s in stamps],
            "ceiling_ft": fields["ceiling_ft"],
            "visibility_m": fields["visibility_m"],
            "gust_kt": fields["gust_kt"],
            "wet_runway": fields["wet_runway"].astype(int),
            "thunderstorm": fields["thunderstorm"].astype(int),
            "hail": fields["hail"].astype(int),
        })
        table = table.sort_values(["station", "at"], kind="mergesort").reset_index(drop=True)
        return table[list(WEATHER_COLUMNS)]


def synthesize_dataset(config: Optional[SyntheticConfig] = None) -> SyntheticDataset:
    """Surveys, flights, weather, terminal-hour stats and the truth record for one seed."""
    return SyntheticSurveyGenerator(config or SyntheticConfig()).generate()


def write_dataset(dataset: SyntheticDataset, directory: str) -> Dict[str, str]:
    """Write the four CSV tables and truth.txt; returns the paths by table name."""
    os.makedirs(directory, exist_ok=True)
    paths = {
        "surveys": os.path.join(directory, "surveys.csv"),
        "flights": os.path.join(directory, "flights.csv"),
        "weather": os.path.join(directory, "weather.csv"),
        "terminal_hours": os.path.join(directory, "terminal_hours.csv"),
        "truth": os.path.join(directory, "truth.txt"),
    }
    for name in ("surveys", "flights", "weather", "terminal_hours"):
        getattr(dataset, name).to_csv(paths[name], index=False, float_format="%.10g", lineterminator="\n")
    with open(paths["truth"], "w", encoding="utf-8", newline="\n") as handle:
        handle.write(dataset.truth.to_text())
    logger.info(f"wrote synthetic dataset to {directory}")
    return paths
