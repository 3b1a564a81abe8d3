"""
Shared fixtures: record factories, small synthetic datasets and simulated probit designs.
"""
import os
import sys
from dataclasses import replace
from datetime import datetime, timedelta

import numpy as np
import pytest
from scipy.special import ndtr

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from satisfaction_app.data.records import (  # noqa: E402
    DOMAIN_QUESTIONS,
    AgeBracket,
    DestScope,
    FlightRecord,
    JoinedRecord,
    Purpose,
    Schooling,
    SurveyResponse,
    Terminal,
    TerminalHourStats,
    WeatherObservation,
)
from satisfaction_app.data.synthetic_data import SyntheticConfig, synthesize_dataset  # noqa: E402
from satisfaction_app.features.design import DesignMatrix  # noqa: E402


def make_survey(**overrides) -> SurveyResponse:
    survey = SurveyResponse(
        respondent_id="R000001",
        interview_at=datetime(2019, 5, 10, 10, 12),
        terminal=Terminal.T2,
        flight_no="G31001",
        global_rating=8,
        domain_ratings={q: 4 for q in DOMAIN_QUESTIONS},
        age_bracket=AgeBracket.FROM_35_TO_44,
        schooling=Schooling.COLLEGE,
        boardings_12m=1,
        purpose=Purpose.LEISURE,
        dest_scope=DestScope.DOMESTIC,
        is_connecting=False,
    )
    return replace(survey, **overrides)


def make_flight(**overrides) -> FlightRecord:
    sched = overrides.pop("sched_dep", datetime(2019, 5, 10, 11, 0))
    flight = FlightRecord(
        flight_no="G31001",
        date=sched.date(),
        sched_dep=sched,
        actual_dep=sched + timedelta(minutes=10),
        airline="G3",
        destination="POA",
        distance_mi=530.0,
        seats=180,
        pax=150,
        connecting_pax=15,
        cargo_kg=1200.0,
        jetbridge=True,
        terminal=Terminal.T2,
    )
    return replace(flight, **overrides)


def make_weather(**overrides) -> WeatherObservation:
    obs = WeatherObservation(
        station="origin",
        at=datetime(2019, 5, 10, 11, 0),
        ceiling_ft=3000.0,
        visibility_m=8000.0,
        gust_kt=10.0,
        wet_runway=False,
        thunderstorm=False,
        hail=False,
    )
    return replace(obs, **overrides)


def make_hour_stats(**overrides) -> TerminalHourStats:
    stats = TerminalHourStats(
        terminal=Terminal.T2,
        hour=datetime(2019, 5, 10, 11, 0),
        pax_hour=2000,
        pax_day=30000,
        pax_delayed_hour=300,
        dep_total_3h=80,
        dep_delayed_3h=12,
        arr_total_3h=60,
        arr_delayed_3h=6,
        movements_hour=40,
        declared_capacity=57,
        disrupted_hour=5,
        terminal_area_m2=80000.0,
    )
    return replace(stats, **overrides)


def make_joined(survey=None, flight=None, weather_org=False, weather_dst=False, stats=None) -> JoinedRecord:
    return JoinedRecord(
        survey=survey or make_survey(),
        flight=flight or make_flight(),
        weather_org=weather_org,
        weather_dst=weather_dst,
        terminal_hour=stats or make_hour_stats(),
    )


def simulate_ordered(n, beta, cutpoints, seed=0, n_clusters=40) -> DesignMatrix:
    """Ordered-probit data from a known model; y in 1..len(cutpoints)+1."""
    rng = np.random.default_rng(seed)
    beta = np.asarray(beta, dtype=float)
    X = rng.standard_normal((n, len(beta)))
    latent = X @ beta + rng.standard_normal(n)
    y = 1 + np.searchsorted(np.asarray(cutpoints, dtype=float), latent)
    return DesignMatrix(
        y=y,
        X=X,
        names=[f"x{j}" for j in range(len(beta))],
        penalized=np.zeros(len(beta), dtype=bool),
        cluster_id=np.array([f"c{i % n_clusters}" for i in range(n)]),
    )


def simulate_binary(n, intercept, slopes, seed=0, n_clusters=40, sigma_u=0.0) -> DesignMatrix:
    """Probit data with an optional normal random intercept per cluster."""
    rng = np.random.default_rng(seed)
    slopes = np.asarray(slopes, dtype=float)
    X = rng.standard_normal((n, len(slopes)))
    cluster = np.arange(n) % n_clusters
    effect = sigma_u * rng.standard_normal(n_clusters)
    p = ndtr(intercept + X @ slopes + effect[cluster])
    y = (rng.random(n) < p).astype(int)
    return DesignMatrix(
        y=y,
        X=X,
        names=[f"x{j}" for j in range(len(slopes))],
        penalized=np.zeros(len(slopes), dtype=bool),
        cluster_id=np.array([f"g{c}" for c in cluster]),
        outcome="DEL",
    )


@pytest.fixture
def survey_factory():
    return make_survey


@pytest.fixture
def flight_factory():
    return make_flight


@pytest.fixture
def weather_factory():
    return make_weather


@pytest.fixture
def hour_factory():
    return make_hour_stats


@pytest.fixture
def joined_factory():
    return make_joined


@pytest.fixture
def ordered_factory():
    return simulate_ordered


@pytest.fixture
def binary_factory():
    return simulate_binary


@pytest.fixture(scope="session")
def small_dataset():
    """A 600-respondent synthetic draw shared by the data and feature tests."""
    return synthesize_dataset(SyntheticConfig(n_respondents=600, seed=11))
