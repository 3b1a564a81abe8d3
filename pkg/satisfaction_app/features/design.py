# Version: 0.1
# Last Modified: 2026-10-18
# Changes: Feature frame and design-matrix assembly for satisfaction and delay models
"""
Design-matrix assembly.

build_feature_frame runs in two passes. Pass one computes the sample
aggregates: peer dissatisfaction sums and the boarding-window quantile. Pass two
computes every per-record variable. assemble_design then picks covariate groups
from the frame in a fixed order and tags each column as penalized or not.
"""
from dataclasses import dataclass, field, replace
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from satisfaction_app.data.records import JoinedRecord, Purpose, Terminal
from satisfaction_app.errors import AssemblyError, ContractError, DataError
from satisfaction_app.features.variables import (
    BoardWindow,
    classify_respondent,
    delay_minutes,
    flight_metrics,
    pandemic_dummies,
    rescale_unit,
    runway_metrics,
    terminal_metrics,
    top_box,
    DOMESTIC_BOARDING_MIN,
    INTERNATIONAL_BOARDING_MIN,
)
from satisfaction_app.utils.logger import get_logger

logger = get_logger(__name__)

ROSTER_COLUMNS: Tuple[str, ...] = (
    "GENSILEN", "GENBOOM", "GENMILLEN", "GENZ",
    "SCHLELEM", "SCHLMIDD", "SCHLHIGH",
    "FIRSTTFLIER", "FREQFLIER", "LSRFLIER",
    "INTNLDEST", "REDEYE", "SMALLTERM", "INTNLTERM", "TERMDEN",
    "JETBRIDGE", "SHOPS", "FOOD", "EXPENSIVE", "WIFI",
)

DISSAT_QUESTIONS: Tuple[Tuple[str, str], ...] = (
    ("DISSAT (AIRLINE)", "airline_staff"),
    ("DISSAT (CHECKIN)", "checkin_time"),
    ("DISSAT (CURBSID)", "curbside"),
    ("DISSAT (FLTINFO)", "flight_info"),
    ("DISSAT (SECINSP)", "security_time"),
    ("DISSAT (WALKDST)", "walk_distance"),
    ("DISSAT (WAYFIND)", "wayfinding"),
)
DISSAT_COLUMNS = tuple(name for name, _ in DISSAT_QUESTIONS)
PANDEMIC_COLUMNS = ("PANDEMIC (PRE)", "PANDEMIC (EARLY)", "PANDEMIC (LATER)")

DELAY_ROSTER: Tuple[str, ...] = (
    "WEATHER (ORG)", "WEATHER (DST)", "SMALLTERM", "INTNLTERM", "JETBRIDGE", "PRCONNECT",
    "LOADFAC", "AIRCSIZE", "CARGO", "DISTANCE", "BUSYDAY", "BUSYHOUR", "SECINSPTIME",
    "RUNWAYCONG", "RUNWAYDIS", "CASCAD (DEP)", "CASCAD (ARR)", "PANDEMIC (EARLY)",
    "PANDEMIC (LATER)",
)
EXTERNAL_DELAY_COLUMNS = ("WEATHER (ORG)", "WEATHER (DST)")

GROUP_ROSTER = "roster"
GROUP_DELAY = "delay"
GROUP_DISSAT = "dissat"
GROUP_TERMDIS = "termdis"
GROUP_PANDEMIC = "pandemic"
GROUP_TIMETOFLT = "timetoflt"
GROUP_DEST = "dest"
GROUP_AIRL = "airl"
GROUP_DATE = "date"
GROUP_ATTRIBUTION = "attribution"
GROUP_DELAY_ROSTER = "delay_roster"

CONTROL_GROUPS = (GROUP_DISSAT, GROUP_TERMDIS, GROUP_PANDEMIC, GROUP_TIMETOFLT,
                  GROUP_DEST, GROUP_AIRL, GROUP_DATE)
DEFAULT_GROUPS = frozenset((GROUP_ROSTER, GROUP_DELAY) + CONTROL_GROUPS)

DELAY_ENCODINGS = ("del", "del_board", "del_flier", "del_rating45", "deldur", "deldur_purpose", "none")

DEFAULT_REFERENCE_LEVELS: Dict[str, str] = {
    "generation": "GENX",
    "schooling": "SCHLCOLL",
    "flier": "EXPERCDFLIER",
    "terminal": Terminal.T2.value,
    "year": "2018",
    "purpose": "business/other",
}

DEFAULT_TIME_BIN_EDGES = (20.0, 40.0, 60.0, 80.0, 100.0, 120.0)

# columns of the feature frame that are not model variables
FRAME_KEYS = ("respondent_id", "cluster_id", "terminal", "survey_date", "airline",
              "destination", "dest_scope", "purpose")


@dataclass(frozen=True)
class FeatureSpec:
    delay_threshold_min: int = 15
    board_quantile: float = 0.75
    include_groups: FrozenSet[str] = DEFAULT_GROUPS
    delay_encoding: str = "del"
    reference_levels: Mapping[str, str] = field(default_factory=lambda: dict(DEFAULT_REFERENCE_LEVELS))
    dissat_peer_scope: str = "month_hour"
    dissat_include_self: bool = False
    time_bin_edges: Tuple[float, ...] = DEFAULT_TIME_BIN_EDGES
    min_level_count: int = 5

    def __post_init__(self):
        if self.delay_threshold_min not in (15, 30):
            raise ContractError(f"delay_threshold_min must be 15 or 30, got {self.delay_threshold_min}")
        if not 0.0 < self.board_quantile < 1.0:
            raise ContractError(f"board_quantile must lie in (0,1), got {self.board_quantile}")
        if self.delay_encoding not in DELAY_ENCODINGS:
            raise ContractError(f"unknown delay encoding '{self.delay_encoding}'")
        if self.dissat_peer_scope not in ("month_hour", "date_hour"):
            raise ContractError(f"unknown peer scope '{self.dissat_peer_scope}'")
        if self.min_level_count < 1:
            raise ContractError(f"min_level_count must be at least 1, got {self.min_level_count}")
        unknown = set(self.include_groups) - set(DEFAULT_GROUPS)
        if unknown:
            raise ContractError(f"unknown covariate groups {sorted(unknown)}")
        object.__setattr__(self, "include_groups", frozenset(self.include_groups))


@dataclass
class DesignMatrix:
    """Outcome, covariates and per-column metadata for one model run."""

    y: np.ndarray
    X: np.ndarray
    names: List[str]
    penalized: np.ndarray
    cluster_id: np.ndarray
    groups: List[str] = field(default_factory=list)
    reference_levels: Dict[str, str] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)
    aux: pd.DataFrame = field(default_factory=pd.DataFrame)
    outcome: str = "APTSAT"

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        if self.X.ndim != 2:
            self.X = self.X.reshape(len(self.y), -1)
        self.penalized = np.asarray(self.penalized, dtype=bool)
        self.cluster_id = np.asarray(self.cluster_id).astype(str)
        if not self.groups:
            self.groups = ["" for _ in self.names]
        if self.X.shape[1] != len(self.names) or len(self.penalized) != len(self.names):
            raise ContractError("design matrix columns, names and penalized flags disagree")
        if len(self.cluster_id) != len(self.y):
            raise ContractError("cluster_id needs one label per row")
        if len(self.y) and np.any(self.cluster_id == ""):
            raise ContractError("cluster_id must be non-empty")
        self.aux = self.aux.reset_index(drop=True) if len(self.aux) else pd.DataFrame(index=range(len(self.y)))

    @property
    def n(self) -> int:
        return int(self.X.shape[0])

    @property
    def p(self) -> int:
        return int(self.X.shape[1])

    @property
    def focal_names(self) -> List[str]:
        return [n for n, pen in zip(self.names, self.penalized) if not pen]

    @property
    def control_names(self) -> List[str]:
        return [n for n, pen in zip(self.names, self.penalized) if pen]

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise ContractError(f"column '{name}' not in design matrix") from None

    def column(self, name: str) -> np.ndarray:
        return self.X[:, self.index_of(name)]

    def keep_columns(self, names: Iterable[str]) -> "DesignMatrix":
        wanted = set(names)
        idx = [i for i, n in enumerate(self.names) if n in wanted]
        return replace(
            self,
            X=self.X[:, idx],
            names=[self.names[i] for i in idx],
            penalized=self.penalized[idx],
            groups=[self.groups[i] for i in idx],
            notes=list(self.notes),
        )

    def drop_columns(self, names: Iterable[str], note: Optional[str] = None) -> "DesignMatrix":
        dropped = set(names)
        result = self.keep_columns([n for n in self.names if n not in dropped])
        if note and dropped:
            result.notes.append(note)
        return result

    def with_columns(self, names: Sequence[str], values: np.ndarray, penalized: bool,
                     group: str) -> "DesignMatrix":
        values = np.asarray(values, dtype=float).reshape(self.n, len(names))
        return replace(
            self,
            X=np.hstack([self.X, values]),
            names=self.names + list(names),
            penalized=np.concatenate([self.penalized, np.full(len(names), penalized)]),
            groups=self.groups + [group] * len(names),
            notes=list(self.notes),
        )

    def select_rows(self, rows: np.ndarray) -> "DesignMatrix":
        rows = np.asarray(rows)
        return replace(
            self,
            y=self.y[rows],
            X=self.X[rows],
            cluster_id=self.cluster_id[rows],
            aux=self.aux.iloc[rows].reset_index(drop=True),
            notes=list(self.notes),
        )

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.X, columns=self.names)
        frame.insert(0, self.outcome, self.y)
        frame["cluster_id"] = self.cluster_id
        for column in self.aux.columns:
            frame[f"aux:{column}"] = self.aux[column].to_numpy()
        return frame

    def save(self, csv_path: str, meta_path: str) -> None:
        self.to_frame().to_csv(csv_path, index=False, float_format="%.17g")
        lines = [f"outcome: {self.outcome}", f"rows: {self.n}", f"columns: {self.p}"]
        for key, value in sorted(self.reference_levels.items()):
            lines.append(f"reference.{key}: {value}")
        for i, (name, pen, group) in enumerate(zip(self.names, self.penalized, self.groups)):
            lines.append(f"column.{i}: {name}|{int(pen)}|{group}")
        for i, note in enumerate(self.notes):
            lines.append(f"note.{i}: {note}")
        with open(meta_path, "w", encoding="utf-8") as handle:
            handle.write("\n".join(lines) + "\n")

    @classmethod
    def load(cls, csv_path: str, meta_path: str) -> "DesignMatrix":
        meta: Dict[str, str] = {}
        with open(meta_path, encoding="utf-8") as handle:
            for line in handle:
                if ": " in line:
                    key, value = line.rstrip("\n").split(": ", 1)
                    meta[key] = value
        columns = [meta[f"column.{i}"].split("|") for i in range(int(meta["columns"]))]
        frame = pd.read_csv(csv_path, keep_default_na=False)
        outcome = meta["outcome"]
        aux_cols = [c for c in frame.columns if c.startswith("aux:")]
        names = [c[0] for c in columns]
        return cls(
            y=frame[outcome].to_numpy(),
            X=frame[names].to_numpy(dtype=float) if names else np.empty((len(frame), 0)),
            names=names,
            penalized=np.array([c[1] == "1" for c in columns], dtype=bool),
            cluster_id=frame["cluster_id"].astype(str).to_numpy(),
            groups=[c[2] for c in columns],
            reference_levels={k[len("reference."):]: v for k, v in meta.items() if k.startswith("reference.")},
            notes=[v for k, v in sorted(meta.items()) if k.startswith("note.")],
            aux=frame[aux_cols].rename(columns=lambda c: c[4:]),
            outcome=outcome,
        )


def _peer_keys(interviews: pd.Series, scope: str) -> pd.Series:
    if scope == "month_hour":
        return interviews.dt.strftime("%Y-%m|%H")
    return interviews.dt.strftime("%Y-%m-%d|%H")


def dissat_ratios(ratings: np.ndarray, peer_keys: pd.Series, include_self: bool = False) -> np.ndarray:
    """Vectorized dissat_ratio: own dissatisfaction over the peer-group mean."""
    own = 5.0 - np.asarray(ratings, dtype=float)
    grouped = pd.Series(own).groupby(peer_keys.to_numpy())
    totals = grouped.transform("sum").to_numpy()
    counts = grouped.transform("count").to_numpy().astype(float)
    if include_self:
        mean = totals / counts
    else:
        alone = counts <= 1
        mean = np.where(alone, own, (totals - own) / np.where(alone, 1.0, counts - 1.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(mean > 0, own / np.where(mean > 0, mean, 1.0), 0.0)
    return ratio


def board_windows(minutes: np.ndarray, international: np.ndarray, threshold: float) -> np.ndarray:
    limit = np.where(international, INTERNATIONAL_BOARDING_MIN, DOMESTIC_BOARDING_MIN)
    return np.where(minutes <= limit, BoardWindow.NOW.value,
                    np.where(minutes >= threshold, BoardWindow.NOT.value, BoardWindow.CALL.value))


def time_bin_labels(edges: Sequence[float]) -> List[str]:
    labels = [f"TIMETOFLT (<={edges[0]:g})"]
    for low, high in zip(edges[:-1], edges[1:]):
        labels.append(f"TIMETOFLT ({low:g}-{high:g})")
    return labels


def build_feature_frame(records: Sequence[JoinedRecord], spec: Optional[FeatureSpec] = None) -> pd.DataFrame:
    """Every model variable for every record, one row per record in input order."""
    spec = spec or FeatureSpec()
    if not records:
        raise DataError("no records to build features from")

    rows: List[Dict[str, object]] = []
    for record in records:
        survey, flight = record.survey, record.flight
        domains = survey.domain_ratings
        row: Dict[str, object] = {
            "respondent_id": survey.respondent_id,
            "terminal": survey.terminal.value,
            "survey_date": survey.interview_at.date().isoformat(),
            "airline": flight.airline,
            "destination": flight.destination,
            "dest_scope": survey.dest_scope.value,
            "purpose": survey.purpose.value,
            "interview_at": survey.interview_at,
            "APTSAT": survey.global_rating,
            "DELAY_MIN": delay_minutes(flight),
            "TTF_MIN": (flight.sched_dep - survey.interview_at).total_seconds() / 60.0,
            "SMALLTERM": int(survey.terminal == Terminal.T1),
            "INTNLTERM": int(survey.terminal == Terminal.T3),
            "INTNLDEST": int(survey.dest_scope.value == "international"),
            "BSNFLIER": int(survey.purpose == Purpose.BUSINESS),
            "SHOPS": rescale_unit([domains["shop_quality"], domains["shop_variety"]]),
            "FOOD": rescale_unit([domains["food_quality"], domains["food_variety"]]),
            "WIFI": rescale_unit([domains["wifi"]]),
            "EXPENSIVE": rescale_unit([domains["shop_price"], domains["food_price"]], inverse=True),
            "SHOPS (4/5 RATING)": top_box([domains["shop_quality"], domains["shop_variety"]]),
            "FOOD (4/5 RATING)": top_box([domains["food_quality"], domains["food_variety"]]),
            "WIFI (4/5 RATING)": top_box([domains["wifi"]]),
            "WEATHER (ORG)": int(record.weather_org),
            "WEATHER (DST)": int(record.weather_dst),
        }
        row.update(classify_respondent(survey))
        row.update(flight_metrics(flight))
        row.update(terminal_metrics(record.terminal_hour))
        row.update(runway_metrics(record.terminal_hour))
        row.update(pandemic_dummies(survey.interview_at.date()))
        for name, question in DISSAT_QUESTIONS:
            row[f"_rating:{name}"] = domains[question]
        rows.append(row)
    frame = pd.DataFrame(rows)

    # pass 1: sample aggregates
    peer_keys = _peer_keys(frame["interview_at"], spec.dissat_peer_scope)
    board_threshold = float(np.quantile(frame["TTF_MIN"].to_numpy(), spec.board_quantile))

    # pass 2: per-record values that depend on them
    for name, _ in DISSAT_QUESTIONS:
        frame[name] = dissat_ratios(frame.pop(f"_rating:{name}").to_numpy(), peer_keys,
                                    spec.dissat_include_self)
    frame["SECINSPTIME"] = frame["DISSAT (SECINSP)"]

    minutes = frame["DELAY_MIN"].to_numpy()
    delayed = minutes > spec.delay_threshold_min
    frame["DEL"] = delayed.astype(int)
    frame["DELDUR"] = np.where(delayed, np.maximum(minutes, 0.0) / 60.0, 0.0)
    frame["DELDUR2"] = frame["DELDUR"] ** 2

    windows = board_windows(frame["TTF_MIN"].to_numpy(), frame["INTNLDEST"].to_numpy() == 1, board_threshold)
    for window in BoardWindow:
        frame[f"BOARD ({window.value})"] = (windows == window.value).astype(int)

    edges = np.asarray(spec.time_bin_edges, dtype=float)
    bins = np.minimum(np.searchsorted(edges, frame["TTF_MIN"].to_numpy(), side="left"), len(edges) - 1)
    frame["TIMETOFLT_BIN"] = bins

    frame["GENX"] = 1 - frame[["GENSILEN", "GENBOOM", "GENMILLEN", "GENZ"]].sum(axis=1)
    frame["SCHLCOLL"] = 1 - frame[["SCHLELEM", "SCHLMIDD", "SCHLHIGH"]].sum(axis=1)
    frame["EXPERCDFLIER"] = 1 - frame[["FIRSTTFLIER", "FREQFLIER"]].sum(axis=1)
    frame["cluster_id"] = frame["terminal"] + "|" + frame["survey_date"]
    frame = frame.drop(columns=["interview_at"])
    frame.attrs["board_threshold_min"] = board_threshold
    frame.attrs["delay_threshold_min"] = spec.delay_threshold_min
    frame.attrs["time_bin_edges"] = tuple(float(e) for e in edges)
    logger.info(f"built {len(frame)} feature rows (boarding threshold {board_threshold:.1f} min)")
    return frame


def _reference(values: pd.Series, override: Optional[str], earliest: bool = False) -> str:
    if override is not None:
        return override
    if earliest:
        return str(min(values))
    counts = values.value_counts()
    top = counts.max()
    return str(sorted(counts[counts == top].index)[0])


def rare_levels(values: pd.Series, reference: str, min_count: int) -> List[str]:
    """Levels seen in fewer than min_count rows; they fold into the reference level."""
    counts = values.astype(str).value_counts()
    return sorted(level for level, count in counts.items() if count < min_count and level != reference)


def _dummies(values: pd.Series, prefix: str, reference: str,
             rare: Iterable[str] = ()) -> Tuple[List[str], np.ndarray]:
    levels = sorted(set(values.astype(str)) - {reference} - set(rare))
    names = [f"{prefix} ({level})" for level in levels]
    block = np.column_stack([(values.astype(str) == level).to_numpy(float) for level in levels]) \
        if levels else np.empty((len(values), 0))
    return names, block


def _delay_block(frame: pd.DataFrame, encoding: str) -> Tuple[List[str], np.ndarray]:
    del_ = frame["DEL"].to_numpy(float)
    if encoding == "del":
        return ["DEL"], del_[:, None]
    if encoding == "del_board":
        names = [f"DEL × BOARD ({w.value})" for w in BoardWindow]
        return names, np.column_stack([del_ * frame[f"BOARD ({w.value})"] for w in BoardWindow])
    if encoding == "del_flier":
        kinds = ("FIRSTTFLIER", "EXPERCDFLIER", "FREQFLIER")
        return [f"DEL × {k}" for k in kinds], np.column_stack([del_ * frame[k] for k in kinds])
    if encoding == "del_rating45":
        kinds = ("FOOD", "SHOPS", "WIFI")
        names = ["DEL"] + [f"DEL × {k} (4/5 RATING)" for k in kinds]
        return names, np.column_stack([del_] + [del_ * frame[f"{k} (4/5 RATING)"] for k in kinds])
    if encoding == "deldur":
        return ["DELDUR", "DELDUR2"], frame[["DELDUR", "DELDUR2"]].to_numpy(float)
    if encoding == "deldur_purpose":
        names, cols = [], []
        for term in ("DELDUR", "DELDUR2"):
            for segment in ("LSRFLIER", "BSNFLIER"):
                names.append(f"{term} × {segment}")
                cols.append(frame[term].to_numpy(float) * frame[segment].to_numpy(float))
        return names, np.column_stack(cols)
    return [], np.empty((len(frame), 0))


def assemble_design(records: Union[Sequence[JoinedRecord], pd.DataFrame],
                    spec: Optional[FeatureSpec] = None) -> DesignMatrix:
    """Roster, delay encoding, then the penalized control blocks."""
    spec = spec or FeatureSpec()
    frame = records if isinstance(records, pd.DataFrame) else build_feature_frame(records, spec)
    refs = dict(spec.reference_levels)
    groups = spec.include_groups
    blocks: List[Tuple[List[str], np.ndarray, bool, str]] = []
    merge_notes: List[str] = []

    if GROUP_ROSTER in groups:
        blocks.append((list(ROSTER_COLUMNS), frame[list(ROSTER_COLUMNS)].to_numpy(float), False, GROUP_ROSTER))
    if GROUP_DELAY in groups:
        names, block = _delay_block(frame, spec.delay_encoding)
        blocks.append((names, block, False, GROUP_DELAY))
    if GROUP_DISSAT in groups:
        blocks.append((list(DISSAT_COLUMNS), frame[list(DISSAT_COLUMNS)].to_numpy(float), True, GROUP_DISSAT))
    if GROUP_TERMDIS in groups:
        blocks.append((["TERMDIS"], frame[["TERMDIS"]].to_numpy(float), True, GROUP_TERMDIS))
    if GROUP_PANDEMIC in groups:
        blocks.append((list(PANDEMIC_COLUMNS), frame[list(PANDEMIC_COLUMNS)].to_numpy(float), True, GROUP_PANDEMIC))
    if GROUP_TIMETOFLT in groups:
        edges = frame.attrs.get("time_bin_edges", spec.time_bin_edges)
        labels = time_bin_labels(edges)
        binned = np.asarray(labels)[frame["TIMETOFLT_BIN"].to_numpy()]
        refs.setdefault("TIMETOFLT", labels[0])
        names = [label for label in labels if label != refs["TIMETOFLT"]]
        block = np.column_stack([(binned == label).astype(float) for label in names])
        blocks.append((names, block, True, GROUP_TIMETOFLT))
    for group, column, prefix, earliest in ((GROUP_DEST, "destination", "DEST", False),
                                            (GROUP_AIRL, "airline", "AIRL", False),
                                            (GROUP_DATE, "survey_date", "DATE", True)):
        if group in groups:
            refs[prefix] = _reference(frame[column], refs.get(prefix), earliest)
            rare = rare_levels(frame[column], refs[prefix], spec.min_level_count)
            if rare:
                logger.warning(f"{len(rare)} {prefix} levels with fewer than {spec.min_level_count} rows "
                               f"merged into the reference level {refs[prefix]}")
                merge_notes.append(f"rare {prefix} levels merged into reference: {', '.join(rare)}")
            names, block = _dummies(frame[column], prefix, refs[prefix], rare)
            blocks.append((names, block, True, group))

    names = [n for b in blocks for n in b[0]]
    X = np.hstack([b[1] for b in blocks]) if blocks else np.empty((len(frame), 0))
    penalized = np.concatenate([np.full(len(b[0]), b[2]) for b in blocks]) if blocks else np.empty(0, bool)
    group_tags = [b[3] for b in blocks for _ in b[0]]

    aux_cols = [c for c in ("respondent_id", "BSNFLIER", "LSRFLIER", "DEL", "terminal", "survey_date")
                if c in frame.columns]
    matrix = DesignMatrix(
        y=frame["APTSAT"].to_numpy(dtype=np.int64),
        X=X,
        names=names,
        penalized=penalized,
        cluster_id=frame["cluster_id"].to_numpy(),
        groups=group_tags,
        reference_levels=refs,
        notes=merge_notes,
        aux=frame[aux_cols].copy(),
    )
    matrix = resolve_duplicate_columns(drop_constant_columns(matrix))
    logger.info(f"assembled design: {matrix.n} rows, {len(matrix.focal_names)} focal, "
                f"{len(matrix.control_names)} penalized columns")
    return matrix


def drop_constant_columns(matrix: DesignMatrix) -> DesignMatrix:
    if matrix.n == 0:
        return matrix
    constant = [name for name, col in zip(matrix.names, matrix.X.T) if np.ptp(col) == 0]
    for name in constant:
        logger.warning(f"column '{name}' is constant in this sample and was dropped")
    if not constant:
        return matrix
    return matrix.drop_columns(constant, note=f"constant columns dropped: {', '.join(constant)}")


def resolve_duplicate_columns(matrix: DesignMatrix) -> DesignMatrix:
    """Drop penalized columns that repeat an earlier column; focal duplicates are an error."""
    seen: Dict[bytes, str] = {}
    redundant: List[str] = []
    for name, col, pen in zip(matrix.names, matrix.X.T, matrix.penalized):
        key = np.ascontiguousarray(col).tobytes()
        if key not in seen:
            seen[key] = name
        elif pen:
            redundant.append(name)
            logger.warning(f"column '{name}' repeats '{seen[key]}' and was dropped")
        else:
            raise AssemblyError(f"columns '{seen[key]}' and '{name}' are identical",
                                columns=(seen[key], name))
    if not redundant:
        return matrix
    return matrix.drop_columns(redundant, note=f"duplicate columns dropped: {', '.join(redundant)}")


def assemble_delay_design(frame: pd.DataFrame, columns: Sequence[str] = DELAY_ROSTER) -> DesignMatrix:
    """Delay-stage matrix: y = DEL on the delay-determinant roster."""
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise DataError(f"delay roster column missing: {missing[0]}")
    return DesignMatrix(
        y=frame["DEL"].to_numpy(dtype=np.int64),
        X=frame[list(columns)].to_numpy(float),
        names=list(columns),
        penalized=np.zeros(len(columns), dtype=bool),
        cluster_id=frame["cluster_id"].to_numpy(),
        groups=[GROUP_DELAY_ROSTER] * len(columns),
        aux=frame[["respondent_id"]].copy(),
        outcome="DEL",
    )
