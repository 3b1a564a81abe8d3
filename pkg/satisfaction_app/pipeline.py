# Version: 0.1
# Last Modified: 2026-10-18
# Changes: Staged pipeline runner with atomic artifacts and a checksum manifest
"""
Staged pipeline: generate -> join -> features -> smote -> select -> fit -> attribute -> simulate -> report.

Every artifact is written to ``<name>.partial`` and renamed once complete, so a
failed stage leaves its unfinished files behind with the .partial suffix. The
manifest records the config hash, every resolved setting and the sha256 of each
artifact, without timestamps, so identical config and seed give identical bytes.
"""
import hashlib
import os
import shutil
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from satisfaction_app.config import PipelineConfig
from satisfaction_app.data.joining import filter_sample, join_records
from satisfaction_app.data.loaders import load_flights, load_surveys, load_terminal_hours, load_weather, require_file
from satisfaction_app.data.records import FilterResult, JoinResult
from satisfaction_app.data.synthetic_data import SyntheticTruth, solve_delay_intercept, synthesize_dataset, write_dataset
from satisfaction_app.errors import ConvergenceError, DataError, SatisfactionError, StageError
from satisfaction_app.estimation import lasso
from satisfaction_app.estimation.attribution import (
    DEL_INT,
    PUBLISHED_DELAY_COEFFICIENTS,
    Decomposition,
    DelayStageFit,
    decompose_predictions,
    fit_delay_stage,
    plug_into_satisfaction,
)
from satisfaction_app.estimation.effects import compare_bias, duration_curve, simulate_delay_shift
from satisfaction_app.estimation.probit import OrderedFit, coefficient_table, fit_ordered_probit
from satisfaction_app.estimation.resample import SYNTHETIC_COLUMN, smote_oversample
from satisfaction_app.features.design import (
    CONTROL_GROUPS,
    GROUP_DELAY,
    GROUP_ROSTER,
    DesignMatrix,
    assemble_delay_design,
    assemble_design,
    build_feature_frame,
)
from satisfaction_app.reports import FitColumn, emit_descriptives, emit_fit_table, emit_smote_study
from satisfaction_app.utils.formatting import format_float
from satisfaction_app.utils.logger import get_logger

logger = get_logger(__name__)

STAGES = ("generate", "join", "features", "smote", "select", "fit", "attribute", "simulate", "report")
STUDY_STAGES = ("generate", "join", "features", "select", "study")

# subcommand -> last stage it runs
COMMAND_STAGES = {
    "generate": "generate",
    "ingest": "join",
    "features": "features",
    "smote": "smote",
    "fit": "fit",
    "attribute": "attribute",
    "simulate": "simulate",
    "report": "report",
    "run": "report",
}

FLOAT_FORMAT = "%.10g"


def stages_for(command: str) -> Tuple[str, ...]:
    if command == "smote-study":
        return STUDY_STAGES
    if command not in COMMAND_STAGES:
        raise ValueError(f"unknown command '{command}'")
    return STAGES[: STAGES.index(COMMAND_STAGES[command]) + 1]


def file_checksum(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _settings_text(value) -> str:
    if isinstance(value, (tuple, list)):
        return ",".join(str(v) for v in value)
    return "" if value is None else str(value)


@dataclass
class PipelineState:
    data_paths: Dict[str, str] = field(default_factory=dict)
    join: Optional[JoinResult] = None
    sample: Optional[FilterResult] = None
    frame: Optional[pd.DataFrame] = None
    design: Optional[DesignMatrix] = None
    model_design: Optional[DesignMatrix] = None
    selection: Optional[lasso.SelectionResult] = None
    delay_stage: Optional[DelayStageFit] = None
    decomposition: Optional[Decomposition] = None
    fit: Optional[OrderedFit] = None
    truth: Optional[SyntheticTruth] = None


class PipelineRun:
    """One pass over the stages of a command, holding intermediate results in memory."""

    def __init__(self, config: PipelineConfig):
        self.config = config
        self.out_dir = config.out_dir
        self.state = PipelineState()
        self.artifacts: Dict[str, str] = {}
        self.stages_run: List[str] = []

    # ------------------------------------------------------------------ artifact plumbing

    def _path(self, name: str) -> str:
        return os.path.join(self.out_dir, name)

    def _commit(self, name: str, partial: str) -> None:
        final = self._path(name)
        os.replace(partial, final)
        self.artifacts[name] = final

    def write_text(self, name: str, text: str) -> None:
        partial = self._path(name) + ".partial"
        os.makedirs(os.path.dirname(partial), exist_ok=True)
        with open(partial, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        self._commit(name, partial)

    def write_frame(self, name: str, frame: pd.DataFrame) -> None:
        partial = self._path(name) + ".partial"
        os.makedirs(os.path.dirname(partial), exist_ok=True)
        frame.to_csv(partial, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        self._commit(name, partial)

    def write_design(self, stem: str, matrix: DesignMatrix) -> None:
        csv_partial = self._path(f"{stem}.csv.partial")
        meta_partial = self._path(f"{stem}.meta.txt.partial")
        matrix.save(csv_partial, meta_partial)
        self._commit(f"{stem}.csv", csv_partial)
        self._commit(f"{stem}.meta.txt", meta_partial)

    # ------------------------------------------------------------------ stages

    def stage_generate(self) -> None:
        if self.config.ingest_mode:
            logger.info("input paths configured; nothing to generate")
            return
        staging = self._path("data.partial")
        dataset = synthesize_dataset(self.config.synthetic)
        self.state.truth = dataset.truth
        written = write_dataset(dataset, staging)
        for name, path in written.items():
            target = os.path.join("data", os.path.basename(path))
            os.makedirs(self._path("data"), exist_ok=True)
            self._commit(target, path)
            self.state.data_paths[name] = self._path(target)
        shutil.rmtree(staging, ignore_errors=True)

    def _input_path(self, name: str) -> Optional[str]:
        if self.config.ingest_mode:
            return self.config.input_paths[name]
        return self.state.data_paths.get(name)

    def stage_join(self) -> None:
        surveys = load_surveys(require_file(self._input_path("surveys"), "surveys"))
        flights = load_flights(require_file(self._input_path("flights"), "flights"))
        weather = load_weather(require_file(self._input_path("weather"), "weather"))
        hours_path = self._input_path("terminal_hours")
        terminal_hours = load_terminal_hours(require_file(hours_path, "terminal hours")) if hours_path else None
        if terminal_hours is None:
            logger.info("no terminal-hour table; deriving it from departures")

        self.state.join = join_records(surveys, flights, weather, terminal_hours)
        self.state.sample = filter_sample(self.state.join.joined)
        if not self.state.sample.kept:
            raise DataError("no survey survived the join and sample filters")

        counts = self.state.sample.reason_counts()
        lines = [
            f"surveys: {len(surveys)}",
            f"joined: {len(self.state.join.joined)}",
            f"rejected: {len(self.state.join.rejects)}",
            f"kept: {len(self.state.sample.kept)}",
        ] + [f"dropped.{reason}: {count}" for reason, count in sorted(counts.items())]
        self.write_text("sample_report.txt", "\n".join(lines) + "\n")
        self.write_frame("rejects.csv", pd.DataFrame(
            [(s.respondent_id, reason) for s, reason in self.state.join.rejects],
            columns=["respondent_id", "reason"]))
        self.write_frame("drops.csv", pd.DataFrame(
            [(r.survey.respondent_id, reason) for r, reason in self.state.sample.dropped],
            columns=["respondent_id", "reason"]))

    def stage_features(self) -> None:
        spec = self.config.feature_spec
        frame = build_feature_frame(self.state.sample.kept, spec)
        self.state.frame = frame
        self.state.design = assemble_design(frame, spec)
        self.state.model_design = self.state.design
        self.write_frame("features.csv", frame)
        self.write_design("design", self.state.design)

    def stage_smote(self) -> None:
        cfg = self.config.smote
        if cfg is None:
            logger.info("SMOTE disabled for this variant")
            return
        self.state.model_design = smote_oversample(self.state.design, cfg)
        self.write_frame("design_smote.csv", self.state.model_design.to_frame())

    def _delay_stage(self) -> DelayStageFit:
        if self.state.delay_stage is not None:
            return self.state.delay_stage
        s = self.config.settings
        delay_design = assemble_delay_design(self.state.frame)
        if s["attribution.coefficients"] == "published":
            coefs = {name: PUBLISHED_DELAY_COEFFICIENTS[name] for name in delay_design.names}
            index = delay_design.X @ np.array(list(coefs.values()))
            intercept = solve_delay_intercept(index, float(np.mean(delay_design.y)))
            stage = DelayStageFit.from_coefficients(coefs, intercept)
            stage.notes.append(f"published coefficients; intercept solved to {intercept:.4f}")
        else:
            stage = fit_delay_stage(delay_design, random_intercept=s["attribution.random_intercept"],
                                    quad_nodes=s["attribution.quad_nodes"], options=self.config.probit)
        self.state.delay_stage = stage
        self.state.decomposition = decompose_predictions(stage, delay_design,
                                                         marginalize=s["attribution.marginalize"])
        return stage

    def stage_select(self) -> None:
        matrix = self.state.model_design
        if self.config.settings["attribution.enabled"]:
            self._delay_stage()
            decomposition = self.state.decomposition
            matrix = plug_into_satisfaction(decomposition.del_int, decomposition.del_ext, matrix)
        if self.config.settings["lasso.select"]:
            matrix, result = lasso.select_controls(matrix, c=self.config.settings["lasso.c"],
                                                   gamma=self.config.settings["lasso.gamma"],
                                                   n_jobs=self.config.threads)
            self.state.selection = result
            self.write_text("selection.txt", result.selection_audit_text())
        else:
            matrix = lasso.prune_collinear(matrix, matrix.focal_names)
            self.write_text("selection.txt", "selection: off\n"
                            f"controls: {', '.join(matrix.control_names) or '-'}\n")
        self.state.model_design = matrix

    def stage_fit(self) -> None:
        matrix = self.state.model_design
        fit = fit_ordered_probit(matrix, self.config.probit)
        self.state.fit = fit
        table = coefficient_table(fit).reset_index()
        cuts = pd.DataFrame({
            "variable": [f"cut{k + 1}" for k in range(len(fit.cutpoints))],
            "coef": fit.cutpoints,
            "se": fit.cutpoint_se,
            "z": np.nan,
            "p": np.nan,
            "stars": "",
        })
        self.write_frame("fit.csv", pd.concat([table, cuts], ignore_index=True))
        lines = [
            f"variant: {self.config.variant}",
            f"outcome: {matrix.outcome}",
            f"rows: {fit.n}",
            f"parameters: {fit.k}",
            f"loglik: {format_float(fit.loglik)}",
            f"aic: {format_float(fit.aic)}",
            f"bic: {format_float(fit.bic)}",
            f"clusters: {fit.n_clusters}",
            f"converged: {str(fit.converged).lower()}",
            f"iterations: {fit.iterations}",
            f"gradient_norm: {fit.gradient_norm:.3e}",
            f"message: {fit.message}",
        ] + [f"note.{i}: {note}" for i, note in enumerate(matrix.notes)]
        self.write_text("fit_summary.txt", "\n".join(lines) + "\n")
        if not fit.converged:
            raise ConvergenceError(f"ordered probit did not converge: {fit.message}")

    def stage_attribute(self) -> None:
        if not self.config.settings["attribution.enabled"]:
            logger.info("attribution disabled for this variant")
            return
        stage = self._delay_stage()
        table = coefficient_table(stage.fit).reset_index()
        table["origin"] = [stage.tags.get(name, "") for name in table["variable"]]
        if stage.fit.sigma_u is not None:
            table = pd.concat([table, pd.DataFrame([{"variable": "sigma_u", "coef": stage.fit.sigma_u,
                                                     "origin": ""}])], ignore_index=True)
        self.write_frame("delay_stage.csv", table)
        ids = self.state.frame["respondent_id"].tolist()
        self.write_frame("decomposition.csv", self.state.decomposition.to_frame(ids))
        if not stage.fit.converged:
            raise ConvergenceError(f"delay-stage probit did not converge: {stage.fit.message}")

    def _observed_rows(self) -> DesignMatrix:
        matrix = self.state.model_design
        if SYNTHETIC_COLUMN in matrix.aux.columns:
            return matrix.select_rows(np.flatnonzero(matrix.aux[SYNTHETIC_COLUMN].to_numpy() == 0))
        return matrix

    def stage_simulate(self) -> None:
        fit = self.state.fit
        rows = self._observed_rows()
        encoding = self.config.settings["features.delay_encoding"]
        delay_column = next((name for name in ("DEL", DEL_INT) if name in fit.names), None)
        if encoding in ("del", "del_rating45") or (delay_column == DEL_INT):
            if delay_column is None:
                logger.warning("no delay column survived in the fit; rating shift skipped")
            else:
                report = simulate_delay_shift(fit, rows, delay_column)
                ids = rows.aux["respondent_id"].tolist() if "respondent_id" in rows.aux.columns else None
                self.write_frame("shift.csv", report.to_frame(ids))
                self.write_text("shift_summary.txt", report.summary_text())
        if encoding == "deldur":
            self._write_curves({"pooled": ("DELDUR", "DELDUR2")})
        elif encoding == "deldur_purpose":
            self._write_curves({"leisure": ("DELDUR × LSRFLIER", "DELDUR2 × LSRFLIER"),
                                "business": ("DELDUR × BSNFLIER", "DELDUR2 × BSNFLIER")})
        self._write_bias()

    def _write_bias(self) -> None:
        """Naive roster+DEL fit against the variant's control blocks, on the observed rows."""
        base = self.config.feature_spec
        naive = replace(base, include_groups={GROUP_ROSTER, GROUP_DELAY}, delay_encoding="del")
        spec = replace(naive, include_groups=base.include_groups | naive.include_groups)
        if spec.include_groups <= naive.include_groups:
            logger.info("variant has no control blocks; bias comparison skipped")
            return
        s = self.config.settings
        report = compare_bias(self.state.frame, naive, spec, truth=self.state.truth,
                              select_controls=s["lasso.select"], options=self.config.probit,
                              n_jobs=self.config.threads)
        self.write_text("bias.txt", report.to_text())

    def _write_curves(self, terms: Dict[str, Tuple[str, str]]) -> None:
        fit = self.state.fit
        lines = []
        for segment, (linear, quadratic) in terms.items():
            if linear not in fit.names or quadratic not in fit.names:
                logger.warning(f"duration terms for '{segment}' are not in the fit; curve skipped")
                continue
            curve = duration_curve(fit.coefficient(linear), fit.coefficient(quadratic), segments=(segment, segment))
            self.write_frame(f"curve_{segment}.csv", curve.to_frame(segment))
            vertex = curve.vertices[segment]
            lines.append(f"vertex.{segment}: {'none' if vertex is None else format_float(vertex)}")
        if lines:
            self.write_text("curve_summary.txt", "\n".join(lines) + "\n")

    def stage_report(self) -> None:
        table, figure = emit_descriptives(self.state.frame)
        self.write_frame("descriptives.csv", table)
        self.write_frame("delay_ratings.csv", figure)
        s = self.config.settings
        estimator = "Ordered probit"
        if s["lasso.select"]:
            estimator = "PDS-LASSO + ordered probit"
        if self.config.smote is not None:
            estimator += " (SMOTE)"
        dropped = self.state.selection.dropped if self.state.selection else []
        column = FitColumn(
            label=self.config.variant,
            fit=self.state.fit,
            estimator=estimator,
            dropped=dropped,
            control_groups=[g for g in CONTROL_GROUPS if g in s["features.groups"]],
        )
        self.write_frame("fit_table.csv", emit_fit_table([column]))

    def stage_study(self) -> None:
        s = self.config.settings
        table = emit_smote_study(self.state.model_design, s["study.shares"], s["study.replications"],
                                 seed=self.config.seed, n_jobs=self.config.threads, options=self.config.probit)
        self.write_frame("smote_study.csv", table)

    # ------------------------------------------------------------------ orchestration

    def run_stage(self, name: str) -> None:
        action: Callable[[], None] = getattr(self, f"stage_{name}")
        logger.info(f"stage {name}: start")
        try:
            action()
        except SatisfactionError as exc:
            logger.error(f"stage {name} failed: {exc}")
            raise StageError(name, exc) from exc
        except FileNotFoundError as exc:
            logger.error(f"stage {name} failed: {exc}")
            raise StageError(name, DataError(str(exc))) from exc
        self.stages_run.append(name)

    def manifest_text(self) -> str:
        lines = [
            f"config_hash: {self.config.config_hash}",
            f"variant: {self.config.variant}",
            f"seed: {self.config.seed}",
            f"delay_threshold_min: {self.config.settings['features.delay_threshold_min']}",
            f"stages: {','.join(self.stages_run)}",
        ]
        lines += [f"setting.{key}: {_settings_text(value)}" for key, value in sorted(self.config.result_settings.items())]
        lines += [f"artifact.{name}: {file_checksum(path)}" for name, path in sorted(self.artifacts.items())]
        return "\n".join(lines) + "\n"

    def execute(self, command: str = "run") -> Dict[str, str]:
        os.makedirs(self.out_dir, exist_ok=True)
        for name in stages_for(command):
            self.run_stage(name)
        self.write_text("manifest.txt", self.manifest_text())
        logger.info(f"{command} finished: {len(self.artifacts)} artifacts in {self.out_dir}")
        return dict(self.artifacts)


def run_pipeline(config: PipelineConfig, command: str = "run") -> Dict[str, str]:
    """Run the stages of a command and return the artifact paths by name."""
    return PipelineRun(config).execute(command)
