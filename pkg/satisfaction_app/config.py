# Version: 0.1
# Last Modified: 2026-10-18
# Changes: Pipeline configuration with variant presets, dotenv files and environment overrides
"""
Pipeline configuration.

Settings are dotted keys (``lasso.c=1.1``). They resolve in this order, later
sources winning: built-in defaults, the variant preset, the config file,
SATISFACTION_* environment variables and finally command-line flags.
Environment keys spell dots as double underscores, for example
SATISFACTION_FEATURES__DELAY_THRESHOLD_MIN=30.
"""
import hashlib
import json
import os
from dataclasses import dataclass
from typing import Any, Callable, Dict, Mapping, Optional, Tuple

from dotenv import dotenv_values, load_dotenv

from satisfaction_app.data.synthetic_data import SyntheticConfig
from satisfaction_app.errors import ConfigError, SatisfactionError
from satisfaction_app.estimation.probit import ProbitOptions
from satisfaction_app.estimation.resample import SmoteConfig
from satisfaction_app.features.design import DEFAULT_GROUPS, FeatureSpec
from satisfaction_app.utils.logger import get_logger

logger = get_logger(__name__)

ENV_PREFIX = "SATISFACTION_"
# read by the logger, not part of the pipeline settings
ENV_RESERVED = {"SATISFACTION_LOG_LEVEL"}
# where and how fast a run goes; results do not depend on them
RUNTIME_KEYS = frozenset({"out_dir", "threads"})


def _bool(text: str) -> bool:
    value = text.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: '{text}'")


def _optional_float(text: str) -> Optional[float]:
    return None if text.strip().lower() in ("", "none") else float(text)


def _optional_text(text: str) -> Optional[str]:
    return None if text.strip().lower() in ("", "none") else text.strip()


def _floats(text: str) -> Tuple[float, ...]:
    return tuple(float(part) for part in text.split(",") if part.strip())


def _groups(text: str) -> Tuple[str, ...]:
    return tuple(sorted(part.strip() for part in text.split(",") if part.strip()))


def _choice(*options: str) -> Callable[[str], str]:
    def parse(text: str) -> str:
        if text.strip() not in options:
            raise ValueError(f"'{text}' is not one of {', '.join(options)}")
        return text.strip()
    return parse


VARIANTS = (
    "col1_baseline", "col2_smote", "col3_del30", "col4_dissat", "col5_full", "col6_attribution",
    "col7_board75", "col8_board90", "t4_interactions", "t4_ratings", "t4_duration_pooled", "t4_duration",
)

# key -> (parser, default text)
SETTINGS: Dict[str, Tuple[Callable[[str], Any], str]] = {
    "variant": (_choice(*VARIANTS), "col5_full"),
    "seed": (int, "20180201"),
    "out_dir": (str, "output"),
    "threads": (int, "1"),
    "paths.surveys": (_optional_text, ""),
    "paths.flights": (_optional_text, ""),
    "paths.weather": (_optional_text, ""),
    "paths.terminal_hours": (_optional_text, ""),
    "features.groups": (_groups, ",".join(sorted(DEFAULT_GROUPS))),
    "features.delay_threshold_min": (int, "15"),
    "features.board_quantile": (float, "0.75"),
    "features.delay_encoding": (str, "del"),
    "features.dissat_peer_scope": (str, "month_hour"),
    "features.dissat_include_self": (_bool, "false"),
    "features.min_level_count": (int, "5"),
    "smote.enabled": (_bool, "false"),
    "smote.target_share": (float, "0.40"),
    "smote.k_neighbors": (int, "1"),
    "smote.interpolate_outcome": (_bool, "false"),
    "smote.rebinarize": (_bool, "false"),
    "smote.standardize": (_bool, "false"),
    "lasso.select": (_bool, "true"),
    "lasso.c": (float, "1.1"),
    "lasso.gamma": (_optional_float, ""),
    "probit.max_iter": (int, "1000"),
    "probit.tol": (float, "1e-6"),
    "probit.cluster": (_bool, "true"),
    "attribution.enabled": (_bool, "false"),
    "attribution.random_intercept": (_bool, "true"),
    "attribution.quad_nodes": (int, "12"),
    "attribution.coefficients": (_choice("fit", "published"), "fit"),
    "attribution.marginalize": (_bool, "false"),
    "synthetic.n_respondents": (int, "13071"),
    "synthetic.trait_loading": (float, "0.5"),
    "synthetic.delay_effect_true": (float, "-0.30"),
    "synthetic.confound_strength": (float, "0.3"),
    "synthetic.internal_blame_only": (_bool, "false"),
    "study.shares": (_floats, "0.35,0.40,0.45,0.50,0.55"),
    "study.replications": (int, "250"),
}

_CONTROLS = "airl,date,dest"
_ALL = ",".join(sorted(DEFAULT_GROUPS))

VARIANT_PRESETS: Dict[str, Dict[str, str]] = {
    "col1_baseline": {"features.groups": f"roster,delay,{_CONTROLS}"},
    "col2_smote": {"features.groups": f"roster,delay,{_CONTROLS}", "smote.enabled": "true"},
    "col3_del30": {"features.groups": f"roster,delay,{_CONTROLS}", "features.delay_threshold_min": "30"},
    "col4_dissat": {"features.groups": f"roster,delay,dissat,{_CONTROLS}"},
    "col5_full": {"features.groups": _ALL},
    "col6_attribution": {"features.groups": _ALL, "attribution.enabled": "true"},
    "col7_board75": {"features.groups": _ALL, "features.delay_encoding": "del_board",
                     "features.board_quantile": "0.75"},
    "col8_board90": {"features.groups": _ALL, "features.delay_encoding": "del_board",
                     "features.board_quantile": "0.90"},
    "t4_interactions": {"features.groups": _ALL, "features.delay_encoding": "del_flier"},
    "t4_ratings": {"features.groups": _ALL, "features.delay_encoding": "del_rating45"},
    "t4_duration_pooled": {"features.groups": _ALL, "features.delay_encoding": "deldur"},
    "t4_duration": {"features.groups": _ALL, "features.delay_encoding": "deldur_purpose"},
}


@dataclass(frozen=True)
class PipelineConfig:
    """Resolved settings plus the typed objects each stage needs."""

    settings: Mapping[str, Any]

    def __getitem__(self, key: str) -> Any:
        return self.settings[key]

    @property
    def variant(self) -> str:
        return self.settings["variant"]

    @property
    def seed(self) -> int:
        return self.settings["seed"]

    @property
    def out_dir(self) -> str:
        return self.settings["out_dir"]

    @property
    def threads(self) -> int:
        return self.settings["threads"]

    @property
    def input_paths(self) -> Dict[str, Optional[str]]:
        return {name: self.settings[f"paths.{name}"]
                for name in ("surveys", "flights", "weather", "terminal_hours")}

    @property
    def ingest_mode(self) -> bool:
        """True when input tables are configured instead of generated."""
        paths = self.input_paths
        return any(paths[name] for name in ("surveys", "flights", "weather"))

    @property
    def feature_spec(self) -> FeatureSpec:
        s = self.settings
        return FeatureSpec(
            delay_threshold_min=s["features.delay_threshold_min"],
            board_quantile=s["features.board_quantile"],
            include_groups=frozenset(s["features.groups"]),
            delay_encoding=s["features.delay_encoding"],
            dissat_peer_scope=s["features.dissat_peer_scope"],
            dissat_include_self=s["features.dissat_include_self"],
            min_level_count=s["features.min_level_count"],
        )

    @property
    def smote(self) -> Optional[SmoteConfig]:
        s = self.settings
        if not s["smote.enabled"]:
            return None
        return SmoteConfig(
            target_share=s["smote.target_share"],
            k_neighbors=s["smote.k_neighbors"],
            seed=self.seed,
            interpolate_outcome=s["smote.interpolate_outcome"],
            rebinarize=s["smote.rebinarize"],
            standardize=s["smote.standardize"],
        )

    @property
    def probit(self) -> ProbitOptions:
        s = self.settings
        return ProbitOptions(max_iter=s["probit.max_iter"], tol=s["probit.tol"], cluster=s["probit.cluster"])

    @property
    def synthetic(self) -> SyntheticConfig:
        s = self.settings
        return SyntheticConfig(
            n_respondents=s["synthetic.n_respondents"],
            seed=self.seed,
            trait_loading=s["synthetic.trait_loading"],
            delay_effect_true=s["synthetic.delay_effect_true"],
            confound_strength=s["synthetic.confound_strength"],
            internal_blame_only=s["synthetic.internal_blame_only"],
        )

    @property
    def result_settings(self) -> Dict[str, Any]:
        """Settings that determine the artifacts."""
        return {key: value for key, value in self.settings.items() if key not in RUNTIME_KEYS}

    @property
    def config_hash(self) -> str:
        canonical = json.dumps(self.result_settings, sort_keys=True, separators=(",", ":"), default=list)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def validate(self) -> "PipelineConfig":
        """Build every typed object once so bad combinations fail before any stage runs."""
        try:
            self.feature_spec, self.smote, self.probit, self.synthetic
        except ConfigError:
            raise
        except SatisfactionError as exc:
            raise ConfigError(str(exc)) from exc
        if self.threads < 1:
            raise ConfigError(f"threads must be at least 1, got {self.threads}")
        if self.settings["smote.enabled"] and self.settings["attribution.enabled"]:
            raise ConfigError("SMOTE rows have no delay-stage inputs; attribution cannot be combined with SMOTE")
        if self.settings["attribution.quad_nodes"] < 4:
            raise ConfigError("attribution.quad_nodes must be at least 4")
        return self


def _parse(raw: Mapping[str, str], source: str) -> Dict[str, Any]:
    parsed: Dict[str, Any] = {}
    for key, text in raw.items():
        if key not in SETTINGS:
            raise ConfigError(f"unknown config key '{key}' in {source}")
        parser, _ = SETTINGS[key]
        try:
            parsed[key] = parser("" if text is None else str(text))
        except ValueError as exc:
            raise ConfigError(f"bad value for '{key}' in {source}: {exc}") from exc
    return parsed


def read_config_file(path: str) -> Dict[str, str]:
    if not os.path.isfile(path):
        raise ConfigError(f"config file not found: {path}")
    return {key: value for key, value in dotenv_values(path).items()}


def environment_overrides(environ: Optional[Mapping[str, str]] = None) -> Dict[str, str]:
    environ = os.environ if environ is None else environ
    found = {}
    for name, value in environ.items():
        if name.startswith(ENV_PREFIX) and name not in ENV_RESERVED:
            key = name[len(ENV_PREFIX):].lower().replace("__", ".")
            found[key] = value
    return found


def load_config(path: Optional[str] = None, variant: Optional[str] = None,
                flags: Optional[Mapping[str, str]] = None,
                environ: Optional[Mapping[str, str]] = None) -> PipelineConfig:
    """Resolve defaults, preset, file, environment and flags into one validated config."""
    if environ is None:
        load_dotenv()
    file_values = _parse(read_config_file(path), path) if path else {}
    env_values = _parse(environment_overrides(environ), "environment")
    flag_values = _parse(dict(flags or {}), "command line")

    chosen = variant or flag_values.get("variant") or env_values.get("variant") or file_values.get("variant")
    chosen = chosen or SETTINGS["variant"][1]
    if chosen not in VARIANT_PRESETS:
        raise ConfigError(f"unknown variant '{chosen}'; choose one of {', '.join(VARIANTS)}")

    settings = _parse({key: default for key, (_, default) in SETTINGS.items()}, "defaults")
    settings.update(_parse(VARIANT_PRESETS[chosen], f"preset {chosen}"))
    settings.update(file_values)
    settings.update(env_values)
    settings.update(flag_values)
    settings["variant"] = chosen
    config = PipelineConfig(settings=settings).validate()
    logger.info(f"config resolved: variant {chosen}, seed {config.seed}, hash {config.config_hash[:12]}")
    return config
