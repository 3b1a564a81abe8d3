# Version: 0.1
# Last Modified: 2026-10-18
# Changes: Delay-stage probit and internal/external split of predicted delay
"""
Blame attribution for flight delays.

Step one fits a probit of DEL on the delay-determinant roster. Step two splits
each predicted delay probability in two: the prediction with the weather
columns at their no-adverse-weather value of 0 (internal origin), and the
increment the observed weather adds on top (external origin).
"""
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.special import ndtr

from satisfaction_app.errors import DataError
from satisfaction_app.estimation.probit import (
    INTERCEPT,
    BinaryFit,
    ProbitOptions,
    fit_binary_probit,
    fit_random_intercept_probit,
)
from satisfaction_app.features.design import (
    DELAY_ROSTER,
    EXTERNAL_DELAY_COLUMNS,
    GROUP_ATTRIBUTION,
    DesignMatrix,
    drop_constant_columns,
)
from satisfaction_app.utils.logger import get_logger

logger = get_logger(__name__)

INTERNAL = "internal"
EXTERNAL = "external"
DEL_INT = "DEL (INT)"
DEL_EXT = "DEL (EXT)"

# Reference delay-stage estimates, usable in place of a fit.
PUBLISHED_DELAY_COEFFICIENTS: Dict[str, float] = {
    "WEATHER (ORG)": 0.0290,
    "WEATHER (DST)": 0.1347,
    "SMALLTERM": 1.5836,
    "INTNLTERM": 0.7622,
    "JETBRIDGE": -0.0269,
    "PRCONNECT": -0.1283,
    "LOADFAC": 0.2697,
    "AIRCSIZE": -0.0019,
    "CARGO": 0.0552,
    "DISTANCE": -0.0296,
    "BUSYDAY": 0.2419,
    "BUSYHOUR": 0.0615,
    "SECINSPTIME": 0.1136,
    "RUNWAYCONG": 0.3785,
    "RUNWAYDIS": 1.7516,
    "CASCAD (DEP)": -0.0234,
    "CASCAD (ARR)": 2.0114,
    "PANDEMIC (EARLY)": -0.0698,
    "PANDEMIC (LATER)": 0.3113,
}


def tag_columns(names: Sequence[str]) -> Dict[str, str]:
    return {name: EXTERNAL if name in EXTERNAL_DELAY_COLUMNS else INTERNAL
            for name in names if name != INTERCEPT}


@dataclass
class DelayStageFit:
    fit: BinaryFit
    tags: Dict[str, str]
    notes: List[str] = field(default_factory=list)

    def __post_init__(self):
        covariates = [name for name in self.fit.names if name != INTERCEPT]
        if set(self.tags) != set(covariates) or not set(self.tags.values()) <= {INTERNAL, EXTERNAL}:
            raise DataError("delay-stage tags must label every covariate internal or external")

    @property
    def external_names(self) -> List[str]:
        return [name for name, tag in self.tags.items() if tag == EXTERNAL]

    @property
    def internal_names(self) -> List[str]:
        return [name for name, tag in self.tags.items() if tag == INTERNAL]

    @classmethod
    def from_coefficients(cls, coefs: Mapping[str, float], intercept: float,
                          sigma_u: Optional[float] = None) -> "DelayStageFit":
        """Wrap given coefficients (no data, no variance) as a delay-stage fit."""
        names = [INTERCEPT] + list(coefs)
        fit = BinaryFit(
            beta=np.array([intercept] + [float(v) for v in coefs.values()]),
            names=names,
            loglik=np.nan,
            vcov=None,
            converged=True,
            n=0,
            k=len(names) + (1 if sigma_u else 0),
            aic=np.nan,
            bic=np.nan,
            sigma_u=sigma_u,
            message="coefficients supplied, not estimated",
        )
        return cls(fit=fit, tags=tag_columns(names))


def fit_delay_stage(matrix: DesignMatrix, random_intercept: bool = True,
                    group: Optional[Sequence[str]] = None, quad_nodes: int = 12,
                    options: Optional[ProbitOptions] = None,
                    roster: Sequence[str] = DELAY_ROSTER) -> DelayStageFit:
    """Probit of DEL on the delay roster; random intercept per group by default."""
    for name in roster:
        if name not in matrix.names:
            raise DataError(f"delay roster column missing: {name}")
    usable = drop_constant_columns(matrix.keep_columns(roster))
    if random_intercept:
        fit = fit_random_intercept_probit(usable, group=group, quad_nodes=quad_nodes, options=options)
    else:
        fit = fit_binary_probit(usable, options)
    stage = DelayStageFit(fit=fit, tags=tag_columns(fit.names), notes=list(usable.notes))
    if not stage.external_names:
        logger.warning("no weather column survived; the delay stage is internal-only")
    logger.info(f"delay stage fitted on {usable.n} rows with {len(stage.internal_names)} internal "
                f"and {len(stage.external_names)} external covariates")
    return stage


@dataclass
class Decomposition:
    del_int: np.ndarray
    del_ext: np.ndarray
    eta_int: np.ndarray
    eta_ext: np.ndarray
    n_floored: int = 0

    def to_frame(self, row_ids: Optional[Sequence[str]] = None) -> pd.DataFrame:
        ids = list(row_ids) if row_ids is not None else list(range(len(self.del_int)))
        return pd.DataFrame({
            "row_id": ids,
            "del_int": self.del_int,
            "del_ext": self.del_ext,
            "eta_int": self.eta_int,
            "eta_ext": self.eta_ext,
        })


def decompose_predictions(stage: DelayStageFit, rows: DesignMatrix, marginalize: bool = False) -> Decomposition:
    """del_int = Phi(a + eta_int); del_ext = max(Phi(a + eta_int + eta_ext) - del_int, 0)."""
    fit = stage.fit
    eta_int = np.full(rows.n, fit.intercept)
    eta_ext = np.zeros(rows.n)
    for name, coef in zip(fit.names, fit.beta):
        if name == INTERCEPT:
            continue
        if name not in rows.names:
            raise DataError(f"delay roster column missing: {name}")
        if stage.tags[name] == EXTERNAL:
            eta_ext += coef * rows.column(name)
        else:
            eta_int += coef * rows.column(name)
    scale = np.sqrt(1.0 + fit.sigma_u ** 2) if (marginalize and fit.sigma_u) else 1.0
    del_int = ndtr(eta_int / scale)
    increment = ndtr((eta_int + eta_ext) / scale) - del_int
    floored = int(np.sum(increment < 0))
    if floored:
        logger.warning(f"{floored} rows had a negative weather increment; DEL (EXT) floored at 0")
    return Decomposition(
        del_int=del_int,
        del_ext=np.maximum(increment, 0.0),
        eta_int=eta_int,
        eta_ext=eta_ext,
        n_floored=floored,
    )


def plug_into_satisfaction(del_int: np.ndarray, del_ext: np.ndarray, base: DesignMatrix,
                           delay_column: str = "DEL") -> DesignMatrix:
    """Replace the delay column with penalized DEL (INT) and DEL (EXT) columns."""
    if len(del_int) != base.n or len(del_ext) != base.n:
        raise DataError("decomposition must have one value per design row")
    matrix = base.drop_columns([delay_column]) if delay_column in base.names else base
    matrix = matrix.with_columns([DEL_INT, DEL_EXT], np.column_stack([del_int, del_ext]),
                                 penalized=True, group=GROUP_ATTRIBUTION)
    return drop_constant_columns(matrix)
