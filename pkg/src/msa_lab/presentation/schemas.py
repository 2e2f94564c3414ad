import math
from datetime import datetime, timezone
from typing import Any

from pydantic import BaseModel, Field, field_validator

from msa_lab.application.dto import ResultRow

CSV_COLUMNS = (
    "experiment",
    "seed",
    "L",
    "L2",
    "g",
    "m",
    "E",
    "r",
    "n",
    "p_hat",
    "ci_low",
    "ci_high",
    "bound_value",
    "status",
)


def _finite_or_none(value: Any) -> Any:
    """Infinite or NaN witnesses become None so JSON-lines output stays standard JSON."""
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {key: _finite_or_none(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_finite_or_none(item) for item in value]
    return value


class ResultRecord(BaseModel):
    experiment: str
    seed: int
    L: int | None = None
    L2: int | None = None
    g: float | None = None
    m: float | None = None
    E: float | None = None
    r: float | None = None
    n: int | None = None
    p_hat: float | None = None
    ci_low: float | None = None
    ci_high: float | None = None
    bound_value: float | None = None
    status: str = "ok"
    timestamp: str = Field(default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds"))
    parameters: dict[str, Any] = {}
    witnesses: dict[str, Any] = {}

    @field_validator("p_hat", "ci_low", "ci_high", "bound_value", "r")
    @classmethod
    def finite(cls, value: float | None) -> float | None:
        if value is not None and not math.isfinite(value):
            raise ValueError("must be finite")
        return value

    @field_validator("parameters", "witnesses")
    @classmethod
    def finite_witnesses(cls, value: dict[str, Any]) -> dict[str, Any]:
        return _finite_or_none(value)

    @classmethod
    def from_row(cls, row: ResultRow) -> "ResultRecord":
        return cls(
            experiment=row.experiment,
            seed=row.seed,
            L=row.L,
            L2=row.L2,
            g=row.g,
            m=row.m,
            E=row.E,
            r=row.r,
            n=row.n,
            p_hat=row.p_hat,
            ci_low=row.ci_low,
            ci_high=row.ci_high,
            bound_value=row.bound_value,
            status=row.status,
            parameters=row.parameters,
            witnesses=row.witnesses,
        )
