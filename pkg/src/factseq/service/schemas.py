"""Request and response bodies for the HTTP service."""
from __future__ import annotations

from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field

from factseq.corpuskit.config import ToolkitConfig


class _Request(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GenCorpusRequest(_Request):
    spec: dict[str, Any] = Field(default_factory=dict)
    n: int = Field(ge=1)
    out: str


class ScoreRequest(_Request):
    corpus: str
    model: str
    out: str
    config: ToolkitConfig = ToolkitConfig()


class BuildSetsRequest(_Request):
    gt_scores: str
    model: str
    out: str
    corpus: str | None = None
    reward: Literal["quals", "quals-f1", "rouge-sum"] = "quals"
    config: ToolkitConfig = ToolkitConfig()


class TrainRequest(_Request):
    variant: Literal["offline", "online", "weighted", "positive-only"] = "offline"
    reward: Literal["quals", "quals-f1", "rouge-sum"] = "quals"
    corpus: str | None = None
    init: str | None = None
    qagen: str | None = None
    run_dir: str | None = None
    config: ToolkitConfig = ToolkitConfig()


class EvalRequest(_Request):
    corpus: str
    model: str
    metrics: list[Literal["rouge", "quals"]] = Field(default_factory=lambda: ["rouge", "quals"], min_length=1)
    qagen: str | None = None
    out: str | None = None
    config: ToolkitConfig = ToolkitConfig()


class CorrelateRequest(_Request):
    a: str
    b: str
    bins: int = Field(10, ge=1)
    key_a: str | None = None
    key_b: str | None = None
    out_csv: str | None = None


class ScoreSummary(BaseModel):
    count: int
    unscorable: int
    mean: float | None
    out: str


class CorrelateResponse(BaseModel):
    num_bins: int
    spearman: float
    bins: list[dict[str, Any]]
    pairs: int
    dropped: int


class EvalResponse(BaseModel):
    count: int
    means: dict[str, float | None]
    out: str | None


class ErrorResponse(BaseModel):
    detail: str
