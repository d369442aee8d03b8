"""Single-file JSON run configuration.

Top-level sections: ``model``, ``generation``, ``quals``, ``conseq``,
``eval``, ``paths``. Every field has a default, so ``{}`` is a valid file.
Defaults sized for the synthetic corpus are noted inline; the large-scale
settings they shrink from are beam 4/6, summary lengths 10-60 (XSUM-like)
or 55-140 (CNNDM-like), k=50 and p of 30 or 50.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from factseq.conseq.config import ConseqConfig
from factseq.errors import InvalidConfig
from factseq.seqmodel import GenerationConfig


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ModelSection(_Section):
    dim: int = Field(16, ge=2)
    copy_head: bool = True
    seed: int = 0
    mle_epochs: int = Field(10, ge=0)
    mle_lr: float = Field(1e-2, gt=0)
    batch_size: int = Field(16, ge=1)


class GenerationSection(_Section):
    """Summary decoding for ``eval``: beam search, or paired seeded top-k samples."""

    mode: Literal["beam", "topk-sample"] = "beam"
    beam_width: int = Field(6, ge=1)
    k: int = Field(50, ge=1)
    num_samples: int = Field(4, ge=1)
    min_len: int = Field(0, ge=0)
    max_len: int = Field(20, ge=1)  # synthetic summaries are 3-5 tokens
    seed: int = 0


class QualsSection(_Section):
    # 60 groups at full scale; 8 covers every relation of the synthetic corpus
    groups: int = Field(8, ge=1)
    diversity_strength: float = Field(0.5, ge=0)
    max_len: int = Field(12, ge=2)
    workers: int = Field(1, ge=1)

    def generation(self) -> GenerationConfig:
        return GenerationConfig.qagen_default(groups=self.groups, strength=self.diversity_strength,
                                              max_len=self.max_len)


class ConseqSection(_Section):
    p: float = Field(50.0, gt=0, le=100)
    negatives_per_doc: int = Field(6, ge=1)
    k: int = Field(50, ge=1)
    outer_iterations: int = Field(1, ge=0)
    lr: float = Field(1e-3, gt=0)
    batch_size: int = Field(8, ge=1)
    epochs: int = Field(5, ge=0)
    seed: int = 0
    negative_level: Literal["token", "sequence"] = "sequence"
    min_len: int = Field(0, ge=0)
    max_len: int = Field(20, ge=1)
    workers: int = Field(1, ge=1)

    def build(self, variant: str = "offline") -> ConseqConfig:
        return ConseqConfig(variant=variant, **self.model_dump())


class EvalSection(_Section):
    bins: int = Field(10, ge=1)


class PathsSection(_Section):
    run_dir: str = "runs/default"
    train_corpus: str | None = None
    qagen: str | None = None
    init_model: str | None = None


class ToolkitConfig(_Section):
    model: ModelSection = ModelSection()
    generation: GenerationSection = GenerationSection()
    quals: QualsSection = QualsSection()
    conseq: ConseqSection = ConseqSection()
    eval: EvalSection = EvalSection()
    paths: PathsSection = PathsSection()


def load_config(path: str | Path | None) -> ToolkitConfig:
    if path is None:
        return ToolkitConfig()
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return ToolkitConfig.model_validate(data)
    except json.JSONDecodeError as exc:
        raise InvalidConfig(f"{path}: invalid JSON: {exc.msg}") from None
    except ValidationError as exc:
        raise InvalidConfig(f"{path}: {exc}") from None
