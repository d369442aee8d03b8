from __future__ import annotations

from dataclasses import asdict, dataclass, replace

from factseq.errors import InvalidConfig

VARIANTS = ("offline", "online", "weighted", "positive-only")
NEGATIVE_LEVELS = ("token", "sequence")


@dataclass(frozen=True)
class ConseqConfig:
    """Knobs for pool construction and contrastive training.

    ``lr`` defaults to one tenth of the MLE default (1e-2). ``min_len`` and
    ``max_len`` bound the top-k samples drawn for the negative pool.
    """

    p: float = 30.0
    negatives_per_doc: int = 6
    k: int = 50
    outer_iterations: int = 1
    variant: str = "offline"
    lr: float = 1e-3
    batch_size: int = 8
    epochs: int = 1
    seed: int = 0
    negative_level: str = "token"
    min_len: int = 0
    max_len: int = 60
    workers: int = 1

    def __post_init__(self):
        if not 0 < self.p <= 100:
            raise InvalidConfig("p must lie in (0, 100]")
        if self.negatives_per_doc < 1:
            raise InvalidConfig("negatives_per_doc must be at least 1")
        if self.k < 1:
            raise InvalidConfig("k must be positive")
        if self.outer_iterations < 0 or self.epochs < 0:
            raise InvalidConfig("outer_iterations and epochs must be non-negative")
        if self.variant not in VARIANTS:
            raise InvalidConfig(f"variant must be one of {VARIANTS}")
        if self.negative_level not in NEGATIVE_LEVELS:
            raise InvalidConfig(f"negative_level must be one of {NEGATIVE_LEVELS}")
        if self.lr <= 0 or self.batch_size < 1 or self.workers < 1:
            raise InvalidConfig("lr, batch_size and workers must be positive")
        if not 0 <= self.min_len <= self.max_len or self.max_len < 1:
            raise InvalidConfig("need 0 <= min_len <= max_len and max_len >= 1")

    def replace(self, **changes) -> "ConseqConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ConseqConfig":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise InvalidConfig(f"unknown conseq keys {sorted(unknown)}")
        return cls(**data)
