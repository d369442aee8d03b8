"""Reward functions over (document, summary, reference) text."""
from __future__ import annotations

import logging
import threading
from dataclasses import dataclass
from typing import Callable, Sequence

from factseq.evalharness import rouge
from factseq.quals import quals_f1, quals_score
from factseq.seqmodel import GenerationConfig, SeqModel

log = logging.getLogger(__name__)

REWARD_NAMES = ("quals", "quals-f1", "rouge-sum", "custom")


@dataclass(frozen=True)
class RewardFunction:
    """A named, deterministic scorer; returns None when the summary is unscorable."""

    name: str
    fn: Callable[[str, str, str | None], float | None]

    def __call__(self, document: str, summary: str, reference: str | None = None) -> float | None:
        return self.fn(document, summary, reference)


def _cached(fn):
    cache, lock = {}, threading.Lock()

    def wrapper(document, summary, reference=None):
        key = (document, summary, reference)
        with lock:
            if key in cache:
                return cache[key]
        value = fn(document, summary, reference)
        with lock:
            cache[key] = value
        return value

    return wrapper


def _qagen_scorer(qagen: SeqModel, config: GenerationConfig, scorer):
    vocab = qagen.vocab

    def score(document, summary, reference=None):
        if not summary.split():
            return None
        return scorer(qagen, vocab.encode(document), vocab.encode(summary), config).score

    return _cached(score)


def quals_reward(qagen: SeqModel, config: GenerationConfig) -> RewardFunction:
    return RewardFunction("quals", _qagen_scorer(qagen, config, quals_score))


def quals_f1_reward(qagen: SeqModel, config: GenerationConfig) -> RewardFunction:
    return RewardFunction("quals-f1", _qagen_scorer(qagen, config, quals_f1))


def rouge_sum_reward() -> RewardFunction:
    """Sum of ROUGE-1/2/L F-measures against the reference summary."""

    def score(document, summary, reference=None):
        if reference is None:
            raise ValueError("rouge-sum reward needs a reference summary")
        return rouge(summary, reference).total

    return RewardFunction("rouge-sum", score)


def custom_reward(fn, name: str = "custom") -> RewardFunction:
    return RewardFunction(name, fn)


def reward_key(r: float | None) -> tuple[int, float]:
    """Ascending sort key with unscorable below every real reward."""
    return (0, 0.0) if r is None else (1, r)


class RewardNormalizer:
    """Affine map of a fitted reward interval onto [0, 1], clamped at apply time.

    Unscorable rewards map to 0. A degenerate interval (all fitted values
    equal) maps everything to 0.5.
    """

    def __init__(self, low: float, high: float):
        self.low, self.high = float(low), float(high)

    @classmethod
    def fit(cls, scores: Sequence[float | None]) -> "RewardNormalizer":
        vals = [s for s in scores if s is not None]
        if not vals:
            log.warning("no scorable rewards to fit; every weight becomes 0.5")
            return cls(0.0, 0.0)
        lo, hi = min(vals), max(vals)
        if lo == hi:
            log.warning("all rewards equal (%r); every weight becomes 0.5", lo)
        return cls(lo, hi)

    def __call__(self, r: float | None) -> float:
        if r is None:
            return 0.0
        if self.high == self.low:
            return 0.5
        return min(1.0, max(0.0, (r - self.low) / (self.high - self.low)))


def normalize_rewards(scores: Sequence[float | None]) -> list[float]:
    norm = RewardNormalizer.fit(scores)
    return [norm(s) for s in scores]
