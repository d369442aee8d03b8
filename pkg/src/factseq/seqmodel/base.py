"""Backend adapter contract and sequence scoring."""
from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from factseq.errors import InvalidInput
from factseq.seqmodel.vocab import TokenSequence, Vocabulary


class SeqModel(ABC):
    """Anything that yields a next-token log-distribution.

    Implementations return a float64 array of length ``len(vocab)`` whose
    exponentials sum to one. ``input_ids`` never carries trailing padding
    by the time it reaches a backend. Scoring and decoding only read from
    the model, so a backend is safe to share between threads as long as
    ``next_logprobs`` is.
    """

    vocab: Vocabulary

    @abstractmethod
    def next_logprobs(self, input_ids: tuple[int, ...], prefix: tuple[int, ...]) -> np.ndarray:
        ...


@dataclass(frozen=True)
class ScoredSequence:
    sequence: TokenSequence
    per_token_logprobs: tuple[float, ...]
    total_logprob: float
    # Search objective; differs from total_logprob under diversity penalties.
    search_score: float | None = None
    group: int = 0

    @property
    def avg_logprob(self) -> float:
        n = len(self.per_token_logprobs)
        return self.total_logprob / n if n else 0.0

    @property
    def ids(self) -> tuple[int, ...]:
        return self.sequence.ids


def _prepare(model: SeqModel, seq: TokenSequence) -> tuple[int, ...]:
    if not isinstance(seq, TokenSequence):
        seq = TokenSequence(seq)
    seq.validate(model.vocab)
    return seq.strip_padding(model.vocab).ids


def token_logprobs(model: SeqModel, input_ids: Sequence[int], output_ids: Sequence[int]) -> list[float]:
    """Teacher-forced log p(output_t | input, output_<t) for every position."""
    input_ids, output_ids = tuple(input_ids), tuple(output_ids)
    out = []
    for t, tok in enumerate(output_ids):
        lp = model.next_logprobs(input_ids, output_ids[:t])
        out.append(float(lp[tok]))
    return out


def score_sequence(model: SeqModel, input: TokenSequence, output: TokenSequence) -> ScoredSequence:
    """Score ``output`` exactly as given (no implicit end-of-sequence)."""
    if len(output) == 0:
        raise InvalidInput("cannot score an empty output sequence")
    src = _prepare(model, input)
    tgt = _prepare(model, output)
    if len(tgt) == 0:
        raise InvalidInput("output is only padding")
    per_token = token_logprobs(model, src, tgt)
    total = sum(per_token)
    return ScoredSequence(TokenSequence(tgt, output.text), tuple(per_token), total)


def check_distribution(logprobs: np.ndarray, atol: float = 1e-6) -> bool:
    with np.errstate(under="ignore"):
        return math.isclose(float(np.exp(logprobs).sum()), 1.0, abs_tol=atol)
