"""Decoding: beam search, diverse (Hamming-penalized) beam search, top-k sampling, greedy."""
from __future__ import annotations

from collections import Counter
from dataclasses import asdict, dataclass, replace
from typing import NamedTuple, Sequence

import numpy as np

from factseq.errors import InvalidConfig
from factseq.seqmodel.base import ScoredSequence, SeqModel, _prepare
from factseq.seqmodel.vocab import TokenSequence

MODES = ("beam", "diverse-beam", "topk-sample")
NEG_INF = float("-inf")


@dataclass(frozen=True)
class GenerationConfig:
    """Decoding mode and its knobs.

    ``max_len`` counts tokens before the end-of-sequence marker; a
    hypothesis reaching it is forced to stop. For diverse beam search each
    of the ``num_groups`` groups holds ``beam_width // num_groups`` beams.
    """

    mode: str = "beam"
    beam_width: int = 6
    num_groups: int = 1
    diversity_strength: float = 0.0
    k: int = 50
    num_samples: int = 1
    min_len: int = 0
    max_len: int = 60
    seed: int = 0

    def validate(self, vocab_size: int | None = None) -> "GenerationConfig":
        if self.mode not in MODES:
            raise InvalidConfig(f"mode must be one of {MODES}, got {self.mode!r}")
        for name in ("beam_width", "num_groups", "k", "num_samples"):
            if int(getattr(self, name)) < 1:
                raise InvalidConfig(f"{name} must be a positive integer")
        if self.diversity_strength < 0:
            raise InvalidConfig("diversity_strength must be non-negative")
        if self.min_len < 0 or self.max_len < 0 or self.min_len > self.max_len:
            raise InvalidConfig("need 0 <= min_len <= max_len")
        if self.mode == "diverse-beam" and self.beam_width % self.num_groups:
            raise InvalidConfig("beam_width must be divisible by num_groups")
        if self.mode == "topk-sample" and vocab_size is not None and self.k > vocab_size:
            raise InvalidConfig(f"k={self.k} exceeds vocabulary size {vocab_size}")
        return self

    def replace(self, **changes) -> "GenerationConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def qagen_default(cls, groups: int = 60, strength: float = 0.5, max_len: int = 60) -> "GenerationConfig":
        return cls(mode="diverse-beam", beam_width=groups, num_groups=groups,
                   diversity_strength=strength, min_len=0, max_len=max_len)


class _Hyp(NamedTuple):
    score: float
    total: float
    ids: tuple
    lps: tuple
    finished: bool


def step_logprobs(model: SeqModel, src: tuple, prefix: tuple, min_len: int, max_len: int) -> np.ndarray:
    """Next-token log-probs with decoding constraints applied.

    Begin-of-sequence and padding are never emitted; end-of-sequence is
    blocked before ``min_len`` and forced at ``max_len``. If the
    constraints leave nothing finite, end-of-sequence is allowed at its
    raw model score so every hypothesis can terminate.
    """
    vocab = model.vocab
    raw = np.asarray(model.next_logprobs(src, prefix), dtype=np.float64)
    lp = raw.copy()
    lp[vocab.bos] = NEG_INF
    lp[vocab.pad] = NEG_INF
    if len(prefix) < min_len:
        lp[vocab.eos] = NEG_INF
    if len(prefix) >= max_len:
        lp[:] = NEG_INF
        lp[vocab.eos] = raw[vocab.eos]
    if not np.isfinite(lp).any():
        lp[:] = NEG_INF
        lp[vocab.eos] = raw[vocab.eos]
        if not np.isfinite(lp[vocab.eos]):
            lp[vocab.eos] = NEG_INF
    return lp


def _candidates(model, src, prefix, min_len, max_len):
    lp = step_logprobs(model, src, prefix, min_len, max_len)
    finite = np.flatnonzero(np.isfinite(lp))
    if finite.size == 0:
        return [(model.vocab.eos, float(lp[model.vocab.eos]))]
    return [(int(t), float(lp[t])) for t in finite]


def _finish(model, hyps, group=0):
    out = []
    for h in hyps:
        text = model.vocab.decode(h.ids)
        out.append(ScoredSequence(TokenSequence(h.ids, text), h.lps, h.total, h.score, group))
    return out


def _rank(h: _Hyp):
    return (-h.score, h.ids)


def beam_search(model: SeqModel, src: tuple, width: int, min_len: int, max_len: int) -> list[ScoredSequence]:
    """Top-``width`` sequences by total log-prob; finished hypotheses are frozen."""
    eos = model.vocab.eos
    beam = [_Hyp(0.0, 0.0, (), (), False)]
    for _ in range(max_len + 1):
        if all(h.finished for h in beam):
            break
        cands = []
        for h in beam:
            if h.finished:
                cands.append(h)
                continue
            for tok, lp in _candidates(model, src, h.ids, min_len, max_len):
                cands.append(_Hyp(h.score + lp, h.total + lp, h.ids + (tok,), h.lps + (lp,), tok == eos))
        cands.sort(key=_rank)
        beam = cands[:width]
    return _finish(model, beam)


def diverse_beam_search(model: SeqModel, src: tuple, width: int, groups: int, strength: float,
                        min_len: int, max_len: int) -> list[ScoredSequence]:
    """Diverse beam search with a Hamming diversity penalty.

    Groups are decoded in order at every step. A candidate token in group
    ``g`` loses ``strength`` for every beam of an earlier group that chose
    the same token at this step. The penalty enters the search score only;
    ``total_logprob`` stays the model's log-probability.
    """
    eos = model.vocab.eos
    per_group = width // groups
    beams = [[_Hyp(0.0, 0.0, (), (), False)] for _ in range(groups)]
    for _ in range(max_len + 1):
        if all(h.finished for b in beams for h in b):
            break
        chosen = Counter()
        for g in range(groups):
            cands = []
            for h in beams[g]:
                if h.finished:
                    cands.append(h)
                    continue
                for tok, lp in _candidates(model, src, h.ids, min_len, max_len):
                    penalty = strength * chosen[tok]
                    cands.append(_Hyp(h.score + lp - penalty, h.total + lp, h.ids + (tok,),
                                      h.lps + (lp,), tok == eos))
            cands.sort(key=_rank)
            prev = {h.ids for h in beams[g] if h.finished}
            beams[g] = cands[:per_group]
            for h in beams[g]:
                if h.ids not in prev:
                    chosen[h.ids[-1]] += 1
    out = []
    for g, b in enumerate(beams):
        out.extend(_finish(model, b, g))
    return out


def topk_sample(model: SeqModel, src: tuple, k: int, num_samples: int, min_len: int, max_len: int,
                rng: np.random.Generator) -> list[ScoredSequence]:
    """Draw sequences token by token from the renormalized top-k distribution (temperature 1)."""
    eos = model.vocab.eos
    out = []
    for _ in range(num_samples):
        ids, lps, total = (), (), 0.0
        while True:
            lp = step_logprobs(model, src, ids, min_len, max_len)
            order = np.argsort(-lp, kind="stable")[:k]
            order = order[np.isfinite(lp[order])]
            if order.size == 0:
                tok = eos
            else:
                top = lp[order]
                p = np.exp(top - top.max())
                tok = int(order[rng.choice(order.size, p=p / p.sum())])
            step = float(lp[tok])
            ids, lps, total = ids + (tok,), lps + (step,), total + step
            if tok == eos:
                break
        out.append(_Hyp(total, total, ids, lps, True))
    return _finish(model, out)


def greedy_decode(model: SeqModel, input: TokenSequence, min_len: int = 0, max_len: int = 60,
                  forced_prefix: Sequence[int] = ()) -> ScoredSequence:
    """Argmax decoding (lowest id wins ties), optionally after force-feeding a prefix.

    Forced tokens are scored but not chosen; ``max_len`` counts them.
    """
    src = _prepare(model, input)
    eos = model.vocab.eos
    ids, lps, total = (), (), 0.0
    for tok in forced_prefix:
        step = float(model.next_logprobs(src, ids)[tok])
        ids, lps, total = ids + (int(tok),), lps + (step,), total + step
    while not ids or ids[-1] != eos:
        lp = step_logprobs(model, src, ids, min_len, max_len)
        tok = int(np.argmax(lp))
        if not np.isfinite(lp[tok]):
            tok = eos
        step = float(lp[tok])
        ids, lps, total = ids + (tok,), lps + (step,), total + step
    return _finish(model, [_Hyp(total, total, ids, lps, True)])[0]


def generate(model: SeqModel, input: TokenSequence, config: GenerationConfig) -> list[ScoredSequence]:
    config.validate(len(model.vocab))
    src = _prepare(model, input)
    if config.mode == "beam":
        return beam_search(model, src, config.beam_width, config.min_len, config.max_len)
    if config.mode == "diverse-beam":
        return diverse_beam_search(model, src, config.beam_width, config.num_groups,
                                   config.diversity_strength, config.min_len, config.max_len)
    rng = np.random.default_rng(config.seed)
    return topk_sample(model, src, config.k, config.num_samples, config.min_len, config.max_len, rng)
