"""QUALS: mean log-likelihood gap of summary-derived q-a pairs under document vs summary.

A summary scores near zero when the document supports its q-a pairs as
well as the summary does, and goes negative when the document makes the
answers unlikely (hallucinated content). Full-scale illustration: a
hallucinated flight number scored about -2.615 per pair while a faithful
airline name scored about -0.054.
"""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from factseq.errors import InvalidInput
from factseq.qagen import QAPair, filter_qa, generate_qa_candidates, ll_qa
from factseq.qagsref import token_f1
from factseq.seqmodel import GenerationConfig, SeqModel, TokenSequence, greedy_decode


@dataclass(frozen=True)
class QualsResult:
    score: float | None
    pairs: tuple[QAPair, ...] = ()
    dropped: int = 0
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def M(self) -> int:
        return len(self.pairs)

    @property
    def unscorable(self) -> bool:
        return self.score is None

    def to_record(self, id: str, key: str = "quals") -> dict:
        return {
            "id": id,
            key: self.score,
            "unscorable": self.unscorable,
            "pairs": [
                {"q": p.question.text, "a": p.answer.text, "ll_summ": p.ll_summ, "ll_doc": p.ll_doc}
                for p in self.pairs
            ],
        }


def _check_inputs(document: TokenSequence, summary: TokenSequence):
    if len(document) == 0 or len(summary) == 0:
        raise InvalidInput("document and summary must be non-empty")


def selected_pairs(qagen: SeqModel, summary: TokenSequence, config: GenerationConfig):
    candidates, dropped = generate_qa_candidates(qagen, summary, config)
    text = summary.text or qagen.vocab.decode(summary.ids)
    return filter_qa(candidates, text), dropped


def quals_score(qagen: SeqModel, document: TokenSequence, summary: TokenSequence,
                config: GenerationConfig) -> QualsResult:
    """Score one summary; ``score`` is None (unscorable) when no pair survives filtering."""
    _check_inputs(document, summary)
    kept, dropped = selected_pairs(qagen, summary, config)
    if not kept:
        return QualsResult(None, (), dropped)
    scored = tuple(p.with_ll(ll_doc=ll_qa(qagen, document, p)) for p in kept)
    score = sum(p.ll_doc - p.ll_summ for p in scored) / len(scored)
    return QualsResult(score, scored, dropped)


def quals_f1(qagen: SeqModel, document: TokenSequence, summary: TokenSequence,
             config: GenerationConfig) -> QualsResult:
    """Answer-overlap ablation of QUALS.

    Each selected question is force-decoded on the document, the answer is
    decoded greedily, and the result is token-F1 against the summary's
    answer. ``score`` is the mean F1 or None when nothing was selected.
    """
    _check_inputs(document, summary)
    kept, dropped = selected_pairs(qagen, summary, config)
    if not kept:
        return QualsResult(None, (), dropped)
    vocab = qagen.vocab
    f1s, answers = [], []
    for pair in kept:
        forced = pair.question.ids + (vocab.sep,)
        out = greedy_decode(qagen, document, 0, max(config.max_len, len(forced)), forced_prefix=forced)
        predicted = vocab.decode(out.ids[len(forced):])
        answers.append(predicted)
        f1s.append(token_f1(pair.answer.text, predicted))
    return QualsResult(sum(f1s) / len(f1s), tuple(kept), dropped,
                       {"f1": f1s, "predicted": answers})


def quals_batch(qagen: SeqModel, corpus: Iterable[tuple[str, TokenSequence, TokenSequence]],
                config: GenerationConfig, workers: int = 1, scorer=quals_score) -> dict[str, QualsResult]:
    """Score many ``(id, document, summary)`` triples; results keyed by id."""
    corpus = list(corpus)
    ids = [c[0] for c in corpus]
    if len(set(ids)) != len(ids):
        raise InvalidInput("duplicate ids in corpus")

    def one(item):
        return item[0], scorer(qagen, item[1], item[2], config)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(one, corpus))
    else:
        results = [one(c) for c in corpus]
    return dict(results)


def write_scored(results: dict[str, QualsResult], path: str | Path, key: str = "quals") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for id_, res in results.items():
            fh.write(json.dumps(res.to_record(id_, key)) + "\n")


def rank_key(score: float | None) -> tuple[int, float]:
    """Sort key placing unscorable (None) below every real score."""
    return (0, float("-inf")) if score is None else (1, score)


def mean_score(results: Sequence[QualsResult]) -> float | None:
    vals = [r.score for r in results if r.score is not None]
    return sum(vals) / len(vals) if vals else None
