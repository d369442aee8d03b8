"""Joint question-answer generation, parsing, likelihood scoring and filtering."""
from __future__ import annotations

import json
import logging
import string
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterator, Sequence

from factseq.errors import FormatError, InvalidConfig, MalformedPair
from factseq.seqmodel import GenerationConfig, SeqModel, TokenSequence, Vocabulary, generate, token_logprobs
from factseq.seqmodel.base import _prepare

log = logging.getLogger(__name__)

_PUNCT = string.punctuation


def normalize_text(text: str) -> str:
    """Lowercase, collapse whitespace, strip punctuation at token boundaries."""
    words = (w.strip(_PUNCT) for w in text.lower().split())
    return " ".join(w for w in words if w)


def contains_answer(summary: str, answer: str) -> bool:
    """Whole-token substring containment after normalization."""
    a = normalize_text(answer)
    if not a:
        return False
    return f" {a} " in f" {normalize_text(summary)} "


@dataclass(frozen=True)
class QAPair:
    question: TokenSequence
    answer: TokenSequence
    ll_summ: float | None = None
    ll_doc: float | None = None

    def __post_init__(self):
        if len(self.question) < 1 or len(self.answer) < 1:
            raise MalformedPair("question and answer must both be non-empty")

    @property
    def normalized_answer(self) -> str:
        return normalize_text(self.answer.text)

    @property
    def contribution(self) -> float | None:
        if self.ll_summ is None or self.ll_doc is None:
            return None
        return self.ll_doc - self.ll_summ

    def with_ll(self, **kw) -> "QAPair":
        return replace(self, **kw)

    def ids(self, vocab: Vocabulary) -> tuple[int, ...]:
        """The generation-format sequence ``q <a> a`` (no end marker)."""
        return self.question.ids + (vocab.sep,) + self.answer.ids


def parse_qa(sequence: TokenSequence, vocab: Vocabulary) -> tuple[TokenSequence, TokenSequence]:
    """Split a QAGen output at its first answer separator.

    A trailing end-of-sequence marker (and anything after it) is dropped
    before splitting.
    """
    ids = list(sequence.ids)
    if vocab.eos in ids:
        ids = ids[: ids.index(vocab.eos)]
    if vocab.sep not in ids:
        raise MalformedPair("no answer separator in sequence")
    cut = ids.index(vocab.sep)
    q, a = ids[:cut], ids[cut + 1:]
    if not q or not a:
        raise MalformedPair("empty question or answer")
    return (TokenSequence(q, vocab.decode(q, skip_special=False)),
            TokenSequence(a, vocab.decode(a, skip_special=False)))


def average_qa_ll(per_token: Sequence[float], n_q: int, n_a: int) -> float:
    """Mean log-likelihood over question and answer tokens, skipping the separator.

    ``per_token`` covers ``q <a> a`` (any trailing end marker is ignored).
    """
    q_part = per_token[:n_q]
    a_part = per_token[n_q + 1: n_q + 1 + n_a]
    return (sum(q_part) + sum(a_part)) / (n_q + n_a)


def ll_qa(model: SeqModel, conditioning: TokenSequence, pair: QAPair) -> float:
    """Average log-likelihood of generating ``pair`` from ``conditioning``."""
    src = _prepare(model, conditioning)
    tgt = TokenSequence(pair.ids(model.vocab))
    tgt.validate(model.vocab)
    per_token = token_logprobs(model, src, tgt.ids)
    return average_qa_ll(per_token, len(pair.question), len(pair.answer))


def generate_qa_candidates(model: SeqModel, summary: TokenSequence,
                           config: GenerationConfig) -> tuple[list[QAPair], int]:
    """Diverse-beam q-a candidates for ``summary``; returns ``(pairs, dropped)``.

    ``dropped`` counts generations that did not parse as a q-a pair.
    """
    if config.mode != "diverse-beam":
        raise InvalidConfig("q-a candidates are generated with diverse-beam decoding")
    pairs, dropped = [], 0
    for out in generate(model, summary, config):
        try:
            q, a = parse_qa(out.sequence, model.vocab)
        except MalformedPair:
            dropped += 1
            continue
        ll = average_qa_ll(out.per_token_logprobs, len(q), len(a))
        pairs.append(QAPair(q, a, ll_summ=ll))
    if dropped:
        log.debug("dropped %d malformed q-a generations", dropped)
    return pairs, dropped


def _preference(pair: QAPair):
    return (-pair.ll_summ, len(pair.question), pair.question.text, pair.question.ids)


def filter_qa(pairs: Sequence[QAPair], summary_text: str) -> list[QAPair]:
    """Keep pairs whose answer occurs in the summary, best ``ll_summ`` per answer.

    Ties on ``ll_summ`` go to the shorter question, then the
    lexicographically smaller one. Output is sorted by descending ``ll_summ``.
    """
    best: dict[str, QAPair] = {}
    for pair in pairs:
        if pair.ll_summ is None:
            raise ValueError("filter_qa needs ll_summ on every pair")
        if not contains_answer(summary_text, pair.answer.text):
            continue
        key = pair.normalized_answer
        if key not in best or _preference(pair) < _preference(best[key]):
            best[key] = pair
    return sorted(best.values(), key=_preference)


# -- fine-tuning data hook ---------------------------------------------------

@dataclass(frozen=True)
class QAExample:
    context: str
    question: str
    answer: str

    def target_text(self) -> str:
        return f"{self.question} <a> {self.answer} </s>"


def read_qa_examples(path: str | Path) -> Iterator[QAExample]:
    """Stream ``{"context", "question", "answer"}`` JSONL records."""
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"invalid JSON: {exc.msg}", lineno) from None
            missing = [k for k in ("context", "question", "answer") if not isinstance(rec.get(k), str)]
            if missing:
                raise FormatError(f"missing or non-string keys {missing}", lineno)
            yield QAExample(rec["context"], rec["question"], rec["answer"])


def qa_training_pairs(examples, vocab: Vocabulary) -> list[tuple[TokenSequence, TokenSequence]]:
    """Encode QA examples as (context, ``q <a> a </s>``) pairs for MLE training."""
    return [(vocab.encode(ex.context), vocab.encode(ex.target_text())) for ex in examples]
