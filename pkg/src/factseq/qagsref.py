"""Reference QAGS pipeline: answer extraction, question generation, dual-context QA, token F1."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable

from factseq.errors import InvalidConfig, MalformedPair, PipelineError
from factseq.qagen import normalize_text, parse_qa
from factseq.seqmodel import GenerationConfig, SeqModel, generate, greedy_decode

# Function words never kept as answer candidates (the reference protocol
# drops words such as "who" and "it" without publishing its list).
STOP_WORDS = frozenset("""
a an the this that these those it its they them their he him his she her we us our
you your i me my who whom whose what which when where why how was were is are be been
being of to in on at by for with and or but not no
""".split())

DETERMINERS = frozenset("a an the this that these those".split())
_PUNCT = "\"'.,;:!?()[]{}"


def _tokens(text: str) -> list[str]:
    return text.lower().split()


def token_f1(a: str, b: str) -> float:
    """Word-overlap F1 on lowercased whitespace tokens (multiset counts)."""
    ta, tb = _tokens(a), _tokens(b)
    if not ta and not tb:
        return 1.0
    if not ta or not tb:
        return 0.0
    overlap = sum((Counter(ta) & Counter(tb)).values())
    if overlap == 0:
        return 0.0
    precision = overlap / len(ta)
    recall = overlap / len(tb)
    return 2 * precision * recall / (precision + recall)


def _spans(words, keep):
    spans, run = [], []
    for i, w in enumerate(words):
        if keep(w):
            run.append(i)
        elif run:
            spans.append(run)
            run = []
    if run:
        spans.append(run)
    return spans


def extract_answers(text: str, max_answers: int = 10) -> list[str]:
    """Heuristic answer candidates: capitalized spans, digit-bearing spans, determiner-noun chunks.

    Stop words are dropped, duplicates removed (case-insensitive) and the
    first ``max_answers`` candidates kept in order of first occurrence.
    """
    words = [w.strip(_PUNCT) for w in text.split()]

    def capitalized(w):
        return bool(w) and w[0].isupper() and w.lower() not in STOP_WORDS

    def numeric(w):
        return any(c.isdigit() for c in w)

    found = []
    for keep in (capitalized, numeric):
        for run in _spans(words, keep):
            found.append((run[0], " ".join(words[i] for i in run)))
    for i in range(len(words) - 1):
        det, noun = words[i].lower(), words[i + 1]
        if det in DETERMINERS and noun and noun.isalpha() and noun.lower() not in STOP_WORDS \
                and not capitalized(noun):
            found.append((i, f"{words[i]} {noun}"))
    found.sort(key=lambda t: t[0])

    out, seen = [], set()
    for _, cand in found:
        key = cand.lower()
        if key in seen or key in STOP_WORDS:
            continue
        seen.add(key)
        out.append(cand)
        if len(out) == max_answers:
            break
    return out


@dataclass
class QagsComponents:
    """Pluggable QAGS stages.

    ``question_generator(summary, answer, n, beam)`` returns up to ``n``
    questions; ``question_answerer(question, context)`` returns answer
    text, with "" meaning no answer.
    """

    answer_extractor: Callable[[str], list[str]]
    question_generator: Callable[[str, str, int, int], list[str]]
    question_answerer: Callable[[str, str], str]
    max_answers: int = 10
    questions_per_answer: int = 3
    qg_beam: int = 10

    def __post_init__(self):
        if min(self.max_answers, self.questions_per_answer, self.qg_beam) < 1:
            raise InvalidConfig("QAGS limits must be positive")


@dataclass(frozen=True)
class QagsResult:
    score: float | None
    questions: tuple = field(default=())

    @property
    def unscorable(self) -> bool:
        return self.score is None

    def to_record(self, id: str) -> dict:
        return {
            "id": id,
            "qags": self.score,
            "unscorable": self.unscorable,
            "pairs": [
                {"q": q, "a": a, "ll_summ": None, "ll_doc": None, "a_summ": a_s, "a_doc": a_d, "f1": f1}
                for q, a, a_s, a_d, f1 in self.questions
            ],
        }


def _stage(name, fn, *args):
    try:
        return fn(*args)
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError(name, exc) from exc


def qags_score(document: str, summary: str, components: QagsComponents) -> QagsResult:
    """Mean token F1 between answers found in the summary and in the document."""
    answers = _stage("answer extraction", components.answer_extractor, summary)
    answers = list(answers)[: components.max_answers]
    rows = []
    for answer in answers:
        questions = _stage("question generation", components.question_generator, summary, answer,
                           components.questions_per_answer, components.qg_beam)
        for q in list(questions)[: components.questions_per_answer]:
            a_summ = _stage("question answering", components.question_answerer, q, summary)
            a_doc = _stage("question answering", components.question_answerer, q, document)
            rows.append((q, answer, a_summ, a_doc, token_f1(a_summ, a_doc)))
    if not rows:
        return QagsResult(None, ())
    return QagsResult(sum(r[-1] for r in rows) / len(rows), tuple(rows))


# -- model-backed components ---------------------------------------------------

def model_question_generator(model: SeqModel, max_len: int = 20):
    """Question generator backed by a QAGen-format model.

    Beam-decodes ``q <a> a`` sequences from the summary and keeps the
    distinct questions whose generated answer matches the requested one.
    """
    vocab = model.vocab

    def generate_questions(summary: str, answer: str, n: int, beam: int) -> list[str]:
        cfg = GenerationConfig(mode="beam", beam_width=beam, max_len=max_len)
        target = normalize_text(answer)
        out, seen = [], set()
        for seq in generate(model, vocab.encode(summary), cfg):
            try:
                q, a = parse_qa(seq.sequence, vocab)
            except MalformedPair:
                continue
            if normalize_text(a.text) != target or q.text in seen:
                continue
            seen.add(q.text)
            out.append(q.text)
            if len(out) == n:
                break
        return out

    return generate_questions


def model_question_answerer(model: SeqModel, max_len: int = 20):
    """Answer by force-feeding ``question <a>`` and decoding greedily."""
    vocab = model.vocab

    def answer(question: str, context: str) -> str:
        forced = vocab.encode(question).ids + (vocab.sep,)
        out = greedy_decode(model, vocab.encode(context), 0, max(max_len, len(forced)), forced_prefix=forced)
        return vocab.decode(out.ids[len(forced):])

    return answer


def vocabulary_extractor(answer_tokens: Iterable[str], max_answers: int = 10):
    """Answer extractor that keeps tokens from a fixed set (for synthetic corpora)."""
    allowed = frozenset(answer_tokens)

    def extract(text: str) -> list[str]:
        out = []
        for w in text.split():
            if w in allowed and w not in out and w.lower() not in STOP_WORDS:
                out.append(w)
        return out[:max_answers]

    return extract


def model_components(model: SeqModel, extractor=None, max_len: int = 20, **limits) -> QagsComponents:
    return QagsComponents(
        answer_extractor=extractor or extract_answers,
        question_generator=model_question_generator(model, max_len),
        question_answerer=model_question_answerer(model, max_len),
        **limits,
    )

