import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from factseq.errors import InvalidConfig, PipelineError
from factseq.qagsref import (
    QagsComponents,
    extract_answers,
    model_components,
    qags_score,
    token_f1,
    vocabulary_extractor,
)

import oracles


# -- token_f1 -------------------------------------------------------------------

@pytest.mark.parametrize("a,b,want", [
    ("the cat sat", "the cat sat", 1.0),
    ("alpha beta", "gamma delta", 0.0),
    ("the cat", "the cat sat", 0.8),
    ("", "", 1.0),
    ("", "x", 0.0),
    ("The Cat", "the cat", 1.0),
])
def test_token_f1_examples(a, b, want):
    assert token_f1(a, b) == pytest.approx(want, abs=1e-12)


_text = st.lists(st.sampled_from(["a", "b", "c", "A", "dd"]), max_size=6).map(" ".join)


@settings(max_examples=200, deadline=None)
@given(a=_text, b=_text)
def test_token_f1_properties(a, b):
    f = token_f1(a, b)
    assert f == token_f1(b, a)
    assert 0.0 <= f <= 1.0
    assert f == pytest.approx(oracles.f1(a, b), abs=1e-12)
    if a.split():
        assert token_f1(a, a) == 1.0


# -- answer extraction ---------------------------------------------------------------

def test_extract_capitalized_spans():
    out = extract_answers("Wladimir Klitschko fights Anthony Joshua in London")
    for name in ("Wladimir Klitschko", "Anthony Joshua", "London"):
        assert name in out


def test_extract_stop_words_only():
    assert extract_answers("it was who they saw") == []


def test_extract_cap_keeps_first_ten():
    names = [f"Name{c}" for c in "ABCDEFGHIJKLMNO"]
    text = " and ".join(names)
    assert extract_answers(text) == names[:10]


def test_extract_numbers_and_determiner_chunks():
    out = extract_answers("flight 4U9525 hit the mountain in 2015")
    assert "4U9525" in out and "the mountain" in out and "2015" in out


@settings(max_examples=100, deadline=None)
@given(words=st.lists(st.sampled_from(["The", "cat", "Bob", "42", "it", "a", "dog", "Rome"]), max_size=30),
       cap=st.integers(1, 12))
def test_extract_never_exceeds_cap(words, cap):
    out = extract_answers(" ".join(words), max_answers=cap)
    assert len(out) <= cap
    assert len({o.lower() for o in out}) == len(out)


# -- qags_score ---------------------------------------------------------------------

def _lookup_components(answers, doc_answer):
    """QA reads the answer straight out of a dict keyed by context."""
    def qg(summary, answer, n, beam):
        return [f"q-{answer}"]

    def qa(question, context):
        key = question[2:]
        return answers.get((context, key), "")

    return QagsComponents(lambda s: list(doc_answer), qg, qa)


def test_identical_contexts_score_one():
    comps = _lookup_components({("s", "x"): "x", ("s", "y"): "y"}, ["x", "y"])
    assert qags_score("s", "s", comps).score == 1.0


def test_half_matching_questions():
    answers = {("summ", "x"): "paris", ("doc", "x"): "paris",
               ("summ", "y"): "london", ("doc", "y"): "rome"}
    res = qags_score("doc", "summ", _lookup_components(answers, ["x", "y"]))
    assert res.score == pytest.approx(0.5, abs=1e-12)
    assert len(res.questions) == 2


def test_nothing_extracted_is_unscorable():
    res = qags_score("doc", "summ", _lookup_components({}, []))
    assert res.unscorable and res.to_record("e")["qags"] is None


def test_failing_stage_is_named():
    def boom(*_):
        raise RuntimeError("offline")

    comps = QagsComponents(lambda s: ["x"], boom, lambda q, c: "")
    with pytest.raises(PipelineError) as err:
        qags_score("d", "s", comps)
    assert err.value.stage == "question generation"


def test_limits_validated_and_defaults():
    comps = QagsComponents(lambda s: [], lambda *a: [], lambda q, c: "")
    assert (comps.max_answers, comps.questions_per_answer, comps.qg_beam) == (10, 3, 10)
    with pytest.raises(InvalidConfig):
        QagsComponents(lambda s: [], lambda *a: [], lambda q, c: "", max_answers=0)


def test_questions_per_answer_cap():
    comps = QagsComponents(lambda s: ["x"], lambda s, a, n, b: [f"q{i}" for i in range(9)],
                           lambda q, c: "x", questions_per_answer=3)
    assert len(qags_score("d", "s", comps).questions) == 3


def test_model_backed_pipeline_on_synthetic(small_world):
    q = small_world["qagen"]
    comps = model_components(q, vocabulary_extractor(q.config()["values"]))
    ex = small_world["clean"][0]
    assert qags_score(ex.summary, ex.summary, comps).score == 1.0
    res = qags_score(ex.document, ex.summary, comps)
    assert res.score is not None and 0.0 <= res.score <= 1.0
