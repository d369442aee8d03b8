import math

import numpy as np
import pytest

from factseq.corpuskit import CorruptionSpec, build_qagen, build_vocabulary, generate_corpus
from factseq.seqmodel import Vocabulary


@pytest.fixture
def vocab4():
    """Four ordinary words plus the specials."""
    return Vocabulary(["a", "b", "c", "d"])


@pytest.fixture
def qa_vocab():
    return Vocabulary(["what", "city", "?", "paris", "london", "is", "k1", "k2", "v1", "v2"])


@pytest.fixture(scope="session")
def small_spec():
    return CorruptionSpec(rate=0.3, seed=3)


@pytest.fixture(scope="session")
def small_world(small_spec):
    vocab = build_vocabulary(small_spec)
    qagen = build_qagen(small_spec, vocab)
    clean, corrupted, labels = generate_corpus(small_spec, 60)
    return {"spec": small_spec, "vocab": vocab, "qagen": qagen,
            "clean": clean, "corrupted": corrupted, "labels": labels}


def rel_err(a, b):
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b), 1e-30))


def ln(x):
    return math.log(x)


# acceptance verdicts, echoed in the terminal summary so they show without -s
VERDICTS = []


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(VERDICTS, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
