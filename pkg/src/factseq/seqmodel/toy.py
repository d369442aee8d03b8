"""Deterministic toy backends used for exact oracles and desk-scale runs."""
from __future__ import annotations

from collections import Counter
from typing import Iterable, Mapping

import numpy as np

from factseq.errors import InvalidInput
from factseq.seqmodel.base import SeqModel
from factseq.seqmodel.vocab import Vocabulary

NEG_INF = float("-inf")


def _log(p: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(p)


def emittable_ids(vocab: Vocabulary) -> list[int]:
    """Ids a decoder may produce: everything except bos and padding."""
    return [i for i in range(len(vocab)) if i not in (vocab.bos, vocab.pad)]


class UniformModel(SeqModel):
    """Uniform next-token distribution over ``support`` (default: emittable ids)."""

    def __init__(self, vocab: Vocabulary, support: Iterable[int] | None = None):
        self.vocab = vocab
        support = sorted(set(emittable_ids(vocab) if support is None else support))
        if not support:
            raise InvalidInput("empty support")
        p = np.zeros(len(vocab))
        p[support] = 1.0 / len(support)
        self._logp = _log(p)
        self._logp.setflags(write=False)

    def next_logprobs(self, input_ids, prefix):
        return self._logp


class DeterministicModel(SeqModel):
    """Puts probability one on a single next token.

    ``rule`` is either a mapping from input-id tuples to the continuation
    the model emits for that input (key ``None`` is the fallback), or a
    callable ``(input_ids, prefix) -> token id``. Once the prefix leaves
    the continuation the model emits end-of-sequence.
    """

    def __init__(self, vocab: Vocabulary, rule):
        self.vocab = vocab
        self._rule = rule

    def _next(self, input_ids, prefix) -> int:
        if callable(self._rule):
            return int(self._rule(tuple(input_ids), tuple(prefix)))
        cont = self._rule.get(tuple(input_ids), self._rule.get(None, ()))
        cont = tuple(cont)
        n = len(prefix)
        if n < len(cont) and tuple(prefix) == cont[:n]:
            return cont[n]
        return self.vocab.eos

    def next_logprobs(self, input_ids, prefix):
        out = np.full(len(self.vocab), NEG_INF)
        out[self._next(input_ids, prefix)] = 0.0
        return out


class TableModel(SeqModel):
    """Explicit conditional tables.

    ``table`` maps ``(input_ids, prefix)`` or bare ``prefix`` tuples to a
    probability vector or a ``{token_id: prob}`` dict. Lookup tries the
    input-specific key first, then the input-free key, then ``default``
    (uniform over emittable ids when not given).
    """

    def __init__(self, vocab: Vocabulary, table: Mapping | None = None, default=None):
        self.vocab = vocab
        self.table = {}
        for key, dist in (table or {}).items():
            self.table[key] = self._as_logprobs(dist)
        if default is None:
            default = {i: 1.0 for i in emittable_ids(vocab)}
        self.default = self._as_logprobs(default)

    def _as_logprobs(self, dist) -> np.ndarray:
        v = len(self.vocab)
        if isinstance(dist, Mapping):
            p = np.zeros(v)
            for tok, prob in dist.items():
                self.vocab.check_id(tok)
                p[tok] = prob
        else:
            p = np.asarray(dist, dtype=np.float64)
            if p.shape != (v,):
                raise InvalidInput(f"distribution must have length {v}")
        if (p < 0).any() or p.sum() <= 0:
            raise InvalidInput("distribution must be non-negative with positive mass")
        p = p / p.sum()
        lp = _log(p)
        lp.setflags(write=False)
        return lp

    def lookup(self, input_ids, prefix):
        key = (tuple(input_ids), tuple(prefix))
        if key in self.table:
            return self.table[key]
        if tuple(prefix) in self.table:
            return self.table[tuple(prefix)]
        return None

    def next_logprobs(self, input_ids, prefix):
        lp = self.lookup(input_ids, prefix)
        return self.default if lp is None else lp


class RandomTableModel(TableModel):
    """Table model whose rows are drawn on first use from a keyed seed.

    Each row depends only on ``(seed, input, prefix)``, never on query
    order, so two instances with the same seed are the same model.
    ``alpha`` is the Dirichlet concentration; small values give peaked rows.
    """

    def __init__(self, vocab: Vocabulary, seed: int = 0, alpha: float = 0.5,
                 condition_on_input: bool = True, eos_bias: float = 0.0, support=None):
        super().__init__(vocab)
        self.seed = seed
        self.alpha = alpha
        self.condition_on_input = condition_on_input
        self.eos_bias = eos_bias
        self.support = sorted(emittable_ids(vocab) if support is None else support)

    def next_logprobs(self, input_ids, prefix):
        lp = self.lookup(input_ids, prefix)
        if lp is not None:
            return lp
        inp = tuple(input_ids) if self.condition_on_input else ()
        key = (inp, tuple(prefix))
        words = [self.seed, len(inp), *inp, len(prefix), *prefix]
        rng = np.random.default_rng(np.random.SeedSequence([w & 0xFFFFFFFF for w in words]))
        p = np.zeros(len(self.vocab))
        p[self.support] = rng.dirichlet(np.full(len(self.support), self.alpha))
        if self.eos_bias and self.vocab.eos in self.support:
            p[self.vocab.eos] += self.eos_bias * len(prefix)
        # Dirichlet draws can underflow to exact zeros; keep every row strictly positive.
        p[self.support] += 1e-12
        self.table[key] = lp = self._as_logprobs(p)
        return lp


class ExtractiveQAGen(SeqModel):
    """Rule-based joint question-answer generator over a fact-style context.

    Emits ``<qword> <key> <a> <value tokens> </s>``. The key is drawn in
    proportion to how often each key token appears in the context; value
    tokens are copied from what follows ``key`` in the context, mixed with
    a "any value present in the context" component and a uniform floor.
    A final ``smoothing`` share is spread over every emittable id so all
    log-probabilities stay finite.
    """

    def __init__(self, vocab: Vocabulary, question_word: str, keys: Iterable[str],
                 values: Iterable[str], boundary: str = ".", copy_weight: float = 0.8,
                 present_weight: float = 0.15, smoothing: float = 1e-3, max_answer_len: int = 4):
        self.vocab = vocab
        self.qword = vocab.id(question_word)
        self.keys = sorted({vocab.id(k) for k in keys})
        self.values = sorted({vocab.id(v) for v in values})
        self.boundary = vocab.id(boundary)
        if not (0 <= copy_weight and 0 <= present_weight and copy_weight + present_weight < 1):
            raise InvalidInput("copy_weight + present_weight must be below 1")
        self.copy_weight = copy_weight
        self.present_weight = present_weight
        self.smoothing = smoothing
        self.max_answer_len = max_answer_len
        self._emit = emittable_ids(vocab)
        self._key_set = set(self.keys)
        self._value_set = set(self.values)

    def config(self) -> dict:
        t = self.vocab.tokens
        return {
            "question_word": t[self.qword],
            "keys": [t[i] for i in self.keys],
            "values": [t[i] for i in self.values],
            "boundary": t[self.boundary],
            "copy_weight": self.copy_weight,
            "present_weight": self.present_weight,
            "smoothing": self.smoothing,
            "max_answer_len": self.max_answer_len,
        }

    def _one_hot(self, i):
        p = np.zeros(len(self.vocab))
        p[i] = 1.0
        return p

    def _spread(self, ids):
        p = np.zeros(len(self.vocab))
        ids = list(ids)
        if ids:
            np.add.at(p, ids, 1.0 / len(ids))
        return p

    def _rule(self, ctx, prefix) -> np.ndarray:
        vocab = self.vocab
        n = len(prefix)
        if n == 0:
            return self._one_hot(self.qword)
        if prefix[0] != self.qword:
            return self._one_hot(vocab.eos)
        if n == 1:
            counts = Counter(t for t in ctx if t in self._key_set)
            if not counts:
                return self._spread(self.keys)
            p = np.zeros(len(vocab))
            total = sum(counts.values())
            for k, c in counts.items():
                p[k] = c / total
            return p
        if prefix[1] not in self._key_set:
            return self._one_hot(vocab.eos)
        if n == 2:
            return self._one_hot(vocab.sep)
        if prefix[2] != vocab.sep:
            return self._one_hot(vocab.eos)
        answer = tuple(prefix[3:])
        if len(answer) >= self.max_answer_len:
            return self._one_hot(vocab.eos)
        run = (prefix[1],) + answer
        follow = []
        for i in range(len(ctx) - len(run) + 1):
            if tuple(ctx[i:i + len(run)]) == run:
                j = i + len(run)
                nxt = ctx[j] if j < len(ctx) else None
                if nxt is None or nxt == self.boundary or nxt in self._key_set:
                    follow.append(vocab.eos)
                else:
                    follow.append(nxt)
        present = sorted({t for t in ctx if t in self._value_set})
        floor = list(self.values)
        if answer:
            present.append(vocab.eos)
            floor.append(vocab.eos)
        a, b = self.copy_weight, self.present_weight
        c = 1.0 - a - b
        if not follow:
            a = 0.0
        if not present:
            b = 0.0
        p = a * self._spread(follow) + b * self._spread(present) + c * self._spread(floor)
        return p / p.sum()

    def next_logprobs(self, input_ids, prefix):
        rule = self._rule(tuple(input_ids), tuple(prefix))
        p = (1.0 - self.smoothing) * rule + self.smoothing * self._spread(self._emit)
        return _log(p)


def uniform_over_words(vocab: Vocabulary) -> UniformModel:
    return UniformModel(vocab, [vocab.id(w) for w in vocab.words])
