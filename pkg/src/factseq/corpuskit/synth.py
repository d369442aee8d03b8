"""Synthetic fact corpora with controlled summary corruption.

A document is a list of facts ``[fillers] <relation> [not] <value> .``;
its reference summary restates the leading facts without fillers. At the
corruption rate one summary fact is altered so the summary asserts
something the document does not support:

* ``entity-swap`` replaces an entity with one that never occurs in the
  document, preferring a small per-relation set of recurring substitutes
  so that a model trained on the corpus memorizes them;
* ``number-perturb`` does the same for number values;
* ``negation-flip`` inserts or removes ``not``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from factseq.corpuskit.corpus import CorpusExample
from factseq.errors import InvalidSpec
from factseq.seqmodel import ExtractiveQAGen, Vocabulary

KINDS = ("entity-swap", "number-perturb", "negation-flip")
QUESTION_WORD = "what"
BOUNDARY = "."
NEGATION = "not"


@dataclass(frozen=True)
class CorruptionSpec:
    relations: int = 8
    entities: int = 40
    numbers: int = 12
    fillers: int = 10
    doc_facts: tuple[int, int] = (3, 5)
    summary_facts: tuple[int, int] = (1, 1)
    max_fillers: int = 2
    number_relation_share: float = 0.25
    negation_rate: float = 0.1
    rate: float = 0.3
    kinds: tuple[str, ...] = ("entity-swap", "number-perturb")
    hotspots: int = 1
    seed: int = 0

    @classmethod
    def from_dict(cls, data: dict) -> "CorruptionSpec":
        data = dict(data)
        for key in ("doc_facts", "summary_facts", "kinds"):
            if key in data:
                data[key] = tuple(data[key])
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise InvalidSpec(f"unknown corruption spec keys {sorted(unknown)}")
        return cls(**data).validate()

    def to_dict(self) -> dict:
        d = asdict(self)
        d["doc_facts"] = list(self.doc_facts)
        d["summary_facts"] = list(self.summary_facts)
        d["kinds"] = list(self.kinds)
        return d

    def validate(self) -> "CorruptionSpec":
        if not 0.0 <= self.rate <= 1.0:
            raise InvalidSpec("rate must lie in [0, 1]")
        if min(self.relations, self.entities, self.numbers) < 1:
            raise InvalidSpec("relation, entity and number pools must be non-empty")
        lo, hi = self.doc_facts
        slo, shi = self.summary_facts
        if not (1 <= lo <= hi and 1 <= slo <= shi):
            raise InvalidSpec("fact ranges must be positive and ordered")
        if shi > lo:
            raise InvalidSpec("summaries cannot have more facts than the shortest document")
        if hi > self.relations:
            raise InvalidSpec("documents use distinct relations; need relations >= max doc facts")
        bad = set(self.kinds) - set(KINDS)
        if bad or not self.kinds:
            raise InvalidSpec(f"corruption kinds must be a non-empty subset of {KINDS}")
        if "entity-swap" in self.kinds and self.entities <= hi:
            raise InvalidSpec("entity pool too small to swap in an entity absent from the document")
        if "number-perturb" in self.kinds and self.numbers <= hi:
            raise InvalidSpec("number pool too small to perturb to a number absent from the document")
        if self.hotspots < 1:
            raise InvalidSpec("hotspots must be positive")
        return self

    # token inventories
    @property
    def relation_tokens(self):
        return [f"r{i}" for i in range(self.relations)]

    @property
    def entity_tokens(self):
        return [f"e{i}" for i in range(self.entities)]

    @property
    def number_tokens(self):
        return [f"n{i}" for i in range(self.numbers)]

    @property
    def filler_tokens(self):
        return [f"w{i}" for i in range(self.fillers)]

    @property
    def value_tokens(self):
        return self.entity_tokens + self.number_tokens + [NEGATION]

    def number_relations(self) -> set[str]:
        n = int(round(self.relations * self.number_relation_share))
        return set(self.relation_tokens[self.relations - n:]) if n else set()


def build_vocabulary(spec: CorruptionSpec) -> Vocabulary:
    words = (spec.relation_tokens + spec.entity_tokens + spec.number_tokens + spec.filler_tokens
             + [NEGATION, BOUNDARY, QUESTION_WORD])
    return Vocabulary(words)


def build_qagen(spec: CorruptionSpec, vocab: Vocabulary | None = None, **kw) -> ExtractiveQAGen:
    """The extractive toy QAGen matched to a spec's token inventory."""
    vocab = vocab or build_vocabulary(spec)
    return ExtractiveQAGen(vocab, QUESTION_WORD, spec.relation_tokens, spec.value_tokens, BOUNDARY, **kw)


@dataclass
class _Fact:
    relation: str
    value: str
    negated: bool = False
    fillers: list = field(default_factory=list)

    def text(self, with_fillers: bool) -> str:
        parts = list(self.fillers) if with_fillers else []
        parts.append(self.relation)
        if self.negated:
            parts.append(NEGATION)
        parts += [self.value, BOUNDARY]
        return " ".join(parts)


def _hotspot_table(spec: CorruptionSpec, rng: np.random.Generator) -> dict[str, list[str]]:
    numeric = spec.number_relations()
    table = {}
    for r in spec.relation_tokens:
        pool = spec.number_tokens if r in numeric else spec.entity_tokens
        k = min(spec.hotspots, len(pool))
        table[r] = [pool[i] for i in rng.choice(len(pool), size=k, replace=False)]
    return table


def generate_corpus(spec: CorruptionSpec, n: int, id_prefix: str = "ex"):
    """Return ``(clean, corrupted, labels)`` for ``n`` examples; a pure function of ``spec``."""
    spec.validate()
    if n < 1:
        raise InvalidSpec("n must be at least 1")
    rng = np.random.default_rng(spec.seed)
    hotspots = _hotspot_table(spec, rng)
    numeric = spec.number_relations()
    width = len(str(n - 1))
    clean, corrupted, labels = [], [], []
    for idx in range(n):
        ex_id = f"{id_prefix}{idx:0{width}d}"
        m = int(rng.integers(spec.doc_facts[0], spec.doc_facts[1] + 1))
        rels = [spec.relation_tokens[i] for i in rng.choice(spec.relations, size=m, replace=False)]
        n_ent = sum(r not in numeric for r in rels)
        ents = iter(rng.choice(spec.entity_tokens, size=n_ent, replace=False).tolist())
        n_num = m - n_ent
        nums = iter(rng.choice(spec.number_tokens, size=n_num, replace=n_num > spec.numbers).tolist())
        facts = []
        for r in rels:
            value = next(nums) if r in numeric else next(ents)
            negated = bool(rng.random() < spec.negation_rate)
            fillers = [spec.filler_tokens[i] for i in
                       rng.integers(0, spec.fillers, size=int(rng.integers(0, spec.max_fillers + 1)))] \
                if spec.fillers else []
            facts.append(_Fact(r, value, negated, fillers))
        s = int(rng.integers(spec.summary_facts[0], spec.summary_facts[1] + 1))
        document = " ".join(f.text(True) for f in facts)
        summary_facts = [_Fact(f.relation, f.value, f.negated) for f in facts[:s]]
        summary = " ".join(f.text(False) for f in summary_facts)
        clean.append(CorpusExample(ex_id, document, summary))

        label = {"id": ex_id, "corrupted": False, "kind": None}
        if rng.random() < spec.rate:
            label = _corrupt(spec, rng, summary_facts, facts, hotspots, numeric, ex_id)
        corrupted.append(CorpusExample(ex_id, document, " ".join(f.text(False) for f in summary_facts)))
        labels.append(label)
    return clean, corrupted, labels


def _corrupt(spec, rng, summary_facts, doc_facts, hotspots, numeric, ex_id) -> dict:
    doc_values = {f.value for f in doc_facts}
    options = []
    for i, f in enumerate(summary_facts):
        for kind in spec.kinds:
            if kind == "entity-swap" and f.relation not in numeric:
                options.append((i, kind))
            elif kind == "number-perturb" and f.relation in numeric:
                options.append((i, kind))
            elif kind == "negation-flip":
                options.append((i, kind))
    if not options:
        return {"id": ex_id, "corrupted": False, "kind": None}
    i, kind = options[int(rng.integers(len(options)))]
    fact = summary_facts[i]
    original = fact.value
    if kind == "negation-flip":
        fact.negated = not fact.negated
        return {"id": ex_id, "corrupted": True, "kind": kind, "fact": i,
                "original": original, "replacement": original, "negated": fact.negated}
    pool = spec.number_tokens if kind == "number-perturb" else spec.entity_tokens
    preferred = [v for v in hotspots[fact.relation] if v not in doc_values]
    if preferred:
        fact.value = preferred[int(rng.integers(len(preferred)))]
    else:
        absent = [v for v in pool if v not in doc_values]
        if not absent:
            raise InvalidSpec("no absent value available for corruption")
        fact.value = absent[int(rng.integers(len(absent)))]
    return {"id": ex_id, "corrupted": True, "kind": kind, "fact": i,
            "original": original, "replacement": fact.value}
