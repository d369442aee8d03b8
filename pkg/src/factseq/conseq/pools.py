"""Positive/negative pool construction and their per-document intersection."""
from __future__ import annotations

import logging
import math
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from factseq.conseq.config import ConseqConfig
from factseq.conseq.rewards import RewardFunction, reward_key
from factseq.corpuskit.corpus import CorpusExample, read_jsonl, write_jsonl
from factseq.errors import FormatError, InvalidInput
from factseq.seqmodel import GenerationConfig, SeqModel, TokenSequence, Vocabulary, generate

log = logging.getLogger(__name__)

GROUND_TRUTH = "ground-truth"
SAMPLED = "sampled"


@dataclass(frozen=True)
class TrainingExample:
    doc_id: str
    source: TokenSequence
    document: str
    reference: str
    target: TokenSequence


def training_examples(corpus: list[CorpusExample], vocab: Vocabulary) -> list[TrainingExample]:
    return [TrainingExample(ex.id, vocab.encode(ex.document), ex.document, ex.summary,
                            vocab.encode(ex.summary)) for ex in corpus]


@dataclass(frozen=True)
class ScoredSummary:
    doc_id: str
    summary: TokenSequence
    origin: str
    reward: float | None
    seed: int | None = None

    @property
    def unscorable(self) -> bool:
        return self.reward is None

    @property
    def text(self) -> str:
        return self.summary.text


@dataclass(frozen=True)
class ContrastivePair:
    doc_id: str
    input: TokenSequence
    positive: ScoredSummary
    negative: ScoredSummary
    w_pos: float = 1.0
    w_neg: float = 0.0

    @property
    def ordered(self) -> bool:
        """True unless both rewards are real and the negative outscores the positive."""
        rp, rn = self.positive.reward, self.negative.reward
        return rp is None or rn is None or rp >= rn

    def to_record(self) -> dict:
        return {"doc_id": self.doc_id, "positive": self.positive.text, "negative": self.negative.text,
                "r_pos": self.positive.reward, "r_neg": self.negative.reward}


def pool_size(p: float, n: int) -> int:
    """ceil(p% of n), computed exactly."""
    if not 0 < p <= 100:
        raise InvalidInput("p must lie in (0, 100]")
    return math.ceil(Fraction(p) * n / 100)


def build_positive_pool(ground_truth: list[ScoredSummary], p: float) -> list[ScoredSummary]:
    """Top ceil(p%) summaries by reward (desc), ties by doc_id; unscorable rank last."""
    if not ground_truth:
        raise InvalidInput("no ground-truth summaries")
    ranked = sorted(ground_truth, key=lambda s: (_neg_key(s.reward), s.doc_id))
    return ranked[: pool_size(p, len(ranked))]


def _neg_key(r):
    kind, val = reward_key(r)
    return (-kind, -val)


def sample_seed(seed: int, doc_id: str, iteration: int = 0) -> int:
    ss = np.random.SeedSequence([seed & 0xFFFFFFFF, zlib.crc32(doc_id.encode()), iteration])
    return int(ss.generate_state(1)[0])


def sample_candidates(model: SeqModel, example: TrainingExample, reward: RewardFunction,
                      config: ConseqConfig, iteration: int = 0) -> list[ScoredSummary]:
    """Draw ``negatives_per_doc`` top-k samples for one document and score them."""
    seed = sample_seed(config.seed, example.doc_id, iteration)
    gen = GenerationConfig(mode="topk-sample", k=min(config.k, len(model.vocab)),
                           num_samples=config.negatives_per_doc, min_len=config.min_len,
                           max_len=config.max_len, seed=seed)
    out = []
    for s in generate(model, example.source, gen):
        ids = s.ids[:-1] if s.ids and s.ids[-1] == model.vocab.eos else s.ids
        text = model.vocab.decode(ids)
        out.append(ScoredSummary(example.doc_id, TokenSequence(ids, text), SAMPLED,
                                 reward(example.document, text, example.reference), seed))
    return out


def lowest_reward(candidates: list[ScoredSummary]) -> ScoredSummary:
    """Minimum-reward candidate; unscorable counts as lowest, ties keep sample order."""
    return min(enumerate(candidates), key=lambda t: (reward_key(t[1].reward), t[0]))[1]


def sample_negative_pool(model: SeqModel, examples: list[TrainingExample], reward: RewardFunction,
                         config: ConseqConfig, iteration: int = 0,
                         stats: dict | None = None) -> list[ScoredSummary]:
    """Per-document minimum over sampled candidates, then the bottom ceil(p%) of those minima.

    Documents whose generation fails are skipped and counted in
    ``stats["skipped"]`` when a dict is supplied.
    """

    def one(ex):
        try:
            cands = sample_candidates(model, ex, reward, config, iteration)
        except Exception:
            log.exception("sampling failed for %s; document skipped", ex.doc_id)
            return ex.doc_id, None
        return ex.doc_id, cands

    if config.workers > 1:
        with ThreadPoolExecutor(config.workers) as pool:
            results = list(pool.map(one, examples))
    else:
        results = [one(ex) for ex in examples]

    minima, skipped, sampled = [], 0, []
    for _, cands in results:
        if not cands:
            skipped += 1
            continue
        sampled.extend(cands)
        minima.append(lowest_reward(cands))
    if stats is not None:
        stats["skipped"] = skipped
        stats["candidates"] = sampled
    if not minima:
        return []
    ranked = sorted(minima, key=lambda s: (reward_key(s.reward), s.doc_id))
    return ranked[: pool_size(config.p, len(ranked))]


def intersect_pools(positives: list[ScoredSummary], negatives: list[ScoredSummary],
                    sources: dict[str, TokenSequence] | None = None) -> list[ContrastivePair]:
    """One pair per document present in both pools, in positive-pool order."""
    neg_by_doc = {}
    for s in negatives:
        neg_by_doc.setdefault(s.doc_id, s)
    pairs = []
    for s in positives:
        if s.doc_id in neg_by_doc:
            src = sources[s.doc_id] if sources else TokenSequence(())
            pairs.append(ContrastivePair(s.doc_id, src, s, neg_by_doc.pop(s.doc_id)))
    if not pairs:
        log.warning("positive and negative pools share no documents")
    inverted = sum(not p.ordered for p in pairs)
    if inverted:
        log.info("%d pairs have a negative scoring above its positive", inverted)
    return pairs


def score_ground_truth(examples: list[TrainingExample], reward: RewardFunction,
                       workers: int = 1) -> list[ScoredSummary]:
    def one(ex):
        return ScoredSummary(ex.doc_id, ex.target, GROUND_TRUTH, reward(ex.document, ex.reference, ex.reference))

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(one, examples))
    return [one(ex) for ex in examples]


def write_pool_file(pairs: list[ContrastivePair], path) -> None:
    write_jsonl((p.to_record() for p in pairs), path)


def read_pool_file(path) -> list[dict]:
    recs = read_jsonl(path)
    for n, rec in enumerate(recs, 1):
        missing = {"doc_id", "positive", "negative", "r_pos", "r_neg"} - set(rec)
        if missing:
            raise FormatError(f"pool record missing {sorted(missing)}", n)
    return recs


def sampled_rewards(model: SeqModel, examples: list[TrainingExample], reward: RewardFunction,
                    config: ConseqConfig, iteration: int = 0) -> list[float | None]:
    """Per-document mean reward of seeded top-k samples; None when every sample is unscorable.

    Seeds depend only on (config.seed, doc_id, iteration), so two models
    evaluated with the same arguments see paired random streams.
    """
    out = []
    for ex in examples:
        vals = [c.reward for c in sample_candidates(model, ex, reward, config, iteration)
                if c.reward is not None]
        out.append(float(np.mean(vals)) if vals else None)
    return out
