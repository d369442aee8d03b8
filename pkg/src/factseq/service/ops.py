"""File-level operations behind the HTTP endpoints.

Each function reads its inputs from disk, runs the core library and
writes its outputs, returning a JSON-ready summary.
"""
from __future__ import annotations

import json
import logging
from pathlib import Path

import numpy as np

from factseq.checkpoint import checkpoint_path, load_model, save_model
from factseq.conseq import (
    ScoredSummary,
    conseq_train,
    quals_f1_reward,
    quals_reward,
    rouge_sum_reward,
    training_examples,
    write_pool_file,
)
from factseq.conseq.pools import GROUND_TRUTH
from factseq.conseq.train import build_pairs
from factseq.corpuskit import CorruptionSpec, build_qagen, generate_corpus, read_corpus, write_corpus
from factseq.corpuskit.config import ToolkitConfig
from factseq.corpuskit.corpus import read_jsonl, write_jsonl
from factseq.errors import InvalidConfig, InvalidInput
from factseq.evalharness import bin_correlation, rouge
from factseq.qagsref import model_components, qags_score, vocabulary_extractor
from factseq.quals import quals_batch
from factseq.seqmodel import ExtractiveQAGen, GenerationConfig, TokenSequence, generate
from factseq.seqmodel.neural import TinySeq2Seq, train_mle

log = logging.getLogger(__name__)

SCORE_KEYS = ("quals", "qags", "score")


def _mean(vals):
    vals = [v for v in vals if v is not None]
    return float(np.mean(vals)) if vals else None


def _require(path: str | None, what: str) -> str:
    if not path:
        raise InvalidConfig(f"no {what} given (flag or config paths section)")
    if not Path(path).exists():
        raise InvalidInput(f"{what} not found: {path}")
    return path


def gen_corpus(spec: dict, n: int, out: str) -> dict:
    spec = CorruptionSpec.from_dict(spec)
    clean, corrupted, labels = generate_corpus(spec, n)
    out = Path(out)
    write_corpus(clean, out / "clean.jsonl")
    write_corpus(corrupted, out / "corrupted.jsonl")
    write_jsonl(labels, out / "labels.jsonl")
    qagen = build_qagen(spec)
    (out / "vocab.json").write_text(qagen.vocab.to_json(), encoding="utf-8")
    (out / "spec.json").write_text(json.dumps(spec.to_dict(), indent=2), encoding="utf-8")
    save_model(qagen, out / "qagen.ckpt")
    return {"n": n, "corrupted": sum(lab["corrupted"] for lab in labels),
            "files": sorted(p.name for p in out.iterdir())}


def _triples(corpus, vocab):
    return [(ex.id, vocab.encode(ex.document), vocab.encode(ex.summary)) for ex in corpus]


def score_quals(corpus: str, model: str, config: ToolkitConfig, out: str) -> dict:
    examples = read_corpus(_require(corpus, "corpus"))
    qagen = load_model(_require(model, "QAGen checkpoint"))
    results = quals_batch(qagen, _triples(examples, qagen.vocab), config.quals.generation(),
                          workers=config.quals.workers)
    write_jsonl((results[ex.id].to_record(ex.id) for ex in examples), out)
    scores = [r.score for r in results.values()]
    return {"count": len(scores), "unscorable": sum(s is None for s in scores), "mean": _mean(scores), "out": out}


def qags_components(qagen):
    extractor = vocabulary_extractor(qagen.config()["values"]) if isinstance(qagen, ExtractiveQAGen) else None
    return model_components(qagen, extractor)


def score_qags(corpus: str, model: str, config: ToolkitConfig, out: str) -> dict:
    examples = read_corpus(_require(corpus, "corpus"))
    qagen = load_model(_require(model, "QAGen checkpoint"))
    comps = qags_components(qagen)
    records, scores = [], []
    for ex in examples:
        res = qags_score(ex.document, ex.summary, comps)
        scores.append(res.score)
        records.append(res.to_record(ex.id))
    write_jsonl(records, out)
    return {"count": len(scores), "unscorable": sum(s is None for s in scores), "mean": _mean(scores), "out": out}


def make_reward(name: str, config: ToolkitConfig, qagen_path: str | None = None):
    if name == "rouge-sum":
        return rouge_sum_reward()
    qagen = load_model(_require(qagen_path or config.paths.qagen, "QAGen checkpoint"))
    gen = config.quals.generation()
    if name == "quals":
        return quals_reward(qagen, gen)
    if name == "quals-f1":
        return quals_f1_reward(qagen, gen)
    raise InvalidInput(f"unknown reward {name!r}")


def _load_summarizer(path: str) -> TinySeq2Seq:
    model = load_model(_require(path, "model checkpoint"))
    if not isinstance(model, TinySeq2Seq):
        raise InvalidInput(f"{path} is not a trainable summarization model")
    return model


def read_scores(path: str, key: str | None = None) -> dict[str, float | None]:
    out = {}
    for n, rec in enumerate(read_jsonl(_require(path, "score file")), 1):
        k = key or next((c for c in SCORE_KEYS if c in rec), None)
        if "id" not in rec or k is None or k not in rec:
            raise InvalidInput(f"{path} line {n}: need 'id' and a score key {key or SCORE_KEYS}")
        out[rec["id"]] = rec[k]
    return out


def build_sets(gt_scores: str, model: str, config: ToolkitConfig, out: str, corpus: str | None = None,
               reward: str = "quals") -> dict:
    examples = read_corpus(_require(corpus or config.paths.train_corpus, "training corpus"))
    summarizer = _load_summarizer(model)
    scores = read_scores(gt_scores)
    missing = [ex.id for ex in examples if ex.id not in scores]
    if missing:
        raise InvalidInput(f"ground-truth scores missing for {len(missing)} documents, e.g. {missing[0]!r}")
    train = training_examples(examples, summarizer.vocab)
    gt = [ScoredSummary(ex.doc_id, ex.target, GROUND_TRUTH, scores[ex.doc_id]) for ex in train]
    pairs, info = build_pairs(summarizer, train, make_reward(reward, config), config.conseq.build(), 0, gt)
    write_pool_file(pairs, out)
    return {**info, "out": out}


def mle_init(examples, vocab, config: ToolkitConfig) -> tuple[TinySeq2Seq, list[float]]:
    m = config.model
    model = TinySeq2Seq(vocab, dim=m.dim, copy=m.copy_head, seed=m.seed)
    pairs = [(ex.source, TokenSequence(ex.target.ids + (vocab.eos,))) for ex in examples]
    history = train_mle(model, pairs, m.mle_epochs, lr=m.mle_lr, batch_size=m.batch_size, seed=m.seed)
    return model, history


def train(variant: str, reward: str, config: ToolkitConfig, corpus: str | None = None,
          init: str | None = None, qagen: str | None = None, run_dir: str | None = None) -> dict:
    """MLE-initialize (unless ``init`` is given), then run CONSEQ; checkpoints go to ``<run>/<step>.ckpt``."""
    run = Path(run_dir or config.paths.run_dir)
    examples = read_corpus(_require(corpus or config.paths.train_corpus, "training corpus"))
    reward_fn = make_reward(reward, config, qagen)
    init = init or config.paths.init_model
    if init:
        model = _load_summarizer(init)
        mle_history = None
    else:
        vocab = load_model(_require(qagen or config.paths.qagen, "QAGen checkpoint")).vocab
        model, mle_history = mle_init(training_examples(examples, vocab), vocab, config)
    save_model(model, checkpoint_path(run, 0))
    train_ex = training_examples(examples, model.vocab)
    trained, report = conseq_train(model, train_ex, reward_fn, config.conseq.build(variant))
    step = max(1, config.conseq.outer_iterations)
    final = save_model(trained, checkpoint_path(run, step))
    report["mle_losses"] = mle_history
    pair_records = []
    for it in report.get("iterations", []):
        pair_records = it.pop("pair_records", pair_records)
    write_jsonl(pair_records, run / "pools.jsonl")
    (run / "report.json").write_text(json.dumps(report, indent=2), encoding="utf-8")
    summary = {k: v for k, v in report.items() if k not in ("iterations", "batches", "mle_losses")}
    summary["iterations"] = [{k: v for k, v in it.items() if k != "losses"} for it in report.get("iterations", [])]
    return {"init": str(checkpoint_path(run, 0)), "model": str(final), "report": str(run / "report.json"),
            "summary": summary}


def decode_summaries(model: TinySeq2Seq, examples, config: ToolkitConfig) -> list[list[str]]:
    """Summaries per document: the top beam, or ``num_samples`` seeded top-k samples."""
    g = config.generation
    vocab = model.vocab
    out = []
    for i, ex in enumerate(examples):
        if g.mode == "beam":
            gen = GenerationConfig(mode="beam", beam_width=g.beam_width, min_len=g.min_len, max_len=g.max_len)
            seqs = generate(model, vocab.encode(ex.document), gen)[:1]
        else:
            gen = GenerationConfig(mode="topk-sample", k=min(g.k, len(vocab)), num_samples=g.num_samples,
                                   min_len=g.min_len, max_len=g.max_len, seed=g.seed + i)
            seqs = generate(model, vocab.encode(ex.document), gen)
        out.append([vocab.decode(s.ids) for s in seqs])
    return out


def evaluate(corpus: str, model: str, metrics: list[str], config: ToolkitConfig,
             qagen: str | None = None, out: str | None = None) -> dict:
    unknown = set(metrics) - {"rouge", "quals"}
    if unknown or not metrics:
        raise InvalidInput(f"metrics must be a non-empty subset of rouge,quals (got {metrics})")
    examples = read_corpus(_require(corpus, "corpus"))
    summarizer = _load_summarizer(model)
    summaries = decode_summaries(summarizer, examples, config)
    q_reward = make_reward("quals", config, qagen) if "quals" in metrics else None
    records = []
    for ex, cands in zip(examples, summaries):
        rec = {"id": ex.id, "summaries": cands}
        if "rouge" in metrics:
            rs = [rouge(c, ex.summary) for c in cands]
            for name in ("r1", "r2", "rl"):
                rec[name] = float(np.mean([getattr(r, name) for r in rs]))
        if q_reward is not None:
            rec["quals"] = _mean(q_reward(ex.document, c) if c.split() else None for c in cands)
        records.append(rec)
    if out:
        write_jsonl(records, out)
    keys = [k for k in ("r1", "r2", "rl", "quals") if k in records[0]] if records else []
    means = {k: _mean(r[k] for r in records) for k in keys}
    return {"count": len(records), "means": means, "out": out}


def correlate(a: str, b: str, bins: int, key_a: str | None = None, key_b: str | None = None,
              out_csv: str | None = None) -> dict:
    sa, sb = read_scores(a, key_a), read_scores(b, key_b)
    ids = [i for i in sa if i in sb and sa[i] is not None and sb[i] is not None]
    report = bin_correlation([sa[i] for i in ids], [sb[i] for i in ids], bins)
    if out_csv:
        report.write_csv(out_csv)
    return {**report.to_dict(), "pairs": len(ids), "dropped": len(set(sa) | set(sb)) - len(ids)}
