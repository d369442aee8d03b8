"""Offline (outer-iteration) and online CONSEQ training drivers."""
from __future__ import annotations

import copy
import logging
from dataclasses import replace

import numpy as np
import torch

from factseq.conseq.config import ConseqConfig
from factseq.conseq.losses import contrastive_loss
from factseq.conseq.pools import (
    ContrastivePair,
    TrainingExample,
    build_positive_pool,
    intersect_pools,
    sample_negative_pool,
    sampled_rewards,
    score_ground_truth,
)
from factseq.conseq.rewards import RewardFunction, RewardNormalizer
from factseq.errors import InvalidInput, NumericalError
from factseq.seqmodel.neural import TinySeq2Seq

log = logging.getLogger(__name__)


def loss_variant(variant: str) -> str:
    return {"offline": "plain", "online": "plain"}.get(variant, variant)


def _mean(values):
    vals = [v for v in values if v is not None]
    return float(np.mean(vals)) if vals else None


def build_pairs(model, examples: list[TrainingExample], reward: RewardFunction, config: ConseqConfig,
                iteration: int = 0, ground_truth=None) -> tuple[list[ContrastivePair], dict]:
    """Score ground truth, build both pools and intersect them; returns pairs plus a diagnostic dict."""
    gt = ground_truth if ground_truth is not None else score_ground_truth(examples, reward, config.workers)
    positives = build_positive_pool(gt, config.p)
    stats = {}
    negatives = sample_negative_pool(model, examples, reward, config, iteration, stats)
    sources = {ex.doc_id: ex.source for ex in examples}
    pairs = intersect_pools(positives, negatives, sources)
    # with both sides unscorable a pair says nothing about which summary is better
    informative = [p for p in pairs if not (p.positive.unscorable and p.negative.unscorable)]
    uninformative = len(pairs) - len(informative)
    pairs = informative
    if config.variant == "weighted" and pairs:
        norm = RewardNormalizer.fit([s.reward for s in gt] + [c.reward for c in stats["candidates"]])
        pairs = [replace(p, w_pos=norm(p.positive.reward), w_neg=norm(p.negative.reward)) for p in pairs]
    info = {
        "ground_truth": len(gt),
        "unscorable_ground_truth": sum(s.reward is None for s in gt),
        "positive_pool": len(positives),
        "negative_pool": len(negatives),
        "pairs": len(pairs),
        "uninformative_pairs": uninformative,
        "inverted_pairs": sum(not p.ordered for p in pairs),
        "skipped_docs": stats.get("skipped", 0),
        "mean_reward_ground_truth": _mean(s.reward for s in gt),
        "mean_reward_positive": _mean(s.reward for s in positives),
        "mean_reward_negative": _mean(s.reward for s in negatives),
        "mean_reward_sampled_before": _mean(c.reward for c in stats.get("candidates", [])),
    }
    return pairs, info


def minibatches(pairs: list[ContrastivePair], batch_size: int, rng: np.random.Generator):
    """Shuffled minibatches of whole pairs, so s+ and s- of a document always share a batch.

    Within a batch pairs are ordered by doc_id, which fixes the summation order.
    """
    order = rng.permutation(len(pairs))
    for i in range(0, len(order), batch_size):
        yield sorted((pairs[j] for j in order[i:i + batch_size]), key=lambda p: p.doc_id)


def contrastive_step(model: TinySeq2Seq, batch: list[ContrastivePair], optimizer, variant: str,
                     level: str) -> float:
    optimizer.zero_grad()
    loss = contrastive_loss(model, batch, variant, level)
    loss.backward()
    grads = [p.grad for p in model.parameters() if p.grad is not None]
    if any(not torch.isfinite(g).all() for g in grads):
        raise NumericalError("non-finite gradient", batch[0].doc_id)
    optimizer.step()
    return loss.item()


def conseq_train(model: TinySeq2Seq, examples: list[TrainingExample], reward: RewardFunction,
                 config: ConseqConfig) -> tuple[TinySeq2Seq, dict]:
    """Per outer iteration, build pairs with the current model then fit the contrastive loss.

    The input model is left untouched; a trained copy is returned with a
    report holding one entry per outer iteration.
    """
    if config.variant == "online":
        return conseq_train_online(model, examples, reward, config)
    if not examples:
        raise InvalidInput("no training examples")
    model = copy.deepcopy(model)
    variant = loss_variant(config.variant)
    rng = np.random.default_rng(config.seed)
    report = {"variant": config.variant, "reward": reward.name, "config": config.to_dict(), "iterations": []}
    for it in range(config.outer_iterations):
        pairs, info = build_pairs(model, examples, reward, config, it)
        info["iteration"] = it
        report["iterations"].append(info)
        if not pairs:
            info["aborted"] = "positive and negative pools share no documents"
            log.warning("iteration %d aborted: %s", it, info["aborted"])
            break
        opt = torch.optim.Adam(model.parameters(), lr=config.lr)
        losses = []
        for _ in range(config.epochs):
            for batch in minibatches(pairs, config.batch_size, rng):
                losses.append(contrastive_step(model, batch, opt, variant, config.negative_level))
        info["losses"] = losses
        info["aborted"] = None
        after = sampled_rewards(model, examples, reward, config, it)
        info["mean_reward_sampled_after"] = _mean(after)
        info["pair_records"] = [p.to_record() for p in pairs]
        log.info("iteration %d: %d pairs, mean loss %.4f", it, len(pairs), np.mean(losses) if losses else 0.0)
    return model, report


def conseq_train_online(model: TinySeq2Seq, examples: list[TrainingExample], reward: RewardFunction,
                        config: ConseqConfig) -> tuple[TinySeq2Seq, dict]:
    """Online variant: pools are built from each batch alone, followed by one gradient step.

    Batches that yield no pair are skipped and counted.
    """
    if not examples:
        raise InvalidInput("no training examples")
    model = copy.deepcopy(model)
    opt = torch.optim.Adam(model.parameters(), lr=config.lr)
    rng = np.random.default_rng(config.seed)
    batches, skipped, step = [], 0, 0
    for _ in range(config.epochs):
        order = rng.permutation(len(examples))
        for i in range(0, len(order), config.batch_size):
            batch = [examples[j] for j in order[i:i + config.batch_size]]
            pairs, info = build_pairs(model, batch, reward, config, iteration=step)
            step += 1
            if not pairs:
                skipped += 1
                info["loss"] = None
            else:
                pairs = sorted(pairs, key=lambda p: p.doc_id)
                info["loss"] = contrastive_step(model, pairs, opt, "plain", config.negative_level)
            batches.append(info)
    report = {"variant": "online", "reward": reward.name, "config": config.to_dict(),
              "batches": batches, "skipped_batches": skipped}
    return model, report
