"""Policy-gradient comparator with a greedy baseline."""
from __future__ import annotations

import copy
import logging
from dataclasses import asdict, dataclass

import numpy as np
import torch

from factseq.conseq.pools import TrainingExample
from factseq.conseq.rewards import RewardFunction
from factseq.errors import InvalidInput
from factseq.seqmodel import GenerationConfig, generate, greedy_decode
from factseq.seqmodel.neural import TinySeq2Seq

log = logging.getLogger(__name__)


@dataclass
class ReinforceDiagnostics:
    sample: str
    baseline: str
    r_sample: float | None
    r_baseline: float | None
    gap: float | None
    degenerate: bool
    skipped: bool
    loss: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def greedy_baseline(model: TinySeq2Seq, example: TrainingExample, max_len: int = 60) -> tuple[int, ...]:
    return greedy_decode(model, example.source, max_len=max_len).ids


def _strip_eos(model, ids):
    return ids[:-1] if ids and ids[-1] == model.vocab.eos else ids


def reinforce_loss(model: TinySeq2Seq, src, sample_ids, gap: float) -> torch.Tensor:
    """Surrogate whose gradient is -(gap) * grad log p(sample | src)."""
    return -gap * model.token_logprobs(list(src), list(sample_ids)).sum()


def reinforce_step(model: TinySeq2Seq, example: TrainingExample, reward: RewardFunction,
                   optimizer: torch.optim.Optimizer, k: int = 50, seed: int = 0, max_len: int = 60,
                   baseline_decoder=greedy_baseline) -> ReinforceDiagnostics:
    """Sample y, decode baseline b, step along (r(y) - r(b)) grad log p(y|x).

    An unscorable sample skips the update and sets ``degenerate``; an
    unscorable baseline also skips (no finite advantage exists).
    """
    gen = GenerationConfig(mode="topk-sample", k=min(k, len(model.vocab)), num_samples=1,
                           max_len=max_len, seed=seed)
    sample_ids = generate(model, example.source, gen)[0].ids
    base_ids = baseline_decoder(model, example, max_len)
    vocab = model.vocab
    y_text = vocab.decode(_strip_eos(model, sample_ids))
    b_text = vocab.decode(_strip_eos(model, base_ids))
    r_y = reward(example.document, y_text, example.reference)
    r_b = reward(example.document, b_text, example.reference)
    diag = ReinforceDiagnostics(y_text, b_text, r_y, r_b, None, r_y is None, False)
    if r_y is None or r_b is None:
        diag.skipped = True
        return diag
    diag.gap = r_y - r_b
    optimizer.zero_grad()
    loss = reinforce_loss(model, example.source.ids, sample_ids, diag.gap)
    loss.backward()
    optimizer.step()
    diag.loss = loss.item()
    return diag


def reinforce_train(model: TinySeq2Seq, examples: list[TrainingExample], reward: RewardFunction,
                    steps: int, lr: float = 1e-3, k: int = 50, seed: int = 0,
                    max_len: int = 60) -> tuple[TinySeq2Seq, dict]:
    """Run ``steps`` REINFORCE updates with SGD, cycling through examples.

    Degenerate (unscorable) samples are counted rather than raised.
    """
    if not examples:
        raise InvalidInput("no training examples")
    model = copy.deepcopy(model)
    opt = torch.optim.SGD(model.parameters(), lr=lr)
    seeds = np.random.SeedSequence(seed).generate_state(max(steps, 1))
    log_rows, degenerate, skipped = [], 0, 0
    for i in range(steps):
        ex = examples[i % len(examples)]
        d = reinforce_step(model, ex, reward, opt, k=k, seed=int(seeds[i]), max_len=max_len)
        degenerate += d.degenerate
        skipped += d.skipped
        if d.degenerate:
            log.warning("step %d: unscorable sample for %s; update skipped", i, ex.doc_id)
        log_rows.append({"doc_id": ex.doc_id, **d.to_dict()})
    return model, {"steps": steps, "degenerate": degenerate, "skipped": skipped, "log": log_rows}
