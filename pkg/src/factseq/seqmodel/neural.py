"""Tiny trainable seq2seq backend (embedding + recurrence + optional copy head)."""
from __future__ import annotations

import logging
import threading
from typing import Iterable, Sequence

import numpy as np
import torch
from torch import nn

from factseq.errors import InvalidInput, NumericalError
from factseq.seqmodel.base import SeqModel, _prepare
from factseq.seqmodel.vocab import TokenSequence, Vocabulary

log = logging.getLogger(__name__)

DTYPE = torch.float64
MAX_POSITIONS = 64


class TinySeq2Seq(SeqModel, nn.Module):
    """Bag-of-embeddings encoder, Elman decoder, pointer-style copy mixture.

    The decoder context averages input embeddings, so by itself it knows
    *which* tokens a document contains but not where. With ``copy=True``
    the output distribution mixes a generation softmax with attention
    over input positions, gated per step; each attention key sees its
    token, the preceding token and a (clipped) position embedding, which
    is enough to copy "the value after relation r". Begin-of-sequence
    and padding never receive probability mass.

    ``init="uniform"`` zeroes the output layer so an untrained model is
    uniform over the emittable tokens (only meaningful with ``copy=False``).
    """

    def __init__(self, vocab: Vocabulary, dim: int = 16, copy: bool = True,
                 init: str = "random", seed: int = 0):
        nn.Module.__init__(self)
        self.vocab = vocab
        self.dim = dim
        self.use_copy = copy
        self.init_mode = init
        self.seed = seed
        v = len(vocab)
        with torch.random.fork_rng(devices=[]):
            torch.manual_seed(seed)
            self.embed = nn.Embedding(v, dim)
            self.encode_proj = nn.Linear(dim, dim)
            self.init_proj = nn.Linear(dim, dim)
            self.cell = nn.RNNCell(2 * dim, dim)
            self.out = nn.Linear(dim, v)
            if copy:
                self.position = nn.Embedding(MAX_POSITIONS, dim)
                self.key = nn.Linear(3 * dim, dim)
                self.query = nn.Linear(dim, dim, bias=False)
                self.gate = nn.Linear(dim, 1)
        self.to(DTYPE)
        if init == "uniform":
            with torch.no_grad():
                self.out.weight.zero_()
                self.out.bias.zero_()
        elif init != "random":
            raise InvalidInput(f"unknown init {init!r}")
        mask = torch.zeros(v, dtype=DTYPE)
        mask[[vocab.bos, vocab.pad]] = float("-inf")
        self.register_buffer("_out_mask", mask)
        self._cache = {}
        self._cache_version = None
        self._lock = threading.Lock()

    def __getstate__(self):
        state = self.__dict__.copy()
        state["_cache"] = {}
        state["_cache_version"] = None
        del state["_lock"]
        return state

    def __setstate__(self, state):
        super().__setstate__(state)
        self._lock = threading.Lock()

    def config(self) -> dict:
        return {"dim": self.dim, "copy": self.use_copy, "init": self.init_mode, "seed": self.seed}

    def num_parameters(self) -> int:
        return sum(p.numel() for p in self.parameters())

    # -- differentiable path -------------------------------------------------

    def _encode(self, src: Sequence[int]):
        if len(src):
            ids = torch.tensor(list(src), dtype=torch.long)
            emb = self.embed(ids)
            ctx = torch.tanh(self.encode_proj(emb.mean(0)))
            if self.use_copy:
                prev = self.embed(torch.tensor([self.vocab.bos] + list(src[:-1]), dtype=torch.long))
                pos = self.position(torch.arange(len(src)).clamp(max=MAX_POSITIONS - 1))
                src_emb = torch.tanh(self.key(torch.cat([emb, prev, pos], dim=1)))
            else:
                src_emb = emb
        else:
            src_emb = torch.zeros(0, self.dim, dtype=DTYPE)
            ctx = torch.zeros(self.dim, dtype=DTYPE)
        h0 = torch.tanh(self.init_proj(ctx))
        return ctx, src_emb, h0

    def _step(self, h, prev_tok: int, ctx, src, src_emb):
        x = torch.cat([self.embed.weight[prev_tok], ctx])
        h = self.cell(x.unsqueeze(0), h.unsqueeze(0)).squeeze(0)
        gen = torch.softmax(self.out(h) + self._out_mask, dim=-1)
        if not self.use_copy or len(src) == 0:
            return h, gen
        attn = torch.softmax(src_emb @ self.query(h), dim=0)
        copy = torch.zeros(len(self.vocab), dtype=DTYPE).index_add(0, torch.tensor(list(src)), attn)
        g = torch.sigmoid(self.gate(h)).squeeze(-1)
        return h, g * gen + (1.0 - g) * copy

    def token_logprobs(self, src: Sequence[int], tgt: Sequence[int]) -> torch.Tensor:
        """Differentiable teacher-forced log p(tgt_t | src, tgt_<t)."""
        src = self._clean_src(src)
        ctx, src_emb, h = self._encode(src)
        prev = self.vocab.bos
        out = []
        for tok in tgt:
            h, p = self._step(h, prev, ctx, src, src_emb)
            out.append(p[tok])
            prev = tok
        return torch.log(torch.stack(out))

    def _clean_src(self, src):
        return tuple(t for t in src if t not in (self.vocab.bos, self.vocab.pad))

    # -- SeqModel contract ---------------------------------------------------

    def _version(self):
        return tuple(p._version for p in self.parameters())

    def _state(self, src, prefix):
        key = (src, prefix)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        if prefix:
            h, _ = self._state(src, prefix[:-1])
            ctx, src_emb = self._cache[(src, "enc")]
            h, p = self._step(h, prefix[-1], ctx, src, src_emb)
        else:
            ctx, src_emb, h0 = self._encode(src)
            self._cache[(src, "enc")] = (ctx, src_emb)
            h, p = self._step(h0, self.vocab.bos, ctx, src, src_emb)
        self._cache[key] = (h, p)
        return h, p

    def next_logprobs(self, input_ids, prefix):
        src = self._clean_src(input_ids)
        with torch.no_grad(), self._lock:
            version = self._version()
            if version != self._cache_version or len(self._cache) > 200_000:
                self._cache = {}
                self._cache_version = version
            _, p = self._state(src, tuple(prefix))
            with np.errstate(divide="ignore"):
                return np.log(p.numpy())


def mle_loss(model: TinySeq2Seq, batch: Iterable[tuple[TokenSequence, TokenSequence]]) -> torch.Tensor:
    """Mean over examples of the per-token mean negative log-likelihood."""
    batch = list(batch)
    if not batch:
        raise InvalidInput("empty batch")
    terms = []
    for src, tgt in batch:
        s = _prepare(model, src)
        t = _prepare(model, tgt)
        if not t:
            raise InvalidInput("empty target")
        terms.append(-model.token_logprobs(s, t).mean())
    return torch.stack(terms).mean()


def train_step_mle(model: TinySeq2Seq, batch, optimizer: torch.optim.Optimizer) -> float:
    """One optimizer step on :func:`mle_loss`; returns the pre-step loss."""
    optimizer.zero_grad()
    loss = mle_loss(model, batch)
    if not torch.isfinite(loss):
        raise NumericalError("non-finite MLE loss")
    loss.backward()
    optimizer.step()
    return loss.item()


def train_mle(model: TinySeq2Seq, pairs: list, epochs: int, lr: float = 1e-2,
              batch_size: int = 16, seed: int = 0, log_every: int = 0) -> list[float]:
    """Plain MLE fine-tuning loop with Adam; returns per-epoch mean losses."""
    opt = torch.optim.Adam(model.parameters(), lr=lr)
    rng = np.random.default_rng(seed)
    history = []
    for epoch in range(epochs):
        order = rng.permutation(len(pairs))
        losses = []
        for i in range(0, len(order), batch_size):
            chunk = [pairs[j] for j in order[i:i + batch_size]]
            losses.append(train_step_mle(model, chunk, opt))
        history.append(float(np.mean(losses)))
        if log_every and (epoch + 1) % log_every == 0:
            log.info("mle epoch %d: loss %.4f", epoch + 1, history[-1])
    return history


def flat_parameters(model: nn.Module) -> torch.Tensor:
    return torch.cat([p.detach().reshape(-1) for p in model.parameters()])


def set_flat_parameters(model: nn.Module, flat: torch.Tensor) -> None:
    i = 0
    with torch.no_grad():
        for p in model.parameters():
            n = p.numel()
            p.copy_(flat[i:i + n].view_as(p))
            i += n


def flat_grad(model: nn.Module) -> torch.Tensor:
    return torch.cat([
        (p.grad if p.grad is not None else torch.zeros_like(p)).reshape(-1)
        for p in model.parameters()
    ])
