"""Contrastive objective over (positive, negative) summary pairs."""
from __future__ import annotations

import math

import torch

from factseq.conseq.pools import ContrastivePair
from factseq.errors import InvalidInput, NumericalError
from factseq.seqmodel.neural import TinySeq2Seq

LOSS_VARIANTS = ("plain", "weighted", "positive-only")
# keeps log(1 - p) finite when p rounds to 1
_CLAMP = -1e-12


def target_ids(model: TinySeq2Seq, pair_side) -> list[int]:
    """Summary ids followed by eos; the model is trained to stop."""
    return list(pair_side.summary.ids) + [model.vocab.eos]


def positive_term(model: TinySeq2Seq, src, tgt) -> torch.Tensor:
    return -model.token_logprobs(src, tgt).mean()


def negative_term(model: TinySeq2Seq, src, tgt, level: str = "token") -> torch.Tensor:
    """-log(1 - p), per token (mean) or for the whole sequence."""
    lp = model.token_logprobs(src, tgt)
    if level == "token":
        return -torch.log1p(-torch.exp(lp.clamp(max=_CLAMP))).mean()
    if level == "sequence":
        return -torch.log1p(-torch.exp(lp.sum().clamp(max=_CLAMP)))
    raise InvalidInput(f"unknown negative level {level!r}")


def pair_loss(model: TinySeq2Seq, pair: ContrastivePair, variant: str = "plain",
              level: str = "token") -> torch.Tensor:
    src = list(pair.input.ids)
    pos = positive_term(model, src, target_ids(model, pair.positive))
    if variant == "positive-only":
        return pos
    neg = negative_term(model, src, target_ids(model, pair.negative), level)
    if variant == "weighted":
        return pair.w_pos * pos + (1.0 - pair.w_neg) * neg
    if variant == "plain":
        return pos + neg
    raise InvalidInput(f"unknown loss variant {variant!r}")


def contrastive_loss(model: TinySeq2Seq, pairs: list[ContrastivePair], variant: str = "plain",
                     level: str = "token") -> torch.Tensor:
    """Mean over pairs of the positive NLL plus the negative log-complement term."""
    if variant not in LOSS_VARIANTS:
        raise InvalidInput(f"variant must be one of {LOSS_VARIANTS}")
    if not pairs:
        raise InvalidInput("contrastive loss needs at least one pair")
    terms = []
    for pair in pairs:
        t = pair_loss(model, pair, variant, level)
        if not math.isfinite(t.item()):
            raise NumericalError(f"non-finite loss {t.item()}", pair.doc_id)
        terms.append(t)
    return torch.stack(terms).mean()
