import logging
import math

import numpy as np
import pytest
import torch

from factseq.conseq import (
    ConseqConfig,
    ContrastivePair,
    RewardNormalizer,
    ScoredSummary,
    conseq_train,
    conseq_train_online,
    contrastive_loss,
    custom_reward,
    normalize_rewards,
    reinforce_step,
    reinforce_train,
    rouge_sum_reward,
    training_examples,
)
from factseq.conseq.losses import negative_term, positive_term
from factseq.conseq.pools import GROUND_TRUTH, SAMPLED
from factseq.conseq.reinforce import reinforce_loss
from factseq.conseq.train import minibatches
from factseq.corpuskit import CorpusExample
from factseq.errors import InvalidInput, NumericalError
from factseq.seqmodel import TokenSequence, Vocabulary
from factseq.seqmodel.neural import TinySeq2Seq, flat_grad, flat_parameters, mle_loss, set_flat_parameters

from conftest import rel_err

VOCAB = Vocabulary(["a", "b", "c", "d"])


class StubModel:
    """Fixed per-token probabilities keyed by token id, independent of context."""

    def __init__(self, probs):
        self.vocab = VOCAB
        self.probs = probs

    def token_logprobs(self, src, tgt):
        return torch.log(torch.tensor([self.probs[t] for t in tgt], dtype=torch.float64))


def _side(text, r=None, origin=SAMPLED, doc_id="d"):
    return ScoredSummary(doc_id, VOCAB.encode(text), origin, r)


def _pair(pos="a b", neg="c d", doc="a b c", rp=1.0, rn=0.0, doc_id="d"):
    return ContrastivePair(doc_id, VOCAB.encode(doc), _side(pos, rp, GROUND_TRUTH, doc_id),
                           _side(neg, rn, SAMPLED, doc_id))


# -- loss values -----------------------------------------------------------------------------

def test_single_token_hand_value():
    a, b = VOCAB.id("a"), VOCAB.id("b")
    m = StubModel({a: 0.5, b: 0.25})
    want = -math.log(0.5) - math.log(0.75)
    for level in ("token", "sequence"):
        got = (positive_term(m, [], [a]) + negative_term(m, [], [b], level)).item()
        assert got == pytest.approx(want, abs=1e-12)
    assert want == pytest.approx(0.9808, abs=1e-4)


def test_plain_loss_with_end_marker_hand_value():
    a, b, eos = VOCAB.id("a"), VOCAB.id("b"), VOCAB.eos
    m = StubModel({a: 0.5, b: 0.25, eos: 0.5})
    pair = _pair(pos="a", neg="b")
    # targets are the summary plus end-of-sequence
    pos = -(math.log(0.5) + math.log(0.5)) / 2
    tok = -(math.log(0.75) + math.log(0.5)) / 2
    seq = -math.log(1 - 0.25 * 0.5)
    assert contrastive_loss(m, [pair], "plain", "token").item() == pytest.approx(pos + tok, abs=1e-12)
    assert contrastive_loss(m, [pair], "plain", "sequence").item() == pytest.approx(pos + seq, abs=1e-12)


def test_weighted_collapses_to_plain():
    m = TinySeq2Seq(VOCAB, dim=4, seed=0)
    pair = _pair()
    w = ContrastivePair(pair.doc_id, pair.input, pair.positive, pair.negative, w_pos=1.0, w_neg=0.0)
    for level in ("token", "sequence"):
        assert contrastive_loss(m, [w], "weighted", level).item() == contrastive_loss(m, [pair], "plain", level).item()


def test_positive_only_is_mle():
    m = TinySeq2Seq(VOCAB, dim=4, seed=0)
    pairs = [_pair(pos="a b"), _pair(pos="c", doc="d c b")]
    mle = mle_loss(m, [(p.input, TokenSequence(p.positive.summary.ids + (VOCAB.eos,))) for p in pairs])
    assert contrastive_loss(m, pairs, "positive-only").item() == pytest.approx(mle.item(), abs=1e-14)


def test_loss_errors():
    m = StubModel({VOCAB.id("a"): float("nan"), VOCAB.eos: 0.5, VOCAB.id("c"): 0.1, VOCAB.id("d"): 0.1})
    with pytest.raises(NumericalError) as err:
        contrastive_loss(m, [_pair(pos="a", neg="c d", doc_id="bad-doc")])
    assert err.value.pair_id == "bad-doc"
    with pytest.raises(InvalidInput):
        contrastive_loss(m, [])
    with pytest.raises(InvalidInput):
        contrastive_loss(m, [_pair()], "fancy")


# -- gradients ---------------------------------------------------------------------------------

def _fd_grad(model, fn, eps=1e-6):
    theta = flat_parameters(model)
    g = torch.zeros_like(theta)
    with torch.no_grad():
        for i in range(len(theta)):
            for sign in (1, -1):
                t = theta.clone()
                t[i] += sign * eps
                set_flat_parameters(model, t)
                g[i] += sign * fn().item() / (2 * eps)
        set_flat_parameters(model, theta)
    return g


@pytest.mark.parametrize("variant", ["plain", "weighted", "positive-only"])
@pytest.mark.parametrize("level", ["token", "sequence"])
def test_loss_gradient_matches_finite_differences(variant, level):
    m = TinySeq2Seq(VOCAB, dim=3, seed=4)
    pairs = [_pair(), _pair(pos="d", neg="a a", doc="c d", doc_id="e")]
    pairs = [ContrastivePair(p.doc_id, p.input, p.positive, p.negative, 0.7, 0.2) for p in pairs]
    m.zero_grad()
    contrastive_loss(m, pairs, variant, level).backward()
    analytic = flat_grad(m)
    numeric = _fd_grad(m, lambda: contrastive_loss(m, pairs, variant, level))
    assert rel_err(analytic, numeric) < 1e-4


def test_single_step_moves_probabilities_apart():
    m = TinySeq2Seq(VOCAB, dim=8, seed=1)
    pair = _pair(pos="a b", neg="c d")
    src = list(pair.input.ids)
    pos = list(pair.positive.summary.ids) + [VOCAB.eos]
    neg = list(pair.negative.summary.ids) + [VOCAB.eos]
    with torch.no_grad():
        before = m.token_logprobs(src, pos).mean().item(), m.token_logprobs(src, neg).mean().item()
    opt = torch.optim.SGD(m.parameters(), lr=1e-3)
    opt.zero_grad()
    contrastive_loss(m, [pair]).backward()
    opt.step()
    with torch.no_grad():
        after = m.token_logprobs(src, pos).mean().item(), m.token_logprobs(src, neg).mean().item()
    assert after[0] > before[0] and after[1] < before[1]


# -- training drivers --------------------------------------------------------------------------

def _corpus(n=6):
    docs = ["a b c", "b c d", "c d a", "d a b", "a c", "b d", "a d c b", "c a"]
    return training_examples([CorpusExample(f"x{i}", docs[i % len(docs)], docs[i % len(docs)].split()[0])
                              for i in range(n)], VOCAB)


def test_outer_zero_is_identity():
    m = TinySeq2Seq(VOCAB, dim=4, seed=0)
    out, report = conseq_train(m, _corpus(), rouge_sum_reward(), ConseqConfig(outer_iterations=0, max_len=4))
    assert torch.equal(flat_parameters(out), flat_parameters(m))
    assert report["iterations"] == []


def test_offline_training_updates_and_reports():
    m = TinySeq2Seq(VOCAB, dim=4, seed=0)
    before = flat_parameters(m).clone()
    out, report = conseq_train(m, _corpus(8), rouge_sum_reward(),
                               ConseqConfig(p=50, max_len=4, epochs=2, batch_size=2, lr=1e-2))
    assert torch.equal(flat_parameters(m), before)
    assert not torch.equal(flat_parameters(out), before)
    it = report["iterations"][0]
    assert it["aborted"] is None and it["pairs"] >= 1 and len(it["losses"]) >= 2
    for key in ("positive_pool", "negative_pool", "mean_reward_sampled_before", "mean_reward_sampled_after"):
        assert key in it


def test_empty_intersection_aborts(caplog):
    m = TinySeq2Seq(VOCAB, dim=4, seed=0)
    exs = _corpus(2)
    # ground truth of x0 is best, samples of x0 are also best, so the pools never meet
    reward = custom_reward(lambda doc, s, ref=None: 1.0 if doc == exs[0].document else 0.0)
    with caplog.at_level(logging.WARNING):
        _, report = conseq_train(m, exs, reward, ConseqConfig(p=50, max_len=3))
    assert report["iterations"][0]["aborted"]


def test_minibatches_keep_pairs_whole():
    pairs = [_pair(doc_id=f"d{i}") for i in range(7)]
    batches = list(minibatches(pairs, 3, np.random.default_rng(0)))
    assert sorted(p.doc_id for b in batches for p in b) == sorted(p.doc_id for p in pairs)
    for b in batches:
        assert [p.doc_id for p in b] == sorted(p.doc_id for p in b)
        assert all(p.positive.doc_id == p.negative.doc_id == p.doc_id for p in b)


def test_online_single_batch_equals_offline():
    m = TinySeq2Seq(VOCAB, dim=4, seed=2)
    exs = _corpus(6)
    cfg = ConseqConfig(p=50, max_len=4, batch_size=6, epochs=1, lr=1e-2, seed=3)
    off, rep_off = conseq_train(m, exs, rouge_sum_reward(), cfg)
    on, rep_on = conseq_train_online(m, exs, rouge_sum_reward(), cfg.replace(variant="online"))
    assert rep_on["batches"][0]["pairs"] == rep_off["iterations"][0]["pairs"] > 0
    assert torch.equal(flat_parameters(on), flat_parameters(off))


def test_online_counts_skipped_batches():
    m = TinySeq2Seq(VOCAB, dim=4, seed=2)
    out, rep = conseq_train_online(m, _corpus(6), custom_reward(lambda *a: None),
                                   ConseqConfig(variant="online", p=50, max_len=3, batch_size=2))
    assert rep["skipped_batches"] == 3
    assert torch.equal(flat_parameters(out), flat_parameters(m))


def test_online_batch_of_six_selects_two():
    m = TinySeq2Seq(VOCAB, dim=4, seed=2)
    cfg = ConseqConfig(variant="online", p=34, max_len=3, batch_size=6)
    _, rep = conseq_train_online(m, _corpus(6), rouge_sum_reward(), cfg)
    b = rep["batches"][0]
    assert b["positive_pool"] == b["negative_pool"] == 3 and b["pairs"] <= 3


def test_weighted_variant_sets_normalized_weights():
    m = TinySeq2Seq(VOCAB, dim=4, seed=0)
    _, rep = conseq_train(m, _corpus(8), rouge_sum_reward(), ConseqConfig(variant="weighted", p=50, max_len=4))
    assert rep["iterations"][0]["pairs"] >= 1


# -- reward normalization ------------------------------------------------------------------------

def test_normalize_examples():
    assert normalize_rewards([-2, 0, 2]) == [0.0, 0.5, 1.0]
    norm = RewardNormalizer.fit([-2, 2])
    assert norm(3) == 1.0 and norm(-7) == 0.0 and norm(None) == 0.0


def test_normalize_degenerate_warns(caplog):
    with caplog.at_level(logging.WARNING):
        assert normalize_rewards([1.5, 1.5]) == [0.5, 0.5]
    assert "equal" in caplog.text


def test_normalize_on_synthetic_quals(small_world):
    from factseq.quals import quals_batch
    from factseq.seqmodel import GenerationConfig

    vocab, q = small_world["vocab"], small_world["qagen"]
    cfg = GenerationConfig(mode="diverse-beam", beam_width=8, num_groups=8, diversity_strength=0.5, max_len=12)
    res = quals_batch(q, [(e.id, vocab.encode(e.document), vocab.encode(e.summary))
                          for e in small_world["corrupted"][:20]], cfg)
    scores = [r.score for r in res.values() if r.score is not None]
    lo, hi = min(scores), max(scores)
    norm = RewardNormalizer.fit(scores)
    for s in scores[:5]:
        assert norm(s) == pytest.approx((s - lo) / (hi - lo), abs=1e-12)
    assert norm(lo) == 0.0 and norm(hi) == 1.0


# -- REINFORCE -------------------------------------------------------------------------------------

def _reinforce_setup(reward_fn, seed=0):
    m = TinySeq2Seq(VOCAB, dim=4, seed=seed)
    ex = _corpus(1)[0]
    return m, ex, custom_reward(reward_fn)


def _fixed_baseline(model, example, max_len):
    return (VOCAB.id("d"), VOCAB.id("d"), VOCAB.id("d"), VOCAB.eos)


def _sample_grad(m, ex, sample_text):
    ids = list(VOCAB.encode(sample_text).ids) + [VOCAB.eos] if sample_text else [VOCAB.eos]
    m.zero_grad()
    m.token_logprobs(list(ex.source.ids), ids).sum().backward()
    return flat_grad(m).clone(), ids


def test_reinforce_unit_gap_follows_score_function():
    m, ex, reward = _reinforce_setup(lambda doc, s, ref=None: 0.0 if s == "d d d" else 1.0)
    before = flat_parameters(m).clone()
    opt = torch.optim.SGD(m.parameters(), lr=1.0)
    d = reinforce_step(m, ex, reward, opt, seed=1, max_len=4, baseline_decoder=_fixed_baseline)
    assert (d.r_sample, d.r_baseline, d.gap) == (1.0, 0.0, 1.0)
    delta = flat_parameters(m) - before
    set_flat_parameters(m, before)
    grad, _ = _sample_grad(m, ex, d.sample)
    assert rel_err(delta, grad) < 1e-12


def test_reinforce_equal_rewards_no_update():
    m, ex, reward = _reinforce_setup(lambda *a: 0.3)
    before = flat_parameters(m).clone()
    d = reinforce_step(m, ex, reward, torch.optim.SGD(m.parameters(), lr=1.0), seed=2, max_len=4)
    assert d.gap == 0.0 and torch.equal(flat_parameters(m), before)


def test_reinforce_update_matches_assembled_gradient():
    m, ex, distinct = _reinforce_setup(lambda doc, s, ref=None: float(len(set(s.split()))), seed=5)
    before = flat_parameters(m).clone()
    lr = 1e-3
    d = reinforce_step(m, ex, distinct, torch.optim.SGD(m.parameters(), lr=lr), seed=3, max_len=4)
    assert d.gap is not None and d.gap != 0.0
    step = (flat_parameters(m) - before) / lr
    set_flat_parameters(m, before)
    grad, ids = _sample_grad(m, ex, d.sample)
    assert rel_err(step, d.gap * grad) < 1e-6
    # and the score-function gradient itself against central differences
    src = list(ex.source.ids)
    numeric = _fd_grad(m, lambda: m.token_logprobs(src, ids).sum())
    assert rel_err(grad, numeric) < 1e-4
    m.zero_grad()
    reinforce_loss(m, src, ids, d.gap).backward()
    assert rel_err(flat_grad(m), -d.gap * numeric) < 1e-4


def test_reinforce_degenerate_sample_is_skipped_and_counted():
    m, ex, _ = _reinforce_setup(None)
    reward = custom_reward(lambda doc, s, ref=None: None)
    before = flat_parameters(m).clone()
    d = reinforce_step(m, ex, reward, torch.optim.SGD(m.parameters(), lr=1.0), max_len=4)
    assert d.degenerate and d.skipped and d.loss is None
    assert torch.equal(flat_parameters(m), before)
    _, report = reinforce_train(m, _corpus(3), reward, steps=5, max_len=4)
    assert report["degenerate"] == 5 and report["skipped"] == 5
