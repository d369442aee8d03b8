"""ROUGE scoring, percentile-bin correlation, and the sign test used for paired comparisons."""
from __future__ import annotations

import csv
import logging
from collections import Counter
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np
from scipy import stats

from factseq.errors import InvalidInput

log = logging.getLogger(__name__)


class RougeScores(NamedTuple):
    r1: float
    r2: float
    rl: float

    @property
    def total(self) -> float:
        return self.r1 + self.r2 + self.rl


def _f_measure(match: int, n_cand: int, n_ref: int) -> float:
    if match == 0:
        return 0.0
    p, r = match / n_cand, match / n_ref
    return 2 * p * r / (p + r)


def _ngrams(tokens, n):
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def _lcs(a, b) -> int:
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b):
            cur.append(prev[j] + 1 if x == y else max(prev[j + 1], cur[j]))
        prev = cur
    return prev[-1]


def rouge(candidate: str, reference: str) -> RougeScores:
    """ROUGE-1/2/L F-measures on lowercased whitespace tokens, no stemming."""
    c, r = candidate.lower().split(), reference.lower().split()
    if not c and not r:
        return RougeScores(1.0, 1.0, 1.0)
    if not c or not r:
        return RougeScores(0.0, 0.0, 0.0)
    scores = []
    for n in (1, 2):
        cn, rn = _ngrams(c, n), _ngrams(r, n)
        if not cn and not rn:
            # both texts are single tokens: no bigrams to compare, fall back to unigrams
            scores.append(scores[-1])
            continue
        match = sum((cn & rn).values())
        scores.append(_f_measure(match, sum(cn.values()), sum(rn.values())))
    scores.append(_f_measure(_lcs(c, r), len(c), len(r)))
    return RougeScores(*scores)


@dataclass(frozen=True)
class Bin:
    lower: float
    upper: float
    count: int
    mean: float
    std: float


@dataclass(frozen=True)
class BinReport:
    num_bins: int
    bins: tuple[Bin, ...]
    spearman: float
    order: tuple[int, ...]

    def to_dict(self) -> dict:
        return {
            "num_bins": self.num_bins,
            "spearman": self.spearman,
            "bins": [asdict(b) for b in self.bins],
        }

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["percentile", "mean", "stdev"])
            for b in self.bins:
                w.writerow([(b.lower + b.upper) / 2, b.mean, b.std])


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    """Rank correlation with average ranks for ties; 0 when either side is constant."""
    rx, ry = stats.rankdata(x), stats.rankdata(y)
    if np.ptp(rx) == 0 or np.ptp(ry) == 0:
        return 0.0
    return float(np.corrcoef(rx, ry)[0, 1])


def bin_correlation(primary: Sequence[float], partner: Sequence[float], num_bins: int) -> BinReport:
    """Group pairs into percentile bins of ``primary``; summarize ``partner`` per bin.

    Sorting is stable, so ties in ``primary`` keep input order. Bin sizes
    differ by at most one, with the larger bins first. The standard
    deviation is the population one (ddof=0).
    """
    if len(primary) != len(partner):
        raise InvalidInput("primary and partner scores differ in length")
    n = len(primary)
    if num_bins < 1 or n < num_bins:
        raise InvalidInput("need at least num_bins >= 1 scores")
    x = np.asarray(primary, dtype=np.float64)
    y = np.asarray(partner, dtype=np.float64)
    order = np.argsort(x, kind="stable")
    bins, start = [], 0
    for chunk in np.array_split(order, num_bins):
        vals = y[chunk]
        end = start + len(chunk)
        bins.append(Bin(100.0 * start / n, 100.0 * end / n, len(chunk), float(vals.mean()), float(vals.std())))
        start = end
    return BinReport(num_bins, tuple(bins), spearman(x, y), tuple(int(i) for i in order))


@dataclass(frozen=True)
class SignTest:
    wins: int
    losses: int
    ties: int
    p_value: float


def sign_test(after: Sequence[float | None], before: Sequence[float | None]) -> SignTest:
    """One-sided paired sign test that ``after`` beats ``before``; None ranks lowest."""
    if len(after) != len(before):
        raise InvalidInput("paired samples differ in length")
    wins = losses = ties = 0
    lo = float("-inf")
    for a, b in zip(after, before):
        a = lo if a is None else a
        b = lo if b is None else b
        if a > b:
            wins += 1
        elif a < b:
            losses += 1
        else:
            ties += 1
    n = wins + losses
    p = 1.0 if n == 0 else float(stats.binomtest(wins, n, 0.5, alternative="greater").pvalue)
    return SignTest(wins, losses, ties, p)
