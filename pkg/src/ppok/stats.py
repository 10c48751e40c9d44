"""Monte Carlo estimates and the goodness-of-fit tests used to validate them."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats


@dataclass(frozen=True)
class McEstimate:
    value: float
    stderr: float
    n_reps: int
    partial: bool = False

    @classmethod
    def from_samples(cls, samples, partial: bool = False) -> "McEstimate":
        x = np.asarray(samples, dtype=float)
        n = x.size
        sd = x.std(ddof=1) if n > 1 else 0.0
        return cls(float(x.mean()), float(sd / math.sqrt(n)), int(n), partial)

    def within(self, target: float, n_se: float = 3.0, extra: float = 0.0) -> bool:
        return abs(self.value - target) <= n_se * self.stderr + extra

    def __float__(self) -> float:
        return self.value


def variance_estimate(samples) -> McEstimate:
    """Sample variance with the delta-method standard error ``sqrt((m4 - s^4) / n)``."""
    x = np.asarray(samples, dtype=float)
    n = x.size
    c = x - x.mean()
    s2 = float(c @ c / (n - 1))
    m4 = float(np.mean(c**4))
    return McEstimate(s2, math.sqrt(max(m4 - s2 * s2, 0.0) / n), n)


def correlation_estimate(a, b) -> McEstimate:
    """Pearson correlation; stderr from the large-sample ``(1 - r^2) / sqrt(n)``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    r = float(np.corrcoef(a, b)[0, 1])
    return McEstimate(r, (1 - r * r) / math.sqrt(a.size), a.size)


def _merge_bins(expected: np.ndarray, observed: np.ndarray, min_expected: float):
    """Merge adjacent bins left to right until each expected count reaches the floor."""
    e_out, o_out = [], []
    e_acc = o_acc = 0.0
    for e, o in zip(expected, observed):
        e_acc += e
        o_acc += o
        if e_acc >= min_expected:
            e_out.append(e_acc)
            o_out.append(o_acc)
            e_acc = o_acc = 0.0
    if e_acc > 0 or o_acc > 0:
        if e_out:
            e_out[-1] += e_acc
            o_out[-1] += o_acc
        else:
            e_out.append(e_acc)
            o_out.append(o_acc)
    return np.array(e_out), np.array(o_out)


def chisquare_gof(counts, pmf, min_expected: float = 5.0) -> float:
    """p-value of a chi-square test of integer samples ``counts`` against ``pmf``.

    ``pmf[j]`` is the probability of value ``j``; mass beyond the table goes
    into a final tail bin.
    """
    counts = np.asarray(counts, dtype=np.int64)
    pmf = np.asarray(pmf, dtype=float)
    n = counts.size
    m = pmf.size
    observed = np.bincount(np.minimum(counts, m), minlength=m + 1).astype(float)
    probs = np.append(pmf, max(0.0, 1.0 - pmf.sum()))
    expected = probs * n
    e, o = _merge_bins(expected, observed, min_expected)
    if e.size < 2:
        return 1.0
    e = e * o.sum() / e.sum()
    return float(stats.chisquare(o, e).pvalue)


def chisquare_two_sample(a, b, min_expected: float = 5.0) -> float:
    """p-value of a chi-square homogeneity test between two integer samples."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    top = int(max(a.max(), b.max())) + 1
    ca = np.bincount(a, minlength=top).astype(float)
    cb = np.bincount(b, minlength=top).astype(float)
    pooled = ca + cb
    # merge on the pooled expectation of the smaller sample
    frac = min(a.size, b.size) / (a.size + b.size)
    bins, acc = [], []
    for j in range(top):
        acc.append(j)
        if pooled[acc].sum() * frac >= min_expected:
            bins.append(acc)
            acc = []
    if acc:
        if bins:
            bins[-1].extend(acc)
        else:
            bins.append(acc)
    if len(bins) < 2:
        return 1.0
    table = np.array([[ca[b_].sum() for b_ in bins], [cb[b_].sum() for b_ in bins]])
    return float(stats.chi2_contingency(table, correction=False)[1])


def loglog_slope(x, y) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])
