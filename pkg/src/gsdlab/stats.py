"""Distances, hypothesis tests, and bias measures for GSDs.

Empirical distributions enter as per-solution hit counts with their effective
sample size (the number of anneals that reached a ground state); analytic
distributions enter as exact probability vectors, corresponding to the
infinite-sample limit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import chi2 as chi2_dist

from .errors import InputError
from .quantum import AnalyticGSD
from .sa import EmpiricalGSD


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    n_bootstrap: int
    asymptotic_p: float | None = None


def _counts_of(g) -> tuple[np.ndarray, int]:
    if isinstance(g, EmpiricalGSD):
        return g.counts.astype(np.float64), g.ground_hits
    raise InputError("expected an empirical GSD with counts")


def probabilities_of(g) -> np.ndarray:
    """Probability vector of an empirical or analytic GSD (or a bare array)."""
    if isinstance(g, (EmpiricalGSD, AnalyticGSD)):
        return np.asarray(g.probabilities, dtype=np.float64)
    return np.asarray(g, dtype=np.float64)


def _check_same_space(a, b) -> None:
    if len(probabilities_of(a)) != len(probabilities_of(b)):
        raise InputError("GSDs are indexed over different solution sets")


def chi2_distance_sq(a: EmpiricalGSD, b: EmpiricalGSD) -> float:
    """Squared chi-square distance between two empirical count vectors.

    Index terms where both counts vanish contribute nothing (the summand is
    0/0 there).
    """
    _check_same_space(a, b)
    n1c, n1 = _counts_of(a)
    n2c, n2 = _counts_of(b)
    if n1 <= 0 or n2 <= 0:
        raise InputError("both samples need at least one ground-state hit")
    return float(_chi2_two_sided(n1c, n1, n2c, n2))


def _chi2_two_sided(c1: np.ndarray, n1: float, c2: np.ndarray, n2: float) -> np.ndarray:
    num = (np.sqrt(n1 / n2) * c2 - np.sqrt(n2 / n1) * c1) ** 2
    den = c1 + c2
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)
    return terms.sum(axis=-1)


def chi2_one_sided_sq(empirical: EmpiricalGSD, analytic) -> float:
    """The N2 -> infinity limit against an exact probability vector.

    Observing a state the analytic side gives probability zero makes the
    statistic infinite: the distributions differ with certainty.
    """
    counts, n1 = _counts_of(empirical)
    p = probabilities_of(analytic)
    if len(counts) != len(p):
        raise InputError("GSDs are indexed over different solution sets")
    if n1 <= 0:
        raise InputError("empirical sample has no ground-state hits")
    return float(_chi2_one_sided(counts, n1, p))


def _chi2_one_sided(counts: np.ndarray, n1: float, p: np.ndarray) -> np.ndarray:
    expected = n1 * p
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(expected > 0, (expected - counts) ** 2 / np.where(expected > 0, expected, 1.0), 0.0)
    impossible = (expected == 0) & (counts > 0)
    out = terms.sum(axis=-1)
    if impossible.ndim > 1:
        out = np.where(impossible.any(axis=-1), np.inf, out)
    elif impossible.any():
        out = np.inf
    return out


def tv_distance(a, b) -> float:
    """Total variation distance between two probability vectors."""
    _check_same_space(a, b)
    return float(0.5 * np.abs(probabilities_of(a) - probabilities_of(b)).sum())


def bootstrap_ks(a, b, n_bootstrap: int = 10_000, rng_seed: int = 0) -> TestResult:
    """Bootstrapped two-sample test on the chi-square distance.

    Under the null both samples come from the pooled distribution
    ``(N1 p1 + N2 p2) / (N1 + N2)``; synthetic experiments redraw the
    empirical side(s) from it and the p-value is the fraction of synthetic
    distances at least as large as the observed one.  An analytic side is
    held fixed, which is the infinite-sample limit of the pooled null.
    """
    if n_bootstrap < 1:
        raise InputError("n_bootstrap must be positive")
    a_emp = isinstance(a, EmpiricalGSD)
    b_emp = isinstance(b, EmpiricalGSD)
    if not (a_emp or b_emp):
        raise InputError("bootstrap needs at least one empirical GSD; use tv_distance")
    if a_emp and not b_emp:
        pass
    elif b_emp and not a_emp:
        a, b = b, a
        a_emp, b_emp = True, False
    rng = np.random.default_rng(rng_seed)
    _check_same_space(a, b)
    counts1, n1 = _counts_of(a)
    d = len(counts1)
    if b_emp:
        counts2, n2 = _counts_of(b)
        observed = _chi2_two_sided(counts1, n1, counts2, n2)
        pooled = (counts1 + counts2) / (n1 + n2)
        pooled = pooled / pooled.sum()
        syn1 = rng.multinomial(n1, pooled, size=n_bootstrap).astype(np.float64)
        syn2 = rng.multinomial(n2, pooled, size=n_bootstrap).astype(np.float64)
        synthetic = _chi2_two_sided(syn1, n1, syn2, n2)
    else:
        pooled = probabilities_of(b)
        pooled = pooled / pooled.sum()
        observed = _chi2_one_sided(counts1, n1, pooled)
        syn1 = rng.multinomial(n1, pooled, size=n_bootstrap).astype(np.float64)
        synthetic = _chi2_one_sided(syn1, n1, pooled)
    p_value = float(np.mean(synthetic >= observed))
    asymptotic = float(chi2_dist.sf(observed, d - 1)) if np.isfinite(observed) else 0.0
    return TestResult(
        statistic=float(observed),
        p_value=p_value,
        n_bootstrap=n_bootstrap,
        asymptotic_p=asymptotic,
    )


def bias(p) -> float:
    """Normalized L1 deviation from uniform: 0 for flat, 1 for a point mass."""
    probs = probabilities_of(p)
    d = len(probs)
    if d < 2:
        raise InputError("bias is undefined for a single-solution manifold")
    return float(d / (2.0 * (d - 1)) * np.abs(probs - 1.0 / d).sum())


def combine_gsds(gsds: list, weights: list[float] | None = None) -> np.ndarray:
    """Weighted average of probability vectors (equal weights by default)."""
    if not gsds:
        raise InputError("nothing to combine")
    vectors = [probabilities_of(g) for g in gsds]
    d = len(vectors[0])
    for v in vectors[1:]:
        if len(v) != d:
            raise InputError("GSDs are indexed over different solution sets")
    if weights is None:
        weights = [1.0 / len(vectors)] * len(vectors)
    if len(weights) != len(vectors):
        raise InputError("one weight per GSD required")
    if abs(sum(weights) - 1.0) > 1e-9:
        raise InputError("weights must sum to 1")
    out = np.zeros(d)
    for w, v in zip(weights, vectors):
        out += w * v
    return out


def pairwise_report(rows: list[dict], p_threshold: float = 0.01) -> dict:
    """Summarize per-instance comparison rows into Table-1-style fractions.

    Each row carries instance_id, method_a, method_b, p_value, bias_a,
    bias_b, bias_combined.  Returns flagged fractions per method pair plus
    median per-method and combined biases.
    """
    pairs: dict[tuple[str, str], list[dict]] = {}
    for row in rows:
        pairs.setdefault((row["method_a"], row["method_b"]), []).append(row)
    summary: dict = {"p_threshold": p_threshold, "pairs": {}}
    for (ma, mb), group in sorted(pairs.items()):
        flagged = sum(1 for r in group if r["p_value"] < p_threshold)
        summary["pairs"][f"{ma}-{mb}"] = {
            "instances": len(group),
            "flagged": flagged,
            "flagged_fraction": flagged / len(group),
            "median_bias_a": float(np.median([r["bias_a"] for r in group])),
            "median_bias_b": float(np.median([r["bias_b"] for r in group])),
            "median_bias_combined": float(np.median([r["bias_combined"] for r in group])),
            "combined_not_worse_fraction": float(
                np.mean([r["bias_combined"] <= r["bias_a"] for r in group])
            ),
        }
    return summary
