from __future__ import annotations

import math

import numpy as np
import numpy.typing as npt
from scipy import special, stats


def validate_positive(name: str, value: float) -> None:
    """
    Validates that `value` is a finite positive number.

    Parameters
    ----------
    name : str
        The parameter name used in the error message.
    value : float
        The value to validate.

    Raises
    ------
    ValueError
        If `value` is not finite or not positive.
    """
    if not math.isfinite(value) or value <= 0:
        raise ValueError(f"`{name}` must be a finite positive number: {value}")


def validate_positive_int(name: str, value: int) -> None:
    """
    Validates that `value` is a positive integer.

    Raises
    ------
    ValueError
        If `value` is not an integer or is smaller than 1.
    """
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise ValueError(f"`{name}` must be an integer: {value!r}")
    if value < 1:
        raise ValueError(f"`{name}` must be a positive integer: {value}")


def validate_probability(name: str, value: float, *, upper: float = 1.0) -> None:
    """
    Validates that `value` lies in [0, `upper`).

    Raises
    ------
    ValueError
        If `value` is outside of [0, `upper`).
    """
    if not (0.0 <= value < upper):
        raise ValueError(f"`{name}` must lie in [0, {upper}): {value}")


def validate_divides(n: int, m: int) -> None:
    """
    Validates that the receive antenna count divides the transmit count.

    Raises
    ------
    ValueError
        If `n` does not divide `m`.

    Examples
    --------
    >>> validate_divides(2, 64)
    >>> validate_divides(4, 10)
    Traceback (most recent call last):
        ...
    ValueError: N must divide M (N=4, M=10)
    """
    if m % n != 0:
        raise ValueError(f"N must divide M (N={n}, M={m})")


def qfunc(x: npt.ArrayLike) -> npt.NDArray[np.float64]:
    """
    Gaussian tail probability Q(x) = Pr{X > x} for X ~ N(0, 1).

    Computed through the complementary error function,
    Q(x) = erfc(x / sqrt(2)) / 2, which keeps the far tail accurate.

    Examples
    --------
    >>> float(qfunc(0.0))
    0.5
    >>> round(float(qfunc(1.0)), 6)
    0.158655
    >>> round(float(qfunc(np.sqrt(2))), 7)
    0.0786496
    """
    return np.asarray(0.5 * special.erfc(np.asarray(x, dtype=float) / np.sqrt(2.0)))


def binomial_pmf(n: int, p: float) -> npt.NDArray[np.float64]:
    """
    Probability mass of Binomial(`n`, `p`) on k = 0, ..., n.

    The terms are evaluated in the log domain so that large `n`
    neither overflows the binomial coefficient nor underflows to NaN.

    Examples
    --------
    >>> binomial_pmf(3, 0.25).round(6).tolist()
    [0.421875, 0.421875, 0.140625, 0.015625]
    >>> binomial_pmf(2, 0.0).tolist()
    [1.0, 0.0, 0.0]
    """
    k = np.arange(n + 1)
    with np.errstate(divide="ignore"):
        logpmf = stats.binom.logpmf(k, n, p)
    return np.asarray(np.exp(logpmf), dtype=np.float64)


def binomial_tail(n: int, p: float, k_min: int) -> float:
    """
    Upper tail Pr{Binomial(`n`, `p`) >= `k_min`}.

    Examples
    --------
    >>> round(binomial_tail(3, 0.25, 2), 6)
    0.15625
    >>> binomial_tail(4, 0.25, 0)
    1.0
    """
    if k_min <= 0:
        return 1.0
    if k_min > n:
        return 0.0
    return float(stats.binom.sf(k_min - 1, n, p))


def wilson_interval(
    successes: int, trials: int, confidence: float = 0.95
) -> tuple[float, float]:
    """
    Wilson score interval for a binomial proportion.

    Parameters
    ----------
    successes : int
        The number of observed events.
    trials : int
        The number of Bernoulli trials.
    confidence : float
        The two-sided confidence level.

    Returns
    -------
    tuple[float, float]
        The lower and upper ends of the interval.

    Examples
    --------
    >>> lo, hi = wilson_interval(0, 100)
    >>> round(lo, 12)
    0.0
    >>> round(hi, 4)
    0.037
    """
    validate_positive_int("trials", trials)
    if not 0 <= successes <= trials:
        raise ValueError(f"`successes` must lie in [0, {trials}]: {successes}")
    z = float(stats.norm.ppf(0.5 + confidence / 2))
    phat = successes / trials
    denom = 1 + z**2 / trials
    center = (phat + z**2 / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z**2 / (4 * trials**2)) / denom
    return min(phat, max(0.0, center - half)), max(phat, min(1.0, center + half))


def wilson_halfwidth(successes: int, trials: int, confidence: float = 0.95) -> float:
    """
    Half of the Wilson interval width.
    """
    lo, hi = wilson_interval(successes, trials, confidence)
    return (hi - lo) / 2


def binary_entropy(p: float) -> float:
    """
    Binary entropy H_b(p) in bits.

    Examples
    --------
    >>> binary_entropy(0.5)
    1.0
    >>> binary_entropy(0.0)
    0.0
    """
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return float(-p * math.log2(p) - (1 - p) * math.log2(1 - p))


def plugin_conditional_entropy(counts: npt.ArrayLike) -> float:
    """
    Plug-in conditional entropy H(X | Y) in bits from a joint count table.

    Parameters
    ----------
    counts : array_like
        A 2D table of joint occurrence counts, rows indexed by the input
        symbol X and columns by the output symbol Y.

    Returns
    -------
    float
        The conditional entropy of the empirical joint distribution.

    Examples
    --------
    >>> plugin_conditional_entropy([[50, 0], [0, 50]])
    0.0
    >>> plugin_conditional_entropy([[25, 25], [25, 25]])
    1.0
    """
    table = np.asarray(counts, dtype=np.float64)
    total = table.sum()
    if total <= 0:
        return 0.0
    joint = table / total
    py = np.broadcast_to(joint.sum(axis=0, keepdims=True), joint.shape)
    nonzero = joint > 0
    h = float(-np.sum(joint[nonzero] * np.log2(joint[nonzero] / py[nonzero])))
    return h if h > 0 else 0.0


def bit_mutual_information(counts: npt.ArrayLike) -> float:
    """
    Mutual information between a uniform source bit and its decoded value.

    The source entropy is known to be 1 bit, so only H(X | Y) is estimated
    from the counts.

    Examples
    --------
    >>> bit_mutual_information([[70, 0], [0, 30]])
    1.0
    >>> bit_mutual_information([[25, 25], [25, 25]])
    0.0
    """
    return max(1.0 - plugin_conditional_entropy(counts), 0.0)


def db_to_linear(value_db: float) -> float:
    """
    Converts a power ratio in decibels to a linear ratio.

    Examples
    --------
    >>> db_to_linear(0.0)
    1.0
    >>> db_to_linear(10.0)
    10.0
    """
    return float(10 ** (value_db / 10))
