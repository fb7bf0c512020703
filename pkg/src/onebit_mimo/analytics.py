"""
Closed-form error bounds and exact conditional-error oracles.

The bounds evaluate the union, Q-function and Chernoff expressions for
the transmit-side scheme and the majority-tail expression for the
receive-side scheme. The oracles condition on a fixed (H, G, s) so that
the only randomness left is the Gaussian data noise, which makes every
receive quadrature an independent biased coin.
"""

from __future__ import annotations

import dataclasses
import functools
import math
import typing as t

import numpy as np
import numpy.typing as npt
import pandas as pd
import structlog

from onebit_mimo import abstract, utils
from onebit_mimo.csi import PilotConfig, p_eps_majority
from onebit_mimo.schemes import (
    DecoderVariant,
    SchemeKind,
    codeword_length,
    encode_identity_scaled,
    encode_tx_beamform,
)

logger = structlog.get_logger(__name__)

DEFAULT_MAX_STATES = 2_000_000
"""State budget of the exact combining-sum enumeration."""


@dataclasses.dataclass(frozen=True)
class BoundReport(abstract.AbstractReport):
    """
    The value of an error bound with its per-term contributions.

    Examples
    --------
    >>> report = scheme2_asymptotic_error(0.25, 4, 1)
    >>> round(report.value, 10)
    0.5234375
    >>> report.vacuous
    False
    >>> report.df["contribution"].round(3).tolist()
    [0.422, 0.094, 0.008]
    """

    name: str
    """The name of the bound."""
    components: tuple[float, ...]
    """Per-term contributions; their sum is the bound."""
    params: dict[str, float] = dataclasses.field(default_factory=dict)
    """The parameters the bound was evaluated at."""

    @property
    def value(self) -> float:
        """
        The bound, i.e. the sum of the components.
        """
        return math.fsum(self.components)

    @property
    def vacuous(self) -> bool:
        """
        Whether the bound exceeds 1 and so says nothing about a probability.
        """
        return self.value > 1.0

    @functools.cached_property
    def df(self) -> pd.DataFrame:
        df = pd.DataFrame(
            dict(
                term=np.arange(len(self.components)),
                contribution=np.asarray(self.components, dtype=float),
            )
        )
        df.attrs.update(name=self.name, **self.params)
        return df


def _report(name: str, components: npt.ArrayLike, **params: float) -> BoundReport:
    values = np.asarray(components, dtype=np.float64).ravel()
    report = BoundReport(name, tuple(float(v) for v in values), dict(params))
    if report.vacuous:
        logger.warning("vacuous_bound", bound=name, value=report.value, **params)
    return report


def _resolve_p_eps(pilot_power: float, pilots: int, p_eps: float | None) -> float:
    if p_eps is None:
        return p_eps_majority(PilotConfig(pilot_power, pilots))
    utils.validate_probability("p_eps", p_eps, upper=0.5)
    return p_eps


def scheme1_noise_var(power: float, n: int) -> float:
    """
    Variance of the effective per-quadrature noise of the transmit-side scheme.

    Interference from the other N - 1 antenna groups plus the thermal
    noise gives (P (N - 1) + N) / (2N).

    Examples
    --------
    >>> scheme1_noise_var(10.0, 4)
    4.25
    >>> scheme1_noise_var(1.0, 1)
    0.5
    """
    utils.validate_positive("power", power)
    utils.validate_positive_int("n", n)
    return (power * (n - 1) + n) / (2 * n)


def scheme2_noise_var(power: float, m: int) -> float:
    """
    Variance of the effective per-quadrature noise of the receive-side scheme.

    Examples
    --------
    >>> scheme2_noise_var(1.0, 1)
    0.75
    >>> scheme2_noise_var(2.0, 2)
    1.25
    """
    utils.validate_positive("power", power)
    utils.validate_positive_int("m", m)
    return power / (2 * m) * (2 * m - 1) / 2 + 0.5


def mean_abs_halfgaussian() -> float:
    """
    Mean of |h| for a zero-mean Gaussian quadrature with variance 1/2.

    Examples
    --------
    >>> round(mean_abs_halfgaussian(), 7)
    0.5641896
    """
    return 1 / math.sqrt(math.pi)


def scheme1_beta(power: float, m: int, n: int) -> float:
    """
    Per-antenna signal-to-noise factor sqrt(P/M) E|h_R| / sigma.

    Examples
    --------
    >>> round(scheme1_beta(1.0, 4, 2), 5)
    0.32574
    >>> round(scheme1_beta(4.0, 4, 1), 5)
    0.79788
    """
    utils.validate_positive_int("m", m)
    sigma = math.sqrt(scheme1_noise_var(power, n))
    return math.sqrt(power / m) * mean_abs_halfgaussian() / sigma


def scheme1_union_bound(
    power: float,
    pilot_power: float,
    pilots: int,
    m: int,
    n: int,
    *,
    p_eps: float | None = None,
) -> BoundReport:
    """
    Union bound on the block error of the transmit-side scheme.

    With L = M/N antennas per group of which k carry a wrong CSI sign,

        P_e <= 2N sum_k C(L, k) p^k (1 - p)^(L - k) Q(beta (L - 2k)).

    Parameters
    ----------
    power : float
        The transmit power P.
    pilot_power : float
        The pilot power P_p.
    pilots : int
        The number of pilots K.
    m : int
        The number of transmit antennas M.
    n : int
        The number of receive antennas N, which must divide M.
    p_eps : float | None
        Overrides the CSI error probability derived from the pilots.

    Returns
    -------
    BoundReport
        One component per k = 0, ..., L.

    Examples
    --------
    >>> report = scheme1_union_bound(1.0, 1.0, 1, 4, 2, p_eps=0.0)
    >>> round(report.value, 2)
    1.03
    >>> report.vacuous
    True
    """
    utils.validate_divides(n, m)
    p = _resolve_p_eps(pilot_power, pilots, p_eps)
    big_l = m // n
    beta = scheme1_beta(power, m, n)
    k = np.arange(big_l + 1)
    pmf = utils.binomial_pmf(big_l, p)
    components = 2 * n * pmf * utils.qfunc(beta * (big_l - 2 * k))
    return _report(
        "scheme1_union",
        components,
        power=power,
        pilot_power=pilot_power,
        pilots=pilots,
        m=m,
        n=n,
        p_eps=p,
    )


def scheme1_chernoff_bound(
    power: float,
    pilot_power: float,
    pilots: int,
    m: int,
    n: int,
    *,
    p_eps: float | None = None,
) -> BoundReport:
    """
    Exponential bound on the block error of the transmit-side scheme.

    Terms with k <= L/2 wrong CSI signs use Q(x) <= exp(-x^2 / 2); terms
    with a wrong-sign majority are bounded by their binomial mass.

    Examples
    --------
    >>> report = scheme1_chernoff_bound(1.0, 1.0, 1, 4, 2, p_eps=0.0)
    >>> beta = scheme1_beta(1.0, 4, 2)
    >>> bool(np.isclose(report.value, 4 * np.exp(-(beta**2) * 4 / 2)))
    True
    """
    utils.validate_divides(n, m)
    p = _resolve_p_eps(pilot_power, pilots, p_eps)
    big_l = m // n
    beta = scheme1_beta(power, m, n)
    k = np.arange(big_l + 1)
    pmf = utils.binomial_pmf(big_l, p)
    factor = np.where(
        k <= big_l // 2, np.exp(-(beta**2) * (big_l - 2 * k) ** 2 / 2), 1.0
    )
    return _report(
        "scheme1_chernoff",
        2 * n * pmf * factor,
        power=power,
        pilot_power=pilot_power,
        pilots=pilots,
        m=m,
        n=n,
        p_eps=p,
    )


def scheme2_asymptotic_error(p_eps: float, n: int, m: int) -> BoundReport:
    """
    Large-N block error of the receive-side scheme.

    Each of the 2M decoded quadratures fails when at least half of its N
    CSI signs are wrong; the union over quadratures gives
    2M Pr{Binomial(N, p) >= ceil(N/2)}.

    Raises
    ------
    ValueError
        If `p_eps` is outside [0, 1/2).

    Examples
    --------
    >>> scheme2_asymptotic_error(0.0, 8, 2).value
    0.0
    """
    utils.validate_probability("p_eps", p_eps, upper=0.5)
    utils.validate_positive_int("n", n)
    utils.validate_positive_int("m", m)
    pmf = utils.binomial_pmf(n, p_eps)
    return _report(
        "scheme2_asymptotic",
        2 * m * pmf[math.ceil(n / 2) :],
        p_eps=p_eps,
        n=n,
        m=m,
    )


def scheme2_chernoff_bound(p_eps: float, n: int, m: int) -> BoundReport:
    """
    Exponential bound 2M (4p(1 - p))^(N/2) on the receive-side block error.

    Examples
    --------
    >>> scheme2_chernoff_bound(0.25, 4, 1).value
    1.125
    """
    utils.validate_probability("p_eps", p_eps, upper=0.5)
    utils.validate_positive_int("n", n)
    utils.validate_positive_int("m", m)
    value = 2 * m * (4 * p_eps * (1 - p_eps)) ** (n / 2)
    return _report("scheme2_chernoff", [value], p_eps=p_eps, n=n, m=m)


def effective_tx_antennas(m: int, p_eps: float) -> float:
    """
    Number of transmit antennas left after CSI errors cancel, M (1 - 2p).

    Examples
    --------
    >>> effective_tx_antennas(100, 0.25)
    50.0
    """
    utils.validate_probability("p_eps", p_eps, upper=0.5)
    return m * (1 - 2 * p_eps)


def effective_rx_antennas(n: int, p_eps: float) -> float:
    """
    Receive-side counterpart of `effective_tx_antennas`, N (1 - 2p).
    """
    utils.validate_probability("p_eps", p_eps, upper=0.5)
    return n * (1 - 2 * p_eps)


def capacity_upper_bound(m: int, n: int) -> int:
    """
    Converse on the capacity in bits per channel use, 2 min(M, N).

    Examples
    --------
    >>> capacity_upper_bound(64, 2)
    4
    """
    utils.validate_positive_int("m", m)
    utils.validate_positive_int("n", n)
    return 2 * min(m, n)


def capacity_limit(scheme: SchemeKind, m: int, n: int) -> int:
    """
    Rate carried by `scheme` in bits per channel use, 2N or 2M.
    """
    return 2 * codeword_length(scheme, m, n)


def _received_signal(
    h: npt.NDArray[np.complex128], x: npt.NDArray[np.complex128], power: float
) -> npt.NDArray[np.complex128]:
    utils.validate_positive("power", power)
    m = h.shape[-1]
    return np.asarray(math.sqrt(power / m) * (h @ x), dtype=np.complex128)


def exact_cond_error_scheme1(
    H: npt.ArrayLike, G: npt.ArrayLike, s: npt.ArrayLike, power: float
) -> float:
    """
    Exact block error of the transmit-side scheme given (H, G, s).

    Each receive quadrature is its deterministic signal a plus Gaussian
    noise of variance 1/2, so it flips with probability Q(s a sqrt(2)),
    independently of every other quadrature.

    Examples
    --------
    >>> round(exact_cond_error_scheme1([[1 + 1j]], [[[1, 1]]], [[1, 1]], 1.0), 4)
    0.1511
    """
    h = np.asarray(H, dtype=np.complex128)
    sv = np.asarray(s, dtype=np.int64)
    x = encode_tx_beamform(sv, G, h.shape[-1])
    a = _received_signal(h, x, power)
    aligned = np.stack([a.real * sv[:, 0], a.imag * sv[:, 1]], axis=-1)
    errors = utils.qfunc(aligned * math.sqrt(2.0))
    return float(1.0 - np.prod(1.0 - errors))


def _sign_agreement_probability(
    vectors: npt.NDArray[np.int64],
    probabilities: npt.NDArray[np.float64],
    target: npt.NDArray[np.int64],
    max_states: int,
) -> float:
    # vectors: (N, O, D) per-antenna contributions of each outcome,
    # probabilities: (N, O). Returns Pr{sign(sum) == target} componentwise.
    states = np.zeros((1, vectors.shape[-1]), dtype=np.int64)
    mass = np.ones(1)
    for vecs, probs in zip(vectors, probabilities):
        keep = probs > 0
        candidates = (states[:, np.newaxis, :] + vecs[keep][np.newaxis, :, :]).reshape(
            -1, states.shape[-1]
        )
        weights = (mass[:, np.newaxis] * probs[keep][np.newaxis, :]).ravel()
        states, inverse = np.unique(candidates, axis=0, return_inverse=True)
        mass = np.bincount(inverse.ravel(), weights=weights, minlength=len(states))
        if len(states) > max_states:
            raise ValueError(
                f"The combining-sum enumeration exceeded {max_states} states"
            )
    decided = np.where(states >= 0, 1, -1)
    agree = np.all(decided == target[np.newaxis, :], axis=1)
    logger.debug("combining_sum_states", states=len(states))
    return float(mass[agree].sum())


def exact_cond_error_scheme2(
    H: npt.ArrayLike,
    G: npt.ArrayLike,
    s: npt.ArrayLike,
    power: float,
    variant: DecoderVariant = DecoderVariant.LITERAL,
    *,
    max_states: int = DEFAULT_MAX_STATES,
) -> float:
    """
    Exact block error of the receive-side scheme given (H, G, s).

    The quantized quadratures z_R[n], z_I[n] are independent +-1 variables
    with Pr{-1} = Q(a sqrt(2)) for the deterministic signal a. The joint
    distribution of the 2M combining sums is built antenna by antenna
    (a Poisson-binomial style convolution with states merged by value),
    and the decoder succeeds when every sum has the sign of s. For the
    ``LITERAL`` rule the real and imaginary sums are independent and are
    enumerated separately.

    Parameters
    ----------
    H : array_like
        The channel, shape (N, M).
    G : array_like
        The CSI signs, shape (N, M, 2).
    s : array_like
        The codeword, shape (M, 2).
    power : float
        The transmit power P.
    variant : DecoderVariant
        The combining rule.
    max_states : int
        The largest number of distinct partial-sum states allowed.

    Returns
    -------
    float
        The conditional block error probability.

    Raises
    ------
    ValueError
        If shapes disagree or the enumeration exceeds `max_states`.

    Examples
    --------
    >>> round(exact_cond_error_scheme2([[1 + 0j]], [[[1, 1]]], [[1, 1]], 1.0), 5)
    0.29214
    """
    h = np.asarray(H, dtype=np.complex128)
    g = np.asarray(G, dtype=np.int64)
    sv = np.asarray(s, dtype=np.int64)
    n, m = h.shape
    if g.shape != (n, m, 2) or sv.shape != (m, 2):
        raise ValueError(
            f"Inconsistent shapes: H={h.shape}, G={g.shape}, s={sv.shape}"
        )
    a = _received_signal(h, encode_identity_scaled(sv), power)
    # Pr{z = +1} and Pr{z = -1} per antenna and quadrature
    minus_r = utils.qfunc(a.real * math.sqrt(2.0))
    minus_i = utils.qfunc(a.imag * math.sqrt(2.0))
    plus_r = utils.qfunc(-a.real * math.sqrt(2.0))
    plus_i = utils.qfunc(-a.imag * math.sqrt(2.0))
    gr, gi = g[..., 0], g[..., 1]
    signs = np.array([1, -1])
    if variant is DecoderVariant.LITERAL:
        vectors = gr[:, np.newaxis, :] * signs[np.newaxis, :, np.newaxis]
        success_r = _sign_agreement_probability(
            vectors, np.stack([plus_r, minus_r], axis=1), sv[:, 0], max_states
        )
        success_i = _sign_agreement_probability(
            vectors, np.stack([plus_i, minus_i], axis=1), sv[:, 1], max_states
        )
        success = success_r * success_i
    else:
        outcomes = [(zr, zi) for zr in (1, -1) for zi in (1, -1)]
        vectors = np.stack(
            [
                np.concatenate([gr * zr + gi * zi, gr * zi - gi * zr], axis=1)
                for zr, zi in outcomes
            ],
            axis=1,
        )
        prob_r = {1: plus_r, -1: minus_r}
        prob_i = {1: plus_i, -1: minus_i}
        probabilities = np.stack(
            [prob_r[zr] * prob_i[zi] for zr, zi in outcomes], axis=1
        )
        target = np.concatenate([sv[:, 0], sv[:, 1]])
        success = _sign_agreement_probability(
            vectors, probabilities, target, max_states
        )
    return float(min(1.0, max(0.0, 1.0 - success)))


def bound_columns(
    scheme: SchemeKind,
    power: float,
    pilot_power: float,
    pilots: int,
    m: int,
    n: int,
    *,
    p_eps: float | None = None,
) -> dict[str, t.Any]:
    """
    Bound values of `scheme` keyed by result column.

    Columns that do not apply to the scheme are None. So are the
    receive-side columns when an even pilot count, whose ties count fully
    as errors, pushes the CSI error probability to 1/2 or beyond.

    Examples
    --------
    >>> columns = bound_columns(SchemeKind.RX_COMBINE, 1.0, 0.1, 2, 2, 8)
    >>> columns["bound_asymptotic"] is None, round(columns["p_eps"], 4)
    (True, 0.643)
    """
    p = _resolve_p_eps(pilot_power, pilots, p_eps)
    if scheme is SchemeKind.TX_BEAMFORM:
        return dict(
            bound_union=scheme1_union_bound(
                power, pilot_power, pilots, m, n, p_eps=p
            ).value,
            bound_chernoff=scheme1_chernoff_bound(
                power, pilot_power, pilots, m, n, p_eps=p
            ).value,
            bound_asymptotic=None,
            p_eps=p,
        )
    if p >= 0.5:
        logger.warning(
            "p_eps_out_of_range", p_eps=p, pilot_power=pilot_power, pilots=pilots
        )
        return dict(
            bound_union=None, bound_chernoff=None, bound_asymptotic=None, p_eps=p
        )
    return dict(
        bound_union=None,
        bound_chernoff=scheme2_chernoff_bound(p, n, m).value,
        bound_asymptotic=scheme2_asymptotic_error(p, n, m).value,
        p_eps=p,
    )
