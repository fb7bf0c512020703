"""
1-bit channel state information from K quantized pilot observations.

Every channel coefficient is trained by its own orthogonal pilot slot,
so the K observations of one entry are sqrt(P_p) * h + w_k with
independent CN(0, 1) noise, and the estimate is the per-quadrature
majority of their signs.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np
import numpy.typing as npt
from scipy import integrate, stats

from onebit_mimo import utils
from onebit_mimo.symbols import QuadArray, RngStream, csign, sample_complex_gaussian


@dataclasses.dataclass(frozen=True)
class PilotConfig:
    """
    Pilot power and the number of pilots per channel coefficient.

    Examples
    --------
    >>> PilotConfig(pilot_power=1.0, pilots=3)
    PilotConfig(pilot_power=1.0, pilots=3)
    >>> PilotConfig(pilot_power=1.0, pilots=2).tie_possible
    True
    """

    pilot_power: float
    """The pilot power P_p (linear)."""
    pilots: int = 1
    """The number of pilots K."""

    def __post_init__(self) -> None:
        utils.validate_positive("pilot_power", self.pilot_power)
        utils.validate_positive_int("pilots", self.pilots)

    @property
    def tie_possible(self) -> bool:
        """
        Whether the majority vote can tie, which happens for even K.
        """
        return self.pilots % 2 == 0


def majority_vote(per_pilot: npt.ArrayLike) -> QuadArray:
    """
    Per-quadrature majority over the leading (pilot) axis.

    A tied vote resolves to +1, the same rule the quantizer applies to a
    zero quadrature.

    Examples
    --------
    >>> majority_vote([[1, 1], [1, -1], [-1, -1]]).tolist()
    [1, -1]
    >>> majority_vote([[1, -1], [-1, 1]]).tolist()
    [1, 1]
    """
    total = np.asarray(per_pilot, dtype=np.int64).sum(axis=0)
    return np.where(total >= 0, 1, -1).astype(np.int8)


def estimate_csi_deterministic(
    H: npt.ArrayLike, cfg: PilotConfig, W: npt.ArrayLike
) -> QuadArray:
    """
    Estimates 1-bit CSI from explicitly supplied pilot noise.

    Parameters
    ----------
    H : array_like
        Channel coefficients of any shape, typically (..., N, M).
    cfg : PilotConfig
        The pilot configuration.
    W : array_like
        Pilot noise of shape ``(cfg.pilots,) + H.shape``.

    Returns
    -------
    numpy.ndarray
        The CSI signs, shape ``H.shape + (2,)``.

    Examples
    --------
    >>> h = np.array([[0.5 - 2j]])
    >>> estimate_csi_deterministic(h, PilotConfig(1.0), np.zeros((1, 1, 1))).tolist()
    [[[1, -1]]]
    """
    h = np.asarray(H, dtype=np.complex128)
    w = np.asarray(W, dtype=np.complex128)
    if w.shape != (cfg.pilots, *h.shape):
        raise ValueError(
            f"The pilot noise must have shape {(cfg.pilots, *h.shape)}: {w.shape}"
        )
    received = math.sqrt(cfg.pilot_power) * h[np.newaxis] + w
    return majority_vote(csign(received))


def estimate_csi(
    H: npt.ArrayLike, cfg: PilotConfig, rng: RngStream | np.random.Generator
) -> QuadArray:
    """
    Estimates 1-bit CSI from K noisy quantized pilot observations.

    Parameters
    ----------
    H : array_like
        Channel coefficients of any shape, typically (..., N, M).
    cfg : PilotConfig
        The pilot configuration.
    rng : RngStream | numpy.random.Generator
        The pilot-noise substream.

    Returns
    -------
    numpy.ndarray
        The CSI signs, shape ``H.shape + (2,)``.
    """
    h = np.asarray(H, dtype=np.complex128)
    w = sample_complex_gaussian(rng, cfg.pilots, *h.shape)
    return estimate_csi_deterministic(h, cfg, w)


def p_eps_single(pilot_power: float) -> float:
    """
    Probability that one pilot's sign disagrees with the channel's sign.

    Evaluates 1/2 - arctan(sqrt(P_p)) / pi for a single quadrature.

    Raises
    ------
    ValueError
        If `pilot_power` is not positive.

    Examples
    --------
    >>> round(p_eps_single(1.0), 12)
    0.25
    >>> round(p_eps_single(3.0), 12)
    0.166666666667
    """
    utils.validate_positive("pilot_power", pilot_power)
    return float(0.5 - math.atan(math.sqrt(pilot_power)) / math.pi)


def p_eps_majority(cfg: PilotConfig) -> float:
    """
    Probability that the K-pilot majority estimate of a quadrature is wrong.

    Sums the binomial terms from ceil(K/2) to K with the single-pilot error
    probability, which treats the K pilot errors as independent. They are
    not: every pilot of one entry sees the same channel coefficient, so for
    K >= 3 the estimator's actual error is larger, see `p_eps_exact`. For
    even K the tie term is counted fully as an error.

    Examples
    --------
    >>> round(p_eps_majority(PilotConfig(1.0, 1)), 12)
    0.25
    >>> round(p_eps_majority(PilotConfig(1.0, 3)), 12)
    0.15625
    >>> round(p_eps_majority(PilotConfig(3.0, 3)), 6)
    0.074074
    """
    p = p_eps_single(cfg.pilot_power)
    return utils.binomial_tail(cfg.pilots, p, math.ceil(cfg.pilots / 2))


def p_eps_majority_tiebreak(cfg: PilotConfig) -> float:
    """
    Independent-pilot majority error with ties resolved to +1.

    A tie is wrong only when the true sign is -1, which happens with
    probability 1/2, so half of the tie mass counts. Equal to
    `p_eps_majority` for odd K, and exact only for K <= 2.

    Examples
    --------
    >>> round(p_eps_majority_tiebreak(PilotConfig(1.0, 2)), 12)
    0.25
    """
    if not cfg.tie_possible:
        return p_eps_majority(cfg)
    k = cfg.pilots
    p = p_eps_single(cfg.pilot_power)
    tie = float(utils.binomial_pmf(k, p)[k // 2])
    return utils.binomial_tail(k, p, k // 2 + 1) + 0.5 * tie


def _majority_error_given(q: float, pilots: int) -> float:
    wrong = utils.binomial_tail(pilots, q, pilots // 2 + 1)
    if pilots % 2 == 0:
        wrong += 0.5 * float(stats.binom.pmf(pilots // 2, pilots, q))
    return wrong


def p_eps_exact(cfg: PilotConfig) -> float:
    """
    Per-quadrature error of `estimate_csi`, averaged over the channel.

    Given the quadrature h of a channel coefficient, each pilot sign is
    wrong independently with probability Q(sqrt(2 P_p) |h|), and the
    majority (ties to +1) is wrong with the matching binomial tail. The
    tail is then integrated over the half-Gaussian law of |h|. Equal to
    `p_eps_single` for K = 1 and K = 2.

    Examples
    --------
    >>> round(p_eps_exact(PilotConfig(1.0, 1)), 6)
    0.25
    >>> round(p_eps_exact(PilotConfig(3.0, 2)), 6)
    0.166667
    >>> p_eps_exact(PilotConfig(1.0, 3)) > p_eps_majority(PilotConfig(1.0, 3))
    True
    """
    # u = sqrt(2) |h| is standard half-normal; Q(a u) is negligible past 12 / a
    a = math.sqrt(cfg.pilot_power)
    upper = 12.0 / max(a, 1.0)

    def integrand(u: float) -> float:
        q = float(utils.qfunc(a * u))
        return 2.0 * float(stats.norm.pdf(u)) * _majority_error_given(q, cfg.pilots)

    value, _ = integrate.quad(
        integrand, 0.0, upper, epsabs=1e-13, epsrel=1e-10, limit=200
    )
    return float(value)


def pilot_slots(m: int, pilots: int) -> int:
    """
    Training length in symbols with one orthogonal slot per antenna per round.

    Examples
    --------
    >>> pilot_slots(64, 3)
    192
    """
    utils.validate_positive_int("m", m)
    utils.validate_positive_int("pilots", pilots)
    return m * pilots
