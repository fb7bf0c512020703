"""
Seeded Monte-Carlo engine for the two transmission schemes.

Trials are processed in blocks of `BLOCK_TRIALS` consecutive trials. All
draws of a block come from substreams keyed by (seed, block index, role),
and blocks are reduced with integer sums, so the counters depend only on
the configuration and never on the number of workers or their scheduling.
"""

from __future__ import annotations

import dataclasses
import functools
import math
import os
import typing as t
from collections import abc
from concurrent.futures import ProcessPoolExecutor

import numpy as np
import numpy.typing as npt
import pandas as pd
import structlog

from onebit_mimo import abstract, utils
from onebit_mimo.channel import draw_channel, transmit, transmit_deterministic
from onebit_mimo.csi import (
    PilotConfig,
    estimate_csi,
    p_eps_exact,
    p_eps_majority,
    p_eps_majority_tiebreak,
)
from onebit_mimo.schemes import (
    DecoderVariant,
    SchemeKind,
    codeword_length,
    decode,
    encode,
)
from onebit_mimo.symbols import (
    BitArray,
    QuadArray,
    Role,
    RngStream,
    bits_to_codeword,
    codeword_to_bits,
    csign,
    draw_message,
    sample_complex_gaussian,
)

logger = structlog.get_logger(__name__)

BLOCK_TRIALS = 500
"""Number of consecutive trials sharing one set of substreams."""
WORKERS_ENV = "ONEBIT_MIMO_WORKERS"
"""Environment variable holding the default number of worker processes."""
MI_ESTIMATOR = "sum over bit positions of 1 - H(X|Y), plug-in, uniform source"

_T = t.TypeVar("_T")


@dataclasses.dataclass(frozen=True, kw_only=True)
class SystemConfig:
    """
    All parameters of one simulated scenario.

    Examples
    --------
    >>> cfg = SystemConfig(
    ...     scheme="tx-beamform", m=64, n=2, power=1.0, pilot_power=1.0, seed=7
    ... )
    >>> cfg.scheme
    <SchemeKind.TX_BEAMFORM: 'tx-beamform'>
    >>> cfg.csi_side
    'transmitter'
    >>> cfg.codeword_length
    2
    >>> SystemConfig(
    ...     scheme="tx-beamform", m=10, n=4, power=1.0, pilot_power=1.0, seed=7
    ... )
    Traceback (most recent call last):
        ...
    ValueError: N must divide M (N=4, M=10)
    """

    scheme: SchemeKind
    """The transmission scheme."""
    m: int
    """The number of transmit antennas M."""
    n: int
    """The number of receive antennas N."""
    power: float
    """The transmit power P (linear)."""
    pilot_power: float
    """The pilot power P_p (linear)."""
    seed: int
    """The master seed."""
    pilots: int = 1
    """The number of pilots K per channel coefficient."""
    trials: int = 10_000
    """The number of channel uses to simulate."""
    decoder: DecoderVariant = DecoderVariant.LITERAL
    """The combining rule of the receive-side scheme."""
    noiseless: bool = False
    """Non-physical diagnostic: suppress the data noise."""
    exact_csi: bool = False
    """Non-physical diagnostic: use csign(H) instead of pilot estimates."""

    def __post_init__(self) -> None:
        object.__setattr__(self, "scheme", SchemeKind(self.scheme))
        object.__setattr__(self, "decoder", DecoderVariant(self.decoder))
        utils.validate_positive_int("m", self.m)
        utils.validate_positive_int("n", self.n)
        utils.validate_positive("power", self.power)
        utils.validate_positive_int("trials", self.trials)
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"`seed` must be a 64-bit unsigned integer: {self.seed}")
        PilotConfig(self.pilot_power, self.pilots)
        if self.scheme is SchemeKind.TX_BEAMFORM:
            utils.validate_divides(self.n, self.m)

    @property
    def pilot(self) -> PilotConfig:
        """
        The pilot configuration.
        """
        return PilotConfig(self.pilot_power, self.pilots)

    @property
    def codeword_length(self) -> int:
        """
        The number of symbols per codeword, N or M.
        """
        return codeword_length(self.scheme, self.m, self.n)

    @property
    def csi_side(self) -> t.Literal["transmitter", "receiver"]:
        """
        The side of the link that uses the 1-bit CSI.
        """
        return "transmitter" if self.scheme is SchemeKind.TX_BEAMFORM else "receiver"

    @property
    def diagnostics(self) -> list[str]:
        """
        Names of the enabled non-physical diagnostic flags.
        """
        flags = dict(noiseless=self.noiseless, exact_csi=self.exact_csi)
        return [name for name, enabled in flags.items() if enabled]

    @property
    def num_blocks(self) -> int:
        return math.ceil(self.trials / BLOCK_TRIALS)


@dataclasses.dataclass(frozen=True)
class TrialStats(abstract.AbstractReport):
    """
    Error counters and derived rates of a Monte-Carlo run.

    ``counts[i, b, c]`` is the number of trials in which bit position i was
    sent as b and decoded as c. Bit 2k is the real and bit 2k+1 the
    imaginary quadrature of symbol k.
    """

    config: SystemConfig
    """The simulated configuration."""
    block_errors: int
    """The number of trials whose decoded codeword differs from the sent one."""
    counts: npt.NDArray[np.int64]
    """Joint (sent, decoded) counts per bit position, shape (2L, 2, 2)."""
    metadata: dict[str, t.Any] = dataclasses.field(default_factory=dict)
    """Estimator labels and run flags."""

    def __eq__(self, __o: object) -> bool:
        if isinstance(__o, TrialStats):
            return all(
                (
                    self.config == __o.config,
                    self.block_errors == __o.block_errors,
                    np.array_equal(self.counts, __o.counts),
                    self.metadata == __o.metadata,
                )
            )
        else:
            return NotImplemented  # pragma: no cover

    @property
    def trials(self) -> int:
        return self.config.trials

    @property
    def bit_errors(self) -> npt.NDArray[np.int64]:
        """
        Errors per bit position.
        """
        return np.asarray(self.counts[:, 0, 1] + self.counts[:, 1, 0], dtype=np.int64)

    @property
    def quadrature_errors(self) -> npt.NDArray[np.int64]:
        """
        Errors per symbol and quadrature, shape (L, 2).
        """
        return self.bit_errors.reshape(-1, 2)

    @property
    def block_error_rate(self) -> float:
        return self.block_errors / self.trials

    @property
    def bit_error_rate(self) -> float:
        return int(self.bit_errors.sum()) / (self.trials * len(self.bit_errors))

    @property
    def real_error_rate(self) -> float:
        q = self.quadrature_errors
        return int(q[:, 0].sum()) / (self.trials * len(q))

    @property
    def imag_error_rate(self) -> float:
        q = self.quadrature_errors
        return int(q[:, 1].sum()) / (self.trials * len(q))

    @property
    def block_ci95(self) -> float:
        """
        Wilson 95% half-width of the block error rate.
        """
        return utils.wilson_halfwidth(self.block_errors, self.trials)

    @property
    def bit_ci95(self) -> float:
        """
        Wilson 95% half-width of the bit error rate.
        """
        return utils.wilson_halfwidth(
            int(self.bit_errors.sum()), self.trials * len(self.bit_errors)
        )

    @property
    def mutual_information(self) -> float:
        """
        Per-bit plug-in mutual information in bits per channel use.

        Each sent bit is uniform, so the term of a bit position is 1 minus
        the empirical H(X | Y) of that bit and its decoded value. The sum
        is at most 2L and equals 2L when no bit is ever decoded wrongly.
        """
        return math.fsum(utils.bit_mutual_information(c) for c in self.counts)

    @property
    def fano_floor(self) -> float:
        """
        2L (1 - H_b(p)) for the measured bit error rate p.
        """
        return len(self.bit_errors) * (1 - utils.binary_entropy(self.bit_error_rate))

    @functools.cached_property
    def df(self) -> pd.DataFrame:
        length = len(self.bit_errors) // 2
        df = pd.DataFrame(
            dict(
                symbol=np.repeat(np.arange(length), 2),
                quadrature=np.tile(["re", "im"], length),
                errors=self.bit_errors,
                error_rate=self.bit_errors / self.trials,
                mi_bits=[utils.bit_mutual_information(c) for c in self.counts],
            )
        )
        df.attrs.update(self.metadata)
        return df


@dataclasses.dataclass(frozen=True)
class PilotErrorEstimate(abstract.AbstractReport):
    """
    Measured per-quadrature CSI error rate next to its closed forms.

    `analytic` and `analytic_tiebreak` treat the K pilot errors as
    independent; `analytic_exact` is the value the measurement converges to.
    """

    pilot: PilotConfig
    samples: int
    """The number of channel coefficients drawn."""
    seed: int
    errors: int
    """The number of wrong CSI quadratures among 2 * samples."""

    @property
    def observations(self) -> int:
        return 2 * self.samples

    @property
    def measured(self) -> float:
        return self.errors / self.observations

    @property
    def ci95(self) -> float:
        return utils.wilson_halfwidth(self.errors, self.observations)

    @property
    def analytic(self) -> float:
        return p_eps_majority(self.pilot)

    @property
    def analytic_tiebreak(self) -> float:
        return p_eps_majority_tiebreak(self.pilot)

    @property
    def analytic_exact(self) -> float:
        return p_eps_exact(self.pilot)

    @functools.cached_property
    def df(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                dict(
                    Pp=self.pilot.pilot_power,
                    K=self.pilot.pilots,
                    samples=self.samples,
                    seed=self.seed,
                    errors=self.errors,
                    measured=self.measured,
                    ci95_halfwidth=self.ci95,
                    p_eps=self.analytic,
                    p_eps_tiebreak=self.analytic_tiebreak,
                    p_eps_exact=self.analytic_exact,
                )
            ]
        )


def resolve_workers(workers: int | None = None) -> int:
    """
    Number of worker processes: the argument, else $ONEBIT_MIMO_WORKERS, else 1.

    Raises
    ------
    ValueError
        If the resolved value is not a positive integer.
    """
    if workers is None:
        env = os.environ.get(WORKERS_ENV, "").strip()
        try:
            workers = int(env) if env else 1
        except ValueError:
            raise ValueError(f"${WORKERS_ENV} must be an integer: {env!r}") from None
    utils.validate_positive_int("workers", workers)
    return workers


def _map_blocks(
    func: abc.Callable[[int], _T], num_blocks: int, workers: int
) -> list[_T]:
    if workers == 1 or num_blocks == 1:
        return [func(block) for block in range(num_blocks)]
    with ProcessPoolExecutor(max_workers=min(workers, num_blocks)) as executor:
        return list(executor.map(func, range(num_blocks)))


def _block_size(trials: int, block: int) -> int:
    return min(BLOCK_TRIALS, trials - block * BLOCK_TRIALS)


def _tally(
    bits: BitArray, decoded: QuadArray
) -> tuple[int, npt.NDArray[np.int64]]:
    decoded_bits = codeword_to_bits(decoded)
    sent = np.broadcast_to(bits, decoded_bits.shape)
    wrong = decoded_bits != sent
    block_errors = int(np.any(wrong, axis=-1).sum())
    counts = np.zeros((sent.shape[-1], 2, 2), dtype=np.int64)
    for b in (0, 1):
        for c in (0, 1):
            counts[:, b, c] = ((sent == b) & (decoded_bits == c)).sum(axis=0)
    return block_errors, counts


def _run_block(cfg: SystemConfig, block: int) -> tuple[int, npt.NDArray[np.int64]]:
    size = _block_size(cfg.trials, block)
    stream = RngStream(cfg.seed, block, Role.CHANNEL)
    h = draw_channel(stream, cfg.n, cfg.m, batch=(size,))
    if cfg.exact_csi:
        g = csign(h)
    else:
        g = estimate_csi(h, cfg.pilot, stream.with_role(Role.PILOT_NOISE))
    bits = draw_message(
        stream.with_role(Role.MESSAGE), cfg.codeword_length, batch=(size,)
    )
    x = encode(cfg.scheme, bits_to_codeword(bits), g, cfg.m)
    if cfg.noiseless:
        use = transmit_deterministic(h, x, cfg.power, np.zeros((size, cfg.n)))
    else:
        use = transmit(h, x, cfg.power, stream.with_role(Role.DATA_NOISE))
    return _tally(bits, decode(cfg.scheme, use.z, g, cfg.decoder))


def _run_conditional_block(
    cfg: SystemConfig,
    h: npt.NDArray[np.complex128],
    g: QuadArray,
    s: QuadArray,
    block: int,
) -> tuple[int, npt.NDArray[np.int64]]:
    size = _block_size(cfg.trials, block)
    x = encode(cfg.scheme, s, g, cfg.m)
    if cfg.noiseless:
        w = np.zeros((size, cfg.n), dtype=np.complex128)
    else:
        w = sample_complex_gaussian(
            RngStream(cfg.seed, block, Role.DATA_NOISE), size, cfg.n
        )
    use = transmit_deterministic(h, x, cfg.power, w)
    return _tally(codeword_to_bits(s), decode(cfg.scheme, use.z, g, cfg.decoder))


def _reduce(
    cfg: SystemConfig,
    results: list[tuple[int, npt.NDArray[np.int64]]],
    **metadata: t.Any,
) -> TrialStats:
    block_errors = sum(errors for errors, _ in results)
    counts = np.sum([counts for _, counts in results], axis=0, dtype=np.int64)
    meta: dict[str, t.Any] = dict(
        mi_estimator=MI_ESTIMATOR,
        csi_side=cfg.csi_side,
        even_pilots=cfg.pilot.tie_possible,
        diagnostics=cfg.diagnostics,
        block_trials=BLOCK_TRIALS,
    )
    meta.update(metadata)
    return TrialStats(cfg, block_errors, counts, meta)


def _log_start(event: str, cfg: SystemConfig, workers: int) -> None:
    logger.info(
        event,
        scheme=cfg.scheme.value,
        m=cfg.m,
        n=cfg.n,
        power=cfg.power,
        pilot_power=cfg.pilot_power,
        pilots=cfg.pilots,
        trials=cfg.trials,
        seed=cfg.seed,
        workers=workers,
    )
    if cfg.pilot.tie_possible and not cfg.exact_csi:
        logger.warning(
            "even_pilot_count",
            pilots=cfg.pilots,
            detail="ties resolve to +1; the closed-form CSI error is an upper bound",
        )
    if cfg.diagnostics:
        logger.warning("non_physical_diagnostics", flags=cfg.diagnostics)


def run_trials(cfg: SystemConfig, *, workers: int | None = None) -> TrialStats:
    """
    Simulates independent channel uses end to end.

    Each trial draws a fresh channel, estimates its 1-bit CSI from fresh
    pilot noise, sends a uniformly random codeword in one channel use and
    decodes it.

    Parameters
    ----------
    cfg : SystemConfig
        The scenario.
    workers : int | None
        The number of worker processes. The result does not depend on it.

    Returns
    -------
    TrialStats
        The accumulated counters.

    Examples
    --------
    >>> cfg = getfixture("noiseless_config")
    >>> stats = run_trials(cfg)
    >>> stats.block_errors
    0
    >>> stats.fano_floor
    2.0
    """
    n_workers = resolve_workers(workers)
    _log_start("trials_started", cfg, n_workers)
    results = _map_blocks(
        functools.partial(_run_block, cfg), cfg.num_blocks, n_workers
    )
    stats = _reduce(cfg, results, conditional=False)
    logger.info(
        "trials_finished",
        block_errors=stats.block_errors,
        block_error_rate=stats.block_error_rate,
        bit_error_rate=stats.bit_error_rate,
    )
    return stats


def run_conditional_trials(
    cfg: SystemConfig,
    H: npt.ArrayLike,
    G: npt.ArrayLike,
    s: npt.ArrayLike,
    *,
    workers: int | None = None,
) -> TrialStats:
    """
    Simulates a fixed (H, G, s) with fresh data noise only.

    The block error rate estimates the conditional error probability given
    by `exact_cond_error_scheme1` or `exact_cond_error_scheme2`.

    Raises
    ------
    ValueError
        If the shapes of `H`, `G` and `s` disagree with `cfg`.
    """
    h = np.asarray(H, dtype=np.complex128)
    g = np.asarray(G, dtype=np.int8)
    sv = np.asarray(s, dtype=np.int8)
    if h.shape != (cfg.n, cfg.m) or g.shape != (cfg.n, cfg.m, 2):
        raise ValueError(
            f"H and G must be ({cfg.n}, {cfg.m}) matrices: H={h.shape}, G={g.shape}"
        )
    if sv.shape != (cfg.codeword_length, 2):
        raise ValueError(
            f"The codeword must have shape ({cfg.codeword_length}, 2): {sv.shape}"
        )
    n_workers = resolve_workers(workers)
    _log_start("conditional_trials_started", cfg, n_workers)
    results = _map_blocks(
        functools.partial(_run_conditional_block, cfg, h, g, sv),
        cfg.num_blocks,
        n_workers,
    )
    return _reduce(cfg, results, conditional=True)


def estimate_mutual_information(
    cfg: SystemConfig, *, workers: int | None = None
) -> TrialStats:
    """
    Runs the scenario and reports its per-bit plug-in mutual information.

    The estimate is an achievable-rate proxy in bits per channel use and
    never exceeds the 2N (or 2M) bits the scheme carries.
    """
    stats = run_trials(cfg, workers=workers)
    logger.info(
        "mutual_information",
        mi_bits_per_use=stats.mutual_information,
        fano_floor=stats.fano_floor,
        estimator=MI_ESTIMATOR,
    )
    return stats


def _pilot_error_block(
    cfg: PilotConfig, samples: int, seed: int, block: int
) -> int:
    size = _block_size(samples, block)
    stream = RngStream(seed, block, Role.CHANNEL)
    h = sample_complex_gaussian(stream, size)
    g = estimate_csi(h, cfg, stream.with_role(Role.PILOT_NOISE))
    return int((g != csign(h)).sum())


def estimate_pilot_error(
    pilot_power: float,
    pilots: int,
    samples: int,
    seed: int,
    *,
    workers: int | None = None,
) -> PilotErrorEstimate:
    """
    Measures the per-quadrature error rate of the K-pilot CSI estimate.

    Parameters
    ----------
    pilot_power : float
        The pilot power P_p.
    pilots : int
        The number of pilots K.
    samples : int
        The number of channel coefficients; both quadratures are counted.
    seed : int
        The master seed.
    workers : int | None
        The number of worker processes.

    Returns
    -------
    PilotErrorEstimate
        The measured rate with its Wilson interval and closed forms.
    """
    cfg = PilotConfig(pilot_power, pilots)
    utils.validate_positive_int("samples", samples)
    n_workers = resolve_workers(workers)
    logger.info(
        "pilot_error_started",
        pilot_power=pilot_power,
        pilots=pilots,
        samples=samples,
        seed=seed,
        workers=n_workers,
    )
    errors = _map_blocks(
        functools.partial(_pilot_error_block, cfg, samples, seed),
        math.ceil(samples / BLOCK_TRIALS),
        n_workers,
    )
    return PilotErrorEstimate(cfg, samples, seed, sum(errors))
