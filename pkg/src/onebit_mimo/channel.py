from __future__ import annotations

import dataclasses
import math

import numpy as np
import numpy.typing as npt

from onebit_mimo import utils
from onebit_mimo.symbols import (
    ComplexArray,
    QuadArray,
    RngStream,
    csign,
    sample_complex_gaussian,
)


@dataclasses.dataclass(frozen=True)
class ChannelUse:
    """
    The result of one use of the quantized channel.

    Examples
    --------
    >>> use = transmit_deterministic([[1 + 0j]], [1 + 0j], 4.0, [0j])
    >>> use.y.tolist()
    [(2+0j)]
    >>> use.z.tolist()
    [[1, 1]]
    """

    y: ComplexArray
    """Unquantized receive samples, shape (..., N)."""
    z: QuadArray
    """Quantized receive symbols, shape (..., N, 2)."""


def draw_channel(
    rng: RngStream | np.random.Generator,
    n: int,
    m: int,
    *,
    batch: tuple[int, ...] = (),
) -> ComplexArray:
    """
    Draws Rayleigh channel matrices with i.i.d. CN(0, 1) entries.

    Parameters
    ----------
    rng : RngStream | numpy.random.Generator
        The channel substream.
    n : int
        The number of receive antennas.
    m : int
        The number of transmit antennas.
    batch : tuple[int, ...]
        Leading batch dimensions.

    Returns
    -------
    numpy.ndarray
        A complex array of shape ``batch + (n, m)``.
    """
    return sample_complex_gaussian(rng, *batch, n, m)


def _validate(h: ComplexArray, x: ComplexArray, power: float) -> None:
    utils.validate_positive("power", power)
    if h.ndim < 2:
        raise ValueError(f"The channel must be a matrix: shape={h.shape}")
    if x.ndim < 1 or h.shape[-1] != x.shape[-1]:
        raise ValueError(
            "The transmit vector length must equal the number of channel columns: "
            f"H.shape={h.shape}, x.shape={x.shape}"
        )


def transmit(
    H: npt.ArrayLike,
    x: npt.ArrayLike,
    power: float,
    rng: RngStream | np.random.Generator,
) -> ChannelUse:
    """
    Sends `x` through the channel with fresh AWGN and 1-bit quantization.

    Computes y = sqrt(P / M) * H x + w with w i.i.d. CN(0, 1) per receive
    antenna, and z = csign(y).

    Parameters
    ----------
    H : array_like
        Channel matrices of shape (..., N, M).
    x : array_like
        Transmit vectors of shape (..., M) with unit-energy entries.
    power : float
        The total transmit power P.
    rng : RngStream | numpy.random.Generator
        The data-noise substream.

    Returns
    -------
    ChannelUse
        The receive samples and their quantized values.

    Raises
    ------
    ValueError
        If the dimensions disagree or `power` is not positive.
    """
    h = np.asarray(H, dtype=np.complex128)
    xv = np.asarray(x, dtype=np.complex128)
    _validate(h, xv, power)
    batch = np.broadcast_shapes(h.shape[:-2], xv.shape[:-1])
    w = sample_complex_gaussian(rng, *batch, h.shape[-2])
    return transmit_deterministic(h, xv, power, w)


def transmit_deterministic(
    H: npt.ArrayLike,
    x: npt.ArrayLike,
    power: float,
    w: npt.ArrayLike,
) -> ChannelUse:
    """
    Same as `transmit` with an explicitly supplied noise vector.

    Examples
    --------
    >>> transmit_deterministic([[1j]], [1], 1.0, [0j]).z.tolist()
    [[1, 1]]
    >>> transmit_deterministic([[1]], [1], 1.0, [-3 + 0j]).z.tolist()
    [[-1, 1]]
    """
    h = np.asarray(H, dtype=np.complex128)
    xv = np.asarray(x, dtype=np.complex128)
    wv = np.asarray(w, dtype=np.complex128)
    _validate(h, xv, power)
    if wv.ndim < 1 or wv.shape[-1] != h.shape[-2]:
        raise ValueError(
            "The noise vector length must equal the number of channel rows: "
            f"H.shape={h.shape}, w.shape={wv.shape}"
        )
    m = h.shape[-1]
    y = math.sqrt(power / m) * np.einsum("...nm,...m->...n", h, xv) + wv
    return ChannelUse(y=y, z=csign(y))
