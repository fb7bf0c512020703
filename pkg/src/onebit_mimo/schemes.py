"""
Encoders and decoders of the two single-shot transmission schemes.

``SchemeKind.TX_BEAMFORM`` carries 2N bits per channel use with a large
transmit array and CSI at the transmitter only. ``SchemeKind.RX_COMBINE``
carries 2M bits per channel use with a large receive array and CSI at the
receiver only.
"""

from __future__ import annotations

import enum
import math

import numpy as np
import numpy.typing as npt

from onebit_mimo import utils
from onebit_mimo.symbols import ComplexArray, QuadArray, to_complex


class SchemeKind(str, enum.Enum):
    TX_BEAMFORM = "tx-beamform"
    RX_COMBINE = "rx-combine"


class DecoderVariant(str, enum.Enum):
    """
    Sign-combining rule of the receive-side scheme.

    ``LITERAL`` correlates both received quadratures with the real CSI
    signs only. ``MATCHED`` correlates with the full conjugate CSI, i.e.
    the sign of G^H z.
    """

    LITERAL = "paper"
    MATCHED = "matched"


def codeword_length(scheme: SchemeKind, m: int, n: int) -> int:
    """
    Number of quadrant symbols carried per channel use.

    Examples
    --------
    >>> codeword_length(SchemeKind.TX_BEAMFORM, 64, 2)
    2
    >>> codeword_length(SchemeKind.RX_COMBINE, 2, 64)
    2
    """
    return n if scheme is SchemeKind.TX_BEAMFORM else m


def encode_tx_beamform(s: npt.ArrayLike, G: npt.ArrayLike, m: int) -> ComplexArray:
    """
    Beamforms a codeword of N symbols over M transmit antennas.

    The antennas are split into N groups of M/N consecutive indices. An
    antenna m of group n sends

        [x_R, x_I] = 1/2 [[g_R, g_I], [-g_I, g_R]] [s_R, s_I]

    with g the CSI sign of (n, m) and s the n-th codeword symbol, which
    is conj(g) * s / 2. Exactly one quadrature of each output is zero and
    the other is +-1.

    Parameters
    ----------
    s : array_like
        The codeword, shape (..., N, 2).
    G : array_like
        The CSI signs, shape (..., N, M, 2).
    m : int
        The number of transmit antennas M.

    Returns
    -------
    numpy.ndarray
        Transmit symbols of shape (..., M).

    Raises
    ------
    ValueError
        If N does not divide M or the CSI has the wrong shape.

    Examples
    --------
    >>> encode_tx_beamform([[1, 1]], [[[1, 1]]], 1).tolist()
    [(1+0j)]
    >>> encode_tx_beamform([[1, 1]], [[[1, -1]]], 1).tolist()
    [1j]
    >>> encode_tx_beamform([[1, -1]], [[[-1, -1]]], 1).tolist()
    [1j]
    """
    sv = np.asarray(s, dtype=np.int64)
    g = np.asarray(G, dtype=np.int64)
    n = sv.shape[-2]
    utils.validate_divides(n, m)
    if g.shape[-3:] != (n, m, 2):
        raise ValueError(f"The CSI must have shape (..., {n}, {m}, 2): {g.shape}")
    group = np.arange(m) // (m // n)
    g_m = g[..., group, np.arange(m), :]
    s_m = sv[..., group, :]
    gr, gi = g_m[..., 0], g_m[..., 1]
    sr, si = s_m[..., 0], s_m[..., 1]
    xr = (gr * sr + gi * si) // 2
    xi = (gr * si - gi * sr) // 2
    return np.asarray(xr + 1j * xi, dtype=np.complex128)


def decode_rx_identity(z: npt.ArrayLike) -> QuadArray:
    """
    Takes the quantized receive vector itself as the decoded codeword.

    Examples
    --------
    >>> decode_rx_identity([[-1, 1], [1, -1]]).tolist()
    [[-1, 1], [1, -1]]
    """
    return np.array(z, dtype=np.int8)


def encode_identity_scaled(s: npt.ArrayLike) -> ComplexArray:
    """
    Sends each codeword symbol from its own antenna, scaled to unit energy.

    Examples
    --------
    >>> x = encode_identity_scaled([[1, 1], [-1, -1]])
    >>> np.abs(x).round(12).tolist()
    [1.0, 1.0]
    """
    return np.asarray(to_complex(s) / math.sqrt(2.0), dtype=np.complex128)


def decode_rx_combine(
    z: npt.ArrayLike,
    G: npt.ArrayLike,
    variant: DecoderVariant = DecoderVariant.LITERAL,
) -> QuadArray:
    """
    Decodes M symbols by sign-combining the N quantized receive symbols.

    For column m of the CSI, ``LITERAL`` decides

        s_R = sign(sum_n g_R[n, m] z_R[n]),  s_I = sign(sum_n g_R[n, m] z_I[n])

    and ``MATCHED`` decides the quadratures of sign(sum_n conj(g[n, m]) z[n]).
    All sums are exact integers and a zero sum resolves to +1.

    Parameters
    ----------
    z : array_like
        Quantized receive symbols, shape (..., N, 2).
    G : array_like
        CSI signs, shape (..., N, M, 2).
    variant : DecoderVariant
        The combining rule.

    Returns
    -------
    numpy.ndarray
        The decoded codeword, shape (..., M, 2).

    Raises
    ------
    ValueError
        If the shapes of `z` and `G` disagree.

    Examples
    --------
    >>> decode_rx_combine([[1, -1]], [[[1, 1]]]).tolist()
    [[1, -1]]
    >>> decode_rx_combine([[1, 1], [-1, 1]], [[[1, 1]], [[1, 1]]]).tolist()
    [[1, 1]]
    """
    zv = np.asarray(z, dtype=np.int64)
    g = np.asarray(G, dtype=np.int64)
    if g.ndim < 3 or g.shape[-1] != 2 or zv.shape[-1] != 2:
        raise ValueError(f"Invalid shapes: z.shape={zv.shape}, G.shape={g.shape}")
    if g.shape[-3] != zv.shape[-2]:
        raise ValueError(
            "The CSI must have one row per receive antenna: "
            f"z.shape={zv.shape}, G.shape={g.shape}"
        )
    gr, gi = g[..., 0], g[..., 1]
    zr, zi = zv[..., 0], zv[..., 1]
    if variant is DecoderVariant.LITERAL:
        sums_r = _correlate(gr, zr)
        sums_i = _correlate(gr, zi)
    else:
        sums_r = _correlate(gr, zr) + _correlate(gi, zi)
        sums_i = _correlate(gr, zi) - _correlate(gi, zr)
    sums = np.stack([sums_r, sums_i], axis=-1)
    return np.where(sums >= 0, 1, -1).astype(np.int8)


def _correlate(
    g: npt.NDArray[np.int64], z: npt.NDArray[np.int64]
) -> npt.NDArray[np.int64]:
    return np.asarray(np.einsum("...nm,...n->...m", g, z), dtype=np.int64)


def encode(
    scheme: SchemeKind, s: npt.ArrayLike, G: npt.ArrayLike, m: int
) -> ComplexArray:
    """
    Encodes a codeword with the transmitter of `scheme`.

    The receive-side scheme ignores `G`, as its transmitter has no CSI.
    """
    if scheme is SchemeKind.TX_BEAMFORM:
        return encode_tx_beamform(s, G, m)
    return encode_identity_scaled(s)


def decode(
    scheme: SchemeKind,
    z: npt.ArrayLike,
    G: npt.ArrayLike,
    variant: DecoderVariant = DecoderVariant.LITERAL,
) -> QuadArray:
    """
    Decodes a quantized receive vector with the receiver of `scheme`.

    The transmit-side scheme ignores `G`, as its receiver has no CSI.
    """
    if scheme is SchemeKind.TX_BEAMFORM:
        return decode_rx_identity(z)
    return decode_rx_combine(z, G, variant)
