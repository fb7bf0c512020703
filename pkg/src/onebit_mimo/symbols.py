"""
Quantized-signal primitives shared by every other module.

A quadrant symbol from {±1±j} is stored as a pair of int8 signs on a
trailing axis of length 2, so a CSI matrix has shape (N, M, 2) and a
codeword of L symbols has shape (L, 2). Complex samples are plain
complex128 arrays.
"""

from __future__ import annotations

import dataclasses
import enum
import math
import typing as t

import numpy as np
import numpy.typing as npt

QuadArray: t.TypeAlias = npt.NDArray[np.int8]
"""Sign pairs (real, imaginary) on the trailing axis."""
ComplexArray: t.TypeAlias = npt.NDArray[np.complex128]
BitArray: t.TypeAlias = npt.NDArray[np.uint8]

QUAD_ALPHABET: QuadArray = np.array([[1, 1], [1, -1], [-1, 1], [-1, -1]], dtype=np.int8)
"""The four quadrant symbols 1+j, 1-j, -1+j, -1-j."""


class Role(enum.IntEnum):
    """
    Independent random substreams used within one trial block.
    """

    CHANNEL = 0
    PILOT_NOISE = 1
    DATA_NOISE = 2
    MESSAGE = 3


@dataclasses.dataclass(frozen=True)
class RngStream:
    """
    A reproducible random substream keyed by (seed, index, role).

    The stream is backed by the counter-based Philox generator. Equal keys
    reproduce equal draw sequences, and distinct keys give statistically
    independent streams, so draws never depend on execution order.

    Examples
    --------
    >>> a = RngStream(seed=7, index=3, role=Role.CHANNEL)
    >>> b = RngStream(seed=7, index=3, role=Role.CHANNEL)
    >>> bool(np.all(a.generator().random(4) == b.generator().random(4)))
    True
    >>> c = a.with_role(Role.DATA_NOISE)
    >>> bool(np.all(a.generator().random(4) == c.generator().random(4)))
    False
    """

    seed: int
    """The master seed, a 64-bit unsigned integer."""
    index: int = 0
    """The trial (block) index."""
    role: Role = Role.CHANNEL
    """The role of the draws within the trial."""

    def __post_init__(self) -> None:
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"`seed` must be a 64-bit unsigned integer: {self.seed}")
        if self.index < 0:
            raise ValueError(f"`index` must be non-negative: {self.index}")

    def generator(self) -> np.random.Generator:
        """
        Returns a fresh generator positioned at the start of the substream.
        """
        seq = np.random.SeedSequence(self.seed, spawn_key=(self.index, int(self.role)))
        return np.random.Generator(np.random.Philox(seq))

    def with_role(self, role: Role) -> RngStream:
        """
        Returns the sibling substream of the same trial with another role.
        """
        return dataclasses.replace(self, role=role)


def _as_generator(rng: RngStream | np.random.Generator) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    return rng


def csign(c: npt.ArrayLike) -> QuadArray:
    """
    Quantizes complex samples to quadrant symbols.

    Each quadrature maps to +1 when it is non-negative and to -1
    otherwise, so a zero quadrature quantizes to +1.

    Parameters
    ----------
    c : array_like
        Finite complex samples of any shape.

    Returns
    -------
    numpy.ndarray
        An int8 array of shape ``c.shape + (2,)``.

    Examples
    --------
    >>> csign(0.5 - 0.3j).tolist()
    [1, -1]
    >>> csign(0j).tolist()
    [1, 1]
    >>> csign([-2 + 3j, 1 + 1j]).tolist()
    [[-1, 1], [1, 1]]
    """
    arr = np.asarray(c, dtype=np.complex128)
    out = np.empty(arr.shape + (2,), dtype=np.int8)
    out[..., 0] = np.where(arr.real >= 0, 1, -1)
    out[..., 1] = np.where(arr.imag >= 0, 1, -1)
    return out


def to_complex(q: npt.ArrayLike) -> ComplexArray:
    """
    Converts quadrant symbols to their complex values.

    Examples
    --------
    >>> to_complex([[1, -1], [-1, 1]]).tolist()
    [(1-1j), (-1+1j)]
    """
    arr = np.asarray(q)
    return np.asarray(arr[..., 0] + 1j * arr[..., 1], dtype=np.complex128)


def sample_complex_gaussian(
    rng: RngStream | np.random.Generator, *shape: int
) -> ComplexArray:
    """
    Draws i.i.d. circularly-symmetric complex Gaussian samples.

    Each entry has independent real and imaginary parts, each zero-mean
    with variance 1/2, so the total variance is 1.

    Parameters
    ----------
    rng : RngStream | numpy.random.Generator
        The substream (or an already opened generator) to draw from.
    shape : int
        The dimensions of the result, e.g. ``rows, cols``.

    Returns
    -------
    numpy.ndarray
        A complex128 array of the given shape.

    Examples
    --------
    >>> stream = RngStream(seed=1)
    >>> sample_complex_gaussian(stream, 2, 3).shape
    (2, 3)
    >>> a = sample_complex_gaussian(stream, 2, 3)
    >>> b = sample_complex_gaussian(stream, 2, 3)
    >>> bool(np.all(a == b))
    True
    """
    for dim in shape:
        if dim < 1:
            raise ValueError(f"Dimensions must be positive integers: {shape}")
    draws = _as_generator(rng).standard_normal((2, *shape))
    return np.asarray((draws[0] + 1j * draws[1]) * math.sqrt(0.5), dtype=np.complex128)


def draw_message(
    rng: RngStream | np.random.Generator, length: int, *, batch: tuple[int, ...] = ()
) -> BitArray:
    """
    Draws uniform message bits for codewords of `length` symbols.

    Returns
    -------
    numpy.ndarray
        A uint8 array of shape ``batch + (2 * length,)``.
    """
    return _as_generator(rng).integers(0, 2, size=(*batch, 2 * length), dtype=np.uint8)


def bits_to_codeword(bits: str | npt.ArrayLike) -> QuadArray:
    """
    Maps a bit vector to a codeword of quadrant symbols.

    Bits ``b[2i]`` and ``b[2i+1]`` give the real and imaginary signs of
    symbol ``i`` through ``2 * b - 1``. Leading axes are kept as batch axes.

    Parameters
    ----------
    bits : str | array_like
        A string of "0"/"1" characters or an integer array whose last
        axis has even length.

    Returns
    -------
    numpy.ndarray
        An int8 array of shape ``bits.shape[:-1] + (len / 2, 2)``.

    Raises
    ------
    ValueError
        If the bit vector has odd length or contains values other than 0, 1.

    Examples
    --------
    >>> bits_to_codeword("11").tolist()
    [[1, 1]]
    >>> bits_to_codeword("0110").tolist()
    [[-1, 1], [1, -1]]
    """
    if isinstance(bits, str):
        arr = np.array([int(ch) for ch in bits], dtype=np.int64)
    else:
        arr = np.asarray(bits, dtype=np.int64)
    if arr.ndim == 0 or arr.shape[-1] % 2 != 0:
        raise ValueError(f"The bit vector must have even length: shape={arr.shape}")
    if np.any((arr != 0) & (arr != 1)):
        raise ValueError("The bit vector must contain only 0 and 1")
    return (2 * arr - 1).astype(np.int8).reshape(*arr.shape[:-1], -1, 2)


def codeword_to_bits(s: npt.ArrayLike) -> BitArray:
    """
    Maps a codeword of quadrant symbols back to its bit vector.

    Examples
    --------
    >>> codeword_to_bits([[1, 1]]).tolist()
    [1, 1]
    >>> codeword_to_bits([[-1, -1]]).tolist()
    [0, 0]
    >>> codeword_to_bits([[1, -1], [-1, 1]]).tolist()
    [1, 0, 0, 1]
    """
    arr = np.asarray(s, dtype=np.int64)
    return ((arr + 1) // 2).astype(np.uint8).reshape(*arr.shape[:-2], -1)
