"""Real/complex signal blocks and power normalization.

A block of k channel uses is handled in two equivalent layouts: a real
vector of length 2k (first k entries = real parts, last k = imaginary
parts) and a complex vector of length k. All operations broadcast over
leading batch dimensions, so ``values`` may be ``(2k,)`` or ``(B, 2k)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RealSignalBlock:
    """Real-valued symbol block, length 2k along the last axis."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape[-1] % 2 != 0 or v.shape[-1] == 0:
            raise ValueError(f"block length must be even and positive, got {v.shape[-1]}")
        if not np.all(np.isfinite(v)):
            raise ValueError("block contains non-finite entries")
        object.__setattr__(self, "values", v)

    @property
    def k(self) -> int:
        return self.values.shape[-1] // 2


@dataclass(frozen=True)
class ComplexSymbolBlock:
    """Complex symbol block: re[i] + j im[i], i = 1..k."""

    re: np.ndarray
    im: np.ndarray

    def __post_init__(self):
        re = np.asarray(self.re, dtype=np.float64)
        im = np.asarray(self.im, dtype=np.float64)
        if re.shape != im.shape:
            raise ValueError(f"re/im shape mismatch: {re.shape} vs {im.shape}")
        object.__setattr__(self, "re", re)
        object.__setattr__(self, "im", im)

    @property
    def k(self) -> int:
        return self.re.shape[-1]

    def as_complex(self) -> np.ndarray:
        return self.re + 1j * self.im

    @classmethod
    def from_complex(cls, z: np.ndarray) -> "ComplexSymbolBlock":
        z = np.asarray(z, dtype=np.complex128)
        return cls(z.real.copy(), z.imag.copy())

    def power(self) -> np.ndarray:
        """Sum of squared moduli over the block (per batch element)."""
        return np.sum(self.re**2 + self.im**2, axis=-1)


def pack_complex(x: RealSignalBlock) -> ComplexSymbolBlock:
    """Map the real block to complex symbols: symbol i = x[i] + j x[i+k]."""
    k = x.k
    return ComplexSymbolBlock(x.values[..., :k].copy(), x.values[..., k:].copy())


def unpack_real(xc: ComplexSymbolBlock) -> RealSignalBlock:
    """Inverse of :func:`pack_complex`: concatenate real parts, then imaginary."""
    return RealSignalBlock(np.concatenate([xc.re, xc.im], axis=-1))


def normalize_power(xc: ComplexSymbolBlock) -> ComplexSymbolBlock:
    """Scale the block so the sum of squared moduli is exactly 1.

    Normalization is per block (deterministic, testable on every sample)
    rather than in expectation over blocks.
    """
    p = xc.power()
    if np.any(p <= 0.0):
        raise ValueError("cannot normalize an all-zero block")
    scale = 1.0 / np.sqrt(p)[..., None]
    return ComplexSymbolBlock(xc.re * scale, xc.im * scale)


def normalize_real(values: np.ndarray) -> np.ndarray:
    """Per-block power normalization applied directly to the 2k real layout."""
    values = np.asarray(values, dtype=np.float64)
    p = np.sum(values**2, axis=-1)
    if np.any(p <= 0.0):
        raise ValueError("cannot normalize an all-zero block")
    return values / np.sqrt(p)[..., None]
