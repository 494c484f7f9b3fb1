"""Baseband channel simulation: Rayleigh fading, AWGN, noisy channel estimates.

Conventions:
  * Complex noise is CN(0, 2*sigma^2): each real dimension has variance
    sigma^2.
  * Rayleigh gains are i.i.d. CN(0, 1).
  * AWGN mode is an explicit marker, not h = 1 pushed through the MMSE
    weights: under AWGN the signal/noise weight diagonals are identities,
    which is not what the Rayleigh weight formula yields at |h| = 1 with
    sigma > 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .signals import ComplexSymbolBlock


class _AwgnMarker:
    def __repr__(self) -> str:  # pragma: no cover
        return "AWGN"


#: Marker selecting the AWGN convention (identity gains, identity weights).
AWGN = _AwgnMarker()


def snr_db_to_sigma(snr_db: float) -> float:
    """Noise level for a given SNR in dB.

    Convention: SNR_dB = 10*log10(1 / (2*sigma^2)) for unit-power blocks,
    i.e. the complex per-symbol noise variance is 2*sigma^2 = 10^(-SNR/10).
    """
    return float(np.sqrt(0.5 * 10.0 ** (-snr_db / 10.0)))


def sigma_to_snr_db(sigma: float) -> float:
    return float(10.0 * np.log10(1.0 / (2.0 * sigma**2)))


def sample_rayleigh_channel(k: int, rng: np.random.Generator) -> np.ndarray:
    """Draw k i.i.d. CN(0,1) fading gains (real/imag parts variance 1/2)."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    z = rng.standard_normal((2, k))
    return (z[0] + 1j * z[1]) / np.sqrt(2.0)


def transmit(
    xc: ComplexSymbolBlock,
    h,
    sigma: float,
    rng: np.random.Generator,
) -> ComplexSymbolBlock:
    """Push symbols through the channel: y_i = h_i * x_i + n_i.

    ``h`` is either the :data:`AWGN` marker (gains identically 1) or a
    complex gain vector broadcastable to the symbol block. Noise is
    CN(0, 2*sigma^2) per symbol.
    """
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    x = xc.as_complex()
    if h is AWGN:
        y = x.copy()
    else:
        h = np.asarray(h, dtype=np.complex128)
        if h.shape[-1] != xc.k:
            raise ValueError(f"gain length {h.shape[-1]} != k={xc.k}")
        y = h * x
    if sigma > 0:
        z = rng.standard_normal((2,) + y.shape)
        y = y + sigma * (z[0] + 1j * z[1])
    return ComplexSymbolBlock.from_complex(y)


def perturb_estimate(h: np.ndarray, sigma_h: float, rng: np.random.Generator) -> np.ndarray:
    """Noisy channel estimate: h + dh with dh ~ CN(0, sigma_h^2) i.i.d."""
    if sigma_h < 0:
        raise ValueError(f"sigma_h must be >= 0, got {sigma_h}")
    h = np.asarray(h, dtype=np.complex128)
    if sigma_h == 0:
        return h.copy()
    z = rng.standard_normal((2,) + h.shape)
    return h + sigma_h * (z[0] + 1j * z[1]) / np.sqrt(2.0)


def _weight_diagonals(h_r: np.ndarray, sigma: float) -> tuple[np.ndarray, np.ndarray]:
    """Signal/noise weight diagonals from duplicated moduli h_r (length 2k)."""
    denom = h_r**2 + 2.0 * sigma**2
    return h_r**2 / denom, h_r / denom


@dataclass(frozen=True)
class ChannelRealization:
    """One channel draw plus the derived equalizer weight diagonals.

    ``h_c`` is None in AWGN mode. ``h_r`` holds the gain moduli duplicated
    into both halves of the 2k real layout (ones under AWGN); ``w_s_diag``
    and ``w_n_diag`` are the per-coordinate signal and noise weights (both
    identically 1 under AWGN).
    """

    h_c: np.ndarray | None
    sigma: float
    h_r: np.ndarray
    w_s_diag: np.ndarray
    w_n_diag: np.ndarray

    @property
    def is_awgn(self) -> bool:
        return self.h_c is None

    @classmethod
    def awgn(cls, k: int, sigma: float) -> "ChannelRealization":
        if sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {sigma}")
        ones = np.ones(2 * k)
        return cls(None, float(sigma), ones, ones.copy(), ones.copy())

    @classmethod
    def rayleigh(cls, h_c: np.ndarray, sigma: float) -> "ChannelRealization":
        if sigma <= 0:
            raise ValueError(f"Rayleigh mode needs sigma > 0, got {sigma}")
        h_c = np.asarray(h_c, dtype=np.complex128)
        mod = np.abs(h_c)
        h_r = np.concatenate([mod, mod], axis=-1)
        w_s, w_n = _weight_diagonals(h_r, sigma)
        return cls(h_c, float(sigma), h_r, w_s, w_n)

    @classmethod
    def draw(cls, mode: str, k: int, sigma: float, rng: np.random.Generator) -> "ChannelRealization":
        """Draw a realization for ``mode`` in {'awgn', 'rayleigh'}."""
        if mode == "awgn":
            return cls.awgn(k, sigma)
        if mode == "rayleigh":
            return cls.rayleigh(sample_rayleigh_channel(k, rng), sigma)
        raise ValueError(f"unknown channel mode {mode!r}")
