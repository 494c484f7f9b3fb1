"""Synthetic latent sources emitting power-normalized signal blocks.

These stand in for a learned encoder's output. Every emitted block is
normalized so its complex packing has unit power; the mixture source is the
default because its low-dimensional structure is what a denoiser can
actually learn (an isotropic source leaves nothing beyond the posterior
mean).
"""

from __future__ import annotations

import struct
import warnings
from pathlib import Path

import numpy as np

from .signals import RealSignalBlock, normalize_real

SOURCE_KINDS = ("gaussian_mixture", "unit_sphere", "sparse", "file_corpus")

CORPUS_MAGIC = b"CHDCORP1"


class GaussianMixtureSource:
    """Four-component mixture: means +/-u and +/-v on the unit sphere, std 0.1.

    u is the constant direction, v the alternating-sign direction; both are
    unit vectors, so the components sit on a symmetric cross through the
    sphere.
    """

    def __init__(self, k: int, component_std: float = 0.1):
        self.k = k
        d = 2 * k
        u = np.ones(d) / np.sqrt(d)
        v = np.where(np.arange(d) % 2 == 0, 1.0, -1.0) / np.sqrt(d)
        self.means = np.stack([u, -u, v, -v])
        self.component_std = component_std

    def sample_batch(self, rng: np.random.Generator, n: int) -> np.ndarray:
        comp = rng.integers(0, 4, size=n)
        x = self.means[comp] + self.component_std * rng.standard_normal((n, 2 * self.k))
        return normalize_real(x)


class UnitSphereSource:
    """Uniform draws from the unit sphere in the 2k real layout."""

    def __init__(self, k: int):
        self.k = k

    def sample_batch(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return normalize_real(rng.standard_normal((n, 2 * self.k)))


class SparseSource:
    """Gaussian blocks with a random 75% of coordinates zeroed, then normalized."""

    def __init__(self, k: int, zero_fraction: float = 0.75):
        self.k = k
        d = 2 * k
        self.n_zero = min(int(round(zero_fraction * d)), d - 1)

    def sample_batch(self, rng: np.random.Generator, n: int) -> np.ndarray:
        d = 2 * self.k
        x = rng.standard_normal((n, d))
        for row in x:
            row[rng.choice(d, size=self.n_zero, replace=False)] = 0.0
        return normalize_real(x)


class FileCorpusSource:
    """Sequential reader of fixed-length records from a binary corpus file.

    Record format: 8-byte magic header, then consecutive records of 2k
    little-endian float64 values. The cursor wraps around with a notice when
    the corpus is exhausted. Not safe for concurrent use; synchronize
    externally.
    """

    def __init__(self, k: int, path: str | Path):
        self.k = k
        self.path = Path(path)
        raw = self.path.read_bytes()
        if raw[:8] != CORPUS_MAGIC:
            raise ValueError(f"{self.path}: bad corpus magic {raw[:8]!r}")
        body = raw[8:]
        rec_bytes = 2 * k * 8
        if len(body) == 0 or len(body) % rec_bytes != 0:
            raise ValueError(f"{self.path}: body size {len(body)} not a multiple of {rec_bytes}")
        self.records = np.frombuffer(body, dtype="<f8").reshape(-1, 2 * k)
        self.cursor = 0

    def sample_batch(self, rng: np.random.Generator, n: int) -> np.ndarray:
        out = np.empty((n, 2 * self.k))
        for i in range(n):
            if self.cursor >= len(self.records):
                warnings.warn(f"corpus {self.path} exhausted; wrapping to start")
                self.cursor = 0
            out[i] = self.records[self.cursor]
            self.cursor += 1
        return normalize_real(out)


def write_corpus(path: str | Path, blocks: np.ndarray) -> None:
    """Write blocks (n, 2k) to the corpus format."""
    blocks = np.ascontiguousarray(np.atleast_2d(blocks), dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(struct.pack("8s", CORPUS_MAGIC))
        fh.write(blocks.tobytes())


def make_source(kind: str, k: int, corpus_path: str | Path | None = None):
    if kind == "gaussian_mixture":
        return GaussianMixtureSource(k)
    if kind == "unit_sphere":
        return UnitSphereSource(k)
    if kind == "sparse":
        return SparseSource(k)
    if kind == "file_corpus":
        if corpus_path is None:
            raise ValueError("file_corpus source needs a corpus path")
        return FileCorpusSource(k, corpus_path)
    raise ValueError(f"unknown source kind {kind!r}; expected one of {SOURCE_KINDS}")


def sample_source(kind: str, k: int, rng: np.random.Generator, corpus=None) -> RealSignalBlock:
    """Draw one normalized block of the given kind."""
    src = corpus if kind == "file_corpus" and corpus is not None else make_source(kind, k, corpus)
    return RealSignalBlock(src.sample_batch(rng, 1)[0])
