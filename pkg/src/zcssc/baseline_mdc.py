"""
Segmented MDC baseline: the payload is split over ``segments`` independent
L=1 ZC codewords, segment i occupying the i-th block of subcarriers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List

import numpy as np

from .channel import SUBCARRIERS_PER_PRB, SYMBOLS_PER_SLOT
from .codec import ResourceGrid, RateMatchedWord, decode_full_correlation, derate_match, encode, rate_match
from .dictionary import DictionarySpec, build_spec
from .errors import ParameterError
from .zc_core import largest_prime_leq


@dataclass(frozen=True)
class MdcConfig:
    n_prb: int
    bits_per_segment: int
    segments: int = 2
    n_os: int = SYMBOLS_PER_SLOT

    def __post_init__(self):
        if self.segments < 1:
            raise ParameterError("segments must be >= 1")
        if self.n_sc % self.segments:
            raise ParameterError(f"{self.n_sc} subcarriers do not split into {self.segments} segments")

    @property
    def n_sc(self) -> int:
        return SUBCARRIERS_PER_PRB * self.n_prb

    @property
    def re_per_segment(self) -> int:
        return self.n_sc * self.n_os // self.segments

    @property
    def n_info(self) -> int:
        return self.segments * self.bits_per_segment

    @property
    def spec(self) -> DictionarySpec:
        # CapacityError propagates when the segment payload does not fit
        return build_spec(largest_prime_leq(self.re_per_segment), 1, self.bits_per_segment)


def mdc_encode(cfg: MdcConfig, bits) -> List[RateMatchedWord]:
    bits = np.asarray(bits).reshape(-1)
    if bits.size != cfg.n_info:
        raise ParameterError(f"message has {bits.size} bits, expected {cfg.n_info}")
    spec = cfg.spec
    chunks = bits.reshape(cfg.segments, cfg.bits_per_segment)
    return [rate_match(encode(spec, b), cfg.re_per_segment) for b in chunks]


def mdc_to_grid(cfg: MdcConfig, words) -> ResourceGrid:
    """Segment i fills subcarrier block i, frequency-first within the block."""
    w = cfg.n_sc // cfg.segments
    grid = np.zeros((cfg.n_sc, cfg.n_os), dtype=complex)
    for i, word in enumerate(words):
        sym = word.symbols if isinstance(word, RateMatchedWord) else np.asarray(word)
        grid[i * w:(i + 1) * w] = sym.reshape(cfg.n_os, w).T
    return ResourceGrid(grid)


def mdc_from_grid(cfg: MdcConfig, grid: ResourceGrid) -> List[np.ndarray]:
    w = cfg.n_sc // cfg.segments
    return [grid.values[i * w:(i + 1) * w].T.reshape(-1).copy() for i in range(cfg.segments)]


def mdc_decode(cfg: MdcConfig, y) -> np.ndarray:
    """Per-segment non-coherent argmax; ``y`` is a ResourceGrid or a list of segment vectors."""
    segs = mdc_from_grid(cfg, y) if isinstance(y, ResourceGrid) else list(y)
    if len(segs) != cfg.segments:
        raise ParameterError(f"got {len(segs)} segments, expected {cfg.segments}")
    spec = cfg.spec
    return np.concatenate([decode_full_correlation(spec, derate_match(s, spec.P)).message for s in segs])
