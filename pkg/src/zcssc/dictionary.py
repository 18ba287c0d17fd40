"""
ZC-QO dictionary layout and the message <-> sparse selection mapping.

Each of the L sections owns a contiguous block of Q roots starting at
root 1, and addresses ``2**b`` columns ``d -> (first_root + d // P, d % P)``.
The highest root ``P - 1`` is reserved for indicator sequences.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import CapacityError, DecodeInvalidError, ParameterError
from .zc_core import ZcRoot, cyclic_shift, is_prime, zc_sequence


@dataclass(frozen=True)
class DictionarySpec:
    P: int
    L: int
    b: int
    indicator_root: int
    roots_per_section: int

    @property
    def N(self) -> int:
        return self.L * 2 ** self.b

    @property
    def n_info(self) -> int:
        return self.L * self.b

    @property
    def data_roots(self) -> Tuple[int, ...]:
        return tuple(range(1, self.L * self.roots_per_section + 1))

    def first_root(self, section: int) -> int:
        return 1 + section * self.roots_per_section

    def section_roots(self, section: int) -> range:
        f = self.first_root(section)
        return range(f, f + self.roots_per_section)

    def section_of_root(self, r: int) -> int:
        """Section owning root ``r``, or -1 if ``r`` is not a data root."""
        if 1 <= r <= self.L * self.roots_per_section:
            return (r - 1) // self.roots_per_section
        return -1

    def valid_shifts(self, r: int) -> int:
        """Number of leading shifts of root ``r`` that index a legal column."""
        l = self.section_of_root(r)
        if l < 0:
            return 0
        offset = (r - self.first_root(l)) * self.P
        return int(min(self.P, max(0, 2 ** self.b - offset)))

    def to_dict(self) -> dict:
        return {"P": self.P, "L": self.L, "b": self.b, "indicator_root": self.indicator_root}

    @classmethod
    def from_dict(cls, d: dict) -> "DictionarySpec":
        spec = build_spec(int(d["P"]), int(d["L"]), int(d["L"]) * int(d["b"]))
        if int(d.get("indicator_root", spec.indicator_root)) != spec.indicator_root:
            raise ParameterError("indicator root must be P - 1")
        return spec


@dataclass(frozen=True)
class SparseSelection:
    pairs: Tuple[Tuple[int, int], ...]

    @property
    def roots(self) -> Tuple[int, ...]:
        return tuple(r for r, _ in self.pairs)

    def sparse_vector(self, spec: DictionarySpec) -> np.ndarray:
        """Binary vector over the full QO index space ``(P-1)*P`` (column n = (r-1)*P + s)."""
        v = np.zeros((spec.P - 1) * spec.P, dtype=np.int8)
        for r, s in self.pairs:
            v[(r - 1) * spec.P + s] = 1
        return v


def build_spec(P: int, L: int, target_info_bits: int) -> DictionarySpec:
    if not is_prime(P):
        raise ParameterError(f"P={P} is not prime")
    if L < 1:
        raise ParameterError("L must be >= 1")
    if target_info_bits < L or target_info_bits % L:
        raise ParameterError(f"{target_info_bits} info bits not divisible into {L} sections")
    b = target_info_bits // L
    Q = -(-2 ** b // P)
    if L * Q + 1 > P - 1:
        raise CapacityError(
            f"{L} sections x {Q} roots + indicator exceed the {P - 1} roots available at P={P}")
    return DictionarySpec(P=P, L=L, b=b, indicator_root=P - 1, roots_per_section=Q)


def map_message(spec: DictionarySpec, bits) -> SparseSelection:
    bits = np.asarray(bits, dtype=np.int64).reshape(-1)
    if bits.size != spec.n_info:
        raise ParameterError(f"message has {bits.size} bits, expected {spec.n_info}")
    weights = 1 << np.arange(spec.b - 1, -1, -1, dtype=np.int64)
    d = bits.reshape(spec.L, spec.b) @ weights
    return SparseSelection(tuple(
        (spec.first_root(l) + int(d[l]) // spec.P, int(d[l]) % spec.P) for l in range(spec.L)))


def unmap_selection(spec: DictionarySpec, sel: SparseSelection) -> np.ndarray:
    if len(sel.pairs) != spec.L:
        raise DecodeInvalidError(f"selection has {len(sel.pairs)} pairs, expected {spec.L}")
    out = np.empty((spec.L, spec.b), dtype=np.uint8)
    for l, (r, s) in enumerate(sel.pairs):
        if not 0 <= s < spec.P or spec.section_of_root(r) != l:
            raise DecodeInvalidError(f"pair {(r, s)} outside section {l}")
        d = (r - spec.first_root(l)) * spec.P + s
        if d >= 2 ** spec.b:
            raise DecodeInvalidError(f"section {l} index {d} >= {2 ** spec.b}")
        out[l] = [(d >> (spec.b - 1 - i)) & 1 for i in range(spec.b)]
    return out.reshape(-1)


def column_of(spec: DictionarySpec, n: int) -> Tuple[int, int]:
    if not 0 <= n < (spec.P - 1) * spec.P:
        raise ParameterError(f"column {n} outside [0, {(spec.P - 1) * spec.P})")
    return 1 + n // spec.P, n % spec.P


def dictionary_matrix(spec: DictionarySpec, roots=None) -> np.ndarray:
    """
    Explicit columns ``F[k, n] = z_r(n)((k + s(n)) mod P)`` for the given roots
    (default: all data roots), ordered root-major. Reference use only.
    """
    roots = spec.data_roots if roots is None else roots
    cols = [cyclic_shift(zc_sequence(ZcRoot(spec.P, r)), s)
            for r in roots for s in range(spec.P)]
    return np.stack(cols, axis=1)


def bits_to_hex(bits) -> str:
    bits = np.asarray(bits, dtype=np.uint8).reshape(-1)
    pad = (-bits.size) % 4
    padded = np.concatenate([np.zeros(pad, dtype=np.uint8), bits])
    value = int("".join(map(str, padded)), 2) if padded.size else 0
    return f"{value:0{padded.size // 4}x}"


def hex_to_bits(text: str, n_bits: int) -> np.ndarray:
    value = int(text, 16)
    if value >> n_bits:
        raise ParameterError(f"{text!r} does not fit in {n_bits} bits")
    return np.array([(value >> (n_bits - 1 - i)) & 1 for i in range(n_bits)], dtype=np.uint8)
