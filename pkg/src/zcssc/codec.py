"""
ZC-QO-SSC encoder, rate matching, resource-grid mapping and the two decoders.

``decode_full_correlation`` correlates against every data column and picks
the strongest column per section. ``decode_with_indication`` uses the
indicator root to shortlist data roots, estimates a global phase from the
indicator peaks and runs coherent SIC on each shortlisted root subset.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import zc_core
from .dictionary import DictionarySpec, SparseSelection, bits_to_hex, build_spec, hex_to_bits, map_message, unmap_selection
from .errors import ParameterError
from .zc_core import ZcRoot


@dataclass(frozen=True)
class Codeword:
    symbols: np.ndarray
    alpha: float = 1.0


@dataclass(frozen=True)
class RateMatchedWord:
    symbols: np.ndarray
    P: int

    @property
    def M(self) -> int:
        return self.symbols.size

    @property
    def mode(self) -> str:
        return "extended" if self.M >= self.P else "punctured"


@dataclass(frozen=True)
class ResourceGrid:
    # values[subcarrier, ofdm_symbol]
    values: np.ndarray

    @property
    def n_sc(self) -> int:
        return self.values.shape[0]

    @property
    def n_os(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class DecoderConfig:
    L_prime: int = 7
    alpha: float = 0.5
    max_P: int = 1 << 16

    def check(self, spec: DictionarySpec):
        if self.L_prime < spec.L:
            raise ParameterError(f"L_prime={self.L_prime} < L={spec.L}")
        if self.L_prime > spec.P - 1:
            raise ParameterError(f"L_prime={self.L_prime} > P-1={spec.P - 1}")
        if spec.P > self.max_P:
            raise ParameterError(f"P={spec.P} exceeds decoder guard {self.max_P}")
        if not 0 < self.alpha <= 1:
            raise ParameterError(f"alpha={self.alpha} outside (0, 1]")


@dataclass
class DecodeResult:
    message: Optional[np.ndarray]
    selection: Optional[SparseSelection]
    channel_estimate: complex
    residual_energy: float
    candidates_examined: int
    correlate_calls: int = 0
    # (root, correlation vector) in processing order, winning candidate only
    trace: List[Tuple[int, np.ndarray]] = field(default_factory=list, repr=False)

    @property
    def ok(self) -> bool:
        return self.message is not None


def _shifted(P: int, r: int, s: int) -> np.ndarray:
    z = zc_core._zc(P, r)
    return np.concatenate((z[s:], z[:s]))


def encode(spec: DictionarySpec, bits) -> Codeword:
    sel = map_message(spec, bits)
    c = sum(_shifted(spec.P, r, s) for r, s in sel.pairs) / math.sqrt(spec.L)
    return Codeword(np.asarray(c, dtype=complex), 1.0)


def encode_with_indication(spec: DictionarySpec, bits, alpha: float) -> Codeword:
    if not 0 < alpha < 1:
        raise ParameterError(f"alpha={alpha} outside (0, 1)")
    sel = map_message(spec, bits)
    P, rbar = spec.P, spec.indicator_root
    c = np.zeros(P, dtype=complex)
    for r, s in sel.pairs:
        c += math.sqrt(alpha) * _shifted(P, r, s) + math.sqrt(1 - alpha) * _shifted(P, rbar, r)
    return Codeword(c / math.sqrt(spec.L), alpha)


def rate_match(c: Codeword, M: int) -> RateMatchedWord:
    """Cyclic extension (M > P) or tail puncturing (M < P)."""
    if M < 1:
        raise ParameterError("M must be >= 1")
    P = c.symbols.size
    return RateMatchedWord(c.symbols[np.arange(M) % P], P)


def derate_match(y, P: int) -> np.ndarray:
    """Fold a length-M reception back to P positions, summing repeated copies."""
    y = np.asarray(y, dtype=complex)
    out = np.zeros(P, dtype=complex)
    np.add.at(out, np.arange(y.size) % P, y)
    return out


def map_to_grid(w, n_sc: int, n_os: int) -> ResourceGrid:
    """Frequency-first: symbol i -> (subcarrier i % n_sc, OFDM symbol i // n_sc)."""
    sym = w.symbols if isinstance(w, RateMatchedWord) else np.asarray(w)
    if sym.size != n_sc * n_os:
        raise ParameterError(f"{sym.size} symbols do not fill a {n_sc}x{n_os} grid")
    return ResourceGrid(sym.reshape(n_os, n_sc).T.copy())


def grid_to_vector(grid: ResourceGrid) -> np.ndarray:
    return grid.values.T.reshape(-1).copy()


def decode_full_correlation(spec: DictionarySpec, y) -> DecodeResult:
    """Single-pass non-coherent decoder: per-section argmax of |F^H y|."""
    y = np.asarray(y, dtype=complex)
    P, L, Q = spec.P, spec.L, spec.roots_per_section
    xi = zc_core.correlate_roots(y, P, spec.data_roots).reshape(L, Q * P)
    metric = np.abs(xi)
    metric[:, 2 ** spec.b:] = -1.0
    d = np.argmax(metric, axis=1)
    pairs = tuple((spec.first_root(l) + int(d[l]) // P, int(d[l]) % P) for l in range(L))
    sel = SparseSelection(pairs)
    h_est = complex(xi[np.arange(L), d].sum())
    res = y.copy()
    for r, s in pairs:
        z = _shifted(P, r, s)
        res -= np.vdot(z, res) / P * z
    return DecodeResult(
        message=unmap_selection(spec, sel),
        selection=sel,
        channel_estimate=h_est,
        residual_energy=float(np.vdot(res, res).real),
        candidates_examined=1,
        correlate_calls=L * Q,
    )


def decode_joint_noncoherent(spec: DictionarySpec, y, shortlist: int = 8) -> DecodeResult:
    """
    Non-coherent GLRT over the whole codeword, restricted to per-section shortlists.

    The ``shortlist`` strongest columns of each section (by ``|xi|``) are
    combined exhaustively and the combination maximising
    ``|sum_l xi_l|^2 / ||sum_l z_l||^2`` wins. Unlike per-section argmax this
    exploits the channel phase shared by all superposed sequences.
    """
    y = np.asarray(y, dtype=complex)
    P, L, Q = spec.P, spec.L, spec.roots_per_section
    xi = zc_core.correlate_roots(y, P, spec.data_roots).reshape(L, Q * P)[:, :2 ** spec.b]
    T = min(shortlist, xi.shape[1])
    top = np.argsort(-np.abs(xi), axis=1, kind="stable")[:, :T]               # (L, T)
    cols = [[(spec.first_root(l) + int(d) // P, int(d) % P) for d in top[l]] for l in range(L)]
    Z = [np.stack([_shifted(P, r, s) for r, s in cols[l]]) for l in range(L)]  # (T, P) each

    grids = np.meshgrid(*[np.arange(T)] * L, indexing="ij")
    num = sum(xi[l, top[l]][grids[l]] for l in range(L))
    energy = np.full(num.shape, float(L * P))
    for l in range(L):
        for m in range(l + 1, L):
            gram = (Z[l].conj() @ Z[m].T).real
            energy += 2 * gram[grids[l], grids[m]]
    metric = np.abs(num) ** 2 / energy
    best = np.unravel_index(int(np.argmax(metric)), metric.shape)
    sel = SparseSelection(tuple(cols[l][best[l]] for l in range(L)))
    c = sum(Z[l][best[l]] for l in range(L))
    res = y - (np.vdot(c, y) / np.vdot(c, c)) * c
    return DecodeResult(
        message=unmap_selection(spec, sel),
        selection=sel,
        channel_estimate=complex(num[best]),
        residual_energy=float(np.vdot(res, res).real),
        candidates_examined=int(metric.size),
        correlate_calls=L * Q,
    )


def detect_indicator_shifts(spec: DictionarySpec, y, L_prime: int, corr=None):
    """
    Strongest ``L_prime`` cyclic shifts of the indicator root, restricted to
    shifts that are data roots. Returns ``[(shift, complex value), ...]``
    sorted by decreasing magnitude.
    """
    if L_prime > spec.P:
        raise ParameterError(f"L_prime={L_prime} > P={spec.P}")
    if corr is None:
        corr = zc_core.correlate_all_shifts(y, ZcRoot(spec.P, spec.indicator_root))
    n_data = spec.L * spec.roots_per_section
    eligible = corr[1:n_data + 1]
    mag = np.abs(eligible)
    k = min(L_prime, n_data)
    top = np.argsort(-mag, kind="stable")[:k]
    return [(int(i) + 1, complex(eligible[i])) for i in top]


def estimate_channel(y, shifts: Sequence[int], indicator_root: int) -> complex:
    """Unnormalized global channel estimate: sum of <y, z_rbar(. + shift)>."""
    y = np.asarray(y, dtype=complex)
    P = y.size
    return complex(sum(np.vdot(_shifted(P, indicator_root, s), y) for s in shifts))


@lru_cache(maxsize=64)
def _root_tables(spec: DictionarySpec):
    # section and valid-shift count per root index 0..P-1 (-1 / 0 for non-data roots)
    section = np.array([spec.section_of_root(r) for r in range(spec.P)])
    valid = np.array([spec.valid_shifts(r) for r in range(spec.P)])
    return section, valid


def _compatible(spec: DictionarySpec, subset) -> bool:
    return sorted(spec.section_of_root(r) for r, _ in subset) == list(range(spec.L))


def decode_with_indication(spec: DictionarySpec, cfg: DecoderConfig, y,
                           candidate_roots: Optional[Sequence[int]] = None) -> DecodeResult:
    """
    Decoder for codewords carrying embedded data-root indication.

    Every section-compatible L-subset of the ``cfg.L_prime`` strongest
    indicator shifts is tried: phase-align with the indicator estimate,
    cancel the indicators, then detect and cancel one data sequence per
    root (coherent metric). The candidate leaving the least residual
    energy wins. ``candidate_roots`` bypasses indicator detection and
    evaluates that single subset.

    All candidates advance through the SIC stages together, one batched
    correlation per stage; ``correlate_calls`` counts one per
    (candidate, root).
    """
    cfg.check(spec)
    y = np.asarray(y, dtype=complex)
    P, L, rbar = spec.P, spec.L, spec.indicator_root
    ind_corr = zc_core.correlate_all_shifts(y, ZcRoot(P, rbar))
    calls = 1
    section, valid = _root_tables(spec)
    if candidate_roots is None:
        shortlist = detect_indicator_shifts(spec, y, cfg.L_prime, corr=ind_corr)
        full = set(range(L))
        subsets = [s for s in combinations(shortlist, L)
                   if {section[r] for r, _ in s} == full]
    else:
        subsets = [tuple((int(r), complex(ind_corr[r % P])) for r in candidate_roots)]
        if not _compatible(spec, subsets[0]):
            raise ParameterError(f"roots {tuple(candidate_roots)} are not one per section")
    if not subsets:
        return DecodeResult(None, None, 0j, float(np.vdot(y, y).real), 0, calls)

    n = len(subsets)
    # descending indicator magnitude within each candidate
    subsets = [sorted(sub, key=lambda rv: -abs(rv[1])) for sub in subsets]
    roots = np.array([[r for r, _ in sub] for sub in subsets])          # (n, L)
    vals = np.array([[v for _, v in sub] for sub in subsets])           # (n, L)
    h_est = vals.sum(axis=1)
    rot = np.exp(-1j * np.angle(h_est))
    res = rot[:, None] * y[None, :]
    if cfg.alpha < 1:
        zbar = zc_core._zc(P, rbar)
        idx = (np.arange(P)[None, None, :] + roots[:, :, None]) % P      # (n, L, P)
        amp = vals * rot[:, None] / P
        res = res - np.einsum("nl,nlp->np", amp, zbar[idx])

    shifts = np.empty((n, L), dtype=np.int64)
    traces = []
    rows = np.arange(n)
    for stage in range(L):
        stage_roots = roots[:, stage]
        corr = zc_core.correlate_batch(res, P, stage_roots)
        calls += n
        n_valid = valid[stage_roots]
        metric = np.where(np.arange(P)[None, :] < n_valid[:, None], corr.real, -np.inf)
        s = np.argmax(metric, axis=1)
        shifts[:, stage] = s
        amp = corr[rows, s] / P
        zr = np.stack([zc_core._zc(P, int(r)) for r in stage_roots])
        zr = zr[rows[:, None], (np.arange(P)[None, :] + s[:, None]) % P]
        res = res - amp[:, None] * zr
        traces.append(corr)

    energy = np.einsum("np,np->n", res, res.conj()).real
    metric_sum = np.abs(vals).sum(axis=1)

    order = np.lexsort((-metric_sum, energy))
    tied = [i for i in order if energy[i] == energy[order[0]] and metric_sum[i] == metric_sum[order[0]]]
    best = min(tied, key=lambda i: sorted(zip(roots[i].tolist(), shifts[i].tolist())))
    pairs = [None] * L
    for l in range(L):
        r = int(roots[best, l])
        pairs[section[r]] = (r, int(shifts[best, l]))
    sel = SparseSelection(tuple(pairs))
    trace = [(int(roots[best, l]), traces[l][best]) for l in range(L)]
    return DecodeResult(unmap_selection(spec, sel), sel, complex(h_est[best]), float(energy[best]),
                        n, calls, trace)


# ---- test vectors -------------------------------------------------------------
# One record per line, whitespace separated:
#   P L K alpha message_hex re_0 im_0 re_1 im_1 ... re_{P-1} im_{P-1}
# '#' starts a comment line. message_hex holds K bits, MSB first, left-padded
# to whole nibbles.

@dataclass(frozen=True)
class TestVector:
    P: int
    L: int
    K: int
    alpha: float
    bits: np.ndarray
    symbols: np.ndarray

    __test__ = False


def make_test_vector(P: int, L: int, K: int, alpha: float, bits) -> TestVector:
    spec = build_spec(P, L, K)
    cw = encode(spec, bits) if alpha >= 1 else encode_with_indication(spec, bits, alpha)
    return TestVector(P, L, K, float(alpha), np.asarray(bits, dtype=np.uint8), cw.symbols)


def format_test_vector(tv: TestVector) -> str:
    iq = np.column_stack([tv.symbols.real, tv.symbols.imag]).reshape(-1)
    body = " ".join(f"{x:.17g}" for x in iq)
    return f"{tv.P} {tv.L} {tv.K} {tv.alpha:.17g} {bits_to_hex(tv.bits)} {body}"


def parse_test_vector(line: str) -> TestVector:
    f = line.split()
    P, L, K, alpha = int(f[0]), int(f[1]), int(f[2]), float(f[3])
    iq = np.array(f[5:], dtype=float)
    if iq.size != 2 * P:
        raise ParameterError(f"expected {2 * P} I/Q values, got {iq.size}")
    return TestVector(P, L, K, alpha, hex_to_bits(f[4], K), iq[0::2] + 1j * iq[1::2])


def write_test_vectors(path, vectors) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# P L K alpha message_hex re_0 im_0 ... re_{P-1} im_{P-1}\n")
        for tv in vectors:
            fh.write(format_test_vector(tv) + "\n")


def read_test_vectors(path) -> List[TestVector]:
    with open(path, encoding="utf-8") as fh:
        return [parse_test_vector(ln) for ln in fh if ln.strip() and not ln.startswith("#")]
