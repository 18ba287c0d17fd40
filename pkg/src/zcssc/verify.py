"""Fast analytic/oracle self-checks behind the ``verify`` subcommand."""

from __future__ import annotations

import math

import numpy as np

from .channel import LinkBudget, snr_from_budget
from .codec import DecoderConfig, decode_full_correlation, decode_with_indication, encode, encode_with_indication
from .dictionary import build_spec, column_of, map_message, unmap_selection
from .zc_core import ZcRoot, correlate_all_shifts, correlate_direct, is_prime, zc_sequence


def _zc_identities():
    worst_auto = worst_cross = 0.0
    for P in (11, 31, 127):
        seqs = {r: zc_sequence(ZcRoot(P, r)) for r in range(1, P)}
        for r in range(1, P):
            root = ZcRoot(P, r)
            auto = correlate_all_shifts(seqs[r], root)
            worst_auto = max(worst_auto, np.abs(auto[1:]).max() / P, abs(auto[0] - P) / P)
            for r2 in range(1, P):
                if r2 != r:
                    x = np.abs(correlate_all_shifts(seqs[r2], root))
                    worst_cross = max(worst_cross, np.abs(x - math.sqrt(P)).max() / P)
    return max(worst_auto, worst_cross) < 1e-9, f"auto {worst_auto:.1e}, cross {worst_cross:.1e}"


def _fft_vs_direct():
    rng = np.random.default_rng(0)
    worst = 0.0
    for P in (127, 331):
        for _ in range(20):
            y = rng.standard_normal(P) + 1j * rng.standard_normal(P)
            root = ZcRoot(P, int(rng.integers(1, P)))
            a, b = correlate_all_shifts(y, root), correlate_direct(y, root)
            worst = max(worst, np.abs(a - b).max() / np.abs(b).max())
    return worst < 1e-9, f"max rel err {worst:.1e}"


def _noiseless_roundtrip():
    spec = build_spec(11, 2, 6)
    cfg = DecoderConfig(L_prime=7, alpha=0.5)
    errors = 0
    for m in range(64):
        bits = np.array([(m >> (5 - i)) & 1 for i in range(6)])
        h = np.exp(1j * 0.7 * m)
        if not np.array_equal(unmap_selection(spec, map_message(spec, bits)), bits):
            errors += 1
        if not np.array_equal(decode_full_correlation(spec, h * encode(spec, bits).symbols).message, bits):
            errors += 1
        r = decode_with_indication(spec, cfg, h * encode_with_indication(spec, bits, 0.5).symbols)
        if not (r.ok and np.array_equal(r.message, bits)):
            errors += 1
    return errors == 0, f"{errors} errors over 64 messages x 3 paths"


def _column_bijection():
    spec = build_spec(11, 2, 6)
    cols = {column_of(spec, n) for n in range(10 * 11)}
    return len(cols) == 110, f"{len(cols)} distinct of 110"


def _snr_budget():
    a = snr_from_budget(LinkBudget(-2.15, 80))
    b = snr_from_budget(LinkBudget(-2.15, 160))
    ok = round(a, 2) == -21.18 and round(b, 2) == -24.19
    return ok, f"{a:.4f} dB @80 PRB, {b:.4f} dB @160 PRB"


def _primes():
    brute = [n for n in range(2, 2000) if all(n % d for d in range(2, int(n ** 0.5) + 1))]
    return [n for n in range(2000) if is_prime(n)] == brute, "primes < 2000 vs trial division"


CHECKS = [
    ("zc identities", _zc_identities),
    ("fft == direct correlation", _fft_vs_direct),
    ("noiseless round trip", _noiseless_roundtrip),
    ("column index bijection", _column_bijection),
    ("snr budget", _snr_budget),
    ("primality", _primes),
]


def run_checks(out=print) -> bool:
    all_ok = True
    for name, fn in CHECKS:
        ok, detail = fn()
        all_ok &= ok
        out(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return all_ok
