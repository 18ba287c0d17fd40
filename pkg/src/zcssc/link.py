"""
Multi-codeword framing with scheduled repetitions, MRC across copies and
the stop-feedback protocol.

Each slot carries R segments of ``M_seg`` REs. Scheduled repetitions take
segments first (oldest first); remaining segments carry new codewords
(one per slot, or all free segments under stop-feedback with new-data
reuse) or, under ``extra_repetitions`` reuse, extra copies of codewords
still in flight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np

from .channel import FadingProcess, FadingStream, transmit
from .baseline_mdc import MdcConfig, mdc_decode, mdc_encode, mdc_to_grid
from .codec import (DecodeResult, DecoderConfig, ResourceGrid, decode_full_correlation,
                    decode_joint_noncoherent, decode_with_indication, derate_match,
                    detect_indicator_shifts, encode, encode_with_indication, estimate_channel,
                    grid_to_vector, map_to_grid, rate_match)
from .dictionary import DictionarySpec
from .errors import ParameterError

FEEDBACK_MODES = ("none", "genie", "threshold")
REUSE_MODES = ("new_data", "extra_repetitions", "none")


@dataclass(frozen=True)
class RepetitionSchedule:
    R: int = 1
    T_R: int = 4

    def __post_init__(self):
        if self.R < 1 or self.T_R < 1:
            raise ParameterError(f"need R >= 1 and T_R >= 1, got R={self.R}, T_R={self.T_R}")


@dataclass(frozen=True)
class FeedbackChannel:
    mode: str = "none"
    delay_slots: int = 0
    threshold: float = 0.5

    def __post_init__(self):
        if self.mode not in FEEDBACK_MODES:
            raise ParameterError(f"feedback mode {self.mode!r} not in {FEEDBACK_MODES}")
        if self.delay_slots < 0:
            raise ParameterError("feedback delay must be >= 0")

    @property
    def enabled(self) -> bool:
        return self.mode != "none"


@dataclass
class CodewordProcess:
    cid: int
    bits: np.ndarray
    symbols: np.ndarray
    first_slot: int
    state: str = "pending"          # pending | in_flight | decoded | failed
    scheduled_sent: int = 0
    extra_sent: int = 0
    next_due: int = 0
    stop_after: Optional[int] = None  # last slot at which transmissions are still sent
    correct: bool = False
    finish_slot: Optional[int] = None
    copies: list = field(default_factory=list, repr=False)

    @property
    def transmissions(self) -> int:
        return self.scheduled_sent + self.extra_sent

    @property
    def terminal(self) -> bool:
        return self.state in ("decoded", "failed")

    def wants_slot(self, t: int, R: int) -> bool:
        return (self.scheduled_sent < R and self.next_due <= t
                and (self.stop_after is None or t <= self.stop_after))

    def has_pending_tx(self, R: int) -> bool:
        return self.scheduled_sent < R and (self.stop_after is None or self.next_due <= self.stop_after)


@dataclass
class MultiCodewordFrame:
    slot: int
    # (process, kind) with kind in {"new", "repetition", "extra"}; None = empty segment
    segments: List[Optional[Tuple[CodewordProcess, str]]]


@dataclass(frozen=True)
class TrialRecord:
    cid: int
    success: bool
    transmissions: int
    res_consumed: int
    first_slot: int
    finish_slot: int


def build_frame(processes, t: int, sched: RepetitionSchedule, make_new: Optional[Callable] = None,
                reuse_mode: str = "new_data", feedback_enabled: bool = False) -> MultiCodewordFrame:
    """
    Allocate the R segments of slot ``t``. Does not mutate ``processes``;
    ``make_new(t)`` is called for each new codeword placed in the frame.
    """
    R = sched.R
    due = sorted((p for p in processes if p.wants_slot(t, R)), key=lambda p: (p.next_due, p.cid))
    reps = due[:R]
    free = R - len(reps)
    new = []
    if make_new is not None and free:
        n_new = free if (feedback_enabled and reuse_mode == "new_data") else 1
        new = [make_new(t) for _ in range(n_new)]
    free -= len(new)
    extras = []
    if free and feedback_enabled and reuse_mode == "extra_repetitions":
        busy = {p.cid for p in reps}
        pool = sorted((p for p in processes if p.state == "in_flight" and p.cid not in busy
                       and p.scheduled_sent < R), key=lambda p: (p.first_slot, p.cid))
        extras = pool[:free]
    reps = sorted(reps, key=lambda p: (-p.first_slot, p.cid))
    segs = ([(p, "new") for p in new] + [(p, "repetition") for p in reps]
            + [(p, "extra") for p in extras])
    segs += [None] * (R - len(segs))
    return MultiCodewordFrame(t, segs)


def mrc_combine(copies) -> np.ndarray:
    """
    Phase-align and weight copies ``(y, phase, power)``: weights proportional
    to sqrt(power), normalised to sum to one.
    """
    if not copies:
        raise ParameterError("mrc_combine needs at least one copy")
    w = np.array([math.sqrt(p) for _, _, p in copies])
    total = w.sum()
    w = w / total if total > 0 else np.full(len(copies), 1 / len(copies))
    return sum(wr * np.asarray(y) * np.exp(-1j * ph) for wr, (y, ph, _) in zip(w, copies))


def step_protocol(process: CodewordProcess, declared: bool, correct: bool,
                  feedback: FeedbackChannel, t: int, R: int) -> str:
    """
    Advance one codeword after a decode attempt at slot ``t``.

    Returns "stop" (declared success, feedback on), "decoded" (declared
    success, no feedback), "failed" (no scheduled transmissions left) or
    "continue".
    """
    if process.terminal:
        raise ParameterError(f"codeword {process.cid} already {process.state}")
    if declared:
        process.state = "decoded"
        process.correct = correct
        process.finish_slot = t
        if feedback.enabled:
            process.stop_after = t + feedback.delay_slots
            return "stop"
        return "decoded"
    if process.scheduled_sent >= R:
        process.state = "failed"
        process.finish_slot = t
        return "failed"
    process.state = "in_flight"
    return "continue"


# ---- schemes ---------------------------------------------------------------

class SscScheme:
    """ZC-QO-SSC on one segment, with or without embedded root indication."""

    def __init__(self, spec: DictionarySpec, M_seg: int, indicated: bool = False, alpha: float = 0.5,
                 L_prime: int = 7, decoder: str = "joint", shortlist: int = 8):
        if decoder not in ("joint", "full"):
            raise ParameterError(f"unknown decoder {decoder!r}")
        self.spec, self.M_seg, self.indicated = spec, M_seg, indicated
        self.alpha, self.decoder, self.shortlist = alpha, decoder, shortlist
        self.cfg = DecoderConfig(L_prime=L_prime, alpha=alpha if indicated else 1.0)
        if indicated:
            self.cfg.check(spec)

    @property
    def n_info(self) -> int:
        return self.spec.n_info

    def modulate(self, bits) -> np.ndarray:
        cw = encode_with_indication(self.spec, bits, self.alpha) if self.indicated else encode(self.spec, bits)
        return rate_match(cw, self.M_seg).symbols

    def fold(self, y_seg) -> np.ndarray:
        return derate_match(y_seg, self.spec.P)

    def decode(self, y) -> DecodeResult:
        if self.indicated:
            return decode_with_indication(self.spec, self.cfg, y)
        if self.decoder == "joint":
            return decode_joint_noncoherent(self.spec, y, self.shortlist)
        return decode_full_correlation(self.spec, y)

    def channel_estimate(self, y) -> complex:
        if not self.indicated:
            return self.decode(y).channel_estimate
        # strongest indicator peak per section
        best = {}
        for s, v in detect_indicator_shifts(self.spec, y, self.cfg.L_prime):
            best.setdefault(self.spec.section_of_root(s), s)
        return estimate_channel(y, list(best.values()), self.spec.indicator_root)


class MdcScheme:
    """Segmented MDC occupying the whole segment; single-copy use only."""

    def __init__(self, cfg: MdcConfig):
        self.cfg = cfg
        self.M_seg = cfg.n_sc * cfg.n_os
        cfg.spec  # capacity check

    @property
    def n_info(self) -> int:
        return self.cfg.n_info

    def modulate(self, bits) -> np.ndarray:
        return grid_to_vector(mdc_to_grid(self.cfg, mdc_encode(self.cfg, bits)))

    def fold(self, y_seg) -> np.ndarray:
        return np.asarray(y_seg)

    def decode(self, y) -> DecodeResult:
        grid = map_to_grid(np.asarray(y), self.cfg.n_sc, self.cfg.n_os)
        msg = mdc_decode(self.cfg, grid)
        return DecodeResult(msg, None, 0j, float(np.vdot(y, y).real), 1)

    def channel_estimate(self, y) -> complex:
        raise ParameterError("MDC baseline does not support combining")


# ---- slot-level simulator ------------------------------------------------------

class LinkSimulator:
    """
    One drop: ``n_slots`` slots that may start new codewords, then a drain
    phase until every codeword is resolved.

    Randomness comes from three child streams of ``seed``: messages, noise
    and fading (``fading=None`` means h = 1).
    """

    def __init__(self, scheme, sched: RepetitionSchedule, feedback: FeedbackChannel, n_sc: int, n_os: int,
                 snr_db: float, fading: Optional[FadingProcess] = None, reuse_mode: str = "new_data", seed=0):
        if reuse_mode not in REUSE_MODES:
            raise ParameterError(f"reuse mode {reuse_mode!r} not in {REUSE_MODES}")
        if n_sc * n_os != sched.R * scheme.M_seg:
            raise ParameterError(f"{n_sc}x{n_os} grid does not hold {sched.R} segments of {scheme.M_seg}")
        self.scheme, self.sched, self.feedback = scheme, sched, feedback
        self.n_sc, self.n_os, self.snr_db = n_sc, n_os, snr_db
        self.reuse_mode = reuse_mode
        ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        msg_ss, noise_ss, fade_ss = ss.spawn(3)
        self.msg_rng = np.random.default_rng(msg_ss)
        self.noise_rng = np.random.default_rng(noise_ss)
        self.fading = FadingStream(fading, fade_ss) if fading is not None else None
        self.processes: List[CodewordProcess] = []
        self.records: List[TrialRecord] = []
        self._next_cid = 0

    def _new(self, t: int) -> CodewordProcess:
        bits = self.msg_rng.integers(0, 2, self.scheme.n_info, dtype=np.uint8)
        p = CodewordProcess(self._next_cid, bits, self.scheme.modulate(bits), first_slot=t, next_due=t)
        self._next_cid += 1
        self.processes.append(p)
        return p

    def step(self, t: int, allow_new: bool) -> MultiCodewordFrame:
        R, M = self.sched.R, self.scheme.M_seg
        frame = build_frame(self.processes, t, self.sched, self._new if allow_new else None,
                            self.reuse_mode, self.feedback.enabled)
        tx = np.zeros(R * M, dtype=complex)
        for j, seg in enumerate(frame.segments):
            if seg is None:
                continue
            p, kind = seg
            tx[j * M:(j + 1) * M] = p.symbols
            if kind == "extra":
                p.extra_sent += 1
            else:
                p.scheduled_sent += 1
                p.next_due = t + self.sched.T_R
                if p.state == "pending":
                    p.state = "in_flight"
        h = self.fading.take(1)[0] if self.fading is not None else 1.0
        grid = map_to_grid(tx, self.n_sc, self.n_os)
        rx = grid_to_vector(ResourceGrid(transmit(grid.values, h, self.snr_db, self.noise_rng)))
        for j, seg in enumerate(frame.segments):
            if seg is not None:
                self._receive(seg[0], rx[j * M:(j + 1) * M], t)
        return frame

    def _receive(self, p: CodewordProcess, y_seg: np.ndarray, t: int):
        if p.terminal:
            return
        R = self.sched.R
        p.copies.append([self.scheme.fold(y_seg), None, float(np.mean(np.abs(y_seg) ** 2))])
        if not (self.feedback.enabled or p.scheduled_sent >= R):
            return
        if len(p.copies) == 1:
            y = p.copies[0][0]
        else:
            for c in p.copies:
                if c[1] is None:
                    c[1] = float(np.angle(self.scheme.channel_estimate(c[0])))
            y = mrc_combine([tuple(c) for c in p.copies])
        res = self.scheme.decode(y)
        correct = bool(res.ok and np.array_equal(res.message, p.bits))
        if self.feedback.mode == "threshold":
            energy = float(np.vdot(y, y).real)
            declared = bool(res.ok and energy > 0 and res.residual_energy / energy < self.feedback.threshold)
        else:
            declared = correct
        step_protocol(p, declared, correct, self.feedback, t, R)
        if p.terminal:
            p.copies = []

    def run(self, n_slots: int) -> Tuple[List[TrialRecord], int]:
        """Simulate the drop; returns (records ordered by codeword id, slots used)."""
        R, M = self.sched.R, self.scheme.M_seg
        t = 0
        while t < n_slots or any(not p.terminal or p.has_pending_tx(R) for p in self.processes):
            self.step(t, allow_new=t < n_slots)
            t += 1
            if t > n_slots + 1000 * R * self.sched.T_R:
                raise RuntimeError("link simulation failed to drain")
        records = [TrialRecord(p.cid, p.state == "decoded" and p.correct, p.transmissions,
                               p.transmissions * M, p.first_slot, p.finish_slot) for p in self.processes]
        return records, t
