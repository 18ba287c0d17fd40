"""
Monte-Carlo campaign harness.

A campaign is a sequence of independent drops. Drop i is seeded from
``SeedSequence([seed, i])`` so results do not depend on how drops are
spread over workers; drops are folded in index order and the stop rule is
checked after each one.

Config files are flat ``key = value`` lines, UTF-8. ``#`` starts a comment
(whole line or trailing). Keys are the :class:`SimConfig` field names;
values are parsed to the field type, ``inf``/``-inf`` are accepted for
floats and ``none`` clears ``snr_db``.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from typing import Dict, List, Optional, Sequence

import numpy as np

from .baseline_mdc import MdcConfig
from .channel import SUBCARRIERS_PER_PRB, SYMBOLS_PER_SLOT, FadingProcess, LinkBudget, doppler_hz, snr_from_budget
from .dictionary import build_spec
from .errors import CapacityError, ConfigError, ParameterError
from .link import FEEDBACK_MODES, REUSE_MODES, FeedbackChannel, LinkSimulator, MdcScheme, RepetitionSchedule, SscScheme
from .zc_core import largest_prime_leq

SCHEMES = ("ssc", "ssc_indicated", "mdc")
CHANNELS = ("awgn", "rician")
# nominal payload per PRB count; the auto payload (K = 0) backs off from these until feasible
NOMINAL_PAYLOADS = {2: 32, 4: 36, 8: 38, 16: 42, 32: 46}

CSV_COLUMNS = ("scheme", "n_prb", "K", "L", "alpha", "L_prime", "R", "T_R", "feedback", "snr_db",
               "trials", "block_errors", "bler", "bler_ci95", "throughput_bits_per_slot",
               "avg_tx_per_codeword", "seed")
CSV_HEADER = ",".join(CSV_COLUMNS)


@dataclass(frozen=True)
class SimConfig:
    scheme: str = "ssc_indicated"
    n_prb: int = 2
    K: int = 28                       # 0: largest feasible payload up to NOMINAL_PAYLOADS[n_prb]
    L: int = 2
    alpha: float = 0.5
    L_prime: int = 7
    ssc_decoder: str = "joint"        # joint | full (scheme ssc only)
    shortlist: int = 8
    mdc_segments: int = 2
    channel: str = "rician"
    cnr_db: float = -2.15
    snr_db: Optional[float] = None    # overrides the CNR budget when set
    snr_offset_db: float = 0.0
    k_factor_db: float = 10.0
    doppler_hz: float = doppler_hz(3.0)
    slot_ms: float = 1.0
    n_os: int = SYMBOLS_PER_SLOT
    seed: int = 1
    R: int = 1
    T_R_slots: int = 4
    feedback_mode: str = "none"
    feedback_delay_slots: int = 0
    residual_threshold: float = 0.5
    reuse_mode: str = "new_data"
    trials: int = 1000
    max_errors: int = 200             # 0 disables early stopping
    drop_slots: int = 50
    workers: int = 1

    @property
    def effective_snr_db(self) -> float:
        if self.snr_db is not None:
            return self.snr_db + self.snr_offset_db
        return snr_from_budget(LinkBudget(self.cnr_db, self.n_prb)) + self.snr_offset_db

    @property
    def n_sc(self) -> int:
        return SUBCARRIERS_PER_PRB * self.n_prb


@dataclass
class SimResult:
    scheme: str
    n_prb: int
    K: int
    L: int
    alpha: float
    L_prime: int
    R: int
    T_R: int
    feedback: str
    snr_db: float
    trials: int
    block_errors: int
    bler: float
    bler_ci95: float
    throughput_bits_per_slot: float
    avg_tx_per_codeword: float
    seed: int
    throughput_bits_per_re: float = 0.0
    throughput_ci95: float = 0.0
    gamma: float = 0.0
    slots: int = 0
    res_consumed: int = 0
    bits_delivered: int = 0
    tx_histogram: Dict[int, int] = field(default_factory=dict)
    wall_time_s: float = 0.0

    def row(self) -> dict:
        return {c: getattr(self, c) for c in CSV_COLUMNS}


# ---- config --------------------------------------------------------------------

_FIELDS = {f.name: f for f in fields(SimConfig)}


def _coerce(key: str, text: str):
    if key not in _FIELDS:
        raise ConfigError(f"unknown config key {key!r}")
    default = _FIELDS[key].default
    text = text.strip()
    try:
        if key == "snr_db":
            return None if text.lower() == "none" else float(text)
        if isinstance(default, bool):
            return text.lower() in ("1", "true", "yes")
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {text!r}") from None
    return text


def parse_config_text(text: str, overrides: Sequence[str] = ()) -> SimConfig:
    values = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        values[key] = _coerce(key, val)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r}: expected key=value")
        key, val = item.split("=", 1)
        values[key.strip()] = _coerce(key.strip(), val)
    return SimConfig(**values)


def load_config(path, overrides: Sequence[str] = ()) -> SimConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    return parse_config_text(text, overrides)


def config_to_text(cfg: SimConfig) -> str:
    out = []
    for f in fields(SimConfig):
        v = getattr(cfg, f.name)
        out.append(f"{f.name} = {'none' if v is None else v}")
    return "\n".join(out) + "\n"


def feasible_payload(n_prb: int, L: int, R: int = 1, n_os: int = SYMBOLS_PER_SLOT,
                     target: Optional[int] = None) -> int:
    """Largest multiple of L not above ``target`` (default: nominal payload for n_prb) that fits one segment."""
    P = largest_prime_leq(SUBCARRIERS_PER_PRB * n_prb * n_os // R)
    K = target if target is not None else NOMINAL_PAYLOADS.get(n_prb, 46)
    K -= K % L
    while K >= L:
        try:
            build_spec(P, L, K)
            return K
        except CapacityError:
            K -= L
    raise CapacityError(f"no payload fits P={P}, L={L}")


def build_link(cfg: SimConfig):
    """Validate ``cfg`` and construct (scheme, schedule, feedback, fading)."""
    if cfg.scheme not in SCHEMES:
        raise ConfigError(f"scheme {cfg.scheme!r} not in {SCHEMES}")
    if cfg.channel not in CHANNELS:
        raise ConfigError(f"channel {cfg.channel!r} not in {CHANNELS}")
    if cfg.trials < 1 or cfg.drop_slots < 1 or cfg.workers < 1 or cfg.n_prb < 1:
        raise ConfigError("trials, drop_slots, workers and n_prb must be >= 1")
    try:
        sched = RepetitionSchedule(cfg.R, cfg.T_R_slots)
        feedback = FeedbackChannel(cfg.feedback_mode, cfg.feedback_delay_slots, cfg.residual_threshold)
    except ParameterError as e:
        raise ConfigError(str(e)) from None
    if cfg.reuse_mode not in REUSE_MODES:
        raise ConfigError(f"reuse_mode {cfg.reuse_mode!r} not in {REUSE_MODES}")
    M_total = cfg.n_sc * cfg.n_os
    if M_total % cfg.R:
        raise ConfigError(f"{M_total} REs do not split into R={cfg.R} segments")
    M_seg = M_total // cfg.R
    K = cfg.K
    try:
        if cfg.scheme == "mdc":
            if cfg.R != 1:
                raise ConfigError("the MDC baseline supports R = 1 only")
            if K == 0:
                per_seg = NOMINAL_PAYLOADS.get(cfg.n_prb, 46) // cfg.mdc_segments
                K = feasible_payload(cfg.n_prb, 1, cfg.mdc_segments, cfg.n_os, per_seg) * cfg.mdc_segments
            if K % cfg.mdc_segments:
                raise ConfigError(f"K={K} does not split into {cfg.mdc_segments} segments")
            scheme = MdcScheme(MdcConfig(cfg.n_prb, K // cfg.mdc_segments, cfg.mdc_segments, cfg.n_os))
        else:
            if K == 0:
                K = feasible_payload(cfg.n_prb, cfg.L, cfg.R, cfg.n_os)
            if K % cfg.L:
                raise ConfigError(f"K={K} is not a multiple of L={cfg.L}")
            indicated = cfg.scheme == "ssc_indicated"
            if indicated and not 0 < cfg.alpha < 1:
                raise ConfigError(f"alpha={cfg.alpha} outside (0, 1)")
            spec = build_spec(largest_prime_leq(M_seg), cfg.L, K)
            scheme = SscScheme(spec, M_seg, indicated, cfg.alpha, cfg.L_prime, cfg.ssc_decoder, cfg.shortlist)
    except ParameterError as e:
        raise ConfigError(str(e)) from None
    fading = None
    if cfg.channel == "rician":
        fading = FadingProcess(cfg.k_factor_db, cfg.doppler_hz, cfg.slot_ms * 1e-3)
    return scheme, sched, feedback, fading


# ---- campaign ------------------------------------------------------------------

@dataclass
class _DropSummary:
    codewords: int
    errors: int
    bits: int
    slots: int
    res: int
    tx: List[int]


def drop_seed(master_seed: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([master_seed, index])


def run_drop(cfg: SimConfig, index: int) -> _DropSummary:
    scheme, sched, feedback, fading = build_link(cfg)
    sim = LinkSimulator(scheme, sched, feedback, cfg.n_sc, cfg.n_os, cfg.effective_snr_db, fading,
                        cfg.reuse_mode, drop_seed(cfg.seed, index))
    records, slots = sim.run(cfg.drop_slots)
    ok = sum(r.success for r in records)
    return _DropSummary(len(records), len(records) - ok, ok * scheme.n_info, slots,
                        sum(r.res_consumed for r in records), [r.transmissions for r in records])


def _ci95(p: float, n: int) -> float:
    return 1.96 * math.sqrt(p * (1 - p) / n) if n else float("nan")


def run_campaign(cfg: SimConfig) -> SimResult:
    t0 = time.perf_counter()
    scheme, _, _, _ = build_link(cfg)   # fail before any trial
    n_info = scheme.n_info
    drops: List[_DropSummary] = []
    n_cw = errors = 0

    def done():
        return n_cw >= cfg.trials or (cfg.max_errors > 0 and errors >= cfg.max_errors)

    pool = ProcessPoolExecutor(cfg.workers) if cfg.workers > 1 else None
    try:
        index = 0
        while not done():
            batch = range(index, index + cfg.workers)
            if pool is None:
                summaries = [run_drop(cfg, i) for i in batch]
            else:
                summaries = list(pool.map(run_drop, [cfg] * len(batch), batch))
            for s in summaries:
                drops.append(s)
                n_cw += s.codewords
                errors += s.errors
                if done():
                    break
            index += cfg.workers
    finally:
        if pool is not None:
            pool.shutdown()

    bits = sum(d.bits for d in drops)
    slots = sum(d.slots for d in drops)
    res = sum(d.res for d in drops)
    tx = [t for d in drops for t in d.tx]
    bler = errors / n_cw
    per_drop = np.array([d.bits / d.slots for d in drops])
    thr_ci = 1.96 * per_drop.std(ddof=1) / math.sqrt(len(drops)) if len(drops) > 1 else float("nan")
    return SimResult(
        scheme=cfg.scheme, n_prb=cfg.n_prb, K=n_info, L=1 if cfg.scheme == "mdc" else cfg.L,
        alpha=cfg.alpha if cfg.scheme == "ssc_indicated" else 1.0,
        L_prime=cfg.L_prime, R=cfg.R, T_R=cfg.T_R_slots, feedback=cfg.feedback_mode,
        snr_db=cfg.effective_snr_db, trials=n_cw, block_errors=errors, bler=bler,
        bler_ci95=_ci95(bler, n_cw), throughput_bits_per_slot=bits / slots,
        avg_tx_per_codeword=float(np.mean(tx)), seed=cfg.seed,
        throughput_bits_per_re=bits / res if res else 0.0, throughput_ci95=float(thr_ci),
        gamma=(1 - bler) * n_info, slots=slots, res_consumed=res, bits_delivered=bits,
        tx_histogram=dict(sorted(Counter(tx).items())), wall_time_s=time.perf_counter() - t0,
    )


def sweep(cfg: SimConfig, axis: str, values) -> List[SimResult]:
    f = _FIELDS.get(axis)
    numeric = axis == "snr_db" or (f is not None and isinstance(f.default, (int, float))
                                   and not isinstance(f.default, bool))
    if not numeric:
        raise ParameterError(f"{axis!r} is not a numeric config key")
    cast = float if (axis == "snr_db" or isinstance(f.default, float)) else int
    return [run_campaign(replace(cfg, **{axis: cast(v)})) for v in values]


# ---- output --------------------------------------------------------------------

def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, float) else str(v)


def results_to_csv(results: Sequence[SimResult]) -> str:
    _guard(results)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in results:
        w.writerow([_fmt(v) for v in r.row().values()])
    return buf.getvalue()


def results_to_json(results: Sequence[SimResult]) -> str:
    _guard(results)
    return json.dumps([r.row() for r in results], indent=1) + "\n"


def _guard(results):
    for r in results:
        if r.trials == 0:
            raise ValueError("refusing to emit BLER for a campaign with zero trials")


def emit_results(results: Sequence[SimResult], path, fmt: Optional[str] = None) -> None:
    fmt = fmt or ("json" if str(path).endswith(".json") else "csv")
    if fmt not in ("csv", "json"):
        raise ParameterError(f"format {fmt!r} not in (csv, json)")
    text = results_to_csv(results) if fmt == "csv" else results_to_json(results)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def load_results_json(path) -> List[dict]:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
