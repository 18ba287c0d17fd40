import math

import numpy as np
import pytest

from zcssc import ParameterError
from zcssc.channel import FadingProcess, transmit
from zcssc.codec import ResourceGrid, grid_to_vector, map_to_grid
from zcssc.dictionary import build_spec
from zcssc.link import (CodewordProcess, FeedbackChannel, LinkSimulator, RepetitionSchedule, SscScheme,
                        build_frame, mrc_combine, step_protocol)
from zcssc.zc_core import largest_prime_leq

N_SC, N_OS = 12, 14


def scheme_for(R, indicated=True):
    M = N_SC * N_OS // R
    spec = build_spec(largest_prime_leq(M), 2, 12)
    return SscScheme(spec, M, indicated=indicated, alpha=0.5, L_prime=7)


def simulator(R=2, T_R=4, mode="none", delay=0, snr_db=math.inf, reuse="new_data", seed=0, fading=None):
    return LinkSimulator(scheme_for(R), RepetitionSchedule(R, T_R), FeedbackChannel(mode, delay),
                         N_SC, N_OS, snr_db, fading=fading, reuse_mode=reuse, seed=seed)


def proc(cid, first, sent=0, R=2, T_R=4, state="in_flight"):
    p = CodewordProcess(cid, np.zeros(1), np.zeros(1), first_slot=first, state=state,
                        scheduled_sent=sent, next_due=first + sent * T_R)
    return p


def test_schedule_guards():
    with pytest.raises(ParameterError):
        RepetitionSchedule(0, 4)
    with pytest.raises(ParameterError):
        RepetitionSchedule(2, 0)
    with pytest.raises(ParameterError):
        FeedbackChannel("sometimes")
    with pytest.raises(ParameterError):
        FeedbackChannel("genie", -1)


def test_frame_R1_current_only():
    made = []
    f = build_frame([], 3, RepetitionSchedule(1, 4), lambda t: made.append(proc(len(made), t)) or made[-1])
    assert len(f.segments) == 1 and f.segments[0][1] == "new" and f.segments[0][0].first_slot == 3


def test_frame_R2_carries_current_and_delayed():
    old = proc(0, first=4, sent=1)
    f = build_frame([old], 8, RepetitionSchedule(2, 4), lambda t: proc(1, t))
    (p0, k0), (p1, k1) = f.segments
    assert (p0.first_slot, k0) == (8, "new")
    assert (p1.first_slot, k1) == (4, "repetition")


def test_frame_reuse_after_stop():
    done = proc(0, first=4, sent=1, state="decoded")
    done.stop_after = 5
    sched = RepetitionSchedule(2, 4)
    made = iter(range(1, 10))
    f = build_frame([done], 8, sched, lambda t: proc(next(made), t), "new_data", feedback_enabled=True)
    assert [k for _, k in f.segments] == ["new", "new"]
    f = build_frame([done], 8, sched, lambda t: proc(next(made), t), "none", feedback_enabled=True)
    assert f.segments[0][1] == "new" and f.segments[1] is None


def test_simulated_frames_R2():
    sim = simulator(R=2, T_R=4)
    frames = [sim.step(t, allow_new=True) for t in range(10)]
    for t, f in enumerate(frames):
        assert f.segments[0][0].first_slot == t
        if t >= 4:
            assert f.segments[1][0].first_slot == t - 4
        else:
            assert f.segments[1] is None


def test_stop_suppresses_repetition():
    records, _ = simulator(R=2, mode="genie", reuse="none").run(20)
    assert all(r.success and r.transmissions == 1 for r in records)


def test_late_feedback_still_repeats():
    records, _ = simulator(R=2, T_R=4, mode="genie", delay=4, reuse="none").run(20)
    assert all(r.success and r.transmissions == 2 for r in records)
    records, _ = simulator(R=2, T_R=4, mode="genie", delay=3, reuse="none").run(20)
    assert all(r.transmissions == 1 for r in records)


def test_total_failure():
    records, _ = simulator(R=2, mode="genie", snr_db=-40.0).run(20)
    assert all(not r.success and r.transmissions == 2 for r in records)


def test_step_protocol_transitions():
    fb = FeedbackChannel("genie", 2)
    p = proc(0, 0, sent=1)
    assert step_protocol(p, False, False, fb, 0, 2) == "continue"
    assert step_protocol(p, True, True, fb, 4, 2) == "stop" and p.stop_after == 6
    with pytest.raises(ParameterError):
        step_protocol(p, True, True, fb, 5, 2)
    q = proc(1, 0, sent=2)
    assert step_protocol(q, False, False, fb, 4, 2) == "failed"
    r = proc(2, 0, sent=2)
    assert step_protocol(r, True, False, FeedbackChannel(), 4, 2) == "decoded" and not r.correct


@pytest.mark.parametrize("mode,reuse", [("none", "new_data"), ("genie", "new_data"), ("genie", "none"),
                                        ("threshold", "new_data")])
def test_conservation(mode, reuse):
    sim = simulator(R=3, T_R=2, mode=mode, reuse=reuse, snr_db=-9.0,
                    fading=FadingProcess(doppler_hz=50.0), seed=7)
    records, _ = sim.run(40)
    M = sim.scheme.M_seg
    assert all(1 <= r.transmissions <= 3 and r.res_consumed == r.transmissions * M for r in records)
    assert [r.cid for r in records] == list(range(len(records)))


def test_extra_repetitions_reuse_is_bounded():
    sim = simulator(R=3, T_R=2, mode="genie", reuse="extra_repetitions", snr_db=-9.0, seed=3)
    records, slots = sim.run(40)
    M = sim.scheme.M_seg
    assert sum(r.res_consumed for r in records) <= slots * 3 * M
    assert all(r.res_consumed == r.transmissions * M for r in records)


def test_mrc_single_copy_identity():
    y = np.exp(1j * np.arange(7))
    assert np.allclose(mrc_combine([(y, 0.0, 2.0)]), y)


def test_mrc_equal_copies_is_mean():
    a, b = np.arange(5) + 0j, np.ones(5) * 1j
    assert np.allclose(mrc_combine([(a, 0.3, 1.0), (b, 0.3, 1.0)]), (a + b) / 2 * np.exp(-0.3j))


def test_mrc_opposite_phases():
    y = np.exp(1j * np.arange(9))
    out = mrc_combine([(y, 0.0, 1.0), (-y, math.pi, 1.0)])
    assert np.allclose(np.abs(out), np.abs(y))
    with pytest.raises(ParameterError):
        mrc_combine([])


def test_mrc_gain_true_phase():
    rng = np.random.default_rng(1)
    n, sigma2 = 10_000 * 64, 1.0
    c = np.exp(2j * np.pi * rng.random(n))
    copies = []
    for _ in range(2):
        ph = rng.uniform(-np.pi, np.pi)
        y = transmit(c * np.exp(1j * ph), 1.0, 0.0, rng)
        copies.append((y, ph, float(np.mean(np.abs(y) ** 2))))
    err = mrc_combine(copies) - c
    gain_db = 10 * math.log10(sigma2 / np.mean(np.abs(err) ** 2))
    assert abs(gain_db - 10 * math.log10(2)) < 0.3


def test_r1_transparency():
    snr, seed, n = -13.0, 11, 60
    sim = simulator(R=1, snr_db=snr, seed=seed)
    records, _ = sim.run(n)
    msg_ss, noise_ss, _ = np.random.SeedSequence(seed).spawn(3)
    msg_rng, noise_rng = np.random.default_rng(msg_ss), np.random.default_rng(noise_ss)
    scheme = scheme_for(1)
    manual = []
    for _ in range(n):
        bits = msg_rng.integers(0, 2, scheme.n_info, dtype=np.uint8)
        grid = map_to_grid(scheme.modulate(bits), N_SC, N_OS)
        y = grid_to_vector(ResourceGrid(transmit(grid.values, 1.0, snr, noise_rng)))
        out = scheme.decode(scheme.fold(y))
        manual.append(bool(out.ok and np.array_equal(out.message, bits)))
    assert [r.success for r in records] == manual
    assert 0 < sum(manual) < n


def test_grid_shape_check():
    with pytest.raises(ParameterError):
        LinkSimulator(scheme_for(2), RepetitionSchedule(3, 4), FeedbackChannel(), N_SC, N_OS, 0.0)
    with pytest.raises(ParameterError):
        LinkSimulator(scheme_for(1), RepetitionSchedule(1, 4), FeedbackChannel(), N_SC, N_OS, 0.0,
                      reuse_mode="recycle")
