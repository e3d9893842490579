"""Slot-level Monte Carlo simulation of both access schemes.

Random draws come from three independent streams (broadband erasures,
intermittent arrivals, intermittent erasures), all derived from the run seed
via numpy's SeedSequence spawning. Keeping the streams separate makes
cross-scheme comparisons at a fixed seed common-random-number comparisons,
and makes the broadband statistics under orthogonal access literally
independent of the intermittent parameters.

Slot ordering: the arrival Bernoulli draw of a slot is processed before that
slot's transmission, so a packet generated in a reserved slot (orthogonal
access) or in any slot (non-orthogonal) can be served immediately with
latency 0. The drop-oldest rule fires at arrival time.

The intermittent erasure draw of a collided slot is made at transmission
time and reused when interference cancellation later recovers the slot: the
erasure reflects the channel of the transmission slot, not of the decoding
instant.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .config import KpiMode, Scheme, SystemConfig, validate
from .probcore import Pmf

Z99 = 2.5758293035489004  # two-sided 99% normal quantile

_CHUNK = 1 << 20


def default_warmup(cfg: SystemConfig, scheme: Scheme) -> int:
    if scheme is Scheme.OMA:
        return 10 * cfg.T_int * (cfg.Q + 1)
    return 10 * cfg.N


@dataclass(frozen=True)
class SimConfig:
    cfg: SystemConfig
    scheme: Scheme
    mode: KpiMode
    n_slots: int
    seed: int
    warmup_slots: int | None = None

    def resolved_warmup(self) -> int:
        w = self.warmup_slots
        if w is None:
            w = default_warmup(self.cfg, self.scheme)
        if not 0 <= w < self.n_slots:
            raise ValueError(f"need 0 <= warmup ({w}) < n_slots ({self.n_slots})")
        return w


@dataclass
class SimResult:
    sim: SimConfig
    s1_hat: float
    ps1_hat: float
    ps2_hat: float
    latency_hist: Pmf
    paoi_hist: Pmf
    queue_occupancy_hist: np.ndarray | None
    ci_halfwidth: dict[str, float]
    counts: dict[str, int] = field(default_factory=dict)

    @property
    def conditional_latency(self) -> Pmf:
        """Latency histogram conditioned on delivery (finite mass rescaled to 1)."""
        return _conditional(self.latency_hist)


def _conditional(hist: Pmf) -> Pmf:
    reach = hist.mass.sum()
    if reach <= 0:
        return Pmf(hist.offset, hist.mass * 0.0)
    return Pmf(hist.offset, hist.mass / reach)


def _bernoulli_bytes(seed_seq: np.random.SeedSequence, n: int, p: float) -> bytes:
    """n Bernoulli(p) draws as a bytes object, generated in fixed-size chunks
    so peak memory stays bounded; the chunking is part of the seed contract.
    """
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    out = bytearray(n)
    pos = 0
    while pos < n:
        m = min(_CHUNK, n - pos)
        out[pos:pos + m] = (rng.random(m) < p).astype(np.uint8).tobytes()
        pos += m
    return bytes(out)


def _hist_to_pmf(hist: dict[int, int], denom: int, deficit_count: int = 0) -> Pmf:
    if denom <= 0:
        return Pmf(0, np.zeros(0))
    points = {k: v / denom for k, v in hist.items()}
    return Pmf.from_dict(points, deficit=deficit_count / denom)


def simulate(sim: SimConfig, trace=None) -> SimResult:
    """Run one deterministic simulation. `trace`, when given, is a callable
    fed (slot, event_kind, user, outcome) tuples for debugging.
    """
    cfg = validate(sim.cfg, sim.scheme, sim.mode)
    warmup = sim.resolved_warmup()
    streams = np.random.SeedSequence(sim.seed).spawn(3)
    n = sim.n_slots
    bb_ok = _bernoulli_bytes(streams[0], n, 1.0 - cfg.eps1)
    arrival = _bernoulli_bytes(streams[1], n, cfg.alpha)
    int_ok = _bernoulli_bytes(streams[2], n, 1.0 - cfg.eps2)
    if sim.scheme is Scheme.OMA:
        return _run_oma(sim, cfg, warmup, bb_ok, arrival, int_ok, trace)
    return _run_noma(sim, cfg, warmup, bb_ok, arrival, int_ok, trace)


def _finish(sim: SimConfig, cfg: SystemConfig, warmup: int, c: dict,
            lat_hist: dict, paoi_hist: dict, occupancy) -> SimResult:
    measured = c["generated"] - c["inflight"]
    lost = c["dropped"] + c["erased"] + c["frame_lost"]
    if c["decoded"] + lost != measured:
        raise RuntimeError("packet conservation violated: "
                           f"{c['decoded']}+{lost} != {measured}")
    window = sim.n_slots - warmup
    frames = c["frames"]
    ps1 = c["frame_success"] / frames if frames else 0.0
    s1 = cfg.K * c["frame_success"] / window if window else 0.0
    if sim.scheme is Scheme.NOMA:
        ps2 = c["frames_with_delivery"] / frames if frames else 0.0
        ps2_n = frames
    else:
        ps2 = c["decoded"] / measured if measured else 0.0
        ps2_n = measured
    ci = {
        "s1": Z99 * cfg.K * math.sqrt(max(frames, 1) * ps1 * (1 - ps1)) / max(window, 1),
        "ps1": Z99 * math.sqrt(ps1 * (1 - ps1) / max(frames, 1)),
        "ps2": Z99 * math.sqrt(ps2 * (1 - ps2) / max(ps2_n, 1)),
    }
    latency = _hist_to_pmf(lat_hist, measured, lost)
    paoi = _hist_to_pmf(paoi_hist, max(c["paoi_samples"], 1))
    return SimResult(sim, s1, ps1, ps2, latency, paoi, occupancy, ci, dict(c))


def _run_oma(sim, cfg, warmup, bb_ok, arrival, int_ok, trace) -> SimResult:
    T, Q, K, N = cfg.T_int, cfg.Q, cfg.K, cfg.N
    n = sim.n_slots
    queue: deque[int] = deque()
    c = dict(generated=0, decoded=0, dropped=0, erased=0, frame_lost=0,
             inflight=0, frames=0, frame_success=0, frames_with_delivery=0,
             paoi_samples=0)
    lat_hist: dict[int, int] = {}
    paoi_hist: dict[int, int] = {}
    occupancy = np.zeros((T, Q + 1), dtype=np.int64)
    frame_recv = 0
    frame_pos = 0
    frame_start = -1
    prev_recv_slot = -1
    prev_latency = 0
    prev_gen = -1
    for s in range(n):
        counted = s >= warmup
        if arrival[s]:
            queue.append(s)
            if counted:
                c["generated"] += 1
            if trace:
                trace((s, "arrival", 2, "queued"))
            if len(queue) > Q:
                old = queue.popleft()
                if old >= warmup:
                    c["dropped"] += 1
                if trace:
                    trace((s, "queue_drop", 2, "oldest"))
        if s % T == 0:
            # reserved slot: head-of-queue transmission
            if queue:
                gen = queue.popleft()
                if int_ok[s]:
                    if gen >= warmup:
                        c["decoded"] += 1
                        lat = s - gen
                        lat_hist[lat] = lat_hist.get(lat, 0) + 1
                    if prev_recv_slot >= 0 and counted:
                        # age just before this reception: time since the
                        # generation of the previously delivered update
                        peak = s - prev_gen
                        if peak != (s - prev_recv_slot) + prev_latency:
                            raise RuntimeError("peak-age sawtooth violated")
                        paoi_hist[peak] = paoi_hist.get(peak, 0) + 1
                        c["paoi_samples"] += 1
                    prev_recv_slot = s
                    prev_latency = s - gen
                    prev_gen = gen
                    if trace:
                        trace((s, "delivery", 2, f"latency={s - gen}"))
                else:
                    if gen >= warmup:
                        c["erased"] += 1
                    if trace:
                        trace((s, "erasure", 2, "lost"))
        else:
            # broadband slot
            if frame_pos == 0:
                frame_start = s
            if bb_ok[s]:
                frame_recv += 1
            frame_pos += 1
            if frame_pos == N:
                if frame_start >= warmup:
                    c["frames"] += 1
                    if frame_recv >= K:
                        c["frame_success"] += 1
                    if trace:
                        trace((s, "frame_success" if frame_recv >= K else "frame_fail",
                               1, f"received={frame_recv}"))
                frame_pos = 0
                frame_recv = 0
        if counted:
            occupancy[s % T][len(queue)] += 1
    c["inflight"] = sum(1 for g in queue if g >= warmup)
    return _finish(sim, cfg, warmup, c, lat_hist, paoi_hist, occupancy)


def _run_noma(sim, cfg, warmup, bb_ok, arrival, int_ok, trace) -> SimResult:
    K, N = cfg.K, cfg.N
    n = sim.n_slots
    c = dict(generated=0, decoded=0, dropped=0, erased=0, frame_lost=0,
             inflight=0, frames=0, frame_success=0, frames_with_delivery=0,
             paoi_samples=0)
    lat_hist: dict[int, int] = {}
    paoi_hist: dict[int, int] = {}
    stored: list[tuple[int, bool]] = []   # collided slots awaiting SIC
    frame_recv = 0
    bb_done = False
    frame_start = 0
    frame_delivered = False
    prev_event_slot = -1
    prev_event_latency = 0
    prev_event_gen = -1

    def record_event(s, delivered_gens):
        # one decoding event at slot s; freshest packet defines the new age
        nonlocal prev_event_slot, prev_event_latency, prev_event_gen
        freshest = max(delivered_gens)
        if prev_event_slot >= 0 and s >= warmup:
            peak = s - prev_event_gen
            if peak != (s - prev_event_slot) + prev_event_latency:
                raise RuntimeError("peak-age sawtooth violated")
            paoi_hist[peak] = paoi_hist.get(peak, 0) + 1
            c["paoi_samples"] += 1
        prev_event_slot = s
        prev_event_latency = s - freshest
        prev_event_gen = freshest

    for s in range(n):
        pos = s - frame_start
        has_arrival = bool(arrival[s])
        if has_arrival:
            if s >= warmup:
                c["generated"] += 1
            recoverable = bool(int_ok[s])
            if bb_done:
                if recoverable:
                    if s >= warmup:
                        c["decoded"] += 1
                        lat_hist[0] = lat_hist.get(0, 0) + 1
                    frame_delivered = True
                    record_event(s, [s])
                    if trace:
                        trace((s, "delivery", 2, "latency=0"))
                else:
                    if s >= warmup:
                        c["erased"] += 1
            else:
                stored.append((s, recoverable))
        else:
            if not bb_done and bb_ok[s]:
                frame_recv += 1
                if frame_recv == K:
                    bb_done = True
                    delivered = []
                    for gen, recoverable in stored:
                        if recoverable:
                            if gen >= warmup:
                                c["decoded"] += 1
                                lat = s - gen
                                lat_hist[lat] = lat_hist.get(lat, 0) + 1
                            delivered.append(gen)
                        else:
                            if gen >= warmup:
                                c["erased"] += 1
                    stored.clear()
                    if delivered:
                        frame_delivered = True
                        record_event(s, delivered)
                        if trace:
                            trace((s, "sic_batch", 2, f"count={len(delivered)}"))
        if pos == N - 1:
            # frame boundary
            if frame_start >= warmup:
                c["frames"] += 1
                if bb_done:
                    c["frame_success"] += 1
                if frame_delivered:
                    c["frames_with_delivery"] += 1
                if trace:
                    trace((s, "frame_success" if bb_done else "frame_fail", 1, ""))
            if not bb_done:
                for gen, _ in stored:
                    if gen >= warmup:
                        c["frame_lost"] += 1
            stored.clear()
            frame_recv = 0
            bb_done = False
            frame_delivered = False
            frame_start = s + 1
    c["inflight"] = sum(1 for g, _ in stored if g >= warmup)
    return _finish(sim, cfg, warmup, c, lat_hist, paoi_hist, None)


def replicate(sim: SimConfig, n_reps: int) -> list[SimResult]:
    """Independent replications. Replication i reruns with the 64-bit seed
    SeedSequence((base_seed, i)).generate_state(1)[0], so any replication is
    individually reproducible from (base_seed, i).
    """
    if n_reps < 1:
        raise ValueError("n_reps must be >= 1")
    out = []
    for i in range(n_reps):
        child = int(np.random.SeedSequence((sim.seed, i)).generate_state(1)[0])
        out.append(simulate(SimConfig(sim.cfg, sim.scheme, sim.mode,
                                      sim.n_slots, child, sim.warmup_slots)))
    return out
