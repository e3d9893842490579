"""Closed-form KPIs for non-orthogonal slicing with successive interference
cancellation.

Per-slot outcome categories (default mode): a slot yields a clean broadband
packet with probability (1 - alpha)(1 - eps1) (the intermittent user must be
silent for the slot not to collide), and an SIC-recoverable intermittent
packet with probability alpha(1 - eps2). The strict-paper mode instead uses
(p1, p2) = (1 - eps1, alpha(1 - eps2)) as printed for the first-event law,
and the printed form of the extra-receptions law; both modes are exposed so
their numeric gap can be audited, but only the default mode is validated
against the slot-level simulator and the exhaustive small-frame oracle.

Frame-event structure implied by SIC: the broadband block decodes at the
slot of its K-th clean packet; every recoverable intermittent packet stored
before that slot decodes there in one batch, and every later one decodes in
its own slot with delay 0. The first-decoding-event law therefore has the
cumulative form Pr[F <= f] = Pr[K clean broadband AND >= 1 recoverable
intermittent within f slots].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import KpiMode, KpiResult, Scheme, SystemConfig, validate
from .probcore import (Pmf, TAIL_EPS, _lgamma_table, binomial_pmf,
                       binomial_tail, percentile, trinomial_grid)

FAMILY_TOL = 1e-9


class FormulaReadingError(ValueError):
    """A conditional family failed to normalize: the implementation would be
    silently wrong, so fail loudly instead of renormalizing."""


def noma_throughput(cfg: SystemConfig) -> tuple[float, float]:
    """(s1, ps1): the broadband frame decodes when at least K of the slots
    left untouched by intermittent transmissions survive erasure.
    """
    a, p1 = cfg.alpha, 1.0 - cfg.eps1
    arr = binomial_pmf(cfg.N, a)
    ps1 = 0.0
    for r2 in range(0, cfg.N - cfg.K + 1):
        ps1 += float(arr[r2]) * binomial_tail(cfg.K, cfg.N - r2, p1)
    s1 = cfg.K / cfg.N * ps1
    return s1, ps1


def categories(cfg: SystemConfig, strict_paper: bool = False) -> tuple[float, float]:
    """Per-slot probabilities of (clean broadband packet, recoverable
    intermittent packet)."""
    if strict_paper:
        return cfg.p1, cfg.p2
    return (1.0 - cfg.alpha) * cfg.p1, cfg.p2


@dataclass
class NomaFrameLaw:
    """Family of conditional distributions over one NOMA frame.

    pF            first-decoding-event slot, support {K+1..N}; deficit is the
                  probability the frame has no decoding event at all.
    PF_N          total finite mass of pF (= per-frame success probability).
    pD            per-slot decoding-event rate (unnormalized; sums to the
                  expected number of events per frame).
    pC_given_d    batch size decoded at a first event in slot d; mass totals
                  the probability the first event is a batch (the remainder
                  is the zero-delay branch p0_given_d).
    pR_given_f    extra receptions after a first event at slot f.
    pL            probability an event at slot d is the last in its frame.
    pZ_given_d    gap from an event at slot d to the next event (spanning
                  frames; geometric frame-skip tail truncated per the global
                  policy).
    """

    cfg: SystemConfig
    strict_paper: bool
    pbb: float
    pint: float
    pF: Pmf
    PF_N: float
    pD: Pmf
    pC_given_d: dict[int, Pmf]
    p0_given_d: dict[int, float]
    pR_given_f: dict[int, Pmf]
    pL: dict[int, float]
    pZ_given_d: dict[int, Pmf]
    discrepancies: dict[str, float] = field(default_factory=dict)

    def last_packet_delay(self, d: int, c: int) -> np.ndarray:
        """PMF (over t = 0..d-1) of the delay of the most recent packet in a
        first-event batch of c packets at slot d: the c transmission slots
        are an exchangeable uniform subset of {1..d-1}, so
        Pr[T_last = t] = C(d-t-1, c-1) / C(d-1, c) on t = 1..d-c.
        """
        return _last_packet_delay(d, c)

    def batch_delay_counts(self, d: int, c: int) -> np.ndarray:
        """Expected number of batch packets at each delay t = 0..d-1 given a
        first-event batch of c at slot d. Composes the last-packet law with
        the uniform law of the c-1 earlier packets; sums to c, and by
        exchangeability equals c/(d-1) at every t in 1..d-1.
        """
        ptl = _last_packet_delay(d, c)
        out = ptl.copy()
        if c > 1:
            # earlier packets: uniform over delays {t_l+1 .. d-1}; their
            # expected count at t is (c-1) * sum_{tl<t} ptl[tl] / (d-1-tl)
            denom = np.arange(d - 1, -1, -1.0)
            denom[denom == 0] = 1.0
            contrib = np.cumsum(ptl / denom)
            out[1:] += (c - 1) * contrib[:-1]
        return out


def _last_packet_delay(d: int, c: int) -> np.ndarray:
    lg = _lgamma_table(d)
    out = np.zeros(d)
    t = np.arange(1, d - c + 1)
    log_p = (lg[d - t - 1] - lg[c - 1] - lg[d - t - c]) - (lg[d - 1] - lg[c] - lg[d - 1 - c])
    out[1:d - c + 1] = np.exp(log_p)
    return out


def _first_event_cumulative(K: int, N: int, pbb: float, pint: float) -> np.ndarray:
    """PF[f] = Pr[first decoding event <= f] for f = 0..N."""
    PF = np.zeros(N + 1)
    for f in range(K + 1, N + 1):
        r2 = np.arange(1, f - K + 1)
        r1 = np.arange(K, f)
        g2, g1 = np.meshgrid(r2, r1)
        PF[f] = trinomial_grid(f, g1, g2, pbb, pint).sum()
    return PF


def frame_law(cfg: SystemConfig, strict_paper: bool = False,
              tail_eps: float = TAIL_EPS) -> NomaFrameLaw:
    cfg = validate(cfg, Scheme.NOMA, KpiMode.LR, strict_paper=strict_paper)
    K, N = cfg.K, cfg.N
    pbb, pint = categories(cfg, strict_paper)
    disc: dict[str, float] = {}

    PF = _first_event_cumulative(K, N, pbb, pint)
    pF_mass = np.diff(PF[K:]).copy() if N > K else np.zeros(0)
    PFN = float(PF[N])
    pF = Pmf(K + 1, pF_mass, deficit=1.0 - PFN)

    pC: dict[int, Pmf] = {}
    p0: dict[int, float] = {}
    pR: dict[int, Pmf] = {}
    pL: dict[int, float] = {}
    pZ: dict[int, Pmf] = {}
    pD_mass = np.zeros(max(N - K, 0))

    for d in range(K + 1, N + 1):
        pf = float(pF_mass[d - K - 1])
        cs = np.arange(1, d - K + 1)
        batch = trinomial_grid(d - 1, np.full_like(cs, K - 1), cs, pbb, pint) * pbb
        r1 = np.arange(K, d)
        zero = float(trinomial_grid(d - 1, r1, np.zeros_like(r1), pbb, pint).sum()) * pint
        if pf > 0.0:
            pC[d] = Pmf(1, batch / pf)
            p0[d] = zero / pf
            defect = abs(p0[d] + pC[d].mass.sum() - 1.0)
            if strict_paper:
                disc[f"first_event_split_defect_d{d}"] = defect
            elif defect > FAMILY_TOL:
                raise FormulaReadingError(
                    f"first-event split at d={d} off by {defect:.2e}")
        else:
            pC[d] = Pmf(1, batch * 0.0)
            p0[d] = 0.0

        if strict_paper:
            # printed form: Bin(r; N, p2) / P_F(N), independent of f
            rmass = binomial_pmf(N, cfg.p2) / PFN if PFN > 0 else binomial_pmf(N, cfg.p2)
            pR[d] = Pmf(0, rmass)
            disc[f"pR_norm_defect_f{d}"] = abs(pR[d].total() - 1.0)
        else:
            pR[d] = Pmf(0, binomial_pmf(N - d, pint))

        # event rate at slot d: first event here, or any recoverable arrival
        # after an earlier first event
        pD_mass[d - K - 1] = pf + pint * PF[d - 1]
        pL[d] = (1.0 - pint) ** (N - d)

        # gap law: within-frame truncated geometric + cross-frame component
        gaps: dict[int, float] = {}
        if N - d >= 1 and pint > 0.0:
            denom = 1.0 - (1.0 - pint) ** (N - d)
            for z in range(1, N - d + 1):
                gaps[z] = (1.0 - pL[d]) * (1.0 - pint) ** (z - 1) * pint / denom
        if PFN > 0.0:
            e_max = 0 if PFN == 1.0 else max(0, math.ceil(math.log(tail_eps)
                                                          / math.log1p(-PFN)))
            for e in range(e_max + 1):
                w = pL[d] * (1.0 - PFN) ** e
                for f in range(K + 1, N + 1):
                    m = w * pF_mass[f - K - 1]
                    if m > 0.0:
                        z = (N - d) + e * N + f
                        gaps[z] = gaps.get(z, 0.0) + m
            residual = pL[d] * (1.0 - PFN) ** (e_max + 1)
            if residual > 0.0 and gaps:
                gaps[max(gaps)] += residual
        if gaps:
            pZ[d] = Pmf.from_dict(gaps)
            defect = abs(pZ[d].total() - 1.0)
            if strict_paper:
                disc[f"pZ_norm_defect_d{d}"] = defect
            elif defect > FAMILY_TOL:
                raise FormulaReadingError(f"gap law at d={d} off by {defect:.2e}")
        else:
            pZ[d] = Pmf(0, np.zeros(0), 1.0)

    pD = Pmf(K + 1, pD_mass)
    if strict_paper:
        base = frame_law(cfg, strict_paper=False, tail_eps=tail_eps)
        disc["PF_N_printed_minus_default"] = PFN - base.PF_N
    return NomaFrameLaw(cfg, strict_paper, pbb, pint, pF, PFN, pD, pC, p0, pR,
                        pL, pZ, disc)


def _delivery_mass(law: NomaFrameLaw) -> tuple[np.ndarray, float]:
    """Expected number of decoded packets per frame at each delay t (index =
    t), and its total. Delay 0 collects the no-stored-packet first event plus
    all post-first-event receptions; delays >= 1 come from first-event
    batches via the last-packet/earlier-packet composition.
    """
    cfg = law.cfg
    K, N = cfg.K, cfg.N
    mass = np.zeros(N)
    for d in range(K + 1, N + 1):
        pf = float(law.pF.mass[d - K - 1])
        if pf == 0.0:
            continue
        if law.strict_paper:
            extra = float((law.pR_given_f[d].support * law.pR_given_f[d].mass).sum())
        else:
            extra = (N - d) * law.pint
        mass[0] += pf * (law.p0_given_d[d] + extra)
        pc = law.pC_given_d[d].mass
        for ci, pcm in enumerate(pc):
            if pcm == 0.0:
                continue
            counts = law.batch_delay_counts(d, ci + 1)
            mass[:d] += pf * pcm * counts[:d]
    return mass, float(mass.sum())


def noma_lr_kpis(cfg: SystemConfig, strict_paper: bool = False) -> KpiResult:
    """Latency-reliability KPIs.

    The delay law of a decoded packet is the ratio of expected per-frame
    packet counts at each delay to the expected decoded count (frames pool
    i.i.d., so the long-run per-packet histogram is exactly this ratio). The
    loss-inclusive law weights it by the per-packet delivery probability:
    a generated packet is lost to its own erasure or to an undecodable
    broadband block, not merely to frames without decoding events, so the
    deficit uses the delivery probability rather than 1 - P_F(N).
    """
    cfg = validate(cfg, Scheme.NOMA, KpiMode.LR, strict_paper=strict_paper)
    s1, ps1 = noma_throughput(cfg)
    law = frame_law(cfg, strict_paper=strict_paper)
    ps2 = law.PF_N
    mass, total = _delivery_mass(law)
    if total <= 0.0 or cfg.alpha == 0.0:
        pmf = Pmf(0, np.zeros(0), 1.0)
        return KpiResult(Scheme.NOMA, KpiMode.LR, cfg, s1, ps1, ps2, pmf,
                         percentile(pmf, 0.9),
                         extras={"delivery": 0.0, **law.discrepancies})
    delivery = total / (cfg.N * cfg.alpha)
    if strict_paper:
        # the printed extra-receptions law can inflate the expected decoded
        # count past the arrival count; clamp and record the excess
        law.discrepancies["delivery_excess"] = max(delivery - 1.0, 0.0)
        delivery = min(delivery, 1.0)
    cond = mass / total
    pmf = Pmf(0, cond * delivery, deficit=1.0 - delivery).trimmed()
    return KpiResult(Scheme.NOMA, KpiMode.LR, cfg, s1, ps1, ps2, pmf,
                     percentile(pmf, 0.9),
                     extras={"delivery": delivery, **law.discrepancies})


def event_delay_pmf(law: NomaFrameLaw, d: int) -> Pmf:
    """Delay of the most recent packet delivered by an event at slot d: zero
    unless the event is the first in its frame and releases a stored batch.
    """
    pd = float(law.pD.mass[d - law.cfg.K - 1])
    if pd <= 0.0:
        return Pmf(0, np.zeros(0), 1.0)
    pf = float(law.pF.mass[d - law.cfg.K - 1])
    mass = np.zeros(d)
    mass[0] = (pf * law.p0_given_d[d] + law.pint * law.pF.mass[:d - law.cfg.K - 1].sum()) / pd
    pc = law.pC_given_d[d].mass
    for ci, pcm in enumerate(pc):
        if pcm == 0.0:
            continue
        mass += pf * pcm * law.last_packet_delay(d, ci + 1) / pd
    return Pmf(0, mass)


def noma_paoi_kpis(cfg: SystemConfig, strict_paper: bool = False) -> KpiResult:
    """Peak-age KPIs: per event at slot d, convolve the last-packet delay of
    the previous event with the gap to the next one, then uncondition over
    the per-slot event rate. Only the freshest packet of an event matters.
    """
    cfg = validate(cfg, Scheme.NOMA, KpiMode.PAOI, strict_paper=strict_paper)
    s1, ps1 = noma_throughput(cfg)
    law = frame_law(cfg, strict_paper=strict_paper)
    ps2 = law.PF_N
    dbar = float(law.pD.mass.sum())
    if dbar <= 0.0:
        pmf = Pmf(0, np.zeros(0), 1.0)
        return KpiResult(Scheme.NOMA, KpiMode.PAOI, cfg, s1, ps1, ps2, pmf,
                         percentile(pmf, 0.9), extras=dict(law.discrepancies))
    acc = np.zeros(1)
    acc_offset = 0
    K = cfg.K
    for d in range(K + 1, cfg.N + 1):
        pd = float(law.pD.mass[d - K - 1])
        if pd <= 0.0:
            continue
        delays = event_delay_pmf(law, d)
        gaps = law.pZ_given_d[d]
        if len(gaps.mass) == 0 or len(delays.mass) == 0:
            continue
        conv = np.convolve(delays.mass, gaps.mass) * (pd / dbar)
        off = delays.offset + gaps.offset
        hi = max(acc_offset + len(acc), off + len(conv))
        lo = min(acc_offset, off)
        if lo < acc_offset or hi > acc_offset + len(acc):
            grown = np.zeros(hi - lo)
            grown[acc_offset - lo:acc_offset - lo + len(acc)] = acc
            acc, acc_offset = grown, lo
        acc[off - acc_offset:off - acc_offset + len(conv)] += conv
    pmf = Pmf(acc_offset, acc).trimmed()
    defect = abs(pmf.total() - 1.0)
    if not strict_paper and defect > 1e-6:
        raise FormulaReadingError(f"peak-age law off by {defect:.2e}")
    return KpiResult(Scheme.NOMA, KpiMode.PAOI, cfg, s1, ps1, ps2, pmf,
                     percentile(pmf, 0.9), extras=dict(law.discrepancies))
