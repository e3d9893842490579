"""Closed-form KPIs for orthogonal slicing: broadband throughput, the
intermittent-user queue chain, the latency law and the peak-age law.

Timing convention (matches the simulator): within a slot, an arrival is
processed first (dropping the oldest packet if the queue is full), then the
slot's transmission happens if the slot is reserved. A packet generated in a
reserved slot can therefore leave with latency 0, and the preemptive delay
law has support {0, ..., T_int - 1}, which is exactly the range over which
the truncated-geometric delay PMF normalizes to 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import KpiMode, KpiResult, Scheme, SystemConfig, validate
from .probcore import (Pmf, binomial_pmf, binomial_tail, convolve, percentile,
                       steady_state)

# The tagged-packet recursion is exact for any Q, but its state space is the
# queue-occupancy square; keep a generous cap so misconfigured sweeps fail
# loudly instead of grinding.
MAX_LR_QUEUE = 8


class AnalysisTooLargeError(ValueError):
    pass


def oma_throughput(cfg: SystemConfig) -> tuple[float, float]:
    """(s1, ps1) for the broadband user.

    Reads only K, N, T_int and eps1: orthogonality makes the broadband side
    independent of the intermittent user's traffic and channel.
    """
    ps1 = binomial_tail(cfg.K, cfg.N, 1.0 - cfg.eps1)
    s1 = ps1 * (cfg.T_int - 1) * cfg.K / (cfg.T_int * cfg.N)
    return s1, ps1


@dataclass
class QueueModel:
    """Queue chain of the intermittent user observed at reserved slots.

    transition[i, j]: occupancy right after one transmission opportunity ->
    right after the next (T_int arrival slots in between, drop-oldest on
    overflow, head-of-queue transmitted when nonempty).
    pi0: stationary law right after a transmission; pi_n[n]: law n arrival
    slots after a transmission, n = 0..T_int-1.
    """

    transition: np.ndarray
    pi0: np.ndarray
    pi_n: list[np.ndarray]


def queue_transition(Q: int, T_int: int, alpha: float) -> np.ndarray:
    """Post-transmission occupancy chain over states {0..Q}.

    Built from the slot dynamics; the matrix has a banded binomial part
    plus a saturation column at Q-1 (overflow aggregates there) and the
    zero-arrival self-loop at state 0 that row-stochasticity requires.
    """
    arrivals = binomial_pmf(T_int, alpha)
    P = np.zeros((Q + 1, Q + 1))
    for qi in range(Q + 1):
        for a, pa in enumerate(arrivals):
            filled = min(qi + a, Q)
            qj = max(filled - 1, 0)
            P[qi, qj] += pa
    return P


def occupancy_after(pi0: np.ndarray, n: int, alpha: float, Q: int) -> np.ndarray:
    """Occupancy law n arrival slots after a transmission: the q < Q entries
    shift by Bin(q - s; n, alpha) while q = Q absorbs the overflow tail.
    """
    arrivals = binomial_pmf(n, alpha)
    out = np.zeros(Q + 1)
    for s, ps in enumerate(pi0):
        if ps == 0.0:
            continue
        for a, pa in enumerate(arrivals):
            out[min(s + a, Q)] += ps * pa
    return out


def queue_chain(cfg: SystemConfig) -> QueueModel:
    P = queue_transition(cfg.Q, cfg.T_int, cfg.alpha)
    pi0 = steady_state(P)
    pi_n = [occupancy_after(pi0, n, cfg.alpha, cfg.Q) for n in range(cfg.T_int)]
    return QueueModel(P, pi0, pi_n)


def _window_tables(T_int: int, alpha: float) -> list[np.ndarray]:
    # arrival-count PMFs for windows of every width 0..T_int, with the
    # negligible high-count tail (< 1e-16 total) cut for speed; the missing
    # mass lands in the loss deficit, far below every stated tolerance
    tables = []
    for w in range(T_int + 1):
        pmf = binomial_pmf(w, alpha)
        keep = np.nonzero(np.cumsum(pmf) < 1.0 - 1e-16)[0]
        cut = min(len(pmf), (int(keep[-1]) + 2) if len(keep) else 1)
        tables.append(pmf[:cut])
    return tables


def transmission_events(T_int: int, Q: int, alpha: float, n: int, q_ahead: int,
                        tables: list[np.ndarray] | None = None) -> dict[int, float]:
    """Pr[tagged packet transmits at opportunity l], for a packet generated n
    slots after the last reserved slot with q_ahead packets in front of it.

    Exact forward recursion over the per-window arrival counts; the tagged
    packet advances one position per opportunity and additionally whenever a
    full-queue arrival drops the head. It is lost when the drops reach it.
    Missing mass is the loss probability.
    """
    if tables is None:
        tables = _window_tables(T_int, alpha)
    out: dict[int, float] = {}
    state = {(q_ahead, q_ahead + 1): 1.0}
    for ell in range(1, q_ahead + 2):
        width = T_int - n if ell == 1 else T_int
        pmf = tables[width]
        nxt: dict[tuple[int, int], float] = {}
        for (ahead, size), pr in state.items():
            for m, pm in enumerate(pmf):
                if pm == 0.0:
                    continue
                drops = max(size + m - Q, 0)
                if drops > ahead:
                    continue  # oldest-drop cascade reached the tagged packet
                ahead2 = ahead - drops
                size2 = min(size + m, Q)
                if ahead2 == 0:
                    out[ell] = out.get(ell, 0.0) + pr * pm
                else:
                    key = (ahead2 - 1, size2 - 1)
                    nxt[key] = nxt.get(key, 0.0) + pr * pm
        state = nxt
        if not state:
            break
    return out


def oma_lr_kpis(cfg: SystemConfig) -> KpiResult:
    """Latency-reliability KPIs. The latency law aggregates the exact joint
    probability of (generation offset n, queue state q, serving opportunity
    l, channel success) at support point l*T_int - n, then the conditional
    law is the aggregate normalized by the overall success probability.
    """
    cfg = validate(cfg, Scheme.OMA, KpiMode.LR)
    if cfg.Q > MAX_LR_QUEUE:
        raise AnalysisTooLargeError(
            f"tagged-packet enumeration supports Q <= {MAX_LR_QUEUE}, got Q={cfg.Q}")
    s1, ps1 = oma_throughput(cfg)
    T, Q, alpha = cfg.T_int, cfg.Q, cfg.alpha
    model = queue_chain(cfg)
    tables = _window_tables(T, alpha)
    mass: dict[int, float] = {}
    ps2 = 0.0
    succ = 1.0 - cfg.eps2
    for n in range(1, T + 1):
        pin = model.pi_n[n - 1]
        for q in range(Q + 1):
            w = float(pin[q]) / T
            if w == 0.0:
                continue
            events = transmission_events(T, Q, alpha, n, min(q, Q - 1), tables)
            for ell, pr in events.items():
                m = w * pr * succ
                ps2 += m
                tau = ell * T - n
                mass[tau] = mass.get(tau, 0.0) + m
    pmf = Pmf.from_dict(mass, deficit=1.0 - ps2)
    return KpiResult(Scheme.OMA, KpiMode.LR, cfg, s1, ps1, ps2, pmf,
                     percentile(pmf, 0.9))


def preemptive_delay_pmf(cfg: SystemConfig) -> Pmf:
    """Delay of the packet served at a reserved slot under preemption (Q=1):
    alpha (1-alpha)^t / (1 - (1-alpha)^T_int) on t = 0..T_int-1.
    """
    T, alpha = cfg.T_int, cfg.alpha
    t = np.arange(T)
    if alpha == 0.0:
        raise ValueError("preemptive delay law undefined for alpha = 0")
    mass = alpha * (1.0 - alpha) ** t / (1.0 - (1.0 - alpha) ** T)
    return Pmf(0, mass)


def oma_paoi_kpis(cfg: SystemConfig) -> KpiResult:
    """Peak-age KPIs under preemption. The peak age is the delay of the
    previously delivered update plus the inter-delivery gap; the gap is
    T_int times a geometric with per-window success xi.
    """
    cfg = validate(cfg, Scheme.OMA, KpiMode.PAOI)
    s1, ps1 = oma_throughput(cfg)
    T, alpha = cfg.T_int, cfg.alpha
    xi = (1.0 - (1.0 - alpha) ** T) * (1.0 - cfg.eps2)
    if xi == 0.0:
        empty = Pmf(0, np.zeros(0), 1.0)
        return KpiResult(Scheme.OMA, KpiMode.PAOI, cfg, s1, ps1, 0.0, empty,
                         percentile(empty, 0.9), xi=xi)
    delay = preemptive_delay_pmf(cfg)
    gap = Pmf.geometric(xi).stretched(T)
    paoi = convolve(delay, gap)
    # per-generated-update delivery probability (supersession + erasure)
    ps2 = (1.0 - cfg.eps2) * (1.0 - (1.0 - alpha) ** T) / (T * alpha)
    return KpiResult(Scheme.OMA, KpiMode.PAOI, cfg, s1, ps1, ps2, paoi,
                     percentile(paoi, 0.9), xi=xi)
