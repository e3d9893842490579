"""Configuration-space exploration: Pareto frontiers, constrained optimal
configurations, and activation-probability sweeps.

Two search styles are provided. `optimal_config`/`alpha_sweep` do the
exhaustive grid search over every (K, N, T_int, Q) combination. The
`fixed_code_alpha_study` runs the fixed-code study procedure instead:
the broadband code (K*, N*) is chosen once by erasure-only throughput
maximization (independent of the intermittent traffic), then per activation
probability the shortest reserved-slot period satisfying the throughput
floor is selected for orthogonal access, while non-orthogonal access keeps
the fixed code and simply checks its throughput against the floor. Under
that procedure the orthogonal scheme loses feasibility when the queued
intermittent success probability at the forced period drops below the
reliability floor, and the non-orthogonal scheme when collisions pull the
fixed code's throughput below the throughput floor.

The reliability side-constraint (success probability of the intermittent
user >= ps2_min) binds the orthogonal sweeps, evaluated on the queued
latency-reliability analysis (the queue capability of the slice, regardless
of the KPI being optimized); for non-orthogonal sweeps it is off by default
and uses the per-frame success probability when enabled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import KpiMode, Scheme, SystemConfig
from .noma import noma_lr_kpis, noma_paoi_kpis, noma_throughput
from .oma import oma_lr_kpis, oma_paoi_kpis, oma_throughput
from .probcore import INFINITE

DEFAULT_EPS1 = 0.1
DEFAULT_EPS2 = 0.05


@dataclass(frozen=True)
class ParetoPoint:
    s1: float
    tau: float  # integer slot count, or INFINITE
    config: SystemConfig
    scheme: Scheme

    def sort_key(self):
        c = self.config
        return (c.K, c.N, c.T_int, c.Q)


def default_alphas(n: int = 20) -> list[float]:
    return list(np.logspace(-4, -1, n))


def n_upper(K: int, erasure: float) -> int:
    """Smallest coded-block search bound guaranteed to contain the
    throughput-optimal redundancy for the given per-slot erasure rate."""
    if erasure >= 1.0:
        return K
    return math.ceil(K / (1.0 - erasure) + 6.0 * math.sqrt(max(K * erasure, 0.0)))


@dataclass
class SweepGrid:
    scheme: Scheme
    mode: KpiMode
    K_min: int = 2
    K_max: int = 64
    T_min: int = 1
    T_max: int = 64
    Q_values: tuple[int, ...] = (1, 4)
    alphas: list[float] = field(default_factory=default_alphas)
    eps1: float = DEFAULT_EPS1
    eps2: float = DEFAULT_EPS2
    s1_min: float | None = None
    ps2_min: float | None = None
    N_max_override: int | None = None

    def __post_init__(self):
        if self.ps2_min is None and self.scheme is Scheme.OMA:
            self.ps2_min = 0.9

    def n_range(self, K: int, alpha: float) -> range:
        if self.N_max_override is not None:
            return range(K, self.N_max_override + 1)
        erase = self.eps1
        if self.scheme is Scheme.NOMA:
            # collisions act as extra erasures on the broadband block
            erase = 1.0 - (1.0 - alpha) * (1.0 - self.eps1)
        return range(K, n_upper(K, erase) + 1)

    def t_range(self) -> range:
        if self.scheme is Scheme.NOMA:
            return range(1, 2)  # the reserved-slot period is meaningless
        return range(self.T_min, self.T_max + 1)

    def q_values(self) -> tuple[int, ...]:
        if self.scheme is Scheme.NOMA or self.mode is KpiMode.PAOI:
            return (1,)
        return self.Q_values

    def make_config(self, K: int, N: int, T: int, Q: int, alpha: float) -> SystemConfig:
        return SystemConfig(K=K, N=N, T_int=T, Q=Q, alpha=alpha,
                            eps1=self.eps1, eps2=self.eps2)


def pareto_frontier(points: list[ParetoPoint]) -> list[ParetoPoint]:
    """Subset not strictly dominated: a point dies only when another point
    has strictly higher throughput and strictly lower timeliness. Duplicate
    (s1, tau) pairs collapse to the lexicographically smallest config.
    Output sorted by throughput ascending.
    """
    if not points:
        return []
    dedup: dict[tuple[float, float], ParetoPoint] = {}
    for p in points:
        key = (p.s1, p.tau)
        old = dedup.get(key)
        if old is None or p.sort_key() < old.sort_key():
            dedup[key] = p
    items = sorted(dedup.values(), key=lambda p: -p.s1)
    kept: list[ParetoPoint] = []
    best_higher = None  # smallest tau among strictly higher throughputs
    i = 0
    while i < len(items):
        j = i
        group_best = INFINITE
        while j < len(items) and items[j].s1 == items[i].s1:
            if best_higher is None or not best_higher < items[j].tau:
                kept.append(items[j])
            group_best = min(group_best, items[j].tau)
            j += 1
        best_higher = group_best if best_higher is None else min(best_higher, group_best)
        i = j
    return sorted(kept, key=lambda p: (p.s1, p.tau, p.sort_key()))


class _OmaEvaluator:
    """Shared caches for a grid scan at one alpha: the timeliness laws depend
    only on (T, Q), the frame-success probability only on (K, N)."""

    def __init__(self, grid: SweepGrid, alpha: float):
        self.grid = grid
        self.alpha = alpha
        self._tau: dict[tuple[int, int], tuple[float, float]] = {}
        self._ps1: dict[tuple[int, int], float] = {}
        self._ref: dict[int, float] = {}

    def ps1(self, K: int, N: int) -> float:
        key = (K, N)
        if key not in self._ps1:
            cfg = self.grid.make_config(K, N, 2, 1, self.alpha)
            self._ps1[key] = oma_throughput(cfg)[1]
        return self._ps1[key]

    def s1(self, K: int, N: int, T: int) -> float:
        return self.ps1(K, N) * (T - 1) * K / (T * N)

    def tau_ps2(self, T: int, Q: int) -> tuple[float, float]:
        """(timeliness percentile, per-packet success) at (T, Q); the KPIs of
        the intermittent user never depend on (K, N)."""
        key = (T, Q)
        if key not in self._tau:
            cfg = self.grid.make_config(max(self.grid.K_min, 2),
                                        max(self.grid.K_min, 2) + 1, T, Q, self.alpha)
            if self.grid.mode is KpiMode.PAOI:
                r = oma_paoi_kpis(cfg)
            else:
                r = oma_lr_kpis(cfg)
            self._tau[key] = (r.percentile90, r.ps2)
        return self._tau[key]

    def reliability_ref(self, T: int) -> float:
        """Queue-capable success probability used by the side-constraint:
        the latency-reliability analysis at the largest grid queue."""
        if T not in self._ref:
            q_ref = max(self.grid.Q_values)
            cfg = self.grid.make_config(max(self.grid.K_min, 2),
                                        max(self.grid.K_min, 2) + 1, T, q_ref, self.alpha)
            self._ref[T] = oma_lr_kpis(cfg).ps2
        return self._ref[T]


def grid_points(grid: SweepGrid, alpha: float) -> list[ParetoPoint]:
    """Evaluate every grid combination at one activation probability."""
    pts: list[ParetoPoint] = []
    if grid.scheme is Scheme.OMA:
        ev = _OmaEvaluator(grid, alpha)
        kn = [(K, N) for K in range(grid.K_min, grid.K_max + 1)
              for N in grid.n_range(K, alpha)]
        for T in grid.t_range():
            for Q in grid.q_values():
                tau, _ = ev.tau_ps2(T, Q)
                for K, N in kn:
                    cfg = grid.make_config(K, N, T, Q, alpha)
                    pts.append(ParetoPoint(ev.s1(K, N, T), tau, cfg, grid.scheme))
    else:
        for K in range(grid.K_min, grid.K_max + 1):
            for N in grid.n_range(K, alpha):
                cfg = grid.make_config(K, N, 1, 1, alpha)
                if grid.mode is KpiMode.PAOI:
                    r = noma_paoi_kpis(cfg)
                else:
                    r = noma_lr_kpis(cfg)
                pts.append(ParetoPoint(r.s1, r.percentile90, cfg, grid.scheme))
    return pts


def _feasible(grid: SweepGrid, point: ParetoPoint, s1_min: float,
              ev: _OmaEvaluator | None) -> bool:
    if point.s1 < s1_min:
        return False
    if grid.ps2_min is None:
        return True
    cfg = point.config
    if grid.scheme is Scheme.OMA:
        if grid.mode is KpiMode.LR:
            ps2 = ev.tau_ps2(cfg.T_int, cfg.Q)[1]
        else:
            ps2 = ev.reliability_ref(cfg.T_int)
        return ps2 >= grid.ps2_min
    return noma_lr_kpis(cfg).ps2 >= grid.ps2_min


def optimal_config(grid: SweepGrid, alpha: float, s1_min: float) -> ParetoPoint | None:
    """Exhaustive search for the feasible grid point with minimum timeliness;
    ties broken by higher throughput, then lexicographically smallest
    (K, N, T_int, Q). None when no point satisfies the constraints."""
    if not 0.0 < s1_min < 1.0:
        raise ValueError("s1_min must be in (0, 1)")
    ev = _OmaEvaluator(grid, alpha) if grid.scheme is Scheme.OMA else None
    best: ParetoPoint | None = None
    for p in grid_points(grid, alpha):
        if not _feasible(grid, p, s1_min, ev):
            continue
        if best is None or (p.tau, -p.s1, p.sort_key()) < (best.tau, -best.s1, best.sort_key()):
            best = p
    return best


@dataclass
class AlphaRecord:
    alpha: float
    point: ParetoPoint | None  # None = INFEASIBLE
    best_code: tuple[int, int]  # per-alpha throughput-maximizing (K, N)


def oma_best_code(grid: SweepGrid, alpha: float) -> tuple[int, int, float]:
    """(K*, N*, ps1*) maximizing frame throughput ps1 * K / N. Computed from
    configurations carrying the current alpha so that the claimed traffic
    independence of the broadband side is exercised, not assumed."""
    best = (-1.0, 0, 0)
    for K in range(grid.K_min, grid.K_max + 1):
        for N in range(K, n_upper(K, grid.eps1) + 1):
            cfg = grid.make_config(K, N, 2, 1, alpha)
            _, ps1 = oma_throughput(cfg)
            val = ps1 * K / N
            if val > best[0]:
                best = (val, K, N)
    val, K, N = best
    return K, N, val


def alpha_sweep(grid: SweepGrid, alphas: list[float] | None = None,
                s1_min: float = 0.75) -> list[AlphaRecord]:
    """Per-alpha optimal configurations over the full grid, plus the per-alpha
    throughput-maximizing code for the configuration subplots."""
    if alphas is None:
        alphas = grid.alphas
    if list(alphas) != sorted(alphas):
        raise ValueError("alphas must be sorted ascending")
    out = []
    for a in alphas:
        point = optimal_config(grid, a, s1_min)
        if grid.scheme is Scheme.OMA:
            K, N, _ = oma_best_code(grid, a)
        else:
            best = (-1.0, 0, 0)
            for K in range(grid.K_min, grid.K_max + 1):
                for N in grid.n_range(K, a):
                    s1, _ = noma_throughput(grid.make_config(K, N, 1, 1, a))
                    if s1 > best[0]:
                        best = (s1, K, N)
            K, N = best[1], best[2]
        out.append(AlphaRecord(a, point, (K, N)))
    return out


@dataclass
class StudyRecord:
    alpha: float
    feasible: bool
    config: SystemConfig | None
    s1: float | None
    tau: float | None
    ps2_ref: float | None


def fixed_code_alpha_study(grid: SweepGrid, alphas: list[float] | None = None,
                           s1_min: float = 0.75) -> list[StudyRecord]:
    """The fixed-code study procedure (see module docstring)."""
    if alphas is None:
        alphas = grid.alphas
    out: list[StudyRecord] = []
    for a in alphas:
        K, N, _ = oma_best_code(grid, a)
        if grid.scheme is Scheme.OMA:
            ev = _OmaEvaluator(grid, a)
            t_star = None
            for T in grid.t_range():
                if T >= 2 and ev.s1(K, N, T) >= s1_min:
                    t_star = T
                    break
            if t_star is None:
                out.append(StudyRecord(a, False, None, None, None, None))
                continue
            ps2_ref = ev.reliability_ref(t_star)
            if grid.ps2_min is not None and ps2_ref < grid.ps2_min:
                out.append(StudyRecord(a, False, None, None, None, ps2_ref))
                continue
            taus = []
            for Q in grid.q_values():
                tau, ps2_own = ev.tau_ps2(t_star, Q)
                if grid.ps2_min is not None and grid.mode is KpiMode.LR \
                        and ps2_own < grid.ps2_min:
                    continue
                taus.append((tau, Q))
            tau, Q = min(taus)
            cfg = grid.make_config(K, N, t_star, Q, a)
            out.append(StudyRecord(a, True, cfg, ev.s1(K, N, t_star), tau, ps2_ref))
        else:
            cfg = grid.make_config(K, N, 1, 1, a)
            s1, _ = noma_throughput(cfg)
            ps2_ref = None
            feasible = s1 >= s1_min
            if feasible and grid.ps2_min is not None:
                ps2_ref = noma_lr_kpis(cfg).ps2
                feasible = ps2_ref >= grid.ps2_min
            if not feasible:
                out.append(StudyRecord(a, False, None, s1, None, ps2_ref))
                continue
            if grid.mode is KpiMode.PAOI:
                r = noma_paoi_kpis(cfg)
            else:
                r = noma_lr_kpis(cfg)
            out.append(StudyRecord(a, True, cfg, r.s1, r.percentile90, ps2_ref))
    return out
