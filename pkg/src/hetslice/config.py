"""Scenario parameters, scheme/KPI selectors and validation rules shared by
the analytic and simulation modules.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

from .probcore import Pmf, INFINITE

SCENARIO_FIELDS = ("K", "N", "T_int", "Q", "alpha", "eps1", "eps2")


class Scheme(enum.Enum):
    OMA = "oma"
    NOMA = "noma"


class KpiMode(enum.Enum):
    LR = "lr"
    PAOI = "paoi"


class ConfigError(ValueError):
    """Raised with one line per violated invariant."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(violations))


@dataclass(frozen=True)
class SystemConfig:
    """Scenario parameters.

    K, N     broadband source / coded block sizes (packets per frame)
    T_int    period between intermittent-reserved slots (OMA only)
    Q        maximum intermittent queue length
    alpha    per-slot intermittent message-generation probability
    eps1/2   per-packet erasure probabilities (broadband / intermittent)
    """

    K: int
    N: int
    T_int: int
    Q: int
    alpha: float
    eps1: float
    eps2: float

    @property
    def p1(self) -> float:
        return 1.0 - self.eps1

    @property
    def p2(self) -> float:
        return self.alpha * (1.0 - self.eps2)

    def to_json_dict(self) -> dict:
        return {f: getattr(self, f) for f in SCENARIO_FIELDS}

    @staticmethod
    def from_json_dict(data: dict) -> "SystemConfig":
        unknown = sorted(set(data) - set(SCENARIO_FIELDS))
        if unknown:
            raise ConfigError([f"unknown scenario field(s): {', '.join(unknown)}"])
        missing = sorted(set(SCENARIO_FIELDS) - set(data))
        if missing:
            raise ConfigError([f"missing scenario field(s): {', '.join(missing)}"])
        return SystemConfig(K=int(data["K"]), N=int(data["N"]), T_int=int(data["T_int"]),
                            Q=int(data["Q"]), alpha=float(data["alpha"]),
                            eps1=float(data["eps1"]), eps2=float(data["eps2"]))


def validate(cfg: SystemConfig, scheme: Scheme, mode: KpiMode,
             strict_paper: bool = False) -> SystemConfig:
    """Check all invariants for the (scheme, mode) pair and return the
    configuration, normalizing Q := 1 where the pair forces it.

    The p1 + p2 <= 1 bound is a validity requirement of the strict-paper
    NOMA formulas only; the default NOMA formulas use per-slot categories
    (1-alpha)p1 and p2, which always form a valid distribution.
    """
    v = []
    if cfg.K < 1:
        v.append(f"K >= 1 violated (K={cfg.K})")
    if cfg.K > cfg.N:
        v.append(f"K <= N violated (K={cfg.K}, N={cfg.N})")
    if cfg.T_int < 1:
        v.append(f"T_int >= 1 violated (T_int={cfg.T_int})")
    if cfg.Q < 1:
        v.append(f"Q >= 1 violated (Q={cfg.Q})")
    for name in ("alpha", "eps1", "eps2"):
        val = getattr(cfg, name)
        if not 0.0 <= val <= 1.0:
            v.append(f"0 <= {name} <= 1 violated ({name}={val})")
    if scheme is Scheme.NOMA and strict_paper and not v:
        if cfg.p1 + cfg.p2 > 1.0 + 1e-12:
            v.append(f"p1 + p2 <= 1 violated for strict-paper NOMA "
                     f"(p1={cfg.p1:.6g}, p2={cfg.p2:.6g})")
    if v:
        raise ConfigError(v)
    forces_q1 = scheme is Scheme.NOMA or mode is KpiMode.PAOI
    if forces_q1 and cfg.Q != 1:
        return replace(cfg, Q=1)
    return cfg


@dataclass
class KpiResult:
    """Analytic KPIs for one (config, scheme, mode) triple.

    timeliness_pmf is the latency law p_T in LR mode (loss-inclusive: finite
    mass sums to the delivery probability, deficit is the loss mass at +inf)
    and the peak-age law p_Delta in PAoI mode (a proper distribution).
    percentile90 follows the strict max-definition and is INFINITE when the
    reachable mass is below the level.
    """

    scheme: Scheme
    mode: KpiMode
    config: SystemConfig
    s1: float
    ps1: float
    ps2: float
    timeliness_pmf: Pmf
    percentile90: float
    xi: float | None = None
    extras: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        pmf = self.timeliness_pmf
        out = {
            "scheme": self.scheme.value,
            "mode": self.mode.value,
            "config": self.config.to_json_dict(),
            "s1": self.s1,
            "ps1": self.ps1,
            "ps2": self.ps2,
            "pmf_offset": int(pmf.offset),
            "pmf_mass": [float(x) for x in pmf.mass],
            "pmf_deficit": float(pmf.deficit),
            "percentile90": "INFINITE" if self.percentile90 == INFINITE else int(self.percentile90),
        }
        if self.xi is not None:
            out["xi"] = self.xi
        if self.extras:
            out["extras"] = self.extras
        return out
