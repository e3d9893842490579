"""Throughput/timeliness analysis and simulation of uplink slicing between a
full-buffer broadband user and an intermittently active user, for orthogonal
access and non-orthogonal access with successive interference cancellation.
"""

from .config import ConfigError, KpiMode, KpiResult, Scheme, SystemConfig, validate
from .noma import NomaFrameLaw, frame_law, noma_lr_kpis, noma_paoi_kpis, noma_throughput
from .oma import QueueModel, oma_lr_kpis, oma_paoi_kpis, oma_throughput, queue_chain
from .probcore import (INFINITE, Pmf, binomial, convolve, multinomial,
                       percentile, steady_state)
from .simulator import SimConfig, SimResult, replicate, simulate
from .sweep import (ParetoPoint, SweepGrid, alpha_sweep, fixed_code_alpha_study,
                    oma_best_code, optimal_config, pareto_frontier)

__all__ = [
    "ConfigError", "KpiMode", "KpiResult", "Scheme", "SystemConfig", "validate",
    "NomaFrameLaw", "frame_law", "noma_lr_kpis", "noma_paoi_kpis", "noma_throughput",
    "QueueModel", "oma_lr_kpis", "oma_paoi_kpis", "oma_throughput", "queue_chain",
    "INFINITE", "Pmf", "binomial", "convolve", "multinomial", "percentile",
    "steady_state",
    "SimConfig", "SimResult", "replicate", "simulate",
    "ParetoPoint", "SweepGrid", "alpha_sweep", "fixed_code_alpha_study",
    "oma_best_code", "optimal_config", "pareto_frontier",
]

__version__ = "0.1.0"
