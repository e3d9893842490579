"""Shared test oracles.

The exhaustive frame oracle enumerates every per-slot outcome sequence of a
short non-orthogonal frame (3^N sequences over the categories clean-broadband
/ recoverable-intermittent / other) and aggregates the exact event structure.
It shares no code with the analytic module beyond elementary arithmetic.
"""

import itertools
import math
from fractions import Fraction

import numpy as np
import pytest


def exact_binomial(k: int, n: int, p: Fraction) -> Fraction:
    if k < 0 or k > n:
        return Fraction(0)
    return Fraction(math.comb(n, k)) * p ** k * (1 - p) ** (n - k)


class FrameOracle:
    """Exact per-frame aggregates for a short NOMA frame."""

    def __init__(self, K: int, N: int, pbb: float, pint: float):
        self.K, self.N = K, N
        prest = 1.0 - pbb - pint
        assert prest >= -1e-12
        prest = max(prest, 0.0)
        self.p_any_event = 0.0          # Pr[frame has >= 1 decoding event]
        self.p_block = 0.0              # Pr[broadband block decodes]
        self.first_event = np.zeros(N + 1)
        self.event_rate = np.zeros(N + 1)
        self.last_event = np.zeros(N + 1)
        self.delay_mass = {}            # expected decoded packets per delay
        self.expected_decoded = 0.0
        self.expected_events = 0.0
        self.event_last_delay = {}      # (d, t) -> expected events at d with last-packet delay t
        for seq in itertools.product((0, 1, 2), repeat=N):
            p = 1.0
            for s in seq:
                p *= (pbb, pint, prest)[s]
            if p == 0.0:
                continue
            clean = 0
            decode_slot = None
            for i, s in enumerate(seq):
                if s == 0:
                    clean += 1
                    if clean == K:
                        decode_slot = i + 1
                        break
            recoverables = [i + 1 for i, s in enumerate(seq) if s == 1]
            if decode_slot is not None:
                self.p_block += p
            if decode_slot is None or not recoverables:
                continue
            self.p_any_event += p
            events = []
            batch = [decode_slot - s for s in recoverables if s < decode_slot]
            if batch:
                events.append((decode_slot, batch))
            for s in recoverables:
                if s > decode_slot:
                    events.append((s, [0]))
            events.sort()
            self.first_event[events[0][0]] += p
            self.last_event[events[-1][0]] += p
            for slot, delays in events:
                self.event_rate[slot] += p
                self.expected_events += p
                key = (slot, min(delays))
                self.event_last_delay[key] = self.event_last_delay.get(key, 0.0) + p
                for t in delays:
                    self.delay_mass[t] = self.delay_mass.get(t, 0.0) + p
                    self.expected_decoded += p


@pytest.fixture(scope="session")
def frame_oracle():
    cache = {}

    def build(K, N, pbb, pint):
        key = (K, N, round(pbb, 12), round(pint, 12))
        if key not in cache:
            cache[key] = FrameOracle(K, N, pbb, pint)
        return cache[key]

    return build
