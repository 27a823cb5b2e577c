"""Mitigation machinery: testing stock and queue, the contact-tracing-app
log, isolation state, compliance draws, and the background load of
influenza-like illness on the testing system.

Policy orchestration (who gets notified when) lives in the engine; this
module owns the data structures and their invariants.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

# why an agent entered the test queue
(CAUSE_SYMPTOMS, CAUSE_ILI, CAUSE_CTA, CAUSE_RELATIVE, CAUSE_CLASSMATE) = range(5)
CAUSE_LABELS = ("symptoms", "ili", "cta_notice", "relative_notice", "classmate")

# symptomatic presentation: triage cannot tell ILI from the real thing
PRIORITY_CAUSES = (CAUSE_SYMPTOMS, CAUSE_ILI)

# why an agent is isolating
(ISO_CONFIRMED, ISO_SYMPTOMS, ISO_CTA, ISO_HOUSEHOLD,
 ISO_CLASSMATE, ISO_RELATIVE) = range(6)
ISO_LABELS = ("confirmed", "symptoms", "cta", "household", "classmate", "relative")
PRECAUTIONARY_REASONS = (ISO_CTA, ISO_HOUSEHOLD, ISO_CLASSMATE, ISO_RELATIVE)

POLICY_PRIORITY = "priority_symptomatic"
POLICY_FIRST_COME = "first_come"
TESTING_POLICIES = (POLICY_PRIORITY, POLICY_FIRST_COME)


@dataclass
class ComplianceModel:
    """Willingness to self-isolate.  Each agent gets a personal probability
    omega; agents notified through the app and left untested comply with
    probability omega * notified_factor."""

    omega_mean: float = 0.70
    omega_concentration: float = 10.0
    notified_factor: float = 0.9          # the Omega scenario knob
    distribution: str = "beta"            # or "point"

    def validate(self):
        if not (0.0 < self.omega_mean < 1.0):
            raise ConfigurationError("omega_mean: must be in (0, 1)")
        if self.omega_concentration <= 0:
            raise ConfigurationError("omega_concentration: must be > 0")
        if not (0.0 < self.notified_factor <= 1.0):
            raise ConfigurationError("notified_factor: must be in (0, 1]")
        if self.distribution not in ("beta", "point"):
            raise ConfigurationError("distribution: must be 'beta' or 'point'")
        return self

    def draw_omega(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.distribution == "point":
            return np.full(n, self.omega_mean)
        a = self.omega_mean * self.omega_concentration
        b = (1.0 - self.omega_mean) * self.omega_concentration
        return rng.beta(a, b, size=n)


class IsolationState:
    """Per-agent isolation flags with reasons and expiry days."""

    def __init__(self, n: int):
        self.isolating = np.zeros(n, dtype=np.uint8)
        self.reason = np.full(n, -1, dtype=np.int8)
        self.until = np.zeros(n, dtype=np.float64)

    def start(self, agent: int, reason: int, until_day: float):
        # never downgrade: a longer sentence replaces a shorter one
        if not self.isolating[agent] or until_day > self.until[agent]:
            self.isolating[agent] = 1
            self.reason[agent] = reason
            self.until[agent] = until_day

    def release(self, agent: int):
        self.isolating[agent] = 0
        self.reason[agent] = -1
        self.until[agent] = 0.0

    def release_if_precautionary(self, agent: int):
        if self.isolating[agent] and self.reason[agent] in PRECAUTIONARY_REASONS:
            self.release(agent)

    def expire_due(self, day: int) -> np.ndarray:
        due = np.flatnonzero((self.isolating == 1) & (day >= self.until))
        for i in due:
            self.release(i)
        return due

    def count(self) -> int:
        return int(self.isolating.sum())


@dataclass
class QueueEntry:
    day: int
    seq: int
    agent: int
    cause: int


class TestingSystem:
    """Daily-restocked test inventory with a single intake queue.

    Entries are served once per day.  priority_symptomatic serves the
    symptomatic-presentation causes first (stable within class by arrival);
    first_come serves in pure arrival order.  Every entry left once stock
    runs out (stock < 1) takes the no-test branch the same day: nobody waits
    in the queue overnight.
    """

    def __init__(self, n_agents: int, weekly_capacity_fraction: float,
                 policy: str):
        if policy not in TESTING_POLICIES:
            raise ConfigurationError(f"testing_policy: unknown policy '{policy}'")
        if not (weekly_capacity_fraction >= 0):
            raise ConfigurationError("weekly_test_capacity: must be >= 0 or inf")
        self.n = n_agents
        self.policy = policy
        self.unlimited = math.isinf(weekly_capacity_fraction)
        self.daily_restock = (math.inf if self.unlimited
                              else weekly_capacity_fraction * n_agents / 7.0)
        self.stock = 0.0
        self.queue: list[QueueEntry] = []
        self.pending = np.zeros(n_agents, dtype=bool)
        self.awaiting = np.zeros(n_agents, dtype=bool)
        self._seq = 0
        self._due_results: list[tuple[int, bool, int]] = []

    def restock(self):
        if self.unlimited:
            self.stock = math.inf
        else:
            self.stock += self.daily_restock  # unused stock accumulates

    def enqueue(self, agent: int, cause: int, day: int) -> bool:
        if self.pending[agent] or self.awaiting[agent]:
            return False
        self.pending[agent] = True
        self.queue.append(QueueEntry(day, self._seq, int(agent), cause))
        self._seq += 1
        return True

    def take_results(self) -> list[tuple[int, bool, int]]:
        """Results swabbed yesterday: (agent, positive, cause)."""
        out = self._due_results
        self._due_results = []
        for agent, _, _ in out:
            self.awaiting[agent] = False
        return out

    def serve(self, day: int, infected_mask: np.ndarray,
              dropped_mask: np.ndarray):
        """Process the whole queue for one day.

        infected_mask: agents who would test positive today.
        dropped_mask: agents whose entries are discarded unserved (dead,
        hospitalized, already confirmed).

        Returns (swabbed, refused): swabbed = [(agent, cause, positive)],
        refused = [(agent, cause)] in service order.
        """
        if self.policy == POLICY_PRIORITY:
            order = sorted(self.queue,
                           key=lambda e: (0 if e.cause in PRIORITY_CAUSES else 1,
                                          e.seq))
        else:
            order = self.queue
        swabbed = []
        refused = []
        for entry in order:
            a = entry.agent
            self.pending[a] = False
            if dropped_mask[a]:
                continue
            if self.stock >= 1.0:
                self.stock -= 1.0
                positive = bool(infected_mask[a])
                self.awaiting[a] = True
                self._due_results.append((a, positive, entry.cause))
                swabbed.append((a, entry.cause, positive))
            else:
                refused.append((a, entry.cause))
        self.queue = []
        return swabbed, refused


class CtaLog:
    """Rolling log of app-recorded encounters.

    Pairs are stored per day; an entry recorded on day r is retained while
    the current day d satisfies d - r <= window.  Partner lookup sorts a
    day's doubled pair list lazily on first query.
    """

    def __init__(self, window: int = 10):
        self.window = window
        self._days: deque[list] = deque()   # [day, keys, partners, sorted?]

    def append_day(self, day: int, a: np.ndarray, b: np.ndarray):
        if len(a):
            keys = np.concatenate([a, b])
            partners = np.concatenate([b, a])
            self._days.append([day, keys, partners, False])

    def prune(self, day: int):
        while self._days and day - self._days[0][0] > self.window:
            self._days.popleft()

    def partners_of(self, agent: int) -> np.ndarray:
        """All logged partners of `agent` within the window, deduplicated."""
        found = []
        for rec in self._days:
            day, keys, partners, is_sorted = rec
            if not is_sorted:
                order = np.argsort(keys, kind="stable")
                rec[1] = keys = keys[order]
                rec[2] = partners = partners[order]
                rec[3] = True
            lo = np.searchsorted(keys, agent, side="left")
            hi = np.searchsorted(keys, agent, side="right")
            if hi > lo:
                found.append(partners[lo:hi])
        if not found:
            return np.empty(0, dtype=np.int32)
        return np.unique(np.concatenate(found))

    def pair_count(self) -> int:
        return sum(len(rec[1]) for rec in self._days) // 2


@dataclass
class IliModel:
    """Influenza-like illness: a background stream of agents with COVID-like
    symptoms who seek testing and always test negative."""

    weekly_rate: float = 0.035
    seek_fraction: float = 0.30

    def validate(self):
        if not (0.0 <= self.weekly_rate <= 1.0):
            raise ConfigurationError("weekly_rate: must be in [0, 1]")
        if not (0.0 <= self.seek_fraction <= 1.0):
            raise ConfigurationError("seek_fraction: must be in [0, 1]")
        return self

    def daily_seekers(self, rng: np.random.Generator, eligible: np.ndarray,
                      n_total: int) -> np.ndarray:
        """Draw today's ILI test seekers from the eligible agent ids.  The
        expected count scales with the whole population; eligibility only
        restricts who can be picked."""
        expected = self.weekly_rate * self.seek_fraction / 7.0 * n_total
        k = int(rng.poisson(expected))
        if k == 0 or len(eligible) == 0:
            return np.empty(0, dtype=np.int64)
        k = min(k, len(eligible))
        pick = rng.choice(len(eligible), size=k, replace=False, shuffle=False)
        return np.sort(eligible[pick])
