"""Deterministic randomness for the simulator.

Two kinds of random draws are used.  Structural sampling (population
synthesis, disease courses, mitigation decisions, scenario seeding) runs on
numpy Generators spawned from a SeedSequence tree.  The daily contact kernel
instead draws from counter-style splitmix64 streams keyed by
(master, day, agent, purpose), so the values an agent consumes do not depend
on execution order, backend, or how many other agents were processed first.
"""
from __future__ import annotations

import hashlib
import json

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
AGENT_SALT = 0xC2B2AE3D27D4EB4F
PURPOSE_SALT = 0xD6E8FEB86659FD93

# Stream purposes within one simulated day.  ATTEND decides which layers an
# agent shows up to; each layer that samples partners has its own selection
# stream so that skipping one layer (an enumeration that only needs the
# CTA-recorded layers, say) never shifts the draws of another.  ROLL carries
# transmission Bernoullis; the customer-loop streams are separate so a
# worker's own draws are unaffected by serving customers.
(ATTEND, SEL_SCHOOL, SEL_SITE, SEL_RELATIVE, SEL_FRIEND, SEL_RANDOM,
 ROLL, CUST_SELECT, CUST_ROLL) = range(9)


def mix64(z: int) -> int:
    """splitmix64 finalizer; bijective on 64-bit ints."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return (z ^ (z >> 31)) & MASK64


def stream_seed(master: int, day: int, agent: int, purpose: int) -> int:
    """Seed for the (day, agent, purpose) stream under a run master seed."""
    h = mix64((master ^ (GOLDEN * (day + 1))) & MASK64)
    h = mix64((h ^ (AGENT_SALT * (agent + 1))) & MASK64)
    return mix64((h ^ (PURPOSE_SALT * (purpose + 1))) & MASK64)


class Stream:
    """splitmix64 sequence; mirrors the compiled kernel bit for bit."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK64
        return mix64(self.state)

    def u01(self) -> float:
        # 53-bit mantissa, uniform on [0, 1)
        return (self.next_u64() >> 11) * 2.0**-53

    def randbelow(self, n: int) -> int:
        # multiply-shift map of a 64-bit draw onto [0, n); bias < 2**-32 for
        # the n used here and identical in both backends, which is what counts
        return (self.next_u64() * int(n)) >> 64

    def bernoulli(self, p: float) -> bool:
        return self.u01() < p

    def poisson(self, lam: float, exp_neg_lam: float) -> int:
        """Inversion sampler.  exp(-lam) is precomputed by the caller so both
        backends compare against the same table value."""
        u = self.u01()
        p = exp_neg_lam
        cum = p
        k = 0
        while u > cum and k < 10000:
            k += 1
            p *= lam / k
            cum += p
        return k


def day_stream(master: int, day: int, agent: int, purpose: int) -> Stream:
    return Stream(stream_seed(master, day, agent, purpose))


def master_from(ss: np.random.SeedSequence) -> int:
    """Collapse a SeedSequence into one 64-bit kernel master seed."""
    words = ss.generate_state(2, np.uint32)
    return (int(words[0]) << 32) | int(words[1])


def config_digest_words(payload) -> tuple[int, ...]:
    """Stable 4-word digest of a JSON-serializable payload.

    Used as a spawn key so that two scenarios with identical parameters get
    identical random streams no matter which sweep produced them.
    """
    canon = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=_json_default)
    digest = hashlib.blake2b(canon.encode(), digest_size=16).digest()
    return tuple(int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4))


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, float) and obj == float("inf"):
        return "inf"
    raise TypeError(f"not canonically serializable: {type(obj)!r}")
