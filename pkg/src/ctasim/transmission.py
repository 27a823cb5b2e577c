"""One simulated day of viral transmission.

Wraps the contact kernel: collect candidate transmissions from every
infectious agent's contacts, resolve multiple exposures of one target
deterministically, and commit the new infections with freshly sampled
disease courses.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import backend
from .layers import N_LAYERS
from .disease import (SUSCEPTIBLE, INCUBATING, ASYMPTOMATIC, SYMPTOMATIC,
                      HOSPITALIZED, DEAD, RECOVERED, sample_courses)

SEED_LAYER = -1  # layer code for initially seeded infections


@dataclass
class DayLedger:
    """Audit record of one day's transmission."""

    day: int
    sources: np.ndarray          # infecting agent per new infection
    targets: np.ndarray
    layers: np.ndarray
    cta_pairs: tuple             # (a, b) arrays logged today
    by_layer: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.by_layer is None:
            self.by_layer = np.bincount(self.layers, minlength=N_LAYERS) \
                if len(self.layers) else np.zeros(N_LAYERS, dtype=np.int64)

    @property
    def new_infections(self) -> int:
        return len(self.targets)


def resolve_candidates(src, tgt, layer):
    """Pick one winning exposure per target: lowest source id, then first
    enumerated.  Candidate arrays arrive in kernel enumeration order."""
    if len(src) == 0:
        return src, tgt, layer
    seq = np.arange(len(src))
    order = np.lexsort((seq, src, tgt))
    s, t, l = src[order], tgt[order], layer[order]
    first = np.ones(len(t), dtype=bool)
    first[1:] = t[1:] != t[:-1]
    return s[first], t[first], l[first]


def step_day(world, day: int) -> DayLedger:
    """Generate contacts, roll transmissions, commit new infections."""
    state = world.state
    contactable = (state != HOSPITALIZED) & (state != DEAD)
    active_contact = ((state == INCUBATING) | (state == ASYMPTOMATIC)
                      | (state == SYMPTOMATIC))
    full_sources = np.flatnonzero(active_contact).astype(np.int32)

    if world.record_cta:
        cta_only = (world.cta.astype(bool) & contactable & ~active_contact
                    & (world.isolation.isolating == 0))
        cta_sources = np.flatnonzero(cta_only).astype(np.int32)
    else:
        cta_sources = np.empty(0, dtype=np.int32)

    src, tgt, layer, cta_a, cta_b = backend.run_day(
        world.model, day, world.kernel_master,
        full_sources, cta_sources,
        world.mult, (state == SUSCEPTIBLE).astype(np.uint8),
        contactable.astype(np.uint8), world.isolation.isolating,
        world.cta, world.record_cta,
        world.rates.network, world.rates.school, world.rates.random,
        world.rates.household_beta,
        world.rates.household_isolation_factor, world.child_discount)

    src, tgt, layer = resolve_candidates(src, tgt, layer)
    if len(tgt):
        state[tgt] = INCUBATING
        sample_courses(world.disease, world.courses_rng, world.courses,
                       tgt, world.pop.age[tgt], world.pop.sex_female[tgt], day)
        world.infected_day[tgt] = day
        world.infection_source[tgt] = src
        world.infection_layer[tgt] = layer
        np.add.at(world.secondary_count, src, 1)
    return DayLedger(day=day, sources=src, targets=tgt, layers=layer,
                     cta_pairs=(cta_a, cta_b))


def seed_epidemic(world, n_infected: int, recovered_fraction: float,
                  rng: np.random.Generator, day: int = 0):
    """Initial conditions: a recovered slice of the population plus a batch
    of fresh infections committed on `day`."""
    n = world.pop.n
    k_rec = int(round(recovered_fraction * n))
    order = rng.permutation(n)
    recovered = np.sort(order[:k_rec])
    world.state[recovered] = RECOVERED
    pool = order[k_rec:]
    if n_infected > len(pool):
        raise ValueError("initial_infected exceeds the non-recovered population")
    infected = np.sort(pool[:n_infected])
    world.state[infected] = INCUBATING
    sample_courses(world.disease, world.courses_rng, world.courses,
                   infected, world.pop.age[infected],
                   world.pop.sex_female[infected], day)
    world.infected_day[infected] = day
    world.infection_layer[infected] = SEED_LAYER
    return infected, recovered
