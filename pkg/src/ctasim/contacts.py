"""Daily contact generation policy and packed model.

Realizes the layer table: household members daily; half the class on school
days; all close colleagues plus one random site colleague on work days; one
member of the linked household twice a week; a capped random number of
friends; Poisson strangers from the home zone; and an extra customer loop
for public-facing workers.  Weekly frequencies become independent daily
Bernoulli(f/7) draws.

Counting semantics: an agent's daily contact count tallies the encounters its
own routine generates (customers count toward the worker serving them).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace, asdict

import numpy as np

from .errors import ConfigurationError
from . import backend
from .layers import (HOUSEHOLD, RELATIVES, WORKPLACE_CLOSE, WORKPLACE_SITE,
                     SCHOOL, FRIENDSHIP, RANDOM, CUSTOMER,
                     LAYER_LABELS, CTA_RECORDED, N_LAYERS)
from .synthpop import Population, EMP_NONE, EMP_PUBLIC_FACING

CTA_RECORDED_LAYERS = frozenset(CTA_RECORDED)


def beta_class(layer: int) -> str:
    if layer == SCHOOL:
        return "school"
    if layer in (RANDOM, CUSTOMER):
        return "random"
    return "network"


@dataclass(frozen=True)
class ContactEvent:
    source: int
    target: int
    layer: int

    @property
    def beta_class(self) -> str:
        return beta_class(self.layer)

    @property
    def layer_label(self) -> str:
        return LAYER_LABELS[self.layer]


@dataclass
class ContactPolicy:
    """Per-layer encounter frequencies (days/week) and mixing parameters."""

    name: str = "business_as_usual"
    household_freq: float = 7.0
    school_freq: float = 5.0
    work_freq: float = 5.0
    relatives_freq: float = 2.0
    friend_freq_young: float = 7.0     # under 65
    friend_freq_old: float = 3.5       # 65 and over
    random_freq_young: float = 7.0
    random_freq_old: float = 3.5
    random_mixing: float = 0.01        # stranger pool fraction of own zone
    public_facing_multiplier: float = 3.0
    school_fraction_met: float = 0.5
    friend_fraction_cap: float = 0.10
    elderly_age: int = 65
    distancing: bool = False

    def validate(self):
        for f in ("household_freq", "school_freq", "work_freq", "relatives_freq",
                  "friend_freq_young", "friend_freq_old",
                  "random_freq_young", "random_freq_old"):
            v = getattr(self, f)
            if not (0.0 <= v <= 7.0):
                raise ConfigurationError(f"{f}: frequency must be in [0, 7]")
        if not (0.0 < self.random_mixing < 1.0):
            raise ConfigurationError("random_mixing: must be in (0, 1)")
        for f in ("school_fraction_met", "friend_fraction_cap"):
            v = getattr(self, f)
            if not (0.0 < v <= 1.0):
                raise ConfigurationError(f"{f}: must be in (0, 1]")
        if self.public_facing_multiplier < 0:
            raise ConfigurationError("public_facing_multiplier: must be >= 0")
        return self

    def to_json_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json_dict(cls, data: dict) -> "ContactPolicy":
        known = set(cls.__dataclass_fields__)
        for key in data:
            if key not in known:
                raise ConfigurationError(f"contact policy: unknown field '{key}'")
        return cls(**data).validate()


def business_as_usual() -> ContactPolicy:
    return ContactPolicy()


def baseline_distancing() -> ContactPolicy:
    """Moderate social distancing: 3-day school/work weeks, 30% fewer school
    and stranger contacts, 30% less frequent friend meetings."""
    base = business_as_usual()
    return replace(
        base,
        name="baseline_distancing",
        school_freq=3.0,
        work_freq=3.0,
        friend_freq_young=base.friend_freq_young * 0.7,
        friend_freq_old=base.friend_freq_old * 0.7,
        random_mixing=base.random_mixing * 0.7,
        school_fraction_met=base.school_fraction_met * 0.7,
        distancing=True,
    )


POLICY_PRESETS = {
    "business_as_usual": business_as_usual,
    "baseline_distancing": baseline_distancing,
}


class KernelModel:
    """Population + policy packed into flat arrays for the day kernels.

    Everything here is static over a run.  Both the compiled and the pure
    backend read exactly these fields; per-day epidemic state is passed
    separately.
    """

    def __init__(self, pop: Population, policy: ContactPolicy):
        policy.validate()
        self.pop = pop
        self.policy = policy
        n = pop.n
        self.n = n

        old = pop.age >= policy.elderly_age
        self.attend_p = np.zeros(n, dtype=np.float64)
        self.attend_p[pop.class_of >= 0] = policy.school_freq / 7.0
        self.attend_p[pop.employment != EMP_NONE] = policy.work_freq / 7.0
        self.relative_p = policy.relatives_freq / 7.0
        self.friend_p = np.where(old, policy.friend_freq_old, policy.friend_freq_young) / 7.0
        self.random_p = np.where(old, policy.random_freq_old, policy.random_freq_young) / 7.0

        self.is_pupil = (pop.class_of >= 0).astype(np.uint8)
        self.is_worker = (pop.employment != EMP_NONE).astype(np.uint8)
        self.is_pf = (pop.employment == EMP_PUBLIC_FACING).astype(np.uint8)
        self.pf_workers = np.flatnonzero(self.is_pf).astype(np.int32)
        hh_linked = pop.linked_household[pop.household_of]
        self.has_relative = (hh_linked >= 0).astype(np.uint8)

        self.hh_of = pop.household_of
        self.hh_offsets = pop.households.offsets
        self.hh_members = pop.households.members
        self.linked_hh = pop.linked_household
        self.class_of = pop.class_of
        self.class_offsets = pop.classes.offsets
        self.class_members = pop.classes.members
        self.site_of = pop.site_of
        self.site_offsets = pop.sites.offsets
        self.site_members = pop.sites.members
        self.site_pos = pop.sites.pos
        self.close_offsets = pop.close_adj.offsets
        self.close_values = pop.close_adj.values
        self.friend_offsets = pop.friend_adj.offsets
        self.friend_values = pop.friend_adj.values
        self.zone_of = pop.zone_of
        self.zone_offsets = pop.zone_offsets

        zs = pop.zone_sizes.astype(np.float64)
        self.lam_r = policy.random_mixing * zs
        self.lam_w = policy.public_facing_multiplier * policy.random_mixing * zs
        # exp(-lam) precomputed here so neither backend evaluates
        # transcendentals; both compare against the same table values
        self.exp_neg_lam_r = np.exp(-self.lam_r)
        self.exp_neg_lam_w = np.exp(-self.lam_w)

        self.school_fraction = float(policy.school_fraction_met)
        self.friend_cap_frac = float(policy.friend_fraction_cap)

        hh_sz = np.diff(self.hh_offsets)
        cls_sz = np.diff(self.class_offsets) if len(self.class_offsets) > 1 else np.array([0])
        fr_deg = np.diff(self.friend_offsets)
        self.max_row = int(max(hh_sz.max(initial=1), cls_sz.max(initial=1),
                               fr_deg.max(initial=1)))


def agent_daily_contacts(model: KernelModel, agent: int, day: int, master: int,
                         contactable=None, isolating=None) -> list[ContactEvent]:
    """Contacts the agent's own routine generates on one day.

    Pure function of (model, day, master seed, state); matches what the day
    kernels enumerate for that agent.
    """
    from . import _kernel_py
    n = model.n
    if contactable is None:
        contactable = np.ones(n, dtype=np.uint8)
    if isolating is None:
        isolating = np.zeros(n, dtype=np.uint8)
    if not contactable[agent]:
        return []
    pairs = _kernel_py.enumerate_agent(model, int(agent), int(day), int(master),
                                       contactable, isolating)
    return [ContactEvent(agent, t, l) for (t, l) in pairs]


@dataclass
class ContactReport:
    """Pooled per-agent daily contact counts over several days."""

    histogram: np.ndarray       # index = contact count, value = agent-days
    mean: float
    sd: float
    n_days: int
    per_layer_mean: dict[str, float]

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write("contacts,frequency\n")
            for c, f in enumerate(self.histogram):
                if f:
                    fh.write(f"{c},{int(f)}\n")


def contact_distribution_report(pop: Population, policy: ContactPolicy,
                                n_days: int, seed: int) -> ContactReport:
    """Census the contact engine: run `n_days` of pure contact generation for
    every agent (nobody sick, nobody isolating) and pool the daily counts."""
    if n_days < 1:
        raise ConfigurationError("n_days: must be >= 1")
    model = KernelModel(pop, policy)
    master = int(seed) & ((1 << 64) - 1)
    totals = []
    layer_sums = np.zeros(len(LAYER_LABELS), dtype=np.int64)
    for day in range(n_days):
        counts, by_layer = backend.census_day(model, day, master)
        totals.append(counts)
        layer_sums += by_layer
    pooled = np.concatenate(totals)
    hist = np.bincount(pooled)
    denom = float(len(pooled))
    per_layer = {LAYER_LABELS[i]: layer_sums[i] / denom
                 for i in range(len(LAYER_LABELS))}
    return ContactReport(histogram=hist, mean=float(pooled.mean()),
                         sd=float(pooled.std()), n_days=n_days,
                         per_layer_mean=per_layer)
