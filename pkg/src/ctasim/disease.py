"""Disease natural history: course sampling and daily state advancement.

Courses are fully sampled at infection time (durations, branch outcomes,
presymptomatic infectious days), so advancing a day is pure table lookup.
All probabilities and durations are age-banded; death risk is also
sex-dependent.
"""
from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from .errors import ConfigurationError

# agent disease states
(SUSCEPTIBLE, INCUBATING, ASYMPTOMATIC, SYMPTOMATIC,
 HOSPITALIZED, RECOVERED, DEAD) = range(7)

STATE_LABELS = ("susceptible", "incubating", "asymptomatic", "symptomatic",
                "hospitalized", "recovered", "dead")

# states that count as an active infection; the first three generate contacts
ACTIVE_STATES = (INCUBATING, ASYMPTOMATIC, SYMPTOMATIC, HOSPITALIZED)
CONTACT_ACTIVE_STATES = (INCUBATING, ASYMPTOMATIC, SYMPTOMATIC)


def _bands(pairs):
    return [tuple(b) for b in pairs]


@dataclass
class DiseaseParams:
    """Natural-history parameters.  Age bands are (lower_edge, value) pairs;
    a band runs to the next edge."""

    incubation_shape: float = 5.1
    incubation_scale: float = 1.0
    symptomatic_age_bands: list = field(default_factory=lambda: _bands(
        [(0, 0.02), (10, 0.26), (20, 0.55), (40, 0.62), (50, 0.72), (70, 0.82)]))
    severe_age_bands: list = field(default_factory=lambda: _bands(
        [(0, 0.02), (15, 0.06), (40, 0.09), (50, 0.13), (60, 0.17), (70, 0.20)]))
    death_age_bands_male: list = field(default_factory=lambda: _bands(
        [(0, 0.005), (15, 0.03), (40, 0.08), (50, 0.09), (60, 0.16),
         (70, 0.25), (80, 0.50)]))
    female_death_factor: float = 0.8
    duration_age_bands: list = field(default_factory=lambda: _bands(
        [(0, 8.0), (40, 12.0), (50, 15.0), (70, 20.0)]))
    duration_sd_factor: float = 0.25
    severe_home_shape: float = 6.5
    severe_home_rate: float = 0.9        # pre-admission days ~ Gamma(shape, 1/rate)
    presym_window: int = 3
    presym_daily_prob: float = 0.25
    asym_decay: float = 0.9
    asym_full_days: int = 3              # decay starts after this infectious day
    sym_infectious_cap: tuple = (7, 11)  # uniform int, days past onset
    child_age_limit: int = 16
    child_susceptibility: float = 0.5

    def validate(self):
        if self.incubation_shape <= 0 or self.incubation_scale <= 0:
            raise ConfigurationError("incubation: shape and scale must be > 0")
        for name in ("symptomatic_age_bands", "severe_age_bands",
                     "death_age_bands_male", "duration_age_bands"):
            bands = getattr(self, name)
            if not bands or bands[0][0] != 0:
                raise ConfigurationError(f"{name}: first band must start at age 0")
            edges = [b[0] for b in bands]
            if edges != sorted(edges) or len(set(edges)) != len(edges):
                raise ConfigurationError(f"{name}: band edges must be increasing")
            if name != "duration_age_bands" and any(not (0 <= b[1] <= 1) for b in bands):
                raise ConfigurationError(f"{name}: probabilities must be in [0, 1]")
        if not (0 <= self.female_death_factor <= 1):
            raise ConfigurationError("female_death_factor: must be in [0, 1]")
        if not (0 < self.asym_decay <= 1):
            raise ConfigurationError("asym_decay: must be in (0, 1]")
        if not (0 <= self.presym_daily_prob <= 1):
            raise ConfigurationError("presym_daily_prob: must be in [0, 1]")
        lo, hi = self.sym_infectious_cap
        if not (1 <= lo <= hi):
            raise ConfigurationError("sym_infectious_cap: need 1 <= lo <= hi")
        if not (0 <= self.child_susceptibility <= 1):
            raise ConfigurationError("child_susceptibility: must be in [0, 1]")
        return self

    def to_json_dict(self) -> dict:
        d = asdict(self)
        d["sym_infectious_cap"] = list(self.sym_infectious_cap)
        return d

    @classmethod
    def from_json_dict(cls, data: dict) -> "DiseaseParams":
        known = set(cls.__dataclass_fields__)
        for key in data:
            if key not in known:
                raise ConfigurationError(f"disease params: unknown field '{key}'")
        kwargs = dict(data)
        for name in ("symptomatic_age_bands", "severe_age_bands",
                     "death_age_bands_male", "duration_age_bands"):
            if name in kwargs:
                kwargs[name] = _bands(kwargs[name])
        if "sym_infectious_cap" in kwargs:
            kwargs["sym_infectious_cap"] = tuple(kwargs["sym_infectious_cap"])
        return cls(**kwargs).validate()


@dataclass
class TransmissionRates:
    """Per-contact transmission probabilities by contact class."""

    network: float = 0.08                 # work, friends, relatives
    random: float = 0.008                 # strangers and customers
    school_factor: float = 0.5            # school beta = network * school_factor
    household: float | None = None        # None: same as network
    household_isolation_factor: float = 0.7

    @property
    def school(self) -> float:
        return self.network * self.school_factor

    @property
    def household_beta(self) -> float:
        return self.network if self.household is None else self.household

    def validate(self):
        for name in ("network", "random"):
            if not (0.0 <= getattr(self, name) <= 1.0):
                raise ConfigurationError(f"{name}: must be in [0, 1]")
        if self.household is not None and not (0.0 <= self.household <= 1.0):
            raise ConfigurationError("household: must be in [0, 1]")
        if not (0.0 <= self.school_factor <= 1.0):
            raise ConfigurationError("school_factor: must be in [0, 1]")
        if not (0.0 <= self.household_isolation_factor <= 1.0):
            raise ConfigurationError("household_isolation_factor: must be in [0, 1]")
        return self


def effective_beta(rates: TransmissionRates, params: DiseaseParams, layer: int,
                   source_multiplier: float, target_age: int,
                   source_isolating: bool = False) -> float:
    """Transmission probability for one directed contact event."""
    from .layers import SCHOOL, RANDOM, CUSTOMER, HOUSEHOLD
    if layer == SCHOOL:
        beta = rates.school
    elif layer in (RANDOM, CUSTOMER):
        beta = rates.random
    elif layer == HOUSEHOLD:
        beta = rates.household_beta
    else:
        beta = rates.network
    beta = beta * source_multiplier
    if target_age < params.child_age_limit:
        beta = beta * params.child_susceptibility
    if layer == HOUSEHOLD and source_isolating:
        beta = beta * rates.household_isolation_factor
    return beta


def band_lookup(bands, ages) -> np.ndarray:
    edges = np.array([b[0] for b in bands])
    values = np.array([b[1] for b in bands], dtype=np.float64)
    return values[np.searchsorted(edges, ages, side="right") - 1]


class CourseTable:
    """Per-agent sampled disease course; row i is valid once t_infect[i] >= 0."""

    def __init__(self, n: int):
        self.n = n
        self.t_infect = np.full(n, -1, dtype=np.int32)
        self.incubation = np.zeros(n, dtype=np.int16)
        self.presym_mask = np.zeros(n, dtype=np.uint8)
        self.is_sym = np.zeros(n, dtype=bool)
        self.is_severe = np.zeros(n, dtype=bool)
        self.dies = np.zeros(n, dtype=bool)
        self.home_days = np.zeros(n, dtype=np.int16)
        self.hosp_days = np.zeros(n, dtype=np.int16)
        self.inf_cap = np.zeros(n, dtype=np.int16)


def _round_duration(x) -> np.ndarray:
    return np.maximum(np.rint(x), 1.0).astype(np.int16)


def sample_courses(params: DiseaseParams, rng: np.random.Generator,
                   table: CourseTable, ids: np.ndarray, ages: np.ndarray,
                   female: np.ndarray, day: int):
    """Sample complete courses for newly infected agents.

    Draw order is fixed (every distribution drawn for the whole batch) so a
    given generator state always produces the same table rows.
    """
    k = len(ids)
    if k == 0:
        return
    inc = _round_duration(rng.gamma(params.incubation_shape,
                                    params.incubation_scale, size=k))
    u_sym = rng.random(k)
    u_sev = rng.random(k)
    u_die = rng.random(k)
    dur_mean = band_lookup(params.duration_age_bands, ages)
    home_dur = _round_duration(rng.normal(dur_mean, params.duration_sd_factor * dur_mean))
    hosp_dur = _round_duration(rng.normal(dur_mean, params.duration_sd_factor * dur_mean))
    sev_home = _round_duration(rng.gamma(params.severe_home_shape,
                                         1.0 / params.severe_home_rate, size=k))
    lo, hi = params.sym_infectious_cap
    caps = rng.integers(lo, hi + 1, size=k).astype(np.int16)
    presym_u = rng.random((k, params.presym_window))

    is_sym = u_sym < band_lookup(params.symptomatic_age_bands, ages)
    is_severe = is_sym & (u_sev < band_lookup(params.severe_age_bands, ages))
    death_p = band_lookup(params.death_age_bands_male, ages)
    death_p = np.where(female, death_p * params.female_death_factor, death_p)
    dies = is_severe & (u_die < death_p)

    table.t_infect[ids] = day
    table.incubation[ids] = inc
    bits = (presym_u < params.presym_daily_prob).astype(np.uint8)
    mask = np.zeros(k, dtype=np.uint8)
    for b in range(params.presym_window):
        mask |= bits[:, b] << b
    table.presym_mask[ids] = mask
    table.is_sym[ids] = is_sym
    table.is_severe[ids] = is_severe
    table.dies[ids] = dies
    table.home_days[ids] = np.where(is_severe, sev_home, home_dur)
    table.hosp_days[ids] = np.where(is_severe, hosp_dur, 0)
    table.inf_cap[ids] = caps


@dataclass
class DayTransitions:
    """State-machine events produced by one day's advancement, agent ids
    ascending within each list."""
    onsets: np.ndarray
    admissions: np.ndarray
    recoveries: np.ndarray
    deaths: np.ndarray


def advance_day(params: DiseaseParams, table: CourseTable, state: np.ndarray,
                mult: np.ndarray, day: int, active_idx: np.ndarray) -> DayTransitions:
    """Advance every active agent to its phase for `day` and refresh the
    infectiousness multipliers.  active_idx must be ascending."""
    idx = active_idx
    if len(idx) == 0:
        empty = np.empty(0, dtype=np.int64)
        return DayTransitions(empty, empty, empty, empty)
    a = day - table.t_infect[idx]
    inc = table.incubation[idx].astype(np.int64)
    home_end = inc + table.home_days[idx]
    full_end = home_end + table.hosp_days[idx]
    sym = table.is_sym[idx]
    sev = table.is_severe[idx]

    incubating = a <= inc
    in_home = (~incubating) & (a <= home_end)
    in_hosp = sev & (a > home_end) & (a <= full_end)
    done = a > np.where(sev, full_end, home_end)

    onsets = idx[in_home & sym & (a == inc + 1)]
    admissions = idx[in_hosp & (a == home_end + 1)]
    deaths = idx[done & table.dies[idx]]
    recoveries = idx[done & ~table.dies[idx]]

    new_state = np.empty(len(idx), dtype=state.dtype)
    new_state[incubating] = INCUBATING
    new_state[in_home & ~sym] = ASYMPTOMATIC
    new_state[in_home & sym] = SYMPTOMATIC
    new_state[in_hosp] = HOSPITALIZED
    new_state[done] = np.where(table.dies[idx][done], DEAD, RECOVERED)
    state[idx] = new_state

    m = np.zeros(len(idx), dtype=np.float64)
    # presymptomatic: on each of the last presym_window incubation days a
    # daily Bernoulli may fire; the first success switches infectiousness on
    # for the rest of incubation.  Bit b covers the day where inc - a == b,
    # so day b is infectious when any bit >= b is set.
    back = (inc - a).astype(np.int64)
    pre = incubating & (back < params.presym_window)
    bits = (table.presym_mask[idx[pre]] >> back[pre]) != 0
    m[pre] = bits.astype(np.float64)
    k_inf = a - inc  # 1-based infectious day past incubation
    asym = in_home & ~sym
    extra = np.maximum(k_inf[asym] - params.asym_full_days, 0)
    m[asym] = np.power(params.asym_decay, extra)
    sym_home = in_home & sym
    m[sym_home] = (k_inf[sym_home] <= table.inf_cap[idx][sym_home]).astype(np.float64)
    mult[idx] = m
    return DayTransitions(onsets=onsets, admissions=admissions,
                          recoveries=recoveries, deaths=deaths)
