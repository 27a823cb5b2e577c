"""Scenario configuration, the day loop, and sweep drivers.

Day phase order (the first-come testing pathology depends on it):
  1 restock tests              5 serve queue, no-test branches for refused
  2 prune CTA log              6 result cascades (positives notify, enqueue)
  3 expire quarantines         7 advance disease (onsets, admissions, deaths)
  4 intake (symptom seeks due  8 contacts and transmission
    today, ILI), collect       9 append today's CTA pairs, record metrics
    yesterday's results
Cascade enqueues happen after today's serve, so notified contacts are
served the next day, standing in line before that day's own symptomatic
arrivals under first_come, while priority_symptomatic reorders every
symptomatic-presentation entry ahead of them.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, asdict

import numpy as np

from . import backend
from .errors import ConfigurationError
from .rng import config_digest_words, master_from
from .layers import LAYER_LABELS, N_LAYERS
from .synthpop import PopulationSpec, Population, generate_population, CTA_MIN_AGE
from .contacts import ContactPolicy, KernelModel, POLICY_PRESETS
from .disease import (DiseaseParams, TransmissionRates, CourseTable,
                      SUSCEPTIBLE, INCUBATING, ASYMPTOMATIC, SYMPTOMATIC,
                      HOSPITALIZED, RECOVERED, DEAD, advance_day)
from .mitigation import (TestingSystem, CtaLog, IsolationState, ComplianceModel,
                         IliModel, CAUSE_SYMPTOMS, CAUSE_ILI, CAUSE_CTA,
                         CAUSE_RELATIVE, CAUSE_CLASSMATE, ISO_CONFIRMED,
                         ISO_SYMPTOMS, ISO_CTA, ISO_HOUSEHOLD, ISO_CLASSMATE,
                         ISO_RELATIVE, TESTING_POLICIES, POLICY_PRIORITY)
from . import transmission
from .transmission import step_day, seed_epidemic

PRESET_BETA = {"business_as_usual": 0.08, "baseline_distancing": 0.056}
RANDOM_BETA_RATIO = 0.1


@dataclass
class ScenarioConfig:
    """One simulation scenario.  Unset betas resolve from the policy preset;
    the random-contact beta follows the network beta at ratio 0.1 and the
    household beta follows the network beta unless set explicitly."""

    policy_preset: str = "baseline_distancing"
    beta_network: float | None = None
    beta_random: float | None = None
    beta_household: float | None = None
    cta_adoption: float = 0.0              # fraction of agents older than 14
    weekly_test_capacity: float = 0.0      # fraction of population per week; inf = unlimited
    testing_policy: str = POLICY_PRIORITY
    notified_compliance: float = 0.9       # isolation factor for app-notified, untested agents
    omega_mean: float = 0.70
    omega_concentration: float = 10.0
    omega_distribution: str = "beta"
    initial_infected: int = 300
    initial_recovered_fraction: float = 0.07
    horizon: int = 400
    base_seed: int = 20260822
    seek_delay_range: tuple = (1, 3)       # days from symptom onset to seeking a test
    quarantine_days: int = 14
    cta_log_window: int = 10
    ili_enabled: bool = True
    cta_machinery_enabled: bool = True     # debug: hard-disable all app code paths
    policy_overrides: dict = field(default_factory=dict)
    disease_overrides: dict = field(default_factory=dict)
    population: dict | None = None         # PopulationSpec fields; None = default

    def validate(self):
        if self.policy_preset not in POLICY_PRESETS:
            raise ConfigurationError(
                f"policy_preset: unknown preset '{self.policy_preset}'")
        if not (0.0 <= self.cta_adoption <= 1.0):
            raise ConfigurationError("cta_adoption: must be in [0, 1]")
        if not (self.weekly_test_capacity >= 0.0):
            raise ConfigurationError("weekly_test_capacity: must be >= 0 or inf")
        if self.testing_policy not in TESTING_POLICIES:
            raise ConfigurationError(
                f"testing_policy: unknown policy '{self.testing_policy}'")
        if not (0.0 < self.notified_compliance <= 1.0):
            raise ConfigurationError("notified_compliance: must be in (0, 1]")
        if self.horizon < 1:
            raise ConfigurationError("horizon: must be >= 1")
        if self.initial_infected < 0:
            raise ConfigurationError("initial_infected: must be >= 0")
        if not (0.0 <= self.initial_recovered_fraction < 1.0):
            raise ConfigurationError("initial_recovered_fraction: must be in [0, 1)")
        lo, hi = self.seek_delay_range
        if not (1 <= lo <= hi):
            raise ConfigurationError("seek_delay_range: need 1 <= lo <= hi")
        if self.quarantine_days < 1:
            raise ConfigurationError("quarantine_days: must be >= 1")
        if self.cta_log_window < 1:
            raise ConfigurationError("cta_log_window: must be >= 1")
        for name, v in (("beta_network", self.beta_network),
                        ("beta_random", self.beta_random),
                        ("beta_household", self.beta_household)):
            if v is not None and not (0.0 <= v <= 1.0):
                raise ConfigurationError(f"{name}: must be in [0, 1]")
        self.resolved_policy()
        self.resolved_disease()
        self.population_spec()
        return self

    # -- resolution ---------------------------------------------------------

    def resolved_rates(self) -> TransmissionRates:
        net = self.beta_network
        if net is None:
            net = PRESET_BETA[self.policy_preset]
        rand = self.beta_random
        if rand is None:
            rand = RANDOM_BETA_RATIO * net
        return TransmissionRates(network=net, random=rand,
                                 household=self.beta_household).validate()

    def resolved_policy(self) -> ContactPolicy:
        policy = POLICY_PRESETS[self.policy_preset]()
        if self.policy_overrides:
            data = policy.to_json_dict()
            for key, val in self.policy_overrides.items():
                if key not in data:
                    raise ConfigurationError(
                        f"policy_overrides: unknown field '{key}'")
                data[key] = val
            policy = ContactPolicy.from_json_dict(data)
        return policy.validate()

    def resolved_disease(self) -> DiseaseParams:
        params = DiseaseParams()
        if self.disease_overrides:
            data = params.to_json_dict()
            for key, val in self.disease_overrides.items():
                if key not in data:
                    raise ConfigurationError(
                        f"disease_overrides: unknown field '{key}'")
                data[key] = val
            params = DiseaseParams.from_json_dict(data)
        return params.validate()

    def population_spec(self) -> PopulationSpec:
        if self.population is None:
            return PopulationSpec().validate()
        return PopulationSpec.from_json_dict(self.population)

    def compliance(self) -> ComplianceModel:
        return ComplianceModel(
            omega_mean=self.omega_mean,
            omega_concentration=self.omega_concentration,
            notified_factor=self.notified_compliance,
            distribution=self.omega_distribution).validate()

    # -- identity -----------------------------------------------------------

    def canonical_dict(self) -> dict:
        """Everything that defines the random experiment.  Two configs with
        equal canonical dicts produce identical runs, which makes results
        reusable across sweeps (a sensitivity cell at the default value
        matches the main grid cell)."""
        rates = self.resolved_rates()
        d = {
            "policy_preset": self.policy_preset,
            "beta_network": rates.network,
            "beta_random": rates.random,
            "cta_adoption": self.cta_adoption,
            "weekly_test_capacity": ("unlimited"
                                     if math.isinf(self.weekly_test_capacity)
                                     else self.weekly_test_capacity),
            "testing_policy": self.testing_policy,
            "notified_compliance": self.notified_compliance,
            "omega_mean": self.omega_mean,
            "omega_concentration": self.omega_concentration,
            "omega_distribution": self.omega_distribution,
            "initial_infected": self.initial_infected,
            "initial_recovered_fraction": self.initial_recovered_fraction,
            "horizon": self.horizon,
            "seek_delay_range": list(self.seek_delay_range),
            "quarantine_days": self.quarantine_days,
            "cta_log_window": self.cta_log_window,
            "ili_enabled": self.ili_enabled,
            "cta_machinery_enabled": self.cta_machinery_enabled,
            "policy": self.resolved_policy().to_json_dict(),
            "disease": self.resolved_disease().to_json_dict(),
            "population": self.population_spec().to_json_dict(),
        }
        return d

    def to_json_dict(self) -> dict:
        d = asdict(self)
        d["seek_delay_range"] = list(self.seek_delay_range)
        if math.isinf(self.weekly_test_capacity):
            d["weekly_test_capacity"] = "unlimited"
        return d

    @classmethod
    def from_json_dict(cls, data: dict) -> "ScenarioConfig":
        known = set(cls.__dataclass_fields__)
        for key in data:
            if key not in known:
                raise ConfigurationError(f"scenario: unknown field '{key}'")
        kwargs = dict(data)
        cap = kwargs.get("weekly_test_capacity")
        if isinstance(cap, str):
            if cap not in ("unlimited", "inf"):
                raise ConfigurationError(
                    "weekly_test_capacity: must be a fraction or 'unlimited'")
            kwargs["weekly_test_capacity"] = math.inf
        if "seek_delay_range" in kwargs:
            kwargs["seek_delay_range"] = tuple(kwargs["seek_delay_range"])
        return cls(**kwargs).validate()

    @classmethod
    def from_json_file(cls, path) -> "ScenarioConfig":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))


# -- seeding -----------------------------------------------------------------

_POP_CACHE: dict = {}


def population_seed(scenario: ScenarioConfig) -> int:
    spec_words = config_digest_words(scenario.population_spec().to_json_dict())
    ss = np.random.SeedSequence(entropy=scenario.base_seed, spawn_key=spec_words)
    return master_from(ss)


def scenario_population(scenario: ScenarioConfig, cache: bool = True) -> Population:
    spec = scenario.population_spec()
    seed = population_seed(scenario)
    key = (json.dumps(spec.to_json_dict(), sort_keys=True), seed)
    if cache and key in _POP_CACHE:
        return _POP_CACHE[key]
    pop = generate_population(spec, seed)
    if cache:
        _POP_CACHE.clear()  # hold at most one population
        _POP_CACHE[key] = pop
    return pop


def replicate_streams(scenario: ScenarioConfig, replicate: int):
    """Independent generators for one replicate, derived from the canonical
    scenario identity so equal configurations share randomness."""
    words = config_digest_words(scenario.canonical_dict())
    ss = np.random.SeedSequence(entropy=scenario.base_seed,
                                spawn_key=(*words, replicate))
    kids = ss.spawn(7)
    return {
        "kernel_master": master_from(kids[0]),
        "courses": np.random.default_rng(kids[1]),
        "mitigation": np.random.default_rng(kids[2]),
        "ili": np.random.default_rng(kids[3]),
        "seeding": np.random.default_rng(kids[4]),
        "cta": np.random.default_rng(kids[5]),
        "omega": np.random.default_rng(kids[6]),
    }


# -- the world ---------------------------------------------------------------

class World:
    """All mutable state for one replicate."""

    def __init__(self, scenario: ScenarioConfig, replicate: int,
                 population: Population | None = None):
        scenario.validate()
        self.scenario = scenario
        self.replicate = replicate
        self.pop = population if population is not None \
            else scenario_population(scenario)
        pop = self.pop
        n = pop.n
        self.policy = scenario.resolved_policy()
        self.model = KernelModel(pop, self.policy)
        self.rates = scenario.resolved_rates()
        self.disease = scenario.resolved_disease()
        self.ili = IliModel().validate()

        streams = replicate_streams(scenario, replicate)
        self.kernel_master = streams["kernel_master"]
        self.courses_rng = streams["courses"]
        self.mitigation_rng = streams["mitigation"]
        self.ili_rng = streams["ili"]
        self.seeding_rng = streams["seeding"]

        self.state = np.zeros(n, dtype=np.uint8)
        self.mult = np.zeros(n, dtype=np.float64)
        self.courses = CourseTable(n)
        self.child_discount = np.where(
            pop.age < self.disease.child_age_limit,
            self.disease.child_susceptibility, 1.0)

        comp = scenario.compliance()
        self.omega = comp.draw_omega(streams["omega"], n)
        self.notified_factor = comp.notified_factor

        eligible = np.flatnonzero(pop.age >= CTA_MIN_AGE)
        k = int(round(scenario.cta_adoption * len(eligible)))
        self.cta = np.zeros(n, dtype=np.uint8)
        if k > 0:
            pick = streams["cta"].choice(len(eligible), size=k,
                                         replace=False, shuffle=False)
            self.cta[eligible[pick]] = 1
        self.record_cta = bool(scenario.cta_machinery_enabled and k > 0)

        self.testing = TestingSystem(n, scenario.weekly_test_capacity,
                                     scenario.testing_policy)
        self.ctalog = CtaLog(window=scenario.cta_log_window)
        self.isolation = IsolationState(n)
        self.confirmed = np.zeros(n, dtype=bool)
        self.seek_day = np.full(n, -1, dtype=np.int32)

        self.infected_day = np.full(n, -1, dtype=np.int32)
        self.infection_source = np.full(n, -1, dtype=np.int32)
        self.infection_layer = np.full(n, transmission.SEED_LAYER, dtype=np.int8)
        self.secondary_count = np.zeros(n, dtype=np.int32)

    # -- cascade helpers ----------------------------------------------------

    def _household_and_relatives(self, agent: int, day: int):
        """Roll willing co-residents and relatives into precautionary
        isolation; row order fixes the draw order."""
        rng = self.mitigation_rng
        until = day + self.scenario.quarantine_days
        hh = self.pop.household_of[agent]
        for j in self.pop.households.group_members(hh):
            j = int(j)
            if j == agent:
                continue
            if self.state[j] in (HOSPITALIZED, DEAD) or self.isolation.isolating[j]:
                continue
            if rng.random() < self.omega[j]:
                self.isolation.start(j, ISO_HOUSEHOLD, until)
        for j in self.pop.relative_adj.row(agent):
            j = int(j)
            if self.state[j] in (HOSPITALIZED, DEAD) or self.isolation.isolating[j]:
                continue
            if rng.random() < self.omega[j]:
                self.isolation.start(j, ISO_RELATIVE, until)

    def _classmate_quarantine(self, agent: int, day: int):
        until = day + self.scenario.quarantine_days
        c = self.pop.class_of[agent]
        if c < 0:
            return
        for j in self.pop.classes.group_members(c):
            j = int(j)
            if j == agent or self.state[j] in (HOSPITALIZED, DEAD):
                continue
            self.isolation.start(j, ISO_CLASSMATE, until)
            if not self.confirmed[j]:
                self.testing.enqueue(j, CAUSE_CLASSMATE, day)

    def _cta_notify(self, agent: int, day: int):
        if not (self.record_cta and self.cta[agent]):
            return
        for j in self.ctalog.partners_of(agent):
            j = int(j)
            if (self.state[j] in (HOSPITALIZED, DEAD) or self.confirmed[j]
                    or self.isolation.isolating[j]):
                continue
            self.testing.enqueue(j, CAUSE_CTA, day)

    def positive_cascade(self, agent: int, day: int):
        """Everything that follows a diagnosis (positive test or hospital)."""
        self.confirmed[agent] = True
        if self.state[agent] not in (HOSPITALIZED, DEAD):
            self.isolation.start(agent, ISO_CONFIRMED, math.inf)
        self._household_and_relatives(agent, day)
        self._classmate_quarantine(agent, day)
        self._cta_notify(agent, day)

    def no_test_branch(self, agent: int, cause: int, day: int):
        """An agent sent home untested decides what to do."""
        rng = self.mitigation_rng
        if cause == CAUSE_SYMPTOMS:
            if rng.random() < self.omega[agent]:
                self.isolation.start(agent, ISO_SYMPTOMS, math.inf)
                # same close-circle warning as a positive, but no app
                # notification and no classmate quarantine
                self._household_and_relatives(agent, day)
        elif cause == CAUSE_CTA:
            if rng.random() < self.omega[agent] * self.notified_factor:
                self.isolation.start(agent, ISO_CTA,
                                     day + self.scenario.quarantine_days)
        elif cause == CAUSE_RELATIVE:
            if rng.random() < self.omega[agent]:
                self.isolation.start(agent, ISO_RELATIVE,
                                     day + self.scenario.quarantine_days)
        # classmates and ILI cases do nothing when refused


# -- results -----------------------------------------------------------------

DAILY_COLUMNS = (
    "day", "susceptible", "incubating", "asymptomatic", "symptomatic",
    "hospitalized", "recovered", "dead", "active", "new_infections",
    "cumulative_infections", "isolating", "tests_available", "tests_used",
    "positives", "queue_depth",
) + tuple(f"inf_{label}" for label in LAYER_LABELS)


@dataclass
class RunResult:
    scenario: dict
    replicate: int
    daily: dict                      # column -> numpy array
    peak_prevalence_fraction: float
    peak_day: int
    total_infected_fraction: float
    estimated_r0: float | None
    total_tests_used: int
    total_deaths: int
    backend_name: str

    def write_daily_csv(self, path):
        cols = [c for c in DAILY_COLUMNS]
        arrs = [self.daily[c] for c in cols]
        with open(path, "w") as fh:
            fh.write(",".join(cols) + "\n")
            for row in range(len(arrs[0])):
                fh.write(",".join(str(int(a[row])) for a in arrs) + "\n")

    def summary_dict(self) -> dict:
        return {
            "replicate": self.replicate,
            "peak_prevalence_fraction": self.peak_prevalence_fraction,
            "peak_day": self.peak_day,
            "total_infected_fraction": self.total_infected_fraction,
            "estimated_r0": self.estimated_r0,
            "total_tests_used": self.total_tests_used,
            "total_deaths": self.total_deaths,
            "days_simulated": int(len(self.daily["day"])),
        }


def peak_reduction(result: RunResult, baseline: RunResult) -> float:
    """Percent reduction of peak prevalence relative to a baseline run."""
    if baseline.peak_prevalence_fraction <= 0:
        raise ValueError("baseline run has zero peak prevalence")
    return 100.0 * (1.0 - result.peak_prevalence_fraction
                    / baseline.peak_prevalence_fraction)


def estimate_r0(world: World, cohort_last_day: int = 21) -> float | None:
    """Mean completed secondary-infection count over the early cohort
    (everyone infected up to `cohort_last_day`, seeds included)."""
    cohort = np.flatnonzero((world.infected_day >= 0)
                            & (world.infected_day <= cohort_last_day))
    if len(cohort) == 0:
        return None
    return float(world.secondary_count[cohort].mean())


# -- the day loop ------------------------------------------------------------

def run(scenario: ScenarioConfig, replicate: int = 0,
        population: Population | None = None,
        ledger_path: str | None = None) -> RunResult:
    """Simulate one replicate to extinction or the horizon."""
    world = World(scenario, replicate, population)
    n = world.pop.n
    state = world.state
    rows = {c: [] for c in DAILY_COLUMNS}
    ledger_fh = open(ledger_path, "w") if ledger_path else None
    if ledger_fh:
        ledger_fh.write("day,source,target,layer\n")

    seeded, _ = seed_epidemic(world, scenario.initial_infected,
                              scenario.initial_recovered_fraction,
                              world.seeding_rng, day=0)
    cumulative = len(seeded)

    def record(day, new_by_layer, new_count, tests_used, positives, queue_depth):
        counts = np.bincount(state, minlength=7)
        active = int(counts[INCUBATING] + counts[ASYMPTOMATIC]
                     + counts[SYMPTOMATIC] + counts[HOSPITALIZED])
        rows["day"].append(day)
        rows["susceptible"].append(int(counts[SUSCEPTIBLE]))
        rows["incubating"].append(int(counts[INCUBATING]))
        rows["asymptomatic"].append(int(counts[ASYMPTOMATIC]))
        rows["symptomatic"].append(int(counts[SYMPTOMATIC]))
        rows["hospitalized"].append(int(counts[HOSPITALIZED]))
        rows["recovered"].append(int(counts[RECOVERED]))
        rows["dead"].append(int(counts[DEAD]))
        rows["active"].append(active)
        rows["new_infections"].append(new_count)
        rows["cumulative_infections"].append(cumulative)
        rows["isolating"].append(world.isolation.count())
        stock = world.testing.stock
        rows["tests_available"].append(int(stock) if math.isfinite(stock) else -1)
        rows["tests_used"].append(tests_used)
        rows["positives"].append(positives)
        rows["queue_depth"].append(queue_depth)
        for li, label in enumerate(LAYER_LABELS):
            rows[f"inf_{label}"].append(int(new_by_layer[li]))
        return active

    zero_layers = np.zeros(N_LAYERS, dtype=np.int64)
    record(0, zero_layers, len(seeded), 0, 0, 0)

    for day in range(1, scenario.horizon + 1):
        world.testing.restock()
        world.ctalog.prune(day)
        world.isolation.expire_due(day)

        # intake: symptomatic agents whose seek day arrived, plus ILI load
        due = np.flatnonzero(world.seek_day == day)
        for agent in due:
            agent = int(agent)
            if state[agent] == SYMPTOMATIC and not world.confirmed[agent]:
                world.testing.enqueue(agent, CAUSE_SYMPTOMS, day)
        if scenario.ili_enabled:
            covid_free = (state == SUSCEPTIBLE) | (state == RECOVERED)
            ili_ok = (covid_free & ~world.testing.pending & ~world.testing.awaiting
                      & ~world.confirmed & (world.isolation.isolating == 0))
            for agent in world.ili.daily_seekers(world.ili_rng,
                                                 np.flatnonzero(ili_ok), n):
                world.testing.enqueue(int(agent), CAUSE_ILI, day)

        # yesterday's swab results come back while today's queue is served;
        # their cascades run after serve, so notified contacts join
        # tomorrow's queue
        results = world.testing.take_results()
        queue_depth = len(world.testing.queue)
        infected_mask = ((state == INCUBATING) | (state == ASYMPTOMATIC)
                         | (state == SYMPTOMATIC) | (state == HOSPITALIZED))
        dropped = (state == DEAD) | (state == HOSPITALIZED) | world.confirmed
        swabbed, refused = world.testing.serve(day, infected_mask, dropped)
        tests_used = len(swabbed)
        positives = sum(1 for _, _, pos in swabbed if pos)
        for agent, cause in refused:
            world.no_test_branch(agent, cause, day)
        for agent, positive, _cause in results:
            if state[agent] == DEAD:
                continue
            if positive:
                if not world.confirmed[agent]:
                    world.positive_cascade(agent, day)
            else:
                world.isolation.release_if_precautionary(agent)

        # disease advancement
        active_idx = np.flatnonzero(infected_mask)
        trans = advance_day(world.disease, world.courses, state, world.mult,
                            day, active_idx)
        delays = world.mitigation_rng.integers(
            scenario.seek_delay_range[0], scenario.seek_delay_range[1] + 1,
            size=len(trans.onsets))
        world.seek_day[trans.onsets] = day + delays
        for agent in trans.admissions:
            agent = int(agent)
            world.isolation.release(agent)
            if not world.confirmed[agent]:
                # hospital diagnosis: same cascade as a positive result, no
                # community test consumed
                world.positive_cascade(agent, day)
        for agent in np.concatenate([trans.recoveries, trans.deaths]):
            agent = int(agent)
            if world.isolation.isolating[agent]:
                world.isolation.release(agent)

        ledger = step_day(world, day)
        if world.record_cta:
            world.ctalog.append_day(day, *ledger.cta_pairs)
        if ledger_fh:
            for s, t, l in zip(ledger.sources, ledger.targets, ledger.layers):
                ledger_fh.write(f"{day},{s},{t},{LAYER_LABELS[l]}\n")

        cumulative += ledger.new_infections
        active = record(day, ledger.by_layer, ledger.new_infections,
                        tests_used, positives, queue_depth)
        if active == 0:
            break

    if ledger_fh:
        ledger_fh.close()

    daily = {c: np.asarray(v, dtype=np.int64) for c, v in rows.items()}
    active_series = daily["active"]
    peak_idx = int(np.argmax(active_series))
    counts = np.bincount(state, minlength=7)
    return RunResult(
        scenario=scenario.to_json_dict(),
        replicate=replicate,
        daily=daily,
        peak_prevalence_fraction=float(active_series[peak_idx]) / n,
        peak_day=int(daily["day"][peak_idx]),
        total_infected_fraction=float(cumulative) / n,
        estimated_r0=estimate_r0(world),
        total_tests_used=int(daily["tests_used"].sum()),
        total_deaths=int(counts[DEAD]),
        backend_name=backend.name,
    )


# -- sweeps ------------------------------------------------------------------

def _run_task(args):
    scenario_dict, replicate = args
    try:
        scenario = ScenarioConfig.from_json_dict(scenario_dict)
        result = run(scenario, replicate)
        return result.summary_dict()
    except Exception as exc:           # a failed replicate poisons its
        return {"error": f"{type(exc).__name__}: {exc}",  # scenario row only
                "replicate": replicate}


def sweep(scenarios: list[ScenarioConfig], replicates: int,
          workers: int = 1, progress=None) -> list[dict]:
    """Run every scenario for `replicates` replicates.

    Results are ordered by (scenario index, replicate) regardless of worker
    count; seeds are content-derived, so identical configurations give
    identical rows no matter how the work is scheduled.  A replicate that
    raises produces an error row instead of aborting the sweep.
    """
    tasks = []
    for si, sc in enumerate(scenarios):
        sc.validate()
        d = sc.to_json_dict()
        for rep in range(replicates):
            tasks.append((si, rep, d))
    if workers <= 1:
        out = []
        for _, rep, d in tasks:
            out.append(_run_task((d, rep)))
            if progress:
                progress(len(out), len(tasks))
    else:
        import multiprocessing as mp
        with mp.get_context("spawn").Pool(workers) as pool:
            out = []
            for row in pool.imap(_run_task,
                                 [(d, rep) for _, rep, d in tasks],
                                 chunksize=1):
                out.append(row)
                if progress:
                    progress(len(out), len(tasks))
    for (si, rep, d), row in zip(tasks, out):
        row["scenario_index"] = si
        row["replicate"] = rep
        row["scenario"] = d
    return out


SCENARIO_KEY_FIELDS = ("policy_preset", "cta_adoption", "weekly_test_capacity",
                       "testing_policy", "notified_compliance",
                       "beta_network", "beta_random")


def _median_iqr(values):
    v = np.asarray(values, dtype=np.float64)
    return (float(np.median(v)),
            float(np.percentile(v, 25)), float(np.percentile(v, 75)))


def aggregate_sweep(rows: list[dict]) -> list[dict]:
    """Collapse per-replicate rows to one summary row per scenario: medians
    and interquartile ranges, plus peak reduction against the matching
    no-mitigation cell (zero adoption, zero capacity, same preset and betas)
    when the sweep contains one."""
    by_scenario: dict[int, list] = {}
    for row in rows:
        by_scenario.setdefault(row["scenario_index"], []).append(row)

    baseline_peak: dict[tuple, float] = {}
    for si, group in by_scenario.items():
        sc = group[0]["scenario"]
        good = [r for r in group if "error" not in r]
        if (good and sc["cta_adoption"] == 0
                and sc["weekly_test_capacity"] == 0):
            key = (sc["policy_preset"], sc.get("beta_network"),
                   sc.get("beta_random"))
            med = float(np.median([r["peak_prevalence_fraction"] for r in good]))
            baseline_peak.setdefault(key, med)

    out = []
    for si in sorted(by_scenario):
        group = by_scenario[si]
        sc = group[0]["scenario"]
        row = {"scenario_index": si}
        for f in SCENARIO_KEY_FIELDS:
            row[f] = sc.get(f)
        errors = [r for r in group if "error" in r]
        good = [r for r in group if "error" not in r]
        row["replicates"] = len(group)
        if errors:
            row["error"] = errors[0]["error"]
            out.append(row)
            continue
        for metric in ("total_infected_fraction", "peak_prevalence_fraction",
                       "peak_day", "total_tests_used", "total_deaths"):
            med, q1, q3 = _median_iqr([r[metric] for r in good])
            row[f"{metric}_median"] = med
            row[f"{metric}_q1"] = q1
            row[f"{metric}_q3"] = q3
        r0s = [r["estimated_r0"] for r in good if r["estimated_r0"] is not None]
        row["estimated_r0_mean"] = float(np.mean(r0s)) if r0s else None
        key = (sc["policy_preset"], sc.get("beta_network"), sc.get("beta_random"))
        base = baseline_peak.get(key)
        if base and base > 0:
            row["peak_reduction_pct"] = 100.0 * (
                1.0 - row["peak_prevalence_fraction_median"] / base)
        else:
            row["peak_reduction_pct"] = None
        out.append(row)
    return out


SWEEP_COLUMNS = (("scenario_index",) + SCENARIO_KEY_FIELDS + ("replicates",)
                 + tuple(f"{m}_{s}"
                         for m in ("total_infected_fraction",
                                   "peak_prevalence_fraction", "peak_day",
                                   "total_tests_used", "total_deaths")
                         for s in ("median", "q1", "q3"))
                 + ("estimated_r0_mean", "peak_reduction_pct", "error"))


def write_sweep_csv(summary_rows: list[dict], path):
    with open(path, "w") as fh:
        fh.write(",".join(SWEEP_COLUMNS) + "\n")
        for row in summary_rows:
            cells = []
            for col in SWEEP_COLUMNS:
                v = row.get(col)
                if v is None:
                    cells.append("")
                elif isinstance(v, float):
                    cells.append(f"{v:.6g}" if math.isfinite(v) else "inf")
                else:
                    cells.append(str(v).replace(",", ";"))
            fh.write(",".join(cells) + "\n")


def write_metadata(path, scenario: ScenarioConfig, extra: dict | None = None):
    """Sidecar that alone suffices to reproduce a run: full config, seed
    derivation words, package version, backend."""
    from . import __version__
    payload = {
        "config": scenario.to_json_dict(),
        "config_digest_words": [int(w) for w in
                                config_digest_words(scenario.canonical_dict())],
        "base_seed": scenario.base_seed,
        "package_version": __version__,
        "backend": backend.name,
    }
    if extra:
        payload.update(extra)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def experiment_grid(base: ScenarioConfig | None = None) -> list[ScenarioConfig]:
    """The full factorial experiment: CTA adoption x weekly testing capacity
    x compliance x testing policy on the distancing baseline."""
    base = base or ScenarioConfig()
    grid = []
    for policy in TESTING_POLICIES:
        for compliance in (0.5, 0.9):
            for capacity in (0.0, 0.005, 0.01, 0.015, 0.03, 0.06, math.inf):
                for adoption in (0.0, 0.2, 0.4, 0.6, 0.8):
                    d = base.to_json_dict()
                    d.update(cta_adoption=adoption,
                             weekly_test_capacity=(capacity if math.isfinite(capacity)
                                                   else "unlimited"),
                             testing_policy=policy,
                             notified_compliance=compliance)
                    grid.append(ScenarioConfig.from_json_dict(d))
    return grid


SENSITIVITY_PARAMETERS = {
    # scenario-level overrides
    "network_beta": ("beta_network", (0.028, 0.042, 0.056, 0.07, 0.084)),
    "random_beta": ("beta_random", (0.0028, 0.0042, 0.0056, 0.0084, 0.0112)),
    # contact-policy overrides
    "random_mixing": ("policy:random_mixing", (0.0035, 0.0049, 0.007, 0.0105, 0.014)),
    "friend_cap": ("policy:friend_fraction_cap", (0.05, 0.10, 0.15, 0.20)),
}


def sensitivity_scenarios(parameter: str, values=None,
                          adoption_levels=(0.0, 0.2, 0.4, 0.6, 0.8),
                          capacities=(0.015, math.inf),
                          base: ScenarioConfig | None = None) -> list[ScenarioConfig]:
    """Scenario list for a one-parameter sensitivity sweep crossed with CTA
    adoption and testing capacity, on the distancing baseline with priority
    testing."""
    if parameter not in SENSITIVITY_PARAMETERS:
        raise ConfigurationError(
            f"sensitivity parameter: unknown parameter '{parameter}'")
    target, defaults = SENSITIVITY_PARAMETERS[parameter]
    values = defaults if values is None else values
    for value in values:
        if not (0.0 < value < 1.0):
            raise ConfigurationError(
                f"sensitivity value: {value} outside (0, 1)")
    base = base or ScenarioConfig(testing_policy=POLICY_PRIORITY,
                                  notified_compliance=0.9)
    out = []
    for value in values:
        for capacity in capacities:
            for adoption in adoption_levels:
                d = base.to_json_dict()
                d["cta_adoption"] = adoption
                d["weekly_test_capacity"] = (capacity if math.isfinite(capacity)
                                             else "unlimited")
                if target.startswith("policy:"):
                    overrides = dict(d.get("policy_overrides") or {})
                    overrides[target.split(":", 1)[1]] = value
                    d["policy_overrides"] = overrides
                else:
                    d[target] = value
                out.append(ScenarioConfig.from_json_dict(d))
    return out


def calibration_report(beta_grid, replicates: int = 5,
                       base: ScenarioConfig | None = None,
                       target_r0: float = 2.8, workers: int = 1) -> dict:
    """Estimate the early reproduction number per candidate network beta on
    the unmitigated business-as-usual scenario; pick the argmin distance to
    the target."""
    if not beta_grid:
        raise ConfigurationError("beta_grid: must be non-empty")
    base = base or ScenarioConfig(policy_preset="business_as_usual",
                                  weekly_test_capacity=0.0, cta_adoption=0.0)
    scenarios = []
    for beta in beta_grid:
        d = base.to_json_dict()
        d["beta_network"] = beta
        scenarios.append(ScenarioConfig.from_json_dict(d))
    rows = sweep(scenarios, replicates, workers=workers)
    report = []
    for si, beta in enumerate(beta_grid):
        r0s = [r["estimated_r0"] for r in rows
               if r["scenario_index"] == si and "error" not in r
               and r["estimated_r0"] is not None]
        report.append({
            "beta_network": float(beta),
            "mean_r0": float(np.mean(r0s)) if r0s else math.nan,
            "sd_r0": float(np.std(r0s, ddof=1)) if len(r0s) > 1 else 0.0,
            "replicates": len(r0s),
        })
    finite = [r for r in report if math.isfinite(r["mean_r0"])]
    best = min(finite, key=lambda r: abs(r["mean_r0"] - target_r0))
    in_range = any(abs(r["mean_r0"] - target_r0) <= 0.3 for r in finite)
    return {"target_r0": target_r0, "grid": report,
            "best_beta_network": best["beta_network"],
            "best_mean_r0": best["mean_r0"],
            "target_bracketed": in_range}
