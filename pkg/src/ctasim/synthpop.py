"""Synthetic population and multi-layer social network.

Builds ~100k agents with demographics (age, sex, zone), households,
workplaces with close-colleague groups, school classes, an age-assortative
friendship graph, and cross-household relative links.  Everything downstream
(contacts, transmission, mitigation) reads the packed arrays built here.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict

import numpy as np

from .errors import ConfigurationError
from . import backend

POP_STREAM_TAG = 0x706F70  # "pop"

# employment codes
EMP_NONE = 0
EMP_WORKER = 1
EMP_PUBLIC_FACING = 2

CTA_MIN_AGE = 15  # app users must be older than 14
FRIEND_MIN_AGE = 15
PUPIL_AGE_LO = 5
PUPIL_AGE_HI = 17

# Age pyramid for a mid-size UK city, 5-year bands (lo, hi, weight).
DEFAULT_AGE_PYRAMID = [
    (0, 4, 0.053), (5, 9, 0.058), (10, 14, 0.058), (15, 19, 0.055),
    (20, 24, 0.065), (25, 29, 0.072), (30, 34, 0.070), (35, 39, 0.066),
    (40, 44, 0.060), (45, 49, 0.062), (50, 54, 0.067), (55, 59, 0.065),
    (60, 64, 0.056), (65, 69, 0.049), (70, 74, 0.048), (75, 79, 0.034),
    (80, 84, 0.025), (85, 95, 0.025),
]

# Workplace site sizes, (lo, hi, weight) with weight = share of sites.
DEFAULT_SITE_SIZES = [
    (1, 4, 0.30), (5, 9, 0.22), (10, 19, 0.18), (20, 49, 0.15),
    (50, 99, 0.08), (100, 249, 0.05), (250, 350, 0.02),
]

DEFAULT_CHILDREN_PER_FAMILY = {1: 0.34, 2: 0.45, 3: 0.16, 4: 0.05}


@dataclass
class PopulationSpec:
    """Declarative description of the synthetic population."""

    total_agents: int = 103_000
    zone_count: int = 93
    zone_size_range: tuple[int, int] = (200, 2700)
    zone_size_sigma: float = 0.55              # lognormal spread of zone sizes
    zone_sizes: list[int] | None = None        # explicit sizes override zone_count
    age_pyramid: list[tuple[int, int, float]] = field(
        default_factory=lambda: [tuple(b) for b in DEFAULT_AGE_PYRAMID])
    female_fraction: float = 0.51
    children_per_family: dict[int, float] = field(
        default_factory=lambda: dict(DEFAULT_CHILDREN_PER_FAMILY))
    lone_parent_share: float = 0.15
    parent_age_gap: tuple[int, int] = (22, 42)
    stay_home_fraction: float = 0.0            # of ages 20..29, stay in the parental home
    cohabitation_fraction_over20: float = 0.70
    local_work_fraction: float = 0.0           # workers placed in sites near home
    employment_rate: float = 0.76              # of ages 18..66
    public_facing_fraction: float = 0.13       # of workers
    site_size_distribution: list[tuple[int, int, float]] = field(
        default_factory=lambda: [tuple(b) for b in DEFAULT_SITE_SIZES])
    close_colleague_group_size: int = 7
    class_max_size: int = 30
    friendship_attachment: int = 10            # preferential-attachment links per node
    friendship_age_sigma: float = 10.0
    relative_elder_age_range: tuple[int, int] = (58, 78)

    def validate(self):
        if self.total_agents < 100:
            raise ConfigurationError("total_agents: must be at least 100")
        lo, hi = self.zone_size_range
        if not (0 < lo <= hi):
            raise ConfigurationError("zone_size_range: need 0 < lo <= hi")
        if self.zone_sizes is not None:
            if sum(self.zone_sizes) != self.total_agents:
                raise ConfigurationError("zone_sizes: must sum to total_agents")
            if any(s <= 0 for s in self.zone_sizes):
                raise ConfigurationError("zone_sizes: all sizes must be positive")
        else:
            if self.zone_count < 1:
                raise ConfigurationError("zone_count: must be positive")
            if not (lo * self.zone_count <= self.total_agents <= hi * self.zone_count):
                raise ConfigurationError(
                    "zone_size_range: total_agents not reachable with zone_count zones")
        prev_hi = -1
        for lo_a, hi_a, w in self.age_pyramid:
            if lo_a != prev_hi + 1:
                raise ConfigurationError("age_pyramid: bands must be contiguous from 0")
            if hi_a < lo_a or w < 0:
                raise ConfigurationError("age_pyramid: invalid band")
            prev_hi = hi_a
        if sum(w for _, _, w in self.age_pyramid) <= 0:
            raise ConfigurationError("age_pyramid: weights must sum > 0")
        for name in ("female_fraction", "lone_parent_share", "stay_home_fraction",
                     "cohabitation_fraction_over20", "employment_rate",
                     "public_facing_fraction", "local_work_fraction"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ConfigurationError(f"{name}: must be in [0, 1]")
        if not self.children_per_family or any(
                k < 1 or w < 0 for k, w in self.children_per_family.items()):
            raise ConfigurationError("children_per_family: keys >= 1, weights >= 0")
        g_lo, g_hi = self.parent_age_gap
        if not (18 <= g_lo <= g_hi):
            raise ConfigurationError("parent_age_gap: need 18 <= lo <= hi")
        for lo_s, hi_s, w in self.site_size_distribution:
            if not (1 <= lo_s <= hi_s) or w < 0:
                raise ConfigurationError("site_size_distribution: invalid band")
        if sum(w for _, _, w in self.site_size_distribution) <= 0:
            raise ConfigurationError("site_size_distribution: weights must sum > 0")
        if self.close_colleague_group_size < 1:
            raise ConfigurationError("close_colleague_group_size: must be >= 1")
        if self.class_max_size < 1:
            raise ConfigurationError("class_max_size: must be >= 1")
        if self.friendship_attachment < 1:
            raise ConfigurationError("friendship_attachment: must be >= 1")
        if self.friendship_age_sigma <= 0:
            raise ConfigurationError("friendship_age_sigma: must be > 0")
        if self.zone_size_sigma <= 0:
            raise ConfigurationError("zone_size_sigma: must be > 0")
        e_lo, e_hi = self.relative_elder_age_range
        if not (0 <= e_lo <= e_hi):
            raise ConfigurationError("relative_elder_age_range: need 0 <= lo <= hi")
        return self

    def to_json_dict(self) -> dict:
        d = asdict(self)
        d["children_per_family"] = {str(k): v for k, v in self.children_per_family.items()}
        return d

    @classmethod
    def from_json_dict(cls, data: dict) -> "PopulationSpec":
        known = {f for f in cls.__dataclass_fields__}
        for key in data:
            if key not in known:
                raise ConfigurationError(f"population spec: unknown field '{key}'")
        kwargs = dict(data)
        if "children_per_family" in kwargs:
            try:
                kwargs["children_per_family"] = {
                    int(k): float(v) for k, v in kwargs["children_per_family"].items()}
            except (TypeError, ValueError):
                raise ConfigurationError("children_per_family: keys must be integers")
        for name in ("zone_size_range", "parent_age_gap", "relative_elder_age_range"):
            if name in kwargs:
                kwargs[name] = tuple(kwargs[name])
        for name in ("age_pyramid", "site_size_distribution"):
            if name in kwargs:
                kwargs[name] = [tuple(b) for b in kwargs[name]]
        spec = cls(**kwargs)
        return spec.validate()

    @classmethod
    def from_json_file(cls, path) -> "PopulationSpec":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))


@dataclass
class Agent:
    """Read-only view of one agent."""
    id: int
    age: int
    sex: str                 # "f" or "m"
    zone: int
    household: int
    employment: int          # EMP_* code
    site: int                # workplace site id or -1
    school_class: int        # class id or -1
    has_cta: bool = False


class Csr:
    """Compressed neighbor rows: row(i) is a contiguous int32 slice."""

    __slots__ = ("offsets", "values")

    def __init__(self, offsets, values):
        self.offsets = offsets
        self.values = values

    def row(self, i) -> np.ndarray:
        return self.values[self.offsets[i]:self.offsets[i + 1]]

    def degree(self, i) -> int:
        return int(self.offsets[i + 1] - self.offsets[i])

    @classmethod
    def from_edges(cls, n: int, a: np.ndarray, b: np.ndarray) -> "Csr":
        """Symmetric CSR from undirected edge endpoints."""
        src = np.concatenate([a, b])
        dst = np.concatenate([b, a])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        offsets = np.zeros(n + 1, dtype=np.int64)
        np.add.at(offsets, src + 1, 1)
        np.cumsum(offsets, out=offsets)
        return cls(offsets, dst.astype(np.int32))

    @classmethod
    def from_groups(cls, n: int, group_of: np.ndarray, exclude_self=True) -> "Csr":
        """Adjacency where agents sharing a group id (>= 0) are all linked."""
        members = np.flatnonzero(group_of >= 0).astype(np.int32)
        gids = group_of[members]
        order = np.argsort(gids, kind="stable")
        members = members[order]
        gids = gids[order]
        rows: list[np.ndarray] = []
        lengths = np.zeros(n, dtype=np.int64)
        start = 0
        for end in range(1, len(members) + 1):
            if end == len(members) or gids[end] != gids[start]:
                grp = members[start:end]
                for m in grp:
                    if exclude_self:
                        rows.append(grp[grp != m])
                        lengths[m] = len(grp) - 1
                    else:
                        rows.append(grp)
                        lengths[m] = len(grp)
                start = end
        offsets = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(lengths, out=offsets[1:])
        member_order = members  # rows appended in this agent order
        values = np.empty(offsets[-1], dtype=np.int32)
        # rows list is aligned with member_order
        for m, r in zip(member_order, rows):
            values[offsets[m]:offsets[m] + len(r)] = r
        return cls(offsets, values)


class Membership:
    """Group membership layout: contiguous member list per group id."""

    __slots__ = ("group_of", "offsets", "members", "pos")

    def __init__(self, group_of: np.ndarray, n_groups: int):
        self.group_of = group_of
        in_group = np.flatnonzero(group_of >= 0)
        order = np.argsort(group_of[in_group], kind="stable")
        self.members = in_group[order].astype(np.int32)
        counts = np.bincount(group_of[in_group], minlength=n_groups)
        self.offsets = np.zeros(n_groups + 1, dtype=np.int64)
        np.cumsum(counts, out=self.offsets[1:])
        self.pos = np.full(len(group_of), -1, dtype=np.int32)
        gids_sorted = group_of[self.members]
        self.pos[self.members] = (
            np.arange(len(self.members), dtype=np.int64) - self.offsets[gids_sorted]
        ).astype(np.int32)

    def group_members(self, g) -> np.ndarray:
        return self.members[self.offsets[g]:self.offsets[g + 1]]

    @property
    def n_groups(self) -> int:
        return len(self.offsets) - 1


LAYER_NAMES = ("household", "relatives", "workplace_close", "workplace_site",
               "school_class", "friendship")


class SocialNetwork:
    """Static multi-layer network exposed as per-layer neighbor queries."""

    def __init__(self, pop: "Population"):
        self._pop = pop

    def neighbors(self, layer: str, agent: int) -> np.ndarray:
        p = self._pop
        if layer == "household":
            row = p.households.group_members(p.household_of[agent])
        elif layer == "workplace_site":
            s = p.site_of[agent]
            row = p.sites.group_members(s) if s >= 0 else np.empty(0, np.int32)
        elif layer == "school_class":
            c = p.class_of[agent]
            row = p.classes.group_members(c) if c >= 0 else np.empty(0, np.int32)
        elif layer == "workplace_close":
            return p.close_adj.row(agent)
        elif layer == "friendship":
            return p.friend_adj.row(agent)
        elif layer == "relatives":
            return p.relative_adj.row(agent)
        else:
            raise KeyError(f"unknown layer '{layer}'")
        return row[row != agent]

    def iter_edges(self, layer: str):
        """Yield undirected (a, b) pairs with a < b for one layer."""
        p = self._pop
        if layer in ("household", "workplace_site", "school_class"):
            memb = {"household": p.households, "workplace_site": p.sites,
                    "school_class": p.classes}[layer]
            for g in range(memb.n_groups):
                row = memb.group_members(g)
                for i in range(len(row)):
                    for j in range(i + 1, len(row)):
                        yield int(row[i]), int(row[j])
        elif layer in ("workplace_close", "friendship", "relatives"):
            adj = {"workplace_close": p.close_adj, "friendship": p.friend_adj,
                   "relatives": p.relative_adj}[layer]
            for a in range(p.n):
                for b in adj.row(a):
                    if a < b:
                        yield a, int(b)
        else:
            raise KeyError(f"unknown layer '{layer}'")

    def export_edge_csv(self, path):
        """Write all layers as rows of layer,agent_a,agent_b (a < b)."""
        with open(path, "w") as fh:
            fh.write("layer,agent_a,agent_b\n")
            for layer in LAYER_NAMES:
                for a, b in self.iter_edges(layer):
                    fh.write(f"{layer},{a},{b}\n")


class Population:
    """Packed synthetic population.  All arrays are indexed by agent id."""

    def __init__(self, spec, seed, age, sex_female, zone_of, zone_offsets,
                 household_of, households, linked_household,
                 employment, site_of, sites, close_adj,
                 class_of, classes, friend_adj, relative_adj):
        self.spec = spec
        self.seed = seed
        self.n = len(age)
        self.age = age
        self.sex_female = sex_female
        self.zone_of = zone_of
        self.zone_offsets = zone_offsets
        self.zone_sizes = np.diff(zone_offsets).astype(np.int64)
        self.household_of = household_of
        self.households = households
        self.linked_household = linked_household
        self.employment = employment
        self.site_of = site_of
        self.sites = sites
        self.close_adj = close_adj
        self.class_of = class_of
        self.classes = classes
        self.friend_adj = friend_adj
        self.relative_adj = relative_adj
        self.network = SocialNetwork(self)

    @property
    def n_zones(self) -> int:
        return len(self.zone_offsets) - 1

    def zone_members(self, z) -> np.ndarray:
        # agents are laid out zone-contiguously, so membership is a range
        return np.arange(self.zone_offsets[z], self.zone_offsets[z + 1], dtype=np.int32)

    def agent(self, i: int, has_cta: bool = False) -> Agent:
        return Agent(
            id=i, age=int(self.age[i]),
            sex="f" if self.sex_female[i] else "m",
            zone=int(self.zone_of[i]), household=int(self.household_of[i]),
            employment=int(self.employment[i]), site=int(self.site_of[i]),
            school_class=int(self.class_of[i]), has_cta=has_cta)

    def is_pupil(self, i: int) -> bool:
        return self.class_of[i] >= 0

    def cta_eligible_mask(self) -> np.ndarray:
        return self.age >= CTA_MIN_AGE

    def summary(self) -> dict:
        deg = np.diff(self.friend_adj.offsets)
        hh_sizes = np.diff(self.households.offsets)
        return {
            "agents": int(self.n),
            "zones": int(self.n_zones),
            "households": int(self.households.n_groups),
            "mean_household_size": float(hh_sizes.mean()),
            "workers": int((self.employment != EMP_NONE).sum()),
            "public_facing": int((self.employment == EMP_PUBLIC_FACING).sum()),
            "pupils": int((self.class_of >= 0).sum()),
            "sites": int(self.sites.n_groups),
            "classes": int(self.classes.n_groups),
            "friendship_median_degree": float(np.median(deg[self.age >= FRIEND_MIN_AGE])),
            "linked_household_pairs": int((self.linked_household >= 0).sum() // 2),
        }


# ---------------------------------------------------------------------------
# generation


def _draw_zone_sizes(spec, rng) -> np.ndarray:
    if spec.zone_sizes is not None:
        return np.asarray(spec.zone_sizes, dtype=np.int64)
    lo, hi = spec.zone_size_range
    z = spec.zone_count
    raw = rng.lognormal(mean=np.log(spec.total_agents / z),
                        sigma=spec.zone_size_sigma, size=z)
    sizes = np.clip(np.round(raw * spec.total_agents / raw.sum()), lo, hi).astype(np.int64)
    # nudge until the clipped sizes hit the exact total
    diff = spec.total_agents - int(sizes.sum())
    step = 1 if diff > 0 else -1
    guard = 0
    while diff != 0:
        k = int(rng.integers(z))
        if lo <= sizes[k] + step <= hi:
            sizes[k] += step
            diff -= step
        guard += 1
        if guard > 10_000_000:
            raise ConfigurationError("zone_size_range: cannot reach total_agents")
    return sizes


def _draw_ages(spec, rng, n) -> np.ndarray:
    bands = spec.age_pyramid
    w = np.array([b[2] for b in bands], dtype=float)
    w /= w.sum()
    pick = rng.choice(len(bands), size=n, p=w)
    lo = np.array([b[0] for b in bands])
    hi = np.array([b[1] for b in bands])
    span = hi - lo + 1
    return (lo[pick] + (rng.random(n) * span[pick]).astype(np.int64)).astype(np.int16)


def _build_households(spec, rng, age, zone_offsets):
    """Family formation inside each zone: sibling groups get one or two
    parents, leftover adults pair up or live alone."""
    n = len(age)
    household_of = np.full(n, -1, dtype=np.int32)
    next_hh = 0
    kid_counts = sorted(spec.children_per_family.items())
    kc_vals = np.array([k for k, _ in kid_counts])
    kc_w = np.array([w for _, w in kid_counts], dtype=float)
    kc_w /= kc_w.sum()
    gap_lo, gap_hi = spec.parent_age_gap

    for z in range(len(zone_offsets) - 1):
        members = np.arange(zone_offsets[z], zone_offsets[z + 1])
        ages_z = age[members]
        kids = members[ages_z <= 19]
        adults = members[ages_z >= 20]
        if spec.stay_home_fraction > 0.0:
            # young adults staying in the parental home count as dependents
            young = (ages_z >= 20) & (ages_z <= 29)
            stay = members[young & (rng.random(len(members)) < spec.stay_home_fraction)]
            if len(stay):
                kids = np.concatenate([kids, stay])
                adults = np.setdiff1d(adults, stay, assume_unique=True)
        rng.shuffle(kids)
        # adult pool sorted by age for nearest-age parent matching
        adult_order = adults[np.argsort(age[adults], kind="stable")]
        adult_ages = age[adult_order].astype(np.int64)
        taken = np.zeros(len(adult_order), dtype=bool)
        n_taken = 0

        def take_nearest(target_age):
            nonlocal n_taken
            if n_taken == len(adult_order):
                return -1
            j = np.searchsorted(adult_ages, target_age)
            best, best_d = -1, 1 << 30
            for d in range(len(adult_order)):
                hit = False
                for cand in (j - d, j + d):
                    if 0 <= cand < len(adult_order) and not taken[cand]:
                        dist = abs(int(adult_ages[cand]) - target_age)
                        if dist < best_d:
                            best, best_d = cand, dist
                        hit = True
                if best >= 0 and best_d <= d:
                    break
                if not hit and d > len(adult_order):
                    break
            taken[best] = True
            n_taken += 1
            return best

        k = 0
        family_hhs = []
        while k < len(kids):
            size = int(kc_vals[rng.choice(len(kc_vals), p=kc_w)])
            group = kids[k:k + size]
            k += size
            hh = next_hh
            next_hh += 1
            household_of[group] = hh
            eldest = int(age[group].max())
            gap = int(rng.integers(gap_lo, gap_hi + 1))
            p1 = take_nearest(min(eldest + gap, 90))
            if p1 >= 0:
                household_of[adult_order[p1]] = hh
                if rng.random() >= spec.lone_parent_share:
                    p2 = take_nearest(int(adult_ages[p1]) + int(rng.integers(-3, 4)))
                    if p2 >= 0:
                        household_of[adult_order[p2]] = hh
                family_hhs.append(hh)
            else:
                family_hhs.append(hh)  # no adult left in zone; kids keep the household

        # remaining adults: cohabiting pairs or singles
        free = adult_order[~taken]
        free = free[np.argsort(age[free], kind="stable")]  # adjacent ages pair up
        used = np.zeros(len(free), dtype=bool)
        for i in range(len(free)):
            if used[i]:
                continue
            used[i] = True
            hh = next_hh
            next_hh += 1
            household_of[free[i]] = hh
            if rng.random() < spec.cohabitation_fraction_over20:
                for j in range(i + 1, len(free)):
                    if not used[j]:
                        used[j] = True
                        household_of[free[j]] = hh
                        break
    households = Membership(household_of, next_hh)
    return household_of, households


def _build_workplaces(spec, rng, age, class_of, zone_of):
    n = len(age)
    adult = (age >= 18) & (age <= 66) & (class_of < 0)
    employed = adult & (rng.random(n) < spec.employment_rate)
    employment = np.where(employed, EMP_WORKER, EMP_NONE).astype(np.int8)
    workers = np.flatnonzero(employed)
    pf = workers[rng.random(len(workers)) < spec.public_facing_fraction]
    employment[pf] = EMP_PUBLIC_FACING

    site_of = np.full(n, -1, dtype=np.int32)
    order = rng.permutation(workers)
    if spec.local_work_fraction > 0.0:
        # commuting locality: sites fill mostly from one zone, with a share of
        # long commuters scattered through the fill order
        loc = rng.random(len(order)) < spec.local_work_fraction
        local_sorted = order[loc][np.argsort(zone_of[order[loc]], kind="stable")]
        merged = np.empty(len(order), dtype=order.dtype)
        gmask = np.zeros(len(order), dtype=bool)
        gmask[rng.choice(len(order), size=int((~loc).sum()), replace=False)] = True
        merged[gmask] = order[~loc]
        merged[~gmask] = local_sorted
        order = merged
    bands = spec.site_size_distribution
    w = np.array([b[2] for b in bands], dtype=float)
    w /= w.sum()
    placed = 0
    site = 0
    while placed < len(order):
        b = bands[int(rng.choice(len(bands), p=w))]
        size = int(rng.integers(b[0], b[1] + 1))
        group = order[placed:placed + size]
        site_of[group] = site
        site += 1
        placed += size
    sites = Membership(site_of, site)

    # close-colleague groups: chunk each site's member list after a shuffle
    close_group = np.full(n, -1, dtype=np.int32)
    g = 0
    gsz = spec.close_colleague_group_size
    for s in range(sites.n_groups):
        row = sites.group_members(s).copy()
        rng.shuffle(row)
        for start in range(0, len(row), gsz):
            close_group[row[start:start + gsz]] = g
            g += 1
    close_adj = Csr.from_groups(n, close_group)
    return employment, site_of, sites, close_adj


def _build_classes(spec, rng, age, zone_offsets):
    n = len(age)
    class_of = np.full(n, -1, dtype=np.int32)
    next_class = 0
    for z in range(len(zone_offsets) - 1):
        members = np.arange(zone_offsets[z], zone_offsets[z + 1])
        ages_z = age[members]
        for a in range(PUPIL_AGE_LO, PUPIL_AGE_HI + 1):
            cohort = members[ages_z == a]
            if len(cohort) == 0:
                continue
            cohort = rng.permutation(cohort)
            groups = -(-len(cohort) // spec.class_max_size)
            for part in np.array_split(cohort, groups):
                class_of[part] = next_class
                next_class += 1
    classes = Membership(class_of, next_class)
    return class_of, classes


def _build_friendship(spec, rng, age):
    """Age-assortative preferential attachment over agents older than 14."""
    eligible = np.flatnonzero(age >= FRIEND_MIN_AGE).astype(np.int32)
    order = rng.permutation(eligible).astype(np.int32)
    amin = int(age[eligible].min()) if len(eligible) else 0
    amax = int(age[eligible].max()) if len(eligible) else 0
    span = max(amax - amin, 0)
    sigma = spec.friendship_age_sigma
    kernel = np.exp(-np.arange(span + 1, dtype=float) ** 2 / (2.0 * sigma * sigma))
    ages_rel = (age[order].astype(np.int32) - amin)
    seed = int(rng.integers(1 << 62))
    a, b = backend.build_attachment_edges(order, ages_rel,
                                          spec.friendship_attachment, kernel, seed)
    return Csr.from_edges(len(age), a, b)


def _link_relatives(spec, rng, age, household_of, households, zone_of):
    """Pair younger households with elder households in the same zone."""
    n_hh = households.n_groups
    linked = np.full(n_hh, -1, dtype=np.int32)
    e_lo, e_hi = spec.relative_elder_age_range
    starts = households.offsets[:-1]
    member_ages = age[households.members].astype(np.int64)
    hh_zone = zone_of[households.members[starts]]
    hh_max_age = np.maximum.reduceat(member_ages, starts)
    elder_flag = ((member_ages >= e_lo) & (member_ages <= e_hi)).astype(np.int64)
    hh_has_elder = np.add.reduceat(elder_flag, starts) > 0
    pairs_a = []
    pairs_b = []
    for z in np.unique(hh_zone):
        in_zone = np.flatnonzero(hh_zone == z)
        elder = in_zone[hh_has_elder[in_zone]]
        young = in_zone[~hh_has_elder[in_zone] & (hh_max_age[in_zone] < e_lo)]
        rng.shuffle(elder)
        rng.shuffle(young)
        m = min(len(elder), len(young))
        for i in range(m):
            linked[young[i]] = elder[i]
            linked[elder[i]] = young[i]
            ya = households.group_members(young[i])
            ea = households.group_members(elder[i])
            for u in ya:
                for v in ea:
                    pairs_a.append(int(u))
                    pairs_b.append(int(v))
    n = len(age)
    relative_adj = Csr.from_edges(
        n, np.asarray(pairs_a, dtype=np.int32), np.asarray(pairs_b, dtype=np.int32))
    return linked, relative_adj


def generate_population(spec: PopulationSpec, seed: int) -> Population:
    """Deterministically build the population described by `spec`."""
    spec.validate()
    rng = np.random.default_rng(np.random.SeedSequence((int(seed), POP_STREAM_TAG)))

    zone_sizes = _draw_zone_sizes(spec, rng)
    n = int(zone_sizes.sum())
    zone_offsets = np.zeros(len(zone_sizes) + 1, dtype=np.int64)
    np.cumsum(zone_sizes, out=zone_offsets[1:])
    zone_of = np.repeat(np.arange(len(zone_sizes), dtype=np.int32), zone_sizes)

    age = _draw_ages(spec, rng, n)
    sex_female = (rng.random(n) < spec.female_fraction)

    household_of, households = _build_households(spec, rng, age, zone_offsets)
    class_of, classes = _build_classes(spec, rng, age, zone_offsets)
    employment, site_of, sites, close_adj = _build_workplaces(spec, rng, age, class_of,
                                                              zone_of)
    friend_adj = _build_friendship(spec, rng, age)
    linked, relative_adj = _link_relatives(spec, rng, age, household_of,
                                           households, zone_of)

    return Population(
        spec=spec, seed=int(seed), age=age, sex_female=sex_female,
        zone_of=zone_of, zone_offsets=zone_offsets,
        household_of=household_of, households=households,
        linked_household=linked,
        employment=employment, site_of=site_of, sites=sites, close_adj=close_adj,
        class_of=class_of, classes=classes,
        friend_adj=friend_adj, relative_adj=relative_adj)
