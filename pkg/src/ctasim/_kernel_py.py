"""Pure-Python day kernel: the reference implementation.

The compiled kernel (_kernel.pyx) transcribes these loops statement for
statement; backend parity tests require bit-identical outputs.  Keep every
draw, guard, and float expression in the same order in both files.

Per (agent, day) the kernel consumes independent splitmix64 streams:
  ATTEND        which layers happen today (one Bernoulli per applicable layer)
  SEL_*         partner selection, one stream per sampled layer, so an
                enumeration that skips a layer never shifts another's draws
  ROLL          transmission Bernoullis, in enumeration order
  CUST_SELECT / CUST_ROLL   the public-facing customer loop
"""
from __future__ import annotations

import numpy as np

from .rng import (Stream, stream_seed, ATTEND, SEL_SCHOOL, SEL_SITE,
                  SEL_RELATIVE, SEL_FRIEND, SEL_RANDOM, ROLL,
                  CUST_SELECT, CUST_ROLL)
from .layers import (HOUSEHOLD, RELATIVES, WORKPLACE_CLOSE, WORKPLACE_SITE,
                     SCHOOL, FRIENDSHIP, RANDOM, CUSTOMER, N_LAYERS)

BACKEND_NAME = "python"


def _attendance(model, i, day, master):
    """(work_or_school_day, relatives_day, friends_day, random_day)."""
    s = Stream(stream_seed(master, day, i, ATTEND))
    ws = False
    if model.attend_p[i] > 0.0:
        ws = s.u01() < model.attend_p[i]
    rel = False
    if model.has_relative[i]:
        rel = s.u01() < model.relative_p
    fr = False
    if model.friend_offsets[i + 1] > model.friend_offsets[i]:
        fr = s.u01() < model.friend_p[i]
    rnd = s.u01() < model.random_p[i]
    return ws, rel, fr, rnd


def _attends_today(model, j, day, master):
    """Target-side attendance: replay of j's own work/school day draw.
    Colleagues can only be met on days they attend themselves."""
    if model.attend_p[j] <= 0.0:
        return False
    s = Stream(stream_seed(master, day, int(j), ATTEND))
    return s.u01() < model.attend_p[j]


def _partial_shuffle(row, k, stream):
    """First k entries of a Fisher–Yates pass over `row` (a mutable list)."""
    n = len(row)
    for t in range(k):
        r = t + stream.randbelow(n - t)
        row[t], row[r] = row[r], row[t]
    return row[:k]


def enumerate_agent(model, i, day, master, contactable, isolating):
    """Full enumeration of agent i's own daily encounters.

    Returns [(target, layer), ...] in kernel order.  Transmission and CTA
    recording are separate concerns layered on top of this sequence.
    """
    out = []
    hh = model.hh_of[i]
    lo, hi = model.hh_offsets[hh], model.hh_offsets[hh + 1]
    for idx in range(lo, hi):
        j = model.hh_members[idx]
        if j != i and contactable[j]:
            out.append((int(j), HOUSEHOLD))
    if isolating[i]:
        return out
    ws, rel, fr, rnd = _attendance(model, i, day, master)

    if model.is_pupil[i] and ws:
        c = model.class_of[i]
        row = [int(j) for j in
               model.class_members[model.class_offsets[c]:model.class_offsets[c + 1]]
               if j != i]
        k = int(model.school_fraction * len(row) + 0.5)
        if k > 0:
            s = Stream(stream_seed(master, day, i, SEL_SCHOOL))
            for j in _partial_shuffle(row, k, s):
                if contactable[j] and not isolating[j]:
                    out.append((j, SCHOOL))

    if model.is_worker[i] and ws:
        for idx in range(model.close_offsets[i], model.close_offsets[i + 1]):
            j = model.close_values[idx]
            if (contactable[j] and not isolating[j]
                    and _attends_today(model, j, day, master)):
                out.append((int(j), WORKPLACE_CLOSE))
        site = model.site_of[i]
        slo, shi = model.site_offsets[site], model.site_offsets[site + 1]
        ssize = shi - slo
        if ssize > 1:
            s = Stream(stream_seed(master, day, i, SEL_SITE))
            r = s.randbelow(ssize - 1)
            if r >= model.site_pos[i]:
                r += 1
            j = model.site_members[slo + r]
            if (contactable[j] and not isolating[j]
                    and _attends_today(model, j, day, master)):
                out.append((int(j), WORKPLACE_SITE))

    if rel:
        other = model.linked_hh[hh]
        olo, ohi = model.hh_offsets[other], model.hh_offsets[other + 1]
        s = Stream(stream_seed(master, day, i, SEL_RELATIVE))
        j = model.hh_members[olo + s.randbelow(ohi - olo)]
        if contactable[j] and not isolating[j]:
            out.append((int(j), RELATIVES))

    if fr:
        deg = model.friend_offsets[i + 1] - model.friend_offsets[i]
        cap = int(model.friend_cap_frac * deg)
        if cap < 1:
            cap = 1
        s = Stream(stream_seed(master, day, i, SEL_FRIEND))
        count = 1 + s.randbelow(cap)
        row = [int(j) for j in
               model.friend_values[model.friend_offsets[i]:model.friend_offsets[i + 1]]]
        for j in _partial_shuffle(row, count, s):
            if contactable[j] and not isolating[j]:
                out.append((j, FRIENDSHIP))

    if rnd:
        z = model.zone_of[i]
        zlo = model.zone_offsets[z]
        zsize = model.zone_offsets[z + 1] - zlo
        if zsize > 1:
            s = Stream(stream_seed(master, day, i, SEL_RANDOM))
            k = s.poisson(model.lam_r[z], model.exp_neg_lam_r[z])
            pos = i - zlo
            for _ in range(k):
                r = s.randbelow(zsize - 1)
                if r >= pos:
                    r += 1
                j = zlo + r
                if contactable[j] and not isolating[j]:
                    out.append((int(j), RANDOM))
    return out


def _customer_targets(model, i, day, master, contactable, isolating):
    """Eligible customers a working public-facing agent serves today."""
    z = model.zone_of[i]
    zlo = model.zone_offsets[z]
    zsize = model.zone_offsets[z + 1] - zlo
    if zsize <= 1:
        return []
    s = Stream(stream_seed(master, day, i, CUST_SELECT))
    k = s.poisson(model.lam_w[z], model.exp_neg_lam_w[z])
    pos = i - zlo
    out = []
    for _ in range(k):
        r = s.randbelow(zsize - 1)
        if r >= pos:
            r += 1
        j = zlo + r
        if contactable[j] and not isolating[j]:
            out.append(int(j))
    return out


def census_day(model, day, master):
    """Contact counts per agent for one day with everyone healthy and free.

    Active-perspective counting: each agent tallies the encounters its own
    routine generates; customers count toward the worker serving them.
    """
    n = model.n
    counts = np.zeros(n, dtype=np.int32)
    by_layer = np.zeros(N_LAYERS, dtype=np.int64)
    contactable = np.ones(n, dtype=np.uint8)
    isolating = np.zeros(n, dtype=np.uint8)
    for i in range(n):
        events = enumerate_agent(model, i, day, master, contactable, isolating)
        counts[i] = len(events)
        for _, layer in events:
            by_layer[layer] += 1
        if model.is_pf[i]:
            ws, _, _, _ = _attendance(model, i, day, master)
            if ws:
                cust = _customer_targets(model, i, day, master, contactable,
                                         isolating)
                counts[i] += len(cust)
                by_layer[CUSTOMER] += len(cust)
    return counts, by_layer


def run_day(model, day, master, full_sources, cta_sources,
            mult, susceptible, contactable, isolating, cta, record_cta,
            beta_net, beta_school, beta_rand, beta_hh, hh_iso_factor,
            discount):
    """One epidemic day of contact generation.

    full_sources: disease-active agents (alive, not hospitalized), ascending.
    cta_sources: healthy CTA users to enumerate for app logging only
      (alive, not hospitalized, not isolating, not in full_sources), ascending.

    Returns candidate transmissions (source, target, layer) in enumeration
    order and the CTA pairs recorded today.
    """
    cand_src, cand_tgt, cand_layer = [], [], []
    cta_a, cta_b = [], []

    for i in full_sources:
        i = int(i)
        m_i = mult[i]
        iso_i = isolating[i]
        cta_i = record_cta and cta[i]
        roll = Stream(stream_seed(master, day, i, ROLL))
        for j, layer in enumerate_agent(model, i, day, master,
                                        contactable, isolating):
            if (cta_i and cta[j]
                    and layer in (WORKPLACE_CLOSE, WORKPLACE_SITE,
                                  FRIENDSHIP, RANDOM)):
                cta_a.append(i)
                cta_b.append(j)
            if m_i > 0.0 and susceptible[j]:
                if layer == SCHOOL:
                    beta = beta_school
                elif layer == RANDOM:
                    beta = beta_rand
                elif layer == HOUSEHOLD:
                    beta = beta_hh
                else:
                    beta = beta_net
                beta = beta * m_i * discount[j]
                if layer == HOUSEHOLD and iso_i:
                    beta = beta * hh_iso_factor
                if roll.u01() < beta:
                    cand_src.append(i)
                    cand_tgt.append(j)
                    cand_layer.append(layer)

    if record_cta:
        for i in cta_sources:
            i = int(i)
            if not cta[i]:
                continue
            ws, rel, fr, rnd = _attendance(model, i, day, master)
            if model.is_worker[i] and ws:
                for idx in range(model.close_offsets[i], model.close_offsets[i + 1]):
                    j = int(model.close_values[idx])
                    if (contactable[j] and cta[j] and not isolating[j]
                            and _attends_today(model, j, day, master)):
                        cta_a.append(i)
                        cta_b.append(j)
                site = model.site_of[i]
                slo = model.site_offsets[site]
                ssize = model.site_offsets[site + 1] - slo
                if ssize > 1:
                    s = Stream(stream_seed(master, day, i, SEL_SITE))
                    r = s.randbelow(ssize - 1)
                    if r >= model.site_pos[i]:
                        r += 1
                    j = int(model.site_members[slo + r])
                    if (contactable[j] and cta[j] and not isolating[j]
                            and _attends_today(model, j, day, master)):
                        cta_a.append(i)
                        cta_b.append(j)
            if fr:
                deg = model.friend_offsets[i + 1] - model.friend_offsets[i]
                cap = int(model.friend_cap_frac * deg)
                if cap < 1:
                    cap = 1
                s = Stream(stream_seed(master, day, i, SEL_FRIEND))
                count = 1 + s.randbelow(cap)
                row = [int(j) for j in
                       model.friend_values[model.friend_offsets[i]:
                                           model.friend_offsets[i + 1]]]
                for j in _partial_shuffle(row, count, s):
                    if contactable[j] and cta[j] and not isolating[j]:
                        cta_a.append(i)
                        cta_b.append(j)
            if rnd:
                z = model.zone_of[i]
                zlo = model.zone_offsets[z]
                zsize = model.zone_offsets[z + 1] - zlo
                if zsize > 1:
                    s = Stream(stream_seed(master, day, i, SEL_RANDOM))
                    k = s.poisson(model.lam_r[z], model.exp_neg_lam_r[z])
                    pos = i - zlo
                    for _ in range(k):
                        r = s.randbelow(zsize - 1)
                        if r >= pos:
                            r += 1
                        j = zlo + r
                        if contactable[j] and cta[j] and not isolating[j]:
                            cta_a.append(i)
                            cta_b.append(int(j))

    # public-facing customer loop; infection checks run in both directions
    pf = model.pf_workers
    for idx in range(len(pf)):
        i = int(pf[idx])
        if not contactable[i] or isolating[i]:
            continue
        ws, _, _, _ = _attendance(model, i, day, master)
        if not ws:
            continue
        m_i = mult[i]
        cta_i = record_cta and cta[i]
        roll = Stream(stream_seed(master, day, i, CUST_ROLL))
        for j in _customer_targets(model, i, day, master, contactable, isolating):
            if cta_i and cta[j]:
                cta_a.append(i)
                cta_b.append(j)
            if m_i > 0.0 and susceptible[j]:
                beta = beta_rand * m_i * discount[j]
                if roll.u01() < beta:
                    cand_src.append(i)
                    cand_tgt.append(j)
                    cand_layer.append(CUSTOMER)
            elif mult[j] > 0.0 and susceptible[i]:
                beta = beta_rand * mult[j] * discount[i]
                if roll.u01() < beta:
                    cand_src.append(j)
                    cand_tgt.append(i)
                    cand_layer.append(CUSTOMER)

    return (np.asarray(cand_src, dtype=np.int32),
            np.asarray(cand_tgt, dtype=np.int32),
            np.asarray(cand_layer, dtype=np.uint8),
            np.asarray(cta_a, dtype=np.int32),
            np.asarray(cta_b, dtype=np.int32))


def build_attachment_edges(order, ages_rel, m, kernel_table, seed):
    """Age-assortative preferential attachment.

    Nodes join in `order`; each new node draws m targets with probability
    proportional to degree × age_kernel(|Δage|).  Degree-proportionality is
    realized by bucketed repeat-lists (one entry per incident edge); the age
    kernel reweights buckets.  Returns edge endpoint arrays.
    """
    n = len(order)
    if n < 2:
        return (np.empty(0, dtype=np.int32), np.empty(0, dtype=np.int32))
    nb = int(ages_rel.max()) + 1
    s = Stream(seed)
    edge_a, edge_b = [], []

    m0 = min(m + 1, n)
    replists = [[] for _ in range(nb)]
    degsum = [0.0] * nb
    bucket_of = [0] * n

    def add_endpoint(v):
        b = bucket_of[v]
        replists[b].append(v)
        degsum[b] += 1.0

    for t in range(n):
        bucket_of[t] = int(ages_rel[t])
    for u in range(m0):
        for v in range(u + 1, m0):
            edge_a.append(u)
            edge_b.append(v)
            add_endpoint(u)
            add_endpoint(v)

    for v in range(m0, n):
        bv = bucket_of[v]
        picked = []
        for _ in range(m):
            total = 0.0
            for b in range(nb):
                if degsum[b] > 0.0:
                    d = bv - b if bv >= b else b - bv
                    total += kernel_table[d] * degsum[b]
            target = -1
            for _attempt in range(64):
                r = s.u01() * total
                acc = 0.0
                chosen_b = -1
                for b in range(nb):
                    if degsum[b] > 0.0:
                        d = bv - b if bv >= b else b - bv
                        acc += kernel_table[d] * degsum[b]
                        if r < acc:
                            chosen_b = b
                            break
                if chosen_b < 0:
                    chosen_b = nb - 1  # float roundoff on the last bucket
                    while not replists[chosen_b]:
                        chosen_b -= 1
                cand = replists[chosen_b][s.randbelow(len(replists[chosen_b]))]
                if cand != v and cand not in picked:
                    target = cand
                    break
            if target < 0:
                continue
            picked.append(target)
        for u in picked:
            edge_a.append(u)
            edge_b.append(v)
            add_endpoint(u)
            add_endpoint(v)

    a = np.asarray([int(order[x]) for x in edge_a], dtype=np.int32)
    b = np.asarray([int(order[x]) for x in edge_b], dtype=np.int32)
    return a, b
