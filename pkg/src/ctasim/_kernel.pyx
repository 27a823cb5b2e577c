# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled day kernel.

Statement-for-statement port of _kernel_py; backend parity tests require
bit-identical outputs.  Selection streams, guard order, and float expression
order must match the pure-Python reference exactly.  Streams with distinct
purposes are independent, so transmission rolls may interleave with event
generation here even though the reference materializes events first.
"""

import numpy as np

cimport numpy as cnp
from libcpp.vector cimport vector

cnp.import_array()

BACKEND_NAME = "compiled"

ctypedef unsigned long long u64
ctypedef cnp.int64_t i64
ctypedef cnp.int32_t i32
ctypedef cnp.uint8_t u8

cdef extern from *:
    """
    static inline unsigned long long ctasim_mulhi(unsigned long long a,
                                                  unsigned long long n) {
        return (unsigned long long)(((__uint128_t)a * (__uint128_t)n) >> 64);
    }
    """
    u64 ctasim_mulhi(u64 a, u64 n) nogil

cdef u64 GOLDEN = 0x9E3779B97F4A7C15
cdef u64 AGENT_SALT = 0xC2B2AE3D27D4EB4F
cdef u64 PURPOSE_SALT = 0xD6E8FEB86659FD93
cdef double INV53 = 1.0 / 9007199254740992.0     # 2^-53, exact

# stream purposes; values mirror rng.py
cdef enum:
    ATTEND = 0
    SEL_SCHOOL = 1
    SEL_SITE = 2
    SEL_RELATIVE = 3
    SEL_FRIEND = 4
    SEL_RANDOM = 5
    ROLL = 6
    CUST_SELECT = 7
    CUST_ROLL = 8

# layer codes; values mirror layers.py
cdef enum:
    HOUSEHOLD = 0
    RELATIVES = 1
    WORKPLACE_CLOSE = 2
    WORKPLACE_SITE = 3
    SCHOOL = 4
    FRIENDSHIP = 5
    RANDOM = 6
    CUSTOMER = 7


cdef inline u64 mix64(u64 z) nogil:
    z = (z ^ (z >> 30)) * <u64>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <u64>0x94D049BB133111EB
    return z ^ (z >> 31)


cdef inline u64 stream_seed_c(u64 master, long day, long agent, long purpose) nogil:
    cdef u64 h = mix64(master ^ (GOLDEN * <u64>(day + 1)))
    h = mix64(h ^ (AGENT_SALT * <u64>(agent + 1)))
    return mix64(h ^ (PURPOSE_SALT * <u64>(purpose + 1)))


cdef inline u64 next_u64(u64* s) nogil:
    s[0] = s[0] + GOLDEN
    return mix64(s[0])


cdef inline double u01(u64* s) nogil:
    return <double>(next_u64(s) >> 11) * INV53


cdef inline long randbelow(u64* s, long n) nogil:
    return <long>ctasim_mulhi(next_u64(s), <u64>n)


cdef inline long poisson_c(u64* s, double lam, double exp_neg_lam) nogil:
    cdef double u = u01(s)
    cdef double p = exp_neg_lam
    cdef double cum = p
    cdef long k = 0
    while u > cum and k < 10000:
        k += 1
        p *= lam / <double>k
        cum += p
    return k


cdef inline void partial_shuffle(i32* row, long n, long k, u64* s) nogil:
    cdef long t, r
    cdef i32 tmp
    for t in range(k):
        r = t + randbelow(s, n - t)
        tmp = row[t]
        row[t] = row[r]
        row[r] = tmp


# Static model arrays as raw pointers plus scalar parameters, extracted from
# the Python-side KernelModel once per entry call.
cdef struct MV:
    long n
    double relative_p
    double school_fraction
    double friend_cap_frac
    double* attend_p
    double* friend_p
    double* random_p
    double* lam_r
    double* lam_w
    double* exp_neg_lam_r
    double* exp_neg_lam_w
    u8* has_relative
    u8* is_pupil
    u8* is_worker
    u8* is_pf
    i32* hh_of
    i32* hh_members
    i32* linked_hh
    i32* class_of
    i32* class_members
    i32* site_of
    i32* site_members
    i32* site_pos
    i32* close_values
    i32* friend_values
    i32* zone_of
    i32* pf_workers
    long n_pf
    i64* hh_offsets
    i64* class_offsets
    i64* site_offsets
    i64* close_offsets
    i64* friend_offsets
    i64* zone_offsets


cdef class _Holder:
    # keeps the memoryview references alive for the lifetime of one call
    cdef list refs

    def __cinit__(self):
        self.refs = []

    cdef double* d(self, object arr):
        cdef double[::1] v = arr
        self.refs.append(v)
        return &v[0] if v.shape[0] else NULL

    cdef u8* b(self, object arr):
        cdef u8[::1] v = arr
        self.refs.append(v)
        return &v[0] if v.shape[0] else NULL

    cdef i32* i(self, object arr):
        cdef i32[::1] v = arr
        self.refs.append(v)
        return &v[0] if v.shape[0] else NULL

    cdef i64* l(self, object arr):
        cdef i64[::1] v = arr
        self.refs.append(v)
        return &v[0] if v.shape[0] else NULL


cdef MV make_views(model, _Holder h):
    cdef MV mv
    mv.n = model.n
    mv.relative_p = model.relative_p
    mv.school_fraction = model.school_fraction
    mv.friend_cap_frac = model.friend_cap_frac
    mv.attend_p = h.d(model.attend_p)
    mv.friend_p = h.d(model.friend_p)
    mv.random_p = h.d(model.random_p)
    mv.lam_r = h.d(model.lam_r)
    mv.lam_w = h.d(model.lam_w)
    mv.exp_neg_lam_r = h.d(model.exp_neg_lam_r)
    mv.exp_neg_lam_w = h.d(model.exp_neg_lam_w)
    mv.has_relative = h.b(model.has_relative)
    mv.is_pupil = h.b(model.is_pupil)
    mv.is_worker = h.b(model.is_worker)
    mv.is_pf = h.b(model.is_pf)
    mv.hh_of = h.i(model.hh_of)
    mv.hh_members = h.i(model.hh_members)
    mv.linked_hh = h.i(model.linked_hh)
    mv.class_of = h.i(model.class_of)
    mv.class_members = h.i(model.class_members)
    mv.site_of = h.i(model.site_of)
    mv.site_members = h.i(model.site_members)
    mv.site_pos = h.i(model.site_pos)
    mv.close_values = h.i(model.close_values)
    mv.friend_values = h.i(model.friend_values)
    mv.zone_of = h.i(model.zone_of)
    mv.pf_workers = h.i(model.pf_workers)
    mv.n_pf = len(model.pf_workers)
    mv.hh_offsets = h.l(model.hh_offsets)
    mv.class_offsets = h.l(model.class_offsets)
    mv.site_offsets = h.l(model.site_offsets)
    mv.close_offsets = h.l(model.close_offsets)
    mv.friend_offsets = h.l(model.friend_offsets)
    mv.zone_offsets = h.l(model.zone_offsets)
    return mv


cdef void attendance(MV* mv, long i, long day, u64 master,
                     bint* ws, bint* rel, bint* fr, bint* rnd) nogil:
    cdef u64 s = stream_seed_c(master, day, i, ATTEND)
    ws[0] = False
    if mv.attend_p[i] > 0.0:
        ws[0] = u01(&s) < mv.attend_p[i]
    rel[0] = False
    if mv.has_relative[i]:
        rel[0] = u01(&s) < mv.relative_p
    fr[0] = False
    if mv.friend_offsets[i + 1] > mv.friend_offsets[i]:
        fr[0] = u01(&s) < mv.friend_p[i]
    rnd[0] = u01(&s) < mv.random_p[i]


cdef inline bint attends_today(MV* mv, long j, long day, u64 master) nogil:
    # target-side attendance: replay of j's own work/school day draw;
    # colleagues can only be met on days they attend themselves
    cdef u64 s
    if mv.attend_p[j] <= 0.0:
        return False
    s = stream_seed_c(master, day, j, ATTEND)
    return u01(&s) < mv.attend_p[j]


cdef struct Sink:
    # transmit mode when cand_src != NULL, census tally mode otherwise
    vector[i32]* cand_src
    vector[i32]* cand_tgt
    vector[u8]* cand_layer
    vector[i32]* cta_a
    vector[i32]* cta_b
    i64* by_layer
    double beta_net
    double beta_school
    double beta_rand
    double beta_hh
    double hh_iso_factor
    u8* susceptible
    u8* cta
    double* discount


cdef inline void emit(Sink* sk, long i, long j, int layer,
                      double m_i, bint iso_i, bint cta_i, u64* roll) nogil:
    cdef double beta
    if sk.cand_src == NULL:
        sk.by_layer[layer] += 1
        return
    if (cta_i and sk.cta[j]
            and (layer == WORKPLACE_CLOSE or layer == WORKPLACE_SITE
                 or layer == FRIENDSHIP or layer == RANDOM)):
        sk.cta_a.push_back(<i32>i)
        sk.cta_b.push_back(<i32>j)
    if m_i > 0.0 and sk.susceptible[j]:
        if layer == SCHOOL:
            beta = sk.beta_school
        elif layer == RANDOM:
            beta = sk.beta_rand
        elif layer == HOUSEHOLD:
            beta = sk.beta_hh
        else:
            beta = sk.beta_net
        beta = beta * m_i * sk.discount[j]
        if layer == HOUSEHOLD and iso_i:
            beta = beta * sk.hh_iso_factor
        if u01(roll) < beta:
            sk.cand_src.push_back(<i32>i)
            sk.cand_tgt.push_back(<i32>j)
            sk.cand_layer.push_back(<u8>layer)


cdef long enumerate_agent_c(MV* mv, long i, long day, u64 master,
                            u8* contactable, u8* isolating,
                            i32* scratch, Sink* sk,
                            double m_i, bint cta_i) nogil:
    """Agent i's own encounters in reference order, fed to the sink.
    Returns the event count."""
    cdef long count = 0
    cdef long hh = mv.hh_of[i]
    cdef long lo = mv.hh_offsets[hh]
    cdef long hi = mv.hh_offsets[hh + 1]
    cdef long idx, j, c, cl, k, t, site, slo, ssize, r, other
    cdef long olo, ohi, deg, cap, cnt, z, zlo, zsize, pos, pk
    cdef bint ws, rel, fr, rnd
    cdef bint iso_i = isolating[i] != 0
    cdef u64 roll = 0
    cdef u64 sel
    if sk.cand_src != NULL:
        roll = stream_seed_c(master, day, i, ROLL)

    for idx in range(lo, hi):
        j = mv.hh_members[idx]
        if j != i and contactable[j]:
            emit(sk, i, j, HOUSEHOLD, m_i, iso_i, cta_i, &roll)
            count += 1
    if isolating[i]:
        return count
    attendance(mv, i, day, master, &ws, &rel, &fr, &rnd)

    if mv.is_pupil[i] and ws:
        c = mv.class_of[i]
        cl = 0
        for idx in range(mv.class_offsets[c], mv.class_offsets[c + 1]):
            j = mv.class_members[idx]
            if j != i:
                scratch[cl] = <i32>j
                cl += 1
        k = <long>(mv.school_fraction * <double>cl + 0.5)
        if k > 0:
            sel = stream_seed_c(master, day, i, SEL_SCHOOL)
            partial_shuffle(scratch, cl, k, &sel)
            for t in range(k):
                j = scratch[t]
                if contactable[j] and isolating[j] == 0:
                    emit(sk, i, j, SCHOOL, m_i, iso_i, cta_i, &roll)
                    count += 1

    if mv.is_worker[i] and ws:
        for idx in range(mv.close_offsets[i], mv.close_offsets[i + 1]):
            j = mv.close_values[idx]
            if (contactable[j] and isolating[j] == 0
                    and attends_today(mv, j, day, master)):
                emit(sk, i, j, WORKPLACE_CLOSE, m_i, iso_i, cta_i, &roll)
                count += 1
        site = mv.site_of[i]
        slo = mv.site_offsets[site]
        ssize = mv.site_offsets[site + 1] - slo
        if ssize > 1:
            sel = stream_seed_c(master, day, i, SEL_SITE)
            r = randbelow(&sel, ssize - 1)
            if r >= mv.site_pos[i]:
                r += 1
            j = mv.site_members[slo + r]
            if (contactable[j] and isolating[j] == 0
                    and attends_today(mv, j, day, master)):
                emit(sk, i, j, WORKPLACE_SITE, m_i, iso_i, cta_i, &roll)
                count += 1

    if rel:
        other = mv.linked_hh[hh]
        olo = mv.hh_offsets[other]
        ohi = mv.hh_offsets[other + 1]
        sel = stream_seed_c(master, day, i, SEL_RELATIVE)
        j = mv.hh_members[olo + randbelow(&sel, ohi - olo)]
        if contactable[j] and isolating[j] == 0:
            emit(sk, i, j, RELATIVES, m_i, iso_i, cta_i, &roll)
            count += 1

    if fr:
        deg = mv.friend_offsets[i + 1] - mv.friend_offsets[i]
        cap = <long>(mv.friend_cap_frac * <double>deg)
        if cap < 1:
            cap = 1
        sel = stream_seed_c(master, day, i, SEL_FRIEND)
        cnt = 1 + randbelow(&sel, cap)
        for idx in range(deg):
            scratch[idx] = mv.friend_values[mv.friend_offsets[i] + idx]
        partial_shuffle(scratch, deg, cnt, &sel)
        for t in range(cnt):
            j = scratch[t]
            if contactable[j] and isolating[j] == 0:
                emit(sk, i, j, FRIENDSHIP, m_i, iso_i, cta_i, &roll)
                count += 1

    if rnd:
        z = mv.zone_of[i]
        zlo = mv.zone_offsets[z]
        zsize = mv.zone_offsets[z + 1] - zlo
        if zsize > 1:
            sel = stream_seed_c(master, day, i, SEL_RANDOM)
            pk = poisson_c(&sel, mv.lam_r[z], mv.exp_neg_lam_r[z])
            pos = i - zlo
            for t in range(pk):
                r = randbelow(&sel, zsize - 1)
                if r >= pos:
                    r += 1
                j = zlo + r
                if contactable[j] and isolating[j] == 0:
                    emit(sk, i, j, RANDOM, m_i, iso_i, cta_i, &roll)
                    count += 1
    return count


cdef object vec_i32(vector[i32]* v):
    out = np.empty(v.size(), dtype=np.int32)
    cdef i32[::1] view
    cdef size_t t
    if v.size():
        view = out
        for t in range(v.size()):
            view[t] = v.at(t)
    return out


cdef object vec_u8(vector[u8]* v):
    out = np.empty(v.size(), dtype=np.uint8)
    cdef u8[::1] view
    cdef size_t t
    if v.size():
        view = out
        for t in range(v.size()):
            view[t] = v.at(t)
    return out


def census_day(model, long day, master):
    """Contact counts per agent for one day with everyone healthy and free."""
    cdef _Holder h = _Holder()
    cdef MV mv = make_views(model, h)
    cdef u64 mstr = <u64>master
    cdef long n = mv.n
    counts_arr = np.zeros(n, dtype=np.int32)
    by_layer_arr = np.zeros(8, dtype=np.int64)
    contactable_arr = np.ones(n, dtype=np.uint8)
    isolating_arr = np.zeros(n, dtype=np.uint8)
    scratch_arr = np.zeros(max(model.max_row, 1), dtype=np.int32)
    cdef i32[::1] counts = counts_arr
    cdef i64[::1] by_layer = by_layer_arr
    cdef u8[::1] contactable = contactable_arr
    cdef u8[::1] isolating = isolating_arr
    cdef i32[::1] scratch = scratch_arr
    cdef Sink sk
    sk.cand_src = NULL
    sk.by_layer = &by_layer[0]
    cdef long i, z, zlo, zsize, pos, t, r, j, pk
    cdef bint ws, rel, fr, rnd
    cdef u64 sel
    with nogil:
        for i in range(n):
            counts[i] = <i32>enumerate_agent_c(
                &mv, i, day, mstr, &contactable[0], &isolating[0],
                &scratch[0], &sk, 0.0, False)
            if mv.is_pf[i]:
                attendance(&mv, i, day, mstr, &ws, &rel, &fr, &rnd)
                if ws:
                    z = mv.zone_of[i]
                    zlo = mv.zone_offsets[z]
                    zsize = mv.zone_offsets[z + 1] - zlo
                    if zsize > 1:
                        sel = stream_seed_c(mstr, day, i, CUST_SELECT)
                        pk = poisson_c(&sel, mv.lam_w[z], mv.exp_neg_lam_w[z])
                        pos = i - zlo
                        for t in range(pk):
                            r = randbelow(&sel, zsize - 1)
                            if r >= pos:
                                r += 1
                            j = zlo + r
                            if contactable[j]:
                                counts[i] += 1
                                by_layer[CUSTOMER] += 1
    return counts_arr, by_layer_arr


def run_day(model, long day, master, full_sources, cta_sources,
            mult, susceptible, contactable, isolating, cta, record_cta,
            double beta_net, double beta_school, double beta_rand,
            double beta_hh, double hh_iso_factor, discount):
    """One epidemic day of contact generation; see the reference kernel."""
    cdef _Holder h = _Holder()
    cdef MV mv = make_views(model, h)
    cdef u64 mstr = <u64>master
    cdef bint rec = bool(record_cta)

    cdef i32[::1] full_v = full_sources
    cdef i32[::1] cta_srcs = cta_sources
    cdef double[::1] mult_v = mult
    cdef u8[::1] susc_v = susceptible
    cdef u8[::1] contact_v = contactable
    cdef u8[::1] iso_v = isolating
    cdef u8[::1] cta_v = cta
    cdef double[::1] disc_v = discount
    scratch_arr = np.zeros(max(model.max_row, 1), dtype=np.int32)
    cdef i32[::1] scratch = scratch_arr

    cdef vector[i32] cand_src, cand_tgt, cta_a, cta_b
    cdef vector[u8] cand_layer
    cdef Sink sk
    sk.cand_src = &cand_src
    sk.cand_tgt = &cand_tgt
    sk.cand_layer = &cand_layer
    sk.cta_a = &cta_a
    sk.cta_b = &cta_b
    sk.by_layer = NULL
    sk.beta_net = beta_net
    sk.beta_school = beta_school
    sk.beta_rand = beta_rand
    sk.beta_hh = beta_hh
    sk.hh_iso_factor = hh_iso_factor
    sk.susceptible = &susc_v[0]
    sk.cta = &cta_v[0]
    sk.discount = &disc_v[0]

    cdef long si, i, idx, j, site, slo, ssize, r, deg, cap, cnt, t
    cdef long z, zlo, zsize, pos, pk
    cdef double m_i, beta
    cdef bint cta_i, ws, rel, fr, rnd
    cdef u64 roll, sel

    with nogil:
        for si in range(full_v.shape[0]):
            i = full_v[si]
            m_i = mult_v[i]
            cta_i = rec and cta_v[i]
            enumerate_agent_c(&mv, i, day, mstr, &contact_v[0], &iso_v[0],
                              &scratch[0], &sk, m_i, cta_i)

        if rec:
            for si in range(cta_srcs.shape[0]):
                i = cta_srcs[si]
                if not cta_v[i]:
                    continue
                attendance(&mv, i, day, mstr, &ws, &rel, &fr, &rnd)
                if mv.is_worker[i] and ws:
                    for idx in range(mv.close_offsets[i], mv.close_offsets[i + 1]):
                        j = mv.close_values[idx]
                        if (contact_v[j] and cta_v[j] and iso_v[j] == 0
                                and attends_today(&mv, j, day, mstr)):
                            cta_a.push_back(<i32>i)
                            cta_b.push_back(<i32>j)
                    site = mv.site_of[i]
                    slo = mv.site_offsets[site]
                    ssize = mv.site_offsets[site + 1] - slo
                    if ssize > 1:
                        sel = stream_seed_c(mstr, day, i, SEL_SITE)
                        r = randbelow(&sel, ssize - 1)
                        if r >= mv.site_pos[i]:
                            r += 1
                        j = mv.site_members[slo + r]
                        if (contact_v[j] and cta_v[j] and iso_v[j] == 0
                                and attends_today(&mv, j, day, mstr)):
                            cta_a.push_back(<i32>i)
                            cta_b.push_back(<i32>j)
                if fr:
                    deg = mv.friend_offsets[i + 1] - mv.friend_offsets[i]
                    cap = <long>(mv.friend_cap_frac * <double>deg)
                    if cap < 1:
                        cap = 1
                    sel = stream_seed_c(mstr, day, i, SEL_FRIEND)
                    cnt = 1 + randbelow(&sel, cap)
                    for idx in range(deg):
                        scratch[idx] = mv.friend_values[mv.friend_offsets[i] + idx]
                    partial_shuffle(&scratch[0], deg, cnt, &sel)
                    for t in range(cnt):
                        j = scratch[t]
                        if contact_v[j] and cta_v[j] and iso_v[j] == 0:
                            cta_a.push_back(<i32>i)
                            cta_b.push_back(<i32>j)
                if rnd:
                    z = mv.zone_of[i]
                    zlo = mv.zone_offsets[z]
                    zsize = mv.zone_offsets[z + 1] - zlo
                    if zsize > 1:
                        sel = stream_seed_c(mstr, day, i, SEL_RANDOM)
                        pk = poisson_c(&sel, mv.lam_r[z], mv.exp_neg_lam_r[z])
                        pos = i - zlo
                        for t in range(pk):
                            r = randbelow(&sel, zsize - 1)
                            if r >= pos:
                                r += 1
                            j = zlo + r
                            if contact_v[j] and cta_v[j] and iso_v[j] == 0:
                                cta_a.push_back(<i32>i)
                                cta_b.push_back(<i32>j)

        # public-facing customer loop; infection checks run both directions
        for si in range(mv.n_pf):
            i = mv.pf_workers[si]
            if not contact_v[i] or iso_v[i]:
                continue
            attendance(&mv, i, day, mstr, &ws, &rel, &fr, &rnd)
            if not ws:
                continue
            m_i = mult_v[i]
            cta_i = rec and cta_v[i]
            roll = stream_seed_c(mstr, day, i, CUST_ROLL)
            z = mv.zone_of[i]
            zlo = mv.zone_offsets[z]
            zsize = mv.zone_offsets[z + 1] - zlo
            if zsize <= 1:
                continue
            sel = stream_seed_c(mstr, day, i, CUST_SELECT)
            pk = poisson_c(&sel, mv.lam_w[z], mv.exp_neg_lam_w[z])
            pos = i - zlo
            for t in range(pk):
                r = randbelow(&sel, zsize - 1)
                if r >= pos:
                    r += 1
                j = zlo + r
                if not contact_v[j] or iso_v[j]:
                    continue
                if cta_i and cta_v[j]:
                    cta_a.push_back(<i32>i)
                    cta_b.push_back(<i32>j)
                if m_i > 0.0 and susc_v[j]:
                    beta = beta_rand * m_i * disc_v[j]
                    if u01(&roll) < beta:
                        cand_src.push_back(<i32>i)
                        cand_tgt.push_back(<i32>j)
                        cand_layer.push_back(<u8>CUSTOMER)
                elif mult_v[j] > 0.0 and susc_v[i]:
                    beta = beta_rand * mult_v[j] * disc_v[i]
                    if u01(&roll) < beta:
                        cand_src.push_back(<i32>j)
                        cand_tgt.push_back(<i32>i)
                        cand_layer.push_back(<u8>CUSTOMER)

    return (vec_i32(&cand_src), vec_i32(&cand_tgt), vec_u8(&cand_layer),
            vec_i32(&cta_a), vec_i32(&cta_b))


def build_attachment_edges(order, ages_rel, long m, kernel_table, seed):
    """Age-assortative preferential attachment; see the reference kernel."""
    cdef long n = len(order)
    if n < 2:
        return (np.empty(0, dtype=np.int32), np.empty(0, dtype=np.int32))
    cdef i64[::1] order_v = np.ascontiguousarray(order, dtype=np.int64)
    cdef i64[::1] ages_v = np.ascontiguousarray(ages_rel, dtype=np.int64)
    cdef double[::1] kernel_v = np.ascontiguousarray(kernel_table, dtype=np.float64)
    cdef long nb = 0
    cdef long t
    for t in range(n):
        if ages_v[t] + 1 > nb:
            nb = ages_v[t] + 1
    cdef u64 s = <u64>seed

    cdef vector[i32] edge_a, edge_b
    cdef vector[vector[i32]] replists = vector[vector[i32]](nb)
    cdef vector[double] degsum = vector[double](nb, 0.0)
    cdef vector[i32] bucket_of = vector[i32](n)
    cdef vector[i32] picked

    cdef long m0 = m + 1 if m + 1 < n else n
    cdef long u, v, b, bv, d, chosen_b, cand, target, attempt, pi, ei
    cdef double total, r, acc
    cdef bint dup

    for t in range(n):
        bucket_of[t] = <i32>ages_v[t]
    for u in range(m0):
        for v in range(u + 1, m0):
            edge_a.push_back(<i32>u)
            edge_b.push_back(<i32>v)
            b = bucket_of[u]
            replists[b].push_back(<i32>u)
            degsum[b] += 1.0
            b = bucket_of[v]
            replists[b].push_back(<i32>v)
            degsum[b] += 1.0

    for v in range(m0, n):
        bv = bucket_of[v]
        picked.clear()
        for ei in range(m):
            total = 0.0
            for b in range(nb):
                if degsum[b] > 0.0:
                    d = bv - b if bv >= b else b - bv
                    total += kernel_v[d] * degsum[b]
            target = -1
            for attempt in range(64):
                r = u01(&s) * total
                acc = 0.0
                chosen_b = -1
                for b in range(nb):
                    if degsum[b] > 0.0:
                        d = bv - b if bv >= b else b - bv
                        acc += kernel_v[d] * degsum[b]
                        if r < acc:
                            chosen_b = b
                            break
                if chosen_b < 0:
                    chosen_b = nb - 1  # float roundoff on the last bucket
                    while replists[chosen_b].size() == 0:
                        chosen_b -= 1
                cand = replists[chosen_b][randbelow(&s, <long>replists[chosen_b].size())]
                dup = cand == v
                if not dup:
                    for pi in range(<long>picked.size()):
                        if picked[pi] == cand:
                            dup = True
                            break
                if not dup:
                    target = cand
                    break
            if target < 0:
                continue
            picked.push_back(<i32>target)
        for pi in range(<long>picked.size()):
            u = picked[pi]
            edge_a.push_back(<i32>u)
            edge_b.push_back(<i32>v)
            b = bucket_of[u]
            replists[b].push_back(<i32>u)
            degsum[b] += 1.0
            b = bucket_of[v]
            replists[b].push_back(<i32>v)
            degsum[b] += 1.0

    a_out = np.empty(edge_a.size(), dtype=np.int32)
    b_out = np.empty(edge_b.size(), dtype=np.int32)
    cdef i32[::1] a_view
    cdef i32[::1] b_view
    cdef size_t e
    if edge_a.size():
        a_view = a_out
        b_view = b_out
        for e in range(edge_a.size()):
            a_view[e] = <i32>order_v[edge_a.at(e)]
            b_view[e] = <i32>order_v[edge_b.at(e)]
    return a_out, b_out
