# distutils: language = c++
# distutils: libraries = gmp
# cython: language_level=3, boundscheck=False, wraparound=False
"""GMP-backed engine for equal-shares selection.

Exact twin of ``_mes_pure.MesEngine``: same constructor, same methods,
same results bit for bit (the backend equivalence tests enforce this).
All money arithmetic uses GMP rationals (``mpq_t``); Python objects only
appear at the call boundary and in optional ledger recording.

See ``_mes_pure`` for the algorithm notes; the laziness invariants and
the tie handling are identical by construction.
"""

from fractions import Fraction

from libc.stdlib cimport free, malloc
from libc.string cimport memcpy

cdef extern from "gmp.h":
    ctypedef struct __mpq_struct:
        pass
    ctypedef struct __mpz_struct:
        pass
    ctypedef __mpq_struct* mpq_ptr
    ctypedef __mpz_struct* mpz_ptr
    void mpq_init(mpq_ptr x)
    void mpq_clear(mpq_ptr x)
    void mpq_set(mpq_ptr dst, mpq_ptr src)
    void mpq_set_ui(mpq_ptr dst, unsigned long num, unsigned long den)
    void mpq_set_si(mpq_ptr dst, long num, unsigned long den)
    int mpq_set_str(mpq_ptr dst, const char* text, int base)
    void mpq_canonicalize(mpq_ptr x)
    void mpq_add(mpq_ptr dst, mpq_ptr a, mpq_ptr b)
    void mpq_sub(mpq_ptr dst, mpq_ptr a, mpq_ptr b)
    void mpq_mul(mpq_ptr dst, mpq_ptr a, mpq_ptr b)
    void mpq_div(mpq_ptr dst, mpq_ptr a, mpq_ptr b)
    int mpq_cmp(mpq_ptr a, mpq_ptr b)
    int mpq_sgn(mpq_ptr a)
    mpz_ptr mpq_numref(mpq_ptr x)
    mpz_ptr mpq_denref(mpq_ptr x)
    size_t mpz_sizeinbase(mpz_ptr x, int base)
    char* mpq_get_str(char* buf, int base, mpq_ptr x)

backend_name = "kernel"

STATUS_COMPLETE = "complete"
STATUS_NEXT_INFEASIBLE = "next_infeasible"
STATUS_EXHAUSTED = "exhausted"

DEF SORT_CUTOFF = 16

# compare modes for the index sort
DEF BY_BUDGET = 0
DEF BY_BOUND = 1


cdef class MesEngine:
    cdef int n, m
    cdef __mpq_struct* budget        # per voter
    cdef __mpq_struct* cost          # per project
    cdef __mpq_struct* lb            # affordability lower bound per project
    cdef unsigned char* alive
    cdef unsigned char* exact
    cdef unsigned char* selflag
    cdef int* tie_rank
    cdef int* appr_flat              # approver voter indices, all projects
    cdef long* appr_off              # m + 1 offsets into appr_flat
    cdef int* order_flat             # cached by-budget order, same offsets
    cdef int* ballot_flat            # approved project indices, all voters
    cdef long* ballot_off            # n + 1 offsets into ballot_flat
    cdef int* cand
    cdef int* selbuf
    cdef int* sort_tmp
    cdef __mpq_struct t0, t1, q_best, q_cap, q_total, q_rem
    cdef __mpq_struct q_selcost, q_share0, q_epsshare, q_borig, q_eps, q_sharenow
    cdef bint _mpq_ready

    def __cinit__(self, int n_voters, costs, approver_lists, tie_rank, ballot_lists):
        cdef int i, p, v
        cdef long off, total_a, total_b, max_k
        self.n = n_voters
        self.m = len(costs)
        if self.n < 1:
            raise ValueError("need at least one voter")
        if self.m < 1:
            raise ValueError("need at least one project")
        if len(approver_lists) != self.m or len(tie_rank) != self.m:
            raise ValueError("approver_lists and tie_rank must match costs")
        if len(ballot_lists) != self.n:
            raise ValueError("ballot_lists must have one entry per voter")
        for lst in approver_lists:
            for item in lst:
                v = item
                if v < 0 or v >= self.n:
                    raise ValueError(f"approver index {v} out of range")
        for lst in ballot_lists:
            for item in lst:
                p = item
                if p < 0 or p >= self.m:
                    raise ValueError(f"project index {p} out of range")

        total_a = 0
        max_k = 1
        for lst in approver_lists:
            total_a += len(lst)
            if len(lst) > max_k:
                max_k = len(lst)
        total_b = 0
        for lst in ballot_lists:
            total_b += len(lst)

        self.budget = <__mpq_struct*>malloc(self.n * sizeof(__mpq_struct))
        self.cost = <__mpq_struct*>malloc(self.m * sizeof(__mpq_struct))
        self.lb = <__mpq_struct*>malloc(self.m * sizeof(__mpq_struct))
        self.alive = <unsigned char*>malloc(self.m)
        self.exact = <unsigned char*>malloc(self.m)
        self.selflag = <unsigned char*>malloc(self.m)
        self.tie_rank = <int*>malloc(self.m * sizeof(int))
        self.appr_flat = <int*>malloc((total_a if total_a else 1) * sizeof(int))
        self.order_flat = <int*>malloc((total_a if total_a else 1) * sizeof(int))
        self.appr_off = <long*>malloc((self.m + 1) * sizeof(long))
        self.ballot_flat = <int*>malloc((total_b if total_b else 1) * sizeof(int))
        self.ballot_off = <long*>malloc((self.n + 1) * sizeof(long))
        self.cand = <int*>malloc(self.m * sizeof(int))
        self.selbuf = <int*>malloc(self.m * sizeof(int))
        self.sort_tmp = <int*>malloc((max_k if max_k > self.m else self.m) * sizeof(int))
        if (self.budget == NULL or self.cost == NULL or self.lb == NULL
                or self.alive == NULL or self.exact == NULL or self.selflag == NULL
                or self.tie_rank == NULL or self.appr_flat == NULL
                or self.order_flat == NULL or self.appr_off == NULL
                or self.ballot_flat == NULL or self.ballot_off == NULL
                or self.cand == NULL or self.selbuf == NULL or self.sort_tmp == NULL):
            raise MemoryError

        for i in range(self.n):
            mpq_init(&self.budget[i])
        for p in range(self.m):
            mpq_init(&self.cost[p])
            mpq_init(&self.lb[p])
        mpq_init(&self.t0)
        mpq_init(&self.t1)
        mpq_init(&self.q_best)
        mpq_init(&self.q_cap)
        mpq_init(&self.q_total)
        mpq_init(&self.q_rem)
        mpq_init(&self.q_selcost)
        mpq_init(&self.q_share0)
        mpq_init(&self.q_epsshare)
        mpq_init(&self.q_borig)
        mpq_init(&self.q_eps)
        mpq_init(&self.q_sharenow)
        self._mpq_ready = True

        for p in range(self.m):
            self._set_from_fraction(&self.cost[p], costs[p])
            if mpq_sgn(&self.cost[p]) <= 0:
                raise ValueError("project costs must be positive")
            self.tie_rank[p] = tie_rank[p]
        off = 0
        for p in range(self.m):
            self.appr_off[p] = off
            for item in approver_lists[p]:
                self.appr_flat[off] = item
                self.order_flat[off] = item
                off += 1
        self.appr_off[self.m] = off
        off = 0
        for i in range(self.n):
            self.ballot_off[i] = off
            for item in ballot_lists[i]:
                self.ballot_flat[off] = item
                off += 1
        self.ballot_off[self.n] = off

    def __dealloc__(self):
        cdef int i, p
        if self._mpq_ready:
            for i in range(self.n):
                mpq_clear(&self.budget[i])
            for p in range(self.m):
                mpq_clear(&self.cost[p])
                mpq_clear(&self.lb[p])
            mpq_clear(&self.t0)
            mpq_clear(&self.t1)
            mpq_clear(&self.q_best)
            mpq_clear(&self.q_cap)
            mpq_clear(&self.q_total)
            mpq_clear(&self.q_rem)
            mpq_clear(&self.q_selcost)
            mpq_clear(&self.q_share0)
            mpq_clear(&self.q_epsshare)
            mpq_clear(&self.q_borig)
            mpq_clear(&self.q_eps)
            mpq_clear(&self.q_sharenow)
        free(self.budget)
        free(self.cost)
        free(self.lb)
        free(self.alive)
        free(self.exact)
        free(self.selflag)
        free(self.tie_rank)
        free(self.appr_flat)
        free(self.order_flat)
        free(self.appr_off)
        free(self.ballot_flat)
        free(self.ballot_off)
        free(self.cand)
        free(self.selbuf)
        free(self.sort_tmp)

    cdef int _set_from_fraction(self, mpq_ptr target, value) except -1:
        text = f"{value.numerator}/{value.denominator}".encode("ascii")
        if mpq_set_str(target, text, 10) != 0:
            raise ValueError(f"not a rational: {value!r}")
        mpq_canonicalize(target)
        return 0

    cdef object _to_fraction(self, mpq_ptr value):
        cdef size_t size = (
            mpz_sizeinbase(mpq_numref(value), 10)
            + mpz_sizeinbase(mpq_denref(value), 10)
            + 3
        )
        cdef char* buf = <char*>malloc(size)
        if buf == NULL:
            raise MemoryError
        try:
            mpq_get_str(buf, 10, value)
            text = (<bytes>buf).decode("ascii")
        finally:
            free(buf)
        return Fraction(text)

    cdef inline int _cmp(self, int a, int b, int mode) noexcept:
        cdef int c
        if mode == BY_BUDGET:
            return mpq_cmp(&self.budget[a], &self.budget[b])
        c = mpq_cmp(&self.lb[a], &self.lb[b])
        if c != 0:
            return c
        return self.tie_rank[a] - self.tie_rank[b]

    cdef void _msort(self, int* arr, int* tmp, int lo, int hi, int mode) noexcept:
        # stable mergesort on indices; insertion sort below the cutoff
        cdef int i, j, k, mid, key
        if hi - lo <= SORT_CUTOFF:
            for i in range(lo + 1, hi):
                key = arr[i]
                j = i - 1
                while j >= lo and self._cmp(arr[j], key, mode) > 0:
                    arr[j + 1] = arr[j]
                    j -= 1
                arr[j + 1] = key
            return
        mid = (lo + hi) // 2
        self._msort(arr, tmp, lo, mid, mode)
        self._msort(arr, tmp, mid, hi, mode)
        i = lo
        j = mid
        k = lo
        while i < mid and j < hi:
            if self._cmp(arr[j], arr[i], mode) < 0:
                tmp[k] = arr[j]
                j += 1
            else:
                tmp[k] = arr[i]
                i += 1
            k += 1
        while i < mid:
            tmp[k] = arr[i]
            i += 1
            k += 1
        while j < hi:
            tmp[k] = arr[j]
            j += 1
            k += 1
        memcpy(arr + lo, tmp + lo, (hi - lo) * sizeof(int))

    cdef void _reset(self, mpq_ptr share) noexcept:
        cdef int i, p
        cdef long k
        for i in range(self.n):
            mpq_set(&self.budget[i], share)
        mpq_set_ui(&self.q_selcost, 0, 1)
        for p in range(self.m):
            self.selflag[p] = 0
            self.alive[p] = 0
            self.exact[p] = 0
            k = self.appr_off[p + 1] - self.appr_off[p]
            if k == 0:
                continue
            # equal budgets: affordable iff k * share covers the cost,
            # and then the factor is exactly 1/k
            mpq_set_ui(&self.t0, <unsigned long>k, 1)
            mpq_mul(&self.t0, &self.t0, share)
            if mpq_cmp(&self.t0, &self.cost[p]) >= 0:
                self.alive[p] = 1
                self.exact[p] = 1
                mpq_set_ui(&self.lb[p], 1, <unsigned long>k)

    cdef bint _waterfill(self, int p) noexcept:
        cdef long start = self.appr_off[p]
        cdef int k = <int>(self.appr_off[p + 1] - start)
        cdef int* order = self.order_flat + start
        cdef int j, v
        cdef bint found = False
        self._msort(order, self.sort_tmp, 0, k, BY_BUDGET)
        mpq_set_ui(&self.q_total, 0, 1)
        for j in range(k):
            mpq_add(&self.q_total, &self.q_total, &self.budget[order[j]])
        if mpq_cmp(&self.q_total, &self.cost[p]) < 0:
            self.alive[p] = 0
            return False
        mpq_set(&self.q_rem, &self.cost[p])
        for j in range(k):
            v = order[j]
            mpq_set_ui(&self.t0, <unsigned long>(k - j), 1)
            mpq_div(&self.q_cap, &self.q_rem, &self.t0)
            if mpq_cmp(&self.budget[v], &self.q_cap) < 0:
                mpq_sub(&self.q_rem, &self.q_rem, &self.budget[v])
            else:
                found = True
                break
        if not found:
            mpq_set(&self.q_cap, &self.budget[order[k - 1]])
        mpq_div(&self.lb[p], &self.q_cap, &self.cost[p])
        self.exact[p] = 1
        return True

    cdef int _select_core(self, bint record, object rec_factors, object rec_payments) except -1:
        cdef int nsel = 0, cnt, ci, p, best, v, c
        cdef long j, bj
        while True:
            cnt = 0
            for p in range(self.m):
                if self.alive[p]:
                    self.cand[cnt] = p
                    cnt += 1
            if cnt == 0:
                break
            self._msort(self.cand, self.sort_tmp, 0, cnt, BY_BOUND)
            best = -1
            for ci in range(cnt):
                p = self.cand[ci]
                if not self.alive[p]:
                    continue
                if best >= 0 and mpq_cmp(&self.lb[p], &self.q_best) > 0:
                    break
                if not self.exact[p]:
                    if not self._waterfill(p):
                        continue
                if best < 0:
                    best = p
                    mpq_set(&self.q_best, &self.lb[p])
                else:
                    c = mpq_cmp(&self.lb[p], &self.q_best)
                    if c < 0 or (c == 0 and self.tie_rank[p] < self.tie_rank[best]):
                        best = p
                        mpq_set(&self.q_best, &self.lb[p])
            if best < 0:
                break
            self.alive[best] = 0
            self.selflag[best] = 1
            mpq_mul(&self.q_cap, &self.q_best, &self.cost[best])
            pays = [] if record else None
            for j in range(self.appr_off[best], self.appr_off[best + 1]):
                v = self.appr_flat[j]
                if mpq_sgn(&self.budget[v]) == 0:
                    continue
                if mpq_cmp(&self.budget[v], &self.q_cap) < 0:
                    mpq_set(&self.t1, &self.budget[v])
                    mpq_set_ui(&self.budget[v], 0, 1)
                else:
                    mpq_set(&self.t1, &self.q_cap)
                    mpq_sub(&self.budget[v], &self.budget[v], &self.q_cap)
                for bj in range(self.ballot_off[v], self.ballot_off[v + 1]):
                    self.exact[self.ballot_flat[bj]] = 0
                if record:
                    pays.append((v, self._to_fraction(&self.t1)))
            mpq_add(&self.q_selcost, &self.q_selcost, &self.cost[best])
            self.selbuf[nsel] = best
            nsel += 1
            if record:
                rec_factors.append(self._to_fraction(&self.q_best))
                rec_payments.append(pays)
        return nsel

    def run(self, share, bint want_ledger=False):
        """Select at per-voter budget ``share`` (a Fraction).

        Returns (selected, factors, payments, final_budgets); the last
        three are None unless ``want_ledger``.
        """
        cdef int nsel, i
        self._set_from_fraction(&self.q_share0, share)
        factors = []
        payments = []
        self._reset(&self.q_share0)
        nsel = self._select_core(want_ledger, factors, payments)
        selected = [self.selbuf[i] for i in range(nsel)]
        if not want_ledger:
            return selected, None, None, None
        budgets = [self._to_fraction(&self.budget[i]) for i in range(self.n)]
        return selected, factors, payments, budgets

    def run_star(self, budget, epsilon, long max_rounds):
        """Rerun selection at growing shares; see the pure twin for the
        exact semantics of the returned
        (selected, chosen_round, rounds_examined, status)."""
        cdef long r, chosen
        cdef int nsel, i, p
        cdef bint complete
        if max_rounds < 1:
            raise ValueError("max_rounds must be at least 1")
        self._set_from_fraction(&self.q_borig, budget)
        self._set_from_fraction(&self.q_eps, epsilon)
        mpq_set_ui(&self.t1, <unsigned long>self.n, 1)
        mpq_div(&self.q_share0, &self.q_borig, &self.t1)
        mpq_div(&self.q_epsshare, &self.q_eps, &self.t1)
        previous = []
        for r in range(max_rounds):
            # dedicated register: _reset scratches t0, so the share must
            # not live there
            mpq_set_si(&self.q_sharenow, r, 1)
            mpq_mul(&self.q_sharenow, &self.q_sharenow, &self.q_epsshare)
            mpq_add(&self.q_sharenow, &self.q_sharenow, &self.q_share0)
            self._reset(&self.q_sharenow)
            nsel = self._select_core(False, None, None)
            if mpq_cmp(&self.q_selcost, &self.q_borig) > 0:
                chosen = r - 1 if r > 0 else 0
                return previous, chosen, r + 1, STATUS_NEXT_INFEASIBLE
            mpq_sub(&self.t1, &self.q_borig, &self.q_selcost)
            complete = True
            for p in range(self.m):
                if not self.selflag[p] and mpq_cmp(&self.cost[p], &self.t1) <= 0:
                    complete = False
                    break
            current = [self.selbuf[i] for i in range(nsel)]
            if complete:
                return current, r, r + 1, STATUS_COMPLETE
            previous = current
        return previous, max_rounds - 1, max_rounds, STATUS_EXHAUSTED
