# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled event-loop kernel; hot path of candidate evaluation.

Must stay semantically and float-for-float identical to _core_py.run: the
same additions in the same order, all events at one timestamp applied before
dispatching, quant lane offered work before the exec lane of each processor.
"""

from libc.stdlib cimport free, malloc

import numpy as np

cdef int _RELEASE = 0
cdef int _QUANT_DONE = 1
cdef int _EXEC_DONE = 2


cdef struct EventHeap:
    double* time
    int* kind
    Py_ssize_t* task
    Py_ssize_t size


cdef inline void ev_push(EventHeap* h, double t, int kind, Py_ssize_t task) noexcept nogil:
    cdef Py_ssize_t i = h.size
    cdef Py_ssize_t parent
    h.size += 1
    while i > 0:
        parent = (i - 1) >> 1
        if h.time[parent] <= t:
            break
        h.time[i] = h.time[parent]
        h.kind[i] = h.kind[parent]
        h.task[i] = h.task[parent]
        i = parent
    h.time[i] = t
    h.kind[i] = kind
    h.task[i] = task


cdef inline void ev_pop(EventHeap* h, double* t, int* kind, Py_ssize_t* task) noexcept nogil:
    t[0] = h.time[0]
    kind[0] = h.kind[0]
    task[0] = h.task[0]
    h.size -= 1
    cdef double lt = h.time[h.size]
    cdef int lk = h.kind[h.size]
    cdef Py_ssize_t lx = h.task[h.size]
    cdef Py_ssize_t i = 0, child
    while True:
        child = 2 * i + 1
        if child >= h.size:
            break
        if child + 1 < h.size and h.time[child + 1] < h.time[child]:
            child += 1
        if h.time[child] >= lt:
            break
        h.time[i] = h.time[child]
        h.kind[i] = h.kind[child]
        h.task[i] = h.task[child]
        i = child
    if h.size > 0:
        h.time[i] = lt
        h.kind[i] = lk
        h.task[i] = lx


cdef inline void rank_push(Py_ssize_t* heap, Py_ssize_t* size, Py_ssize_t rank) noexcept nogil:
    cdef Py_ssize_t i = size[0]
    cdef Py_ssize_t parent
    size[0] += 1
    while i > 0:
        parent = (i - 1) >> 1
        if heap[parent] <= rank:
            break
        heap[i] = heap[parent]
        i = parent
    heap[i] = rank


cdef inline Py_ssize_t rank_pop(Py_ssize_t* heap, Py_ssize_t* size) noexcept nogil:
    cdef Py_ssize_t top = heap[0]
    size[0] -= 1
    cdef Py_ssize_t last = heap[size[0]]
    cdef Py_ssize_t i = 0, child
    while True:
        child = 2 * i + 1
        if child >= size[0]:
            break
        if child + 1 < size[0] and heap[child + 1] < heap[child]:
            child += 1
        if heap[child] >= last:
            break
        heap[i] = heap[child]
        i = child
    if size[0] > 0:
        heap[i] = last
    return top


def run(const long long[::1] proc, const double[::1] exec_dur,
        const double[::1] quant_dur, const double[::1] release,
        const long long[::1] rank, const long long[::1] task_of_rank,
        const long long[::1] dep_n, const long long[::1] succ_ptr,
        const long long[::1] succ_dst, const double[::1] succ_delay,
        Py_ssize_t n_procs):
    cdef Py_ssize_t n = proc.shape[0]
    cdef Py_ssize_t n_succ = succ_dst.shape[0]

    ready_arr = np.zeros(n, dtype=np.float64)
    start_arr = np.zeros(n, dtype=np.float64)
    finish_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] ready = ready_arr
    cdef double[::1] start = start_arr
    cdef double[::1] finish = finish_arr

    cdef Py_ssize_t cap = 3 * n + n_succ + 1
    cdef EventHeap heap
    heap.time = <double*> malloc(cap * sizeof(double))
    heap.kind = <int*> malloc(cap * sizeof(int))
    heap.task = <Py_ssize_t*> malloc(cap * sizeof(Py_ssize_t))
    heap.size = 0
    cdef Py_ssize_t* need = <Py_ssize_t*> malloc(n * sizeof(Py_ssize_t))
    cdef Py_ssize_t* pend_e = <Py_ssize_t*> malloc(n_procs * n * sizeof(Py_ssize_t))
    cdef Py_ssize_t* pend_q = <Py_ssize_t*> malloc(n_procs * n * sizeof(Py_ssize_t))
    cdef Py_ssize_t* pend_e_n = <Py_ssize_t*> malloc(n_procs * sizeof(Py_ssize_t))
    cdef Py_ssize_t* pend_q_n = <Py_ssize_t*> malloc(n_procs * sizeof(Py_ssize_t))
    cdef char* exec_busy = <char*> malloc(n_procs)
    cdef char* quant_busy = <char*> malloc(n_procs)
    if (heap.time == NULL or heap.kind == NULL or heap.task == NULL or need == NULL
            or pend_e == NULL or pend_q == NULL or pend_e_n == NULL
            or pend_q_n == NULL or exec_busy == NULL or quant_busy == NULL):
        free(heap.time); free(heap.kind); free(heap.task); free(need)
        free(pend_e); free(pend_q); free(pend_e_n); free(pend_q_n)
        free(exec_busy); free(quant_busy)
        raise MemoryError()

    cdef Py_ssize_t i, x, p, k
    cdef double t, f
    cdef int kind
    with nogil:
        for p in range(n_procs):
            pend_e_n[p] = 0
            pend_q_n[p] = 0
            exec_busy[p] = 0
            quant_busy[p] = 0
        for i in range(n):
            need[i] = dep_n[i] + 1
            ev_push(&heap, release[i], _RELEASE, i)

        while heap.size > 0:
            t = heap.time[0]
            while heap.size > 0 and heap.time[0] == t:
                ev_pop(&heap, &t, &kind, &x)
                if kind == _RELEASE:
                    need[x] -= 1
                    if need[x] == 0:
                        ready[x] = t
                        if quant_dur[x] > 0.0:
                            rank_push(pend_q + proc[x] * n, pend_q_n + proc[x], rank[x])
                        else:
                            rank_push(pend_e + proc[x] * n, pend_e_n + proc[x], rank[x])
                elif kind == _QUANT_DONE:
                    quant_busy[proc[x]] = 0
                    rank_push(pend_e + proc[x] * n, pend_e_n + proc[x], rank[x])
                else:
                    finish[x] = t
                    exec_busy[proc[x]] = 0
                    for k in range(succ_ptr[x], succ_ptr[x + 1]):
                        ev_push(&heap, t + succ_delay[k], _RELEASE, succ_dst[k])
            for p in range(n_procs):
                if quant_busy[p] == 0 and pend_q_n[p] > 0:
                    x = task_of_rank[rank_pop(pend_q + p * n, pend_q_n + p)]
                    quant_busy[p] = 1
                    ev_push(&heap, t + quant_dur[x], _QUANT_DONE, x)
                if exec_busy[p] == 0 and pend_e_n[p] > 0:
                    x = task_of_rank[rank_pop(pend_e + p * n, pend_e_n + p)]
                    start[x] = t
                    exec_busy[p] = 1
                    f = t + exec_dur[x]
                    ev_push(&heap, f, _EXEC_DONE, x)

    free(heap.time); free(heap.kind); free(heap.task); free(need)
    free(pend_e); free(pend_q); free(pend_e_n); free(pend_q_n)
    free(exec_busy); free(quant_busy)
    return ready_arr, start_arr, finish_arr
