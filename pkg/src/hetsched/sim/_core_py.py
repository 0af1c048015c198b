"""Pure-Python event-loop kernel; reference twin of the compiled kernel.

Both implementations must perform the same floating-point operations in the
same order so that traces are bit-identical whichever kernel is loaded. Every
event at the current timestamp is applied before any dispatch decision, so
ties in the event heap never influence the schedule.
"""

from heapq import heapify, heappop, heappush

import numpy as np

_RELEASE, _QUANT_DONE, _EXEC_DONE = 0, 1, 2


def run(proc, exec_dur, quant_dur, release, rank, task_of_rank,
        dep_n, succ_ptr, succ_dst, succ_delay, n_procs):
    """Simulate non-preemptive two-lane workers over a static task system.

    proc, exec_dur, quant_dur, release, rank: one entry per task instance.
    dep_n[i] counts dependency arrivals task i waits for (its release event
    is counted separately). succ_* is a CSR map from a finished task to the
    (dependent task, communication delay) pairs it feeds.
    Returns (ready, start, finish) arrays in the same task order.
    """
    n = len(proc)
    proc = proc.tolist()
    exec_dur = exec_dur.tolist()
    quant_dur = quant_dur.tolist()
    release_l = release.tolist()
    rank_l = rank.tolist()
    task_of_rank_l = task_of_rank.tolist()
    succ_ptr_l = succ_ptr.tolist()
    succ_dst_l = succ_dst.tolist()
    succ_delay_l = succ_delay.tolist()

    ready = [0.0] * n
    start = [0.0] * n
    finish = [0.0] * n
    need = [int(dep_n[i]) + 1 for i in range(n)]

    events = [(release_l[i], _RELEASE, i) for i in range(n)]
    heapify(events)
    exec_busy = [False] * n_procs
    quant_busy = [False] * n_procs
    pend_exec = [[] for _ in range(n_procs)]
    pend_quant = [[] for _ in range(n_procs)]

    while events:
        t = events[0][0]
        while events and events[0][0] == t:
            _, kind, x = heappop(events)
            if kind == _RELEASE:
                need[x] -= 1
                if need[x] == 0:
                    ready[x] = t
                    if quant_dur[x] > 0.0:
                        heappush(pend_quant[proc[x]], rank_l[x])
                    else:
                        heappush(pend_exec[proc[x]], rank_l[x])
            elif kind == _QUANT_DONE:
                quant_busy[proc[x]] = False
                heappush(pend_exec[proc[x]], rank_l[x])
            else:
                finish[x] = t
                exec_busy[proc[x]] = False
                for k in range(succ_ptr_l[x], succ_ptr_l[x + 1]):
                    heappush(events, (t + succ_delay_l[k], _RELEASE, succ_dst_l[k]))
        for p in range(n_procs):
            if not quant_busy[p] and pend_quant[p]:
                x = task_of_rank_l[heappop(pend_quant[p])]
                quant_busy[p] = True
                heappush(events, (t + quant_dur[x], _QUANT_DONE, x))
            if not exec_busy[p] and pend_exec[p]:
                x = task_of_rank_l[heappop(pend_exec[p])]
                start[x] = t
                exec_busy[p] = True
                heappush(events, (t + exec_dur[x], _EXEC_DONE, x))

    return np.asarray(ready), np.asarray(start), np.asarray(finish)
