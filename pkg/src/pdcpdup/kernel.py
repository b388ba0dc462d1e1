"""Compiled TTI-stepped replay of the RLC/PDCP user plane for Monte Carlo campaigns.

Per bearer it reproduces, tick for tick, what :class:`pdcpdup.engine.EventSimulation`
does with the event queue: arrivals, then ACK/NACK of the previous TTI, then up to
``capacity`` transmissions per leg (due retransmissions oldest first, then new
PDUs). Both paths read attempt outcomes from the same precomputed table, so for
equal inputs they produce identical delivery times and counters.
"""

from __future__ import annotations

import numpy as np
from numba import njit

QUEUED, IN_FLIGHT, PENDING_RETX, DONE = 1, 2, 3, 4
EPS = 1e-9


@njit(cache=True)
def replay(n_legs, ready_ttis, deliver_off, notify_delay, success, tti, retx_ttis, max_retx,
           capacity, buffer_limit, cross_leg, max_ticks):
    n_bearers, _, n_packets, _ = success.shape
    inf = np.inf
    delivery = np.full((n_bearers, n_packets), inf)
    dropped_flag = np.zeros((n_bearers, 2, n_packets), np.bool_)
    # attempts, retx, redundant_retx, avoided_retx, dropped, lost
    counters = np.zeros((n_bearers, 2, 6), np.int64)
    ticks = np.zeros(n_bearers, np.int64)

    state = np.zeros((2, n_packets), np.int8)
    k = np.zeros((2, n_packets), np.int64)
    due = np.zeros((2, n_packets), np.int64)
    acked_t = np.empty((2, n_packets))
    notify_t = np.empty((2, n_packets))
    infl = np.zeros((2, capacity), np.int64)
    n_infl = np.zeros(2, np.int64)
    next_arr = np.zeros(2, np.int64)
    next_new = np.zeros(2, np.int64)
    queued = np.zeros(2, np.int64)
    pend = np.zeros(2, np.int64)
    low = np.zeros(2, np.int64)

    for b in range(n_bearers):
        L = n_legs[b]
        state[:, :] = 0
        k[:, :] = 0
        due[:, :] = 0
        acked_t[:, :] = inf
        notify_t[:, :] = inf
        n_infl[:] = 0
        next_arr[:] = 0
        next_new[:] = 0
        queued[:] = 0
        pend[:] = 0
        low[:] = 0
        n = 0
        while True:
            if n > max_ticks:
                ticks[b] = -1
                break
            t = n * tti
            for l in range(L):
                while next_arr[l] < n_packets and next_arr[l] + ready_ttis[b, l] <= n:
                    i = next_arr[l]
                    if queued[l] + pend[l] >= buffer_limit:
                        state[l, i] = DONE
                        dropped_flag[b, l, i] = True
                        counters[b, l, 4] += 1
                    else:
                        state[l, i] = QUEUED
                        queued[l] += 1
                    next_arr[l] += 1
            for l in range(L):
                for j in range(n_infl[l]):
                    i = infl[l, j]
                    kk = k[l, i]
                    if success[b, l, i, kk]:
                        state[l, i] = DONE
                        acked_t[l, i] = t
                        d = t + deliver_off[b, l]
                        if d < delivery[b, i]:
                            delivery[b, i] = d
                        if L == 2 and cross_leg:
                            nt = t + notify_delay[b]
                            if nt < notify_t[1 - l, i]:
                                notify_t[1 - l, i] = nt
                    elif kk < max_retx:
                        state[l, i] = PENDING_RETX
                        due[l, i] = (n - 1) + retx_ttis
                        pend[l] += 1
                    else:
                        state[l, i] = DONE
                        counters[b, l, 5] += 1
                n_infl[l] = 0
            busy = False
            for l in range(L):
                sent = 0
                i = low[l]
                while i < next_new[l]:
                    if state[l, i] == PENDING_RETX and due[l, i] <= n:
                        if cross_leg and notify_t[l, i] <= t + EPS:
                            state[l, i] = DONE
                            pend[l] -= 1
                            counters[b, l, 3] += 1
                        else:
                            if sent >= capacity:
                                break
                            k[l, i] += 1
                            state[l, i] = IN_FLIGHT
                            pend[l] -= 1
                            counters[b, l, 1] += 1
                            if L == 2 and acked_t[1 - l, i] <= t + EPS:
                                counters[b, l, 2] += 1
                            infl[l, sent] = i
                            sent += 1
                    i += 1
                while low[l] < next_new[l] and state[l, low[l]] == DONE:
                    low[l] += 1
                while sent < capacity and queued[l] > 0:
                    i = next_new[l]
                    while state[l, i] != QUEUED:
                        i += 1
                    state[l, i] = IN_FLIGHT
                    k[l, i] = 0
                    queued[l] -= 1
                    infl[l, sent] = i
                    sent += 1
                    next_new[l] = i + 1
                counters[b, l, 0] += sent
                n_infl[l] = sent
                if sent > 0 or pend[l] > 0 or queued[l] > 0 or next_arr[l] < n_packets:
                    busy = True
            if not busy:
                ticks[b] = n
                break
            n += 1
    return delivery, dropped_flag, counters, ticks


def run_replay(n_legs, ready_ttis, deliver_off, notify_delay, success, *, tti, retx_ttis, max_retx,
               capacity, buffer_limit, cross_leg, max_ticks):
    return replay(
        np.ascontiguousarray(n_legs, np.int64),
        np.ascontiguousarray(ready_ttis, np.int64),
        np.ascontiguousarray(deliver_off, np.float64),
        np.ascontiguousarray(notify_delay, np.float64),
        np.ascontiguousarray(success, np.bool_),
        float(tti), int(retx_ttis), int(max_retx), int(capacity), int(buffer_limit), bool(cross_leg),
        int(max_ticks),
    )
