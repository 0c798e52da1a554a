"""Numba kernels for the hot loops: tree growth, subtree sizes, scores.

Labels are 1-based arrival order; index 0 of every array is unused padding.
The in-kernel RNG is splitmix64, seeded per call, so trees are reproducible
bit for bit across platforms and process counts.
"""

from __future__ import annotations

import math

import numpy as np
from numba import int64, njit, uint64

# slot kinds for the glued-host kernel
_FRESH_SMALL = 0  # infects a fresh vertex in the d-regular half
_FRESH_BIG = 1    # infects a fresh vertex in the D-regular half
_PATH = 2         # infects the next vertex on the source-to-bridge path
_BRIDGE = 3       # infects the far bridge endpoint


@njit(cache=True, inline="always")
def _mix(state):
    state = state + uint64(0x9E3779B97F4A7C15)
    z = state
    z = (z ^ (z >> uint64(30))) * uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> uint64(27))) * uint64(0x94D049BB133111EB)
    z = z ^ (z >> uint64(31))
    return state, z


@njit(cache=True, inline="always")
def _rand_below(state, m):
    # floor(u53 * m); bias is O(m * 2**-53), negligible at feasible m
    state, z = _mix(state)
    return state, int64((z >> uint64(11)) * uint64(m) >> uint64(53))


@njit(cache=True)
def grow_regular(n, d, seed):
    """Grow an infection tree on the d-regular host; returns parent[1..n].

    Boundary edges are kept as an owner list with swap removal, so each
    step is O(1) draws plus d-1 appended slots for the new vertex.
    """
    parent = np.zeros(n + 1, dtype=np.int64)
    if n <= 1:
        return parent
    owner = np.empty(d + (n - 1) * (d - 1), dtype=np.int64)
    for t in range(d):
        owner[t] = 1
    m = d
    state = uint64(seed)
    for k in range(2, n + 1):
        state, j = _rand_below(state, m)
        parent[k] = owner[j]
        m -= 1
        owner[j] = owner[m]
        for t in range(d - 1):
            owner[m + t] = k
        m += d - 1
    return parent


@njit(cache=True)
def grow_glued(n, d, big_d, start_side, start_dist, seed):
    """Grow an infection tree on two regular trees joined by one bridge edge.

    start_side 0 places the source in the d-half, 1 in the D-half;
    start_dist is the host distance from the source to the bridge endpoint
    of its own half.  Returns (parent, side, near_label, far_label) where
    near/far are the bridge endpoints in the source half and the opposite
    half (0 while uninfected).
    """
    parent = np.zeros(n + 1, dtype=np.int64)
    side = np.zeros(n + 1, dtype=np.uint8)
    cap = (big_d + 1) + max(n - 1, 1) * big_d
    owner = np.empty(cap, dtype=np.int64)
    kind = np.empty(cap, dtype=np.uint8)
    deg_small = d
    deg_big = big_d
    start_deg = deg_small if start_side == 0 else deg_big
    side[1] = start_side
    near = 0
    far = 0
    m = 0
    path_remaining = start_dist
    if start_dist == 0:
        near = 1
        for t in range(start_deg):
            owner[m + t] = 1
            kind[m + t] = _FRESH_SMALL if start_side == 0 else _FRESH_BIG
        m += start_deg
        owner[m] = 1
        kind[m] = _BRIDGE
        m += 1
    else:
        for t in range(start_deg - 1):
            owner[m + t] = 1
            kind[m + t] = _FRESH_SMALL if start_side == 0 else _FRESH_BIG
        m += start_deg - 1
        owner[m] = 1
        kind[m] = _PATH
        m += 1
    state = uint64(seed)
    for k in range(2, n + 1):
        state, j = _rand_below(state, m)
        p = owner[j]
        kd = kind[j]
        m -= 1
        owner[j] = owner[m]
        kind[j] = kind[m]
        parent[k] = p
        if kd == _FRESH_SMALL:
            side[k] = 0
            for t in range(deg_small - 1):
                owner[m + t] = k
                kind[m + t] = _FRESH_SMALL
            m += deg_small - 1
        elif kd == _FRESH_BIG:
            side[k] = 1
            for t in range(deg_big - 1):
                owner[m + t] = k
                kind[m + t] = _FRESH_BIG
            m += deg_big - 1
        elif kd == _PATH:
            side[k] = start_side
            fresh = _FRESH_SMALL if start_side == 0 else _FRESH_BIG
            path_remaining -= 1
            if path_remaining == 0:
                near = k
                for t in range(start_deg - 1):
                    owner[m + t] = k
                    kind[m + t] = fresh
                m += start_deg - 1
                owner[m] = k
                kind[m] = _BRIDGE
                m += 1
            else:
                for t in range(start_deg - 2):
                    owner[m + t] = k
                    kind[m + t] = fresh
                m += start_deg - 2
                owner[m] = k
                kind[m] = _PATH
                m += 1
        else:  # bridge crossed
            far = k
            if start_side == 0:
                side[k] = 1
                for t in range(deg_big):
                    owner[m + t] = k
                    kind[m + t] = _FRESH_BIG
                m += deg_big
            else:
                side[k] = 0
                for t in range(deg_small):
                    owner[m + t] = k
                    kind[m + t] = _FRESH_SMALL
                m += deg_small
    return parent, side, near, far


@njit(cache=True)
def down_sizes(parent):
    """Subtree sizes under the rooting at label 1 (one reverse pass)."""
    n = parent.shape[0] - 1
    down = np.ones(n + 1, dtype=np.int64)
    down[0] = 0
    for k in range(n, 1, -1):
        down[parent[k]] += down[k]
    return down


@njit(cache=True)
def score_arrays(parent, down):
    """log subtree product, log ordering count, and max-subtree size per node.

    The two log scores are accumulated by separate rerooting recursions so
    their defining identity (log R + log phi + log n = log n!) is a genuine
    floating-point consistency check rather than true by construction.
    """
    n = parent.shape[0] - 1
    log_phi = np.zeros(n + 1)
    log_r = np.zeros(n + 1)
    psi = np.zeros(n + 1, dtype=np.int64)
    if n <= 1:
        return log_phi, log_r, psi
    child_max = np.zeros(n + 1, dtype=np.int64)
    acc = 0.0
    for k in range(2, n + 1):
        acc += math.log(down[k])
        if down[k] > child_max[parent[k]]:
            child_max[parent[k]] = down[k]
    log_phi[1] = acc
    acc2 = 0.0
    for k in range(n, 1, -1):
        acc2 += math.log(down[k])
    log_r[1] = math.lgamma(n + 1.0) - math.log(n) - acc2
    for k in range(2, n + 1):
        up = math.log(n - down[k])
        dn = math.log(down[k])
        log_phi[k] = log_phi[parent[k]] + up - dn
        log_r[k] = log_r[parent[k]] + dn - up
        rest = n - down[k]
        psi[k] = rest if rest > child_max[k] else child_max[k]
    psi[1] = child_max[1]
    return log_phi, log_r, psi


@njit(cache=True)
def component_labels(parent, k_first):
    """Component representative (a label in 1..K) after cutting all edges
    between the first K arrivals."""
    n = parent.shape[0] - 1
    comp = np.empty(n + 1, dtype=np.int64)
    comp[0] = 0
    for i in range(1, min(k_first, n) + 1):
        comp[i] = i
    for k in range(k_first + 1, n + 1):
        comp[k] = comp[parent[k]]
    return comp


@njit(cache=True)
def depths(parent):
    n = parent.shape[0] - 1
    dep = np.zeros(n + 1, dtype=np.int64)
    for k in range(2, n + 1):
        dep[k] = dep[parent[k]] + 1
    return dep


@njit(cache=True)
def monotone_suspects(parent, log_phi, tol):
    """Float screen for the source-path monotonicity property.

    Marks labels v with log_phi[v] <= log_phi[1] + tol that have a strict
    ancestor u != 1 with log_phi[u] > log_phi[1] + tol.  Suspects must be
    re-verified in exact integer arithmetic before being called violations.
    """
    n = parent.shape[0] - 1
    thresh = log_phi[1] + tol
    bad_above = np.zeros(n + 1, dtype=np.uint8)
    suspect = np.zeros(n + 1, dtype=np.uint8)
    for k in range(2, n + 1):
        p = parent[k]
        bad = bad_above[p]
        if p != 1 and log_phi[p] > thresh:
            bad = 1
        bad_above[k] = bad
        if bad and log_phi[k] <= thresh:
            suspect[k] = 1
    return suspect
