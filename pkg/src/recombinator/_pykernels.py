"""Pure numpy/python fallbacks for the compiled kernels.

Same signatures and distributions as ``_ckernels``; the random streams are
drawn in a different order, so outputs match statistically, not bitwise.
"""

from __future__ import annotations

import numpy as np

_EVENT_CHUNK = 1 << 14


def _draw_ks(rng: np.random.Generator, t: float, count: int) -> np.ndarray:
    return rng.geometric(np.exp(-t), size=count).astype(np.int64)


def tree_omega_batch(t, r, count, seed):
    rng = np.random.default_rng(np.random.PCG64(seed))
    ks = _draw_ks(rng, t, count)
    omegas = np.empty(count, dtype=np.float64)
    x = r / 2.0
    for k in np.unique(ks):
        rows = np.nonzero(ks == k)[0]
        g = len(rows)
        depths = np.zeros((g, k), dtype=np.int64)
        ar = np.arange(g)
        for s in range(1, k):
            idx = rng.integers(0, s, size=g)
            d = depths[ar, idx] + 1
            depths[ar, idx] = d
            depths[:, s] = d
        if x == 0.0:
            omegas[rows] = (depths == 0).sum(axis=1)
        else:
            omegas[rows] = (x ** depths).sum(axis=1)
    return ks, omegas


def _draw_masks(rng, masks, cdf, n_sites, size):
    if masks is None:
        return rng.integers(0, 1 << n_sites, size=size, dtype=np.int64)
    idx = np.searchsorted(cdf, rng.random(size), side="right")
    return masks[np.minimum(idx, len(masks) - 1)]


def sample_pt_batch(t, cdf, contrib, nbar_masks, nbar_cdf, n_sites, count, seed):
    rng = np.random.default_rng(np.random.PCG64(seed))
    ks = _draw_ks(rng, t, count)
    full = (1 << n_sites) - 1
    out = np.empty(count, dtype=np.int64)
    ncfg = len(cdf)
    for k in np.unique(ks):
        rows = np.nonzero(ks == k)[0]
        g = len(rows)
        ar = np.arange(g)
        blocks = np.zeros((g, k), dtype=np.int64)
        blocks[:, 0] = full
        for s in range(1, k):
            idx = rng.integers(0, s, size=g)
            a = _draw_masks(rng, nbar_masks, nbar_cdf, n_sites, g)
            b = blocks[ar, idx]
            blocks[ar, idx] = b & a
            blocks[:, s] = b & (full ^ a)
        draws = np.minimum(
            np.searchsorted(cdf, rng.random((g, k)), side="right"), ncfg - 1)
        code = np.zeros(g, dtype=np.int64)
        for site in range(n_sites):
            owner = ((blocks >> site) & 1).argmax(axis=1)
            code += contrib[site, draws[ar, owner]]
        out[rows] = code
    return out


def grt_simulate(matrix, t_end, snap_times, nu_masks, nu_cdf, n_sites, seed):
    rng = np.random.default_rng(np.random.PCG64(seed))
    N, n = matrix.shape
    S = len(snap_times)
    snaps = np.empty((S, N, n), dtype=np.int32)
    nevents = 0
    si = 0
    if N < 2:
        snaps[:] = matrix
        return snaps, 0
    rate = (N - 1) / 2.0
    site_lists: dict[int, tuple] = {}
    tnow = 0.0
    done = False
    while not done:
        dts = rng.exponential(1.0 / rate, size=_EVENT_CHUNK)
        js = rng.integers(0, N, size=_EVENT_CHUNK)
        ls = rng.integers(0, N - 1, size=_EVENT_CHUNK)
        ls += ls >= js
        masks = _draw_masks(rng, nu_masks, nu_cdf, n_sites, _EVENT_CHUNK)
        for e in range(_EVENT_CHUNK):
            tnext = tnow + dts[e]
            while si < S and snap_times[si] < tnext:
                snaps[si] = matrix
                si += 1
            if tnext > t_end:
                done = True
                break
            tnow = tnext
            j = js[e]
            l = ls[e]
            a = int(masks[e])
            sites = site_lists.get(a)
            if sites is None:
                sites = tuple(i for i in range(n_sites) if a >> i & 1)
                site_lists[a] = sites
            for i in sites:
                matrix[j, i], matrix[l, i] = matrix[l, i], matrix[j, i]
            nevents += 1
    while si < S:
        snaps[si] = matrix
        si += 1
    return snaps, nevents
