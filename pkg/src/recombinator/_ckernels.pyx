# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: McKean-tree Monte Carlo and the GRT event loop.

Signature-compatible with the pure fallbacks in ``_pykernels``; both draw
from a PCG64 stream seeded per call (draw order differs between backends,
so results are deterministic per backend, not across backends).
"""

from libc.math cimport log, exp, pow, floor
from libc.stdint cimport uint64_t, int64_t, int32_t
from cpython.pycapsule cimport PyCapsule_GetPointer

import numpy as np
cimport numpy as cnp
from numpy.random cimport bitgen_t

cnp.import_array()


cdef inline double _next_double(bitgen_t *rng) noexcept nogil:
    return rng.next_double(rng.state)


cdef inline uint64_t _next_u64(bitgen_t *rng) noexcept nogil:
    return rng.next_uint64(rng.state)


cdef inline int64_t _randbelow(bitgen_t *rng, int64_t m) noexcept nogil:
    # unbiased bounded integer by rejection
    cdef uint64_t um = <uint64_t> m
    cdef uint64_t lim = (<uint64_t> 0xFFFFFFFFFFFFFFFF) - \
        ((<uint64_t> 0xFFFFFFFFFFFFFFFF) % um + 1) % um
    cdef uint64_t u = _next_u64(rng)
    while u > lim:
        u = _next_u64(rng)
    return <int64_t> (u % um)


cdef inline double _exponential(bitgen_t *rng) noexcept nogil:
    cdef double u = _next_double(rng)
    while u <= 0.0:
        u = _next_double(rng)
    return -log(u)


cdef inline int64_t _geometric(bitgen_t *rng, double p) noexcept nogil:
    # support {1, 2, ...}; p is the success probability
    cdef double u
    if p >= 1.0:
        return 1
    u = _next_double(rng)
    while u <= 0.0:
        u = _next_double(rng)
    return 1 + <int64_t> floor(log(u) / log(1.0 - p))


cdef inline int64_t _searchsorted(const double[::1] cdf, double u) noexcept nogil:
    # smallest index with cdf[idx] > u
    cdef int64_t lo = 0, hi = cdf.shape[0], mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if cdf[mid] <= u:
            lo = mid + 1
        else:
            hi = mid
    return lo


cdef bitgen_t *_get_bitgen(object bit_generator):
    return <bitgen_t *> PyCapsule_GetPointer(bit_generator.capsule, "BitGenerator")


def tree_omega_batch(double t, double r, int64_t count, object seed):
    """Sample ``count`` McKean trees at time ``t``; return (k, omega) arrays."""
    bg = np.random.PCG64(seed)
    cdef bitgen_t *rng = _get_bitgen(bg)
    cdef double succ = exp(-t)
    cdef double x = r / 2.0
    ks_arr = np.empty(count, dtype=np.int64)
    om_arr = np.empty(count, dtype=np.float64)
    cdef int64_t[::1] ks = ks_arr
    cdef double[::1] om = om_arr
    cdef int64_t i, k, s, idx, kmax = 1
    cdef double w, d

    for i in range(count):
        ks[i] = _geometric(rng, succ)
        if ks[i] > kmax:
            kmax = ks[i]
    depths_arr = np.zeros(kmax, dtype=np.float64)
    cdef double[::1] depths = depths_arr

    with bg.lock, nogil:
        for i in range(count):
            k = ks[i]
            depths[0] = 0.0
            for s in range(1, k):
                idx = _randbelow(rng, s)
                d = depths[idx] + 1.0
                depths[idx] = d
                depths[s] = d
            w = 0.0
            for s in range(k):
                if x == 0.0:
                    w += 1.0 if depths[s] == 0.0 else 0.0
                else:
                    w += pow(x, depths[s])
            om[i] = w
    return ks_arr, om_arr


def sample_pt_batch(double t, const double[::1] cdf,
                    const int64_t[:, ::1] contrib,
                    object nbar_masks, object nbar_cdf,
                    int n_sites, int64_t count, object seed):
    """Draw ``count`` configurations from p_t via the fragmentation process.

    ``cdf`` is the cumulative initial distribution over flat configurations,
    ``contrib[s, c]`` the mixed-radix contribution of site ``s`` of config
    ``c``. ``nbar_masks/nbar_cdf`` describe the symmetrized recombination
    measure; both None means uniform crossover.
    """
    bg = np.random.PCG64(seed)
    cdef bitgen_t *rng = _get_bitgen(bg)
    cdef double succ = exp(-t)
    cdef int64_t full = (<int64_t> 1 << n_sites) - 1
    cdef bint uniform = nbar_masks is None
    cdef int64_t[::1] masks_v
    cdef double[::1] mcdf_v
    if not uniform:
        masks_v = np.ascontiguousarray(nbar_masks, dtype=np.int64)
        mcdf_v = np.ascontiguousarray(nbar_cdf, dtype=np.float64)

    out_arr = np.empty(count, dtype=np.int64)
    cdef int64_t[::1] out = out_arr
    cdef int64_t i, k, s, idx, b, A, code, sigma, site, kmax = 1
    ks_arr = np.empty(count, dtype=np.int64)
    cdef int64_t[::1] ks = ks_arr
    for i in range(count):
        ks[i] = _geometric(rng, succ)
        if ks[i] > kmax:
            kmax = ks[i]
    blocks_arr = np.zeros(kmax, dtype=np.int64)
    cdef int64_t[::1] blocks = blocks_arr

    with bg.lock, nogil:
        for i in range(count):
            k = ks[i]
            blocks[0] = full
            for s in range(1, k):
                idx = _randbelow(rng, s)
                if uniform:
                    A = <int64_t> (_next_u64(rng) & <uint64_t> full)
                else:
                    A = masks_v[_searchsorted(mcdf_v, _next_double(rng))]
                b = blocks[idx]
                blocks[idx] = b & A
                blocks[s] = b & (full ^ A)
            code = 0
            for s in range(k):
                b = blocks[s]
                if b == 0:
                    continue
                sigma = _searchsorted(cdf, _next_double(rng))
                for site in range(n_sites):
                    if b & (<int64_t> 1 << site):
                        code += contrib[site, sigma]
            out[i] = code
    return out_arr


def grt_simulate(cnp.ndarray[int32_t, ndim=2] matrix, double t_end,
                 const double[::1] snap_times,
                 object nu_masks, object nu_cdf,
                 int n_sites, object seed):
    """Run the generalized random transposition process in place.

    Collisions occur at total rate (N-1)/2; at each event a uniform pair of
    particles exchanges the sites of a nu-distributed mask. Returns
    (snapshots, n_events) where snapshots[s] is the matrix state at
    snap_times[s] (sorted, all <= t_end).
    """
    bg = np.random.PCG64(seed)
    cdef bitgen_t *rng = _get_bitgen(bg)
    cdef int64_t N = matrix.shape[0]
    cdef int n = matrix.shape[1]
    cdef int64_t S = snap_times.shape[0]
    cdef bint uniform = nu_masks is None
    cdef int64_t full = (<int64_t> 1 << n_sites) - 1
    cdef int64_t[::1] masks_v
    cdef double[::1] mcdf_v
    if not uniform:
        masks_v = np.ascontiguousarray(nu_masks, dtype=np.int64)
        mcdf_v = np.ascontiguousarray(nu_cdf, dtype=np.float64)

    snaps_arr = np.empty((S, N, n), dtype=np.int32)
    cdef int32_t[:, :, ::1] snaps = snaps_arr
    cdef int32_t[:, ::1] mat = matrix
    cdef double rate = (N - 1) / 2.0
    cdef double tnow = 0.0, tnext
    cdef int64_t si = 0, nevents = 0
    cdef int64_t j, l, tmp_swap, A
    cdef int site
    cdef int32_t tmp

    if N < 2 or rate <= 0.0:
        for si in range(S):
            snaps_arr[si] = matrix
        return snaps_arr, 0

    with bg.lock:
        while True:
            tnext = tnow + _exponential(rng) / rate
            while si < S and snap_times[si] < tnext:
                snaps_arr[si] = matrix
                si += 1
            if tnext > t_end:
                break
            tnow = tnext
            j = _randbelow(rng, N)
            l = _randbelow(rng, N - 1)
            if l >= j:
                l += 1
            if uniform:
                A = <int64_t> (_next_u64(rng) & <uint64_t> full)
            else:
                A = masks_v[_searchsorted(mcdf_v, _next_double(rng))]
            for site in range(n_sites):
                if A & (<int64_t> 1 << site):
                    tmp = mat[j, site]
                    mat[j, site] = mat[l, site]
                    mat[l, site] = tmp
            nevents += 1
    while si < S:
        snaps_arr[si] = matrix
        si += 1
    return snaps_arr, nevents
