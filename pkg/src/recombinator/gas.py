"""The N-particle generalized random transposition (GRT) process.

State is an N x n matrix of letters; collisions exchange the masked sites of
a uniformly chosen particle pair at Poisson rate 1/N per pair. Per-site
letter counts are conserved, so trajectories stay in their count sector.
Initial states distributed as the conditioned tensor product gamma(p, rho)
come from an exact sampler: a closed-form cell-count scheme for binary
spaces with up to three sites (any N), and sequential DP-weighted particle
draws otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from . import _kernels, lclt
from .errors import EmptySectorError, RecombinatorError
from .space import Distribution, RecombinationMeasure, SpaceShape, mask_sites


@dataclass
class AdmissibleDensity:
    """Integer per-site letter counts c_{i,x} with sum_x c_{i,x} = N."""
    N: int
    counts: tuple

    def __post_init__(self):
        counts = tuple(np.asarray(c, dtype=np.int64) for c in self.counts)
        for c in counts:
            if c.min() < 0 or c.sum() != self.N:
                raise ValueError("counts must be non-negative and sum to N")
        object.__setattr__(self, "counts", counts)

    def rho(self) -> list[np.ndarray]:
        return [c / self.N for c in self.counts]

    def coordinate_vector(self) -> np.ndarray:
        """c_{i,x} for x >= 1, site-major (the DP lattice coordinates)."""
        return np.concatenate([c[1:] for c in self.counts])

    def ones_per_site(self) -> np.ndarray:
        """Binary spaces only: count of letter 1 per site."""
        return np.array([c[1] for c in self.counts], dtype=np.int64)


def rho_pi(marginals, N: int) -> AdmissibleDensity:
    """Floor-rounded admissible density: c_{i,x} = floor(N pi_{i,x}) for
    x >= 1 and the remainder on letter 0; off by at most q_i/N per site."""
    counts = []
    for m in marginals:
        m = np.asarray(m, dtype=np.float64)
        c = np.floor(N * m[1:] + 1e-12).astype(np.int64)
        c0 = N - c.sum()
        if c0 < 0:
            raise ValueError("marginal row sums above one")
        counts.append(np.concatenate([[c0], c]))
    return AdmissibleDensity(N, tuple(counts))


class ParticleState:
    """Immutable N x n matrix of letters."""

    __slots__ = ("shape", "matrix")

    def __init__(self, shape: SpaceShape, matrix):
        matrix = np.array(matrix, dtype=np.int32)
        if matrix.ndim != 2 or matrix.shape[1] != shape.n:
            raise ValueError("matrix must be N x n")
        for i in range(shape.n):
            col = matrix[:, i]
            if col.min(initial=0) < 0 or col.max(initial=0) > shape.q[i]:
                raise ValueError(f"letters out of range at site {i}")
        matrix.setflags(write=False)
        self.shape = shape
        self.matrix = matrix

    @property
    def N(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_codes(cls, shape: SpaceShape, codes) -> "ParticleState":
        codes = np.asarray(codes, dtype=np.int64)
        return cls(shape, shape.digit_table[:, codes].T)

    def row_codes(self) -> np.ndarray:
        strides = np.array(self.shape.strides, dtype=np.int64)
        return self.matrix.astype(np.int64) @ strides

    def density(self) -> AdmissibleDensity:
        counts = tuple(
            np.bincount(self.matrix[:, i], minlength=self.shape.sizes[i])
            for i in range(self.shape.n))
        return AdmissibleDensity(self.N, counts)


def apply_collision(state: ParticleState, j: int, l: int,
                    mask: int) -> ParticleState:
    """Exchange the masked sites of particles j < l (an involution that
    leaves the density vector unchanged)."""
    if not 0 <= j < l < state.N:
        raise IndexError("need 0 <= j < l < N")
    m = state.matrix.copy()
    sites = mask_sites(mask)
    m[j, sites], m[l, sites] = state.matrix[l, sites], state.matrix[j, sites]
    return ParticleState(state.shape, m)


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------

@dataclass
class CollisionEvent:
    time: float
    j: int
    l: int
    mask: int


@dataclass
class SimulationResult:
    final: ParticleState
    snapshots: list[tuple[float, ParticleState]]
    events: list[CollisionEvent] | None
    n_events: int


def _nu_arrays(nu: RecombinationMeasure):
    if nu.is_implicit():
        return None, None
    masks, probs = nu.as_arrays()
    cdf = np.cumsum(probs)
    cdf[-1] = 1.0
    return masks, cdf


def simulate(state: ParticleState, nu: RecombinationMeasure, t_end: float,
             rng: np.random.Generator, snapshot_times=(),
             record_events: bool = False) -> SimulationResult:
    """Gillespie simulation of the GRT up to t_end.

    One exponential clock at total rate (N-1)/2 plus a uniform pair choice,
    distributionally identical to independent per-pair clocks of rate 1/N.
    Snapshots are recorded at the (sorted) requested times; full event logs
    only when asked, since they dominate memory on long runs.
    """
    if nu.n != state.shape.n:
        raise ValueError("nu does not match the state's sites")
    snap_times = np.asarray(sorted(snapshot_times), dtype=np.float64)
    if len(snap_times) and snap_times[-1] > t_end:
        raise ValueError("snapshot times must not exceed t_end")
    if record_events:
        return _simulate_recorded(state, nu, t_end, rng, snap_times)
    masks, cdf = _nu_arrays(nu)
    seed = int(rng.integers(np.iinfo(np.int64).max))
    matrix = state.matrix.astype(np.int32).copy()
    snaps, n_events = _kernels.grt_simulate(
        matrix, float(t_end), snap_times, masks, cdf, state.shape.n, seed)
    shots = [(float(t), ParticleState(state.shape, snaps[i]))
             for i, t in enumerate(snap_times)]
    return SimulationResult(ParticleState(state.shape, matrix), shots, None,
                            int(n_events))


def _simulate_recorded(state, nu, t_end, rng, snap_times):
    n = state.shape.n
    matrix = state.matrix.copy()
    matrix.setflags(write=True)
    big_n = matrix.shape[0]
    events: list[CollisionEvent] = []
    shots = []
    si = 0
    t = 0.0
    if big_n >= 2:
        rate = (big_n - 1) / 2.0
        while True:
            t_next = t + rng.exponential(1.0 / rate)
            while si < len(snap_times) and snap_times[si] < t_next:
                shots.append((float(snap_times[si]),
                              ParticleState(state.shape, matrix)))
                si += 1
            if t_next > t_end:
                break
            t = t_next
            j = int(rng.integers(big_n))
            l = int(rng.integers(big_n - 1))
            if l >= j:
                l += 1
            j, l = min(j, l), max(j, l)
            mask = nu.sample_mask(rng)
            sites = mask_sites(mask)
            matrix[j, sites], matrix[l, sites] = \
                matrix[l, sites].copy(), matrix[j, sites].copy()
            events.append(CollisionEvent(t, j, l, mask))
    while si < len(snap_times):
        shots.append((float(snap_times[si]), ParticleState(state.shape, matrix)))
        si += 1
    return SimulationResult(ParticleState(state.shape, matrix), shots,
                            events, len(events))


# ---------------------------------------------------------------------------
# empirical measures
# ---------------------------------------------------------------------------

def empirical(state: ParticleState) -> Distribution:
    """The empirical measure of the rows, as a distribution on Omega."""
    counts = np.bincount(state.row_codes(),
                         minlength=state.shape.omega_size)
    return Distribution(state.shape, counts / state.N)


def empirical_k(state: ParticleState, k: int, rng: np.random.Generator,
                samples: int = 100_000) -> Distribution:
    """Monte Carlo estimate of the k-particle marginal by uniform ordered
    k-tuples of distinct particles (unbiased for exchangeable laws)."""
    if k > state.N:
        raise ValueError("k cannot exceed the particle count")
    idx = rng.integers(0, state.N, size=(samples, k))
    if k > 1:
        bad = np.ones(samples, dtype=bool)
        while True:
            bad = np.zeros(samples, dtype=bool)
            for a in range(k):
                for b in range(a + 1, k):
                    bad |= idx[:, a] == idx[:, b]
            n_bad = int(bad.sum())
            if n_bad == 0:
                break
            idx[bad] = rng.integers(0, state.N, size=(n_bad, k))
    codes = state.row_codes()[idx]
    omega = state.shape.omega_size
    combo = np.zeros(samples, dtype=np.int64)
    for j in range(k):
        combo += codes[:, j] * omega ** j
    counts = np.bincount(combo, minlength=omega ** k)
    return Distribution(lclt.k_fold_shape(state.shape, k), counts / samples)


# ---------------------------------------------------------------------------
# exact sampling of the conditioned tensor product
# ---------------------------------------------------------------------------

def sample_canonical(p: Distribution, rho: AdmissibleDensity, N: int,
                     rng: np.random.Generator) -> ParticleState:
    """One draw from gamma(p, rho) = p^(xN) conditioned on the rho sector."""
    codes = sample_canonical_codes(p, rho, N, rng, size=1)[0]
    return ParticleState.from_codes(p.shape, codes)


def sample_canonical_codes(p: Distribution, rho: AdmissibleDensity, N: int,
                           rng: np.random.Generator,
                           size: int) -> np.ndarray:
    """(size, N) row-code matrices of independent gamma(p, rho) draws."""
    if rho.N != N:
        raise ValueError("rho was built for a different N")
    shape = p.shape
    if shape.is_binary() and shape.n <= 3:
        cells = _binary_cell_counts(p, rho.ones_per_site(), N, rng, size)
        return _rows_from_cells(cells, N, rng)
    return _sequential_dp_codes(p, rho, N, rng, size)


def _rows_from_cells(cells: np.ndarray, N: int,
                     rng: np.random.Generator) -> np.ndarray:
    """Uniformly shuffled rows realizing per-configuration counts."""
    size, _ = cells.shape
    cum = np.cumsum(cells, axis=1)
    perm = np.argsort(rng.random((size, N)), axis=1)
    return (perm[:, :, None] >= cum[:, None, :]).sum(axis=2)


def _binom_pmf(n: int, p1: float, p0: float) -> tuple[np.ndarray, float]:
    """Unnormalized binomial row: C(n,b) p1^b p0^(n-b) as a normalized pmf
    plus its log total weight (n log(p0+p1))."""
    if n == 0:
        return np.ones(1), 0.0
    s = p0 + p1
    if s <= 0.0:
        return np.zeros(n + 1), -math.inf
    theta = p1 / s
    b = np.arange(n + 1)
    if theta == 0.0:
        pmf = np.zeros(n + 1)
        pmf[0] = 1.0
    elif theta == 1.0:
        pmf = np.zeros(n + 1)
        pmf[-1] = 1.0
    else:
        logs = (gammaln(n + 1) - gammaln(b + 1) - gammaln(n - b + 1)
                + b * math.log(theta) + (n - b) * math.log1p(-theta))
        pmf = np.exp(logs)
    return pmf, n * math.log(s)


def _categorical(weights: np.ndarray, rng: np.random.Generator,
                 size: int | None = None):
    cdf = np.cumsum(weights)
    total = cdf[-1]
    if total <= 0.0:
        raise EmptySectorError("no admissible completion")
    u = rng.random() if size is None else rng.random(size)
    return np.searchsorted(cdf, u * total, side="right").clip(0, len(cdf) - 1)


def _binary_cell_counts(p: Distribution, ones: np.ndarray, N: int,
                        rng: np.random.Generator, size: int) -> np.ndarray:
    """Per-configuration counts of gamma(p, rho) for binary n <= 3.

    The count vector is multinomial(N, p) conditioned on the per-site
    one-counts; the few free coordinates are sampled from closed-form
    weights (convolutions of binomial rows for n = 3).
    """
    n = p.shape.n
    probs = p.probs
    if n == 1:
        c0 = int(ones[0])
        cells = np.zeros((size, 2), dtype=np.int64)
        cells[:, 0] = N - c0
        cells[:, 1] = c0
        if (c0 > 0 and probs[1] <= 0.0) or (c0 < N and probs[0] <= 0.0):
            raise EmptySectorError("sector outside the support of p")
        return cells
    if n == 2:
        return _cells_two_sites(probs, ones, N, rng, size)
    return _cells_three_sites(probs, ones, N, rng, size)


def _log_w(counts: np.ndarray, logp: np.ndarray) -> np.ndarray:
    """log multinomial weight sum_u (k_u log p_u - log k_u!) rowwise, with
    0 * log 0 = 0 and -inf for impossible cells."""
    terms = np.where(counts > 0,
                     counts * logp[None, :], 0.0) - gammaln(counts + 1.0)
    bad = (counts > 0) & np.isneginf(logp)[None, :]
    out = terms.sum(axis=1)
    out[bad.any(axis=1)] = -math.inf
    return out


def _cells_two_sites(probs, ones, N, rng, size):
    c0, c1 = int(ones[0]), int(ones[1])
    lo = max(0, c0 + c1 - N)
    hi = min(c0, c1)
    if lo > hi:
        raise EmptySectorError("inconsistent per-site counts")
    a = np.arange(lo, hi + 1)
    cells = np.stack([N - c0 - c1 + a, c0 - a, c1 - a, a], axis=1)
    with np.errstate(divide="ignore"):
        logp = np.log(probs)
    logw = _log_w(cells, logp)
    mx = logw.max()
    if mx == -math.inf:
        raise EmptySectorError("sector outside the support of p")
    pick = _categorical(np.exp(logw - mx), rng, size)
    return cells[pick]


def _cells_three_sites(probs, ones, N, rng, size):
    c0, c1, c2 = int(ones[0]), int(ones[1]), int(ones[2])
    lo = max(0, c0 + c1 - N)
    hi = min(c0, c1)
    if lo > hi:
        raise EmptySectorError("inconsistent per-site counts")
    # groups by (bit0, bit1): sizes (a, c0-a, c1-a, N-c0-c1+a); within each,
    # the site-2 column is an independent binomial row conditioned on the
    # total c2, so P(a) carries the convolution of the four rows at c2.
    group_codes = [3, 1, 2, 0]   # g11, g10, g01, g00 as (bit0 + 2 bit1)
    a_vals = np.arange(lo, hi + 1)
    log_pa = np.full(len(a_vals), -math.inf)
    tables = {}
    for ai, a in enumerate(a_vals):
        sizes = [a, c0 - a, c1 - a, N - c0 - c1 + a]
        pmfs = []
        logw = (-gammaln(np.array(sizes) + 1.0)).sum()
        ok = True
        for g, ng in zip(group_codes, sizes):
            pmf, lw = _binom_pmf(ng, probs[g | 4], probs[g])
            if lw == -math.inf and ng > 0:
                ok = False
                break
            pmfs.append(pmf)
            logw += lw
        if not ok:
            continue
        s3 = np.convolve(pmfs[2], pmfs[3])
        s2 = np.convolve(pmfs[1], s3)
        full = np.convolve(pmfs[0], s2)
        if c2 >= len(full) or full[c2] <= 0.0:
            continue
        tables[int(a)] = (pmfs, s2, s3)
        log_pa[ai] = logw + math.log(full[c2])
    mx = log_pa.max()
    if mx == -math.inf:
        raise EmptySectorError("sector outside the support of p")
    picks = _categorical(np.exp(log_pa - mx), rng, size)
    cells = np.zeros((size, 8), dtype=np.int64)
    for row, ai in enumerate(np.asarray(picks).reshape(-1)):
        a = int(a_vals[ai])
        pmfs, s2, s3 = tables[a]
        sizes = [a, c0 - a, c1 - a, N - c0 - c1 + a]
        rem = c2
        b = np.zeros(4, dtype=np.int64)
        for gi, suffix in enumerate((s2, s3, pmfs[3], None)):
            ng = sizes[gi]
            if suffix is None:
                b[gi] = rem
            else:
                bb = np.arange(min(ng, rem) + 1)
                tail = rem - bb
                w = pmfs[gi][bb] * np.where(tail < len(suffix),
                                            suffix[np.minimum(tail,
                                                              len(suffix) - 1)],
                                            0.0)
                b[gi] = int(_categorical(w, rng))
                rem -= int(b[gi])
        for gi, g in enumerate(group_codes):
            cells[row, g | 4] = b[gi]
            cells[row, g] = sizes[gi] - b[gi]
    if cells.min() < 0:
        raise RecombinatorError("internal error: negative cell count")
    return cells


def _sequential_dp_codes(p, rho, N, rng, size):
    """Generic exact sampler: particle j gets weight p(s) T_{N-j-1}(c - xi(s))."""
    mu = lclt.induce(p)
    ladder = lclt.SliceLadder(mu, N)
    c = rho.coordinate_vector()
    top_arr, _ = ladder.get(N)
    if not (np.all(c >= 0) and np.all(c <= N)) or \
            top_arr[tuple(c)] <= 0.0:
        raise EmptySectorError("sector has zero probability under p^x N")
    counts = np.tile(c, (size, 1))
    out = np.empty((size, N), dtype=np.int64)
    sup = mu.configs
    xi = mu.xi
    psup = mu.weights
    for j in range(N):
        m = N - 1 - j
        pts = counts[:, None, :] - xi[None, :, :]
        w = ladder.lookup(pts, m) * psup[None, :]
        tot = w.sum(axis=1)
        if np.any(tot <= 0.0):
            raise EmptySectorError("stranded sector during sequential draw")
        u = rng.random(size) * tot
        pick = (np.cumsum(w, axis=1) < u[:, None]).sum(axis=1)
        pick = np.minimum(pick, len(sup) - 1)
        out[:, j] = sup[pick]
        counts -= xi[pick]
    return out
