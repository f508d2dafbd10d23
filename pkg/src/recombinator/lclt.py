"""Exact lattice DP for sums of induced 0/1 vectors, the Gaussian local-CLT
approximation, and exact conditioned-tensor-product functionals.

A distribution p on Omega induces a measure mu on X = {0,1}^K (K = sum q_i)
through the letter indicators; the table T_m(v) = mu^{(x)m}(S_m = v) is built
by iterated convolution over the box {0..m}^K. Slices are kept max-normalized
with a separate log scale, so sector probabilities far below the float range
stay usable and ratios are formed in log domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import (
    CapExceededError,
    EmptySectorError,
    RecombinatorError,
    SingularCovarianceError,
)
from .space import Distribution, RecombinationMeasure, SpaceShape, mask_sites

K_CAP = 4
DP_ENTRY_CAP = 60_000_000        # dense float64 entries alive at once
MARGINAL_ROW_CAP = 4_000_000     # |Omega|^k rows in exact_k_marginal


@lru_cache(maxsize=64)
def xi_table(shape: SpaceShape) -> np.ndarray:
    """(|Omega|, K) 0/1 matrix of letter indicators xi_{i,x} = 1(sigma_i = x),
    coordinates ordered site-major, letters x = 1..q_i."""
    out = np.zeros((shape.omega_size, shape.K), dtype=np.int64)
    col = 0
    for i in range(shape.n):
        digits = shape.digit_table[i]
        for x in range(1, shape.q[i] + 1):
            out[:, col] = digits == x
            col += 1
    return out


@dataclass
class InducedMeasure:
    """Pushforward of p on X = {0,1}^K with its mean, covariance and
    irreducibility flag."""
    shape: SpaceShape
    configs: np.ndarray   # support configuration codes
    xi: np.ndarray        # (n_atoms, K)
    weights: np.ndarray   # (n_atoms,)
    mean: np.ndarray      # (K,)
    cov: np.ndarray       # V_1, (K, K)
    irreducible: bool

    @property
    def K(self) -> int:
        return self.shape.K

    def to_json(self) -> dict:
        return {
            "mean": self.mean.tolist(),
            "covariance": self.cov.tolist(),
            "irreducible": bool(self.irreducible),
        }


def induce(p: Distribution) -> InducedMeasure:
    """Induced measure of p, with irreducibility checked by direct scan."""
    shape = p.shape
    table = xi_table(shape)
    sup = np.nonzero(p.probs > 0.0)[0]
    xi = table[sup]
    w = p.probs[sup]
    mean = w @ xi
    cov = (xi * w[:, None]).T @ xi - np.outer(mean, mean)
    support = {tuple(row) for row in xi}
    irr = True
    for c in range(shape.K):
        if not any(_flip(row, c) in support for row in support):
            irr = False
            break
    return InducedMeasure(shape, sup, xi, w, mean, cov, irr)


def _flip(row: tuple, c: int) -> tuple:
    return row[:c] + (1 - row[c],) + row[c + 1:]


def irreducible(p: Distribution) -> bool:
    """Irreducibility of p (equivalently of its induced measure)."""
    return induce(p).irreducible


# ---------------------------------------------------------------------------
# the DP table
# ---------------------------------------------------------------------------

def _dp_iter(xi: np.ndarray, w: np.ndarray, N: int):
    """Yield (m, arr, log_scale) for m = 0..N.

    ``arr`` has shape (m+1,)*K, is max-normalized, and
    T_m(v) = arr[v] * exp(log_scale).
    """
    K = xi.shape[1]
    arr = np.ones((1,) * K)
    ls = 0.0
    yield 0, arr, ls
    for m in range(1, N + 1):
        new = np.zeros((m + 1,) * K)
        for a in range(len(w)):
            dst = tuple(slice(x, m + x) for x in xi[a])
            new[dst] += w[a] * arr
        mx = new.max()
        if mx <= 0.0:
            raise EmptySectorError("DP slice vanished (degenerate support)")
        new /= mx
        ls += math.log(mx)
        arr = new
        yield m, arr, ls


def _check_caps(K: int, entries: float, module: str = "lclt") -> None:
    if K > K_CAP:
        raise CapExceededError(module, f"K = {K} exceeds the cap {K_CAP}")
    if entries > DP_ENTRY_CAP:
        raise CapExceededError(
            module, f"DP would need {entries:.2e} dense entries "
            f"(cap {DP_ENTRY_CAP:.0e})")


def _as_mu(source) -> InducedMeasure:
    return induce(source) if isinstance(source, Distribution) else source


def _counts_vector(rho) -> np.ndarray:
    vec = rho.coordinate_vector() if hasattr(rho, "coordinate_vector") else rho
    return np.asarray(vec, dtype=np.int64)


class LatticeDP:
    """Point-mass table for S_N, keeping the slices N-tail .. N."""

    def __init__(self, source, N: int, tail: int = 0):
        mu = _as_mu(source)
        if N < 0 or tail < 0 or tail > N:
            raise ValueError("need 0 <= tail <= N")
        _check_caps(mu.K, float(N + 1) ** mu.K * (tail + 2))
        self.mu = mu
        self.N = N
        self.slices: dict[int, tuple[np.ndarray, float]] = {}
        for m, arr, ls in _dp_iter(mu.xi, mu.weights, N):
            if m >= N - tail:
                self.slices[m] = (arr.copy(), ls)

    def _slice(self, m: int | None) -> tuple[np.ndarray, float, int]:
        m = self.N if m is None else m
        if m not in self.slices:
            raise ValueError(f"slice {m} not retained (tail window)")
        arr, ls = self.slices[m]
        return arr, ls, m

    def log_point_prob(self, v, m: int | None = None) -> float:
        arr, ls, m = self._slice(m)
        v = np.asarray(v, dtype=np.int64)
        if v.shape != (self.mu.K,):
            raise ValueError("point has wrong dimension")
        if np.any(v < 0) or np.any(v > m):
            return -math.inf
        val = float(arr[tuple(v)])
        return -math.inf if val <= 0.0 else math.log(val) + ls

    def point_prob(self, v, m: int | None = None) -> float:
        lp = self.log_point_prob(v, m)
        return 0.0 if lp == -math.inf else math.exp(lp)

    def slice_total(self, m: int | None = None) -> float:
        arr, ls, _ = self._slice(m)
        return float(np.exp(np.log(arr.sum()) + ls))

    def lookup(self, pts: np.ndarray, m: int | None = None) -> np.ndarray:
        """Vectorized T_m at integer points (..., K); out-of-box gives 0.
        Values are relative to the slice scale (multiply by exp(log_scale))."""
        arr, _, m = self._slice(m)
        valid = np.all((pts >= 0) & (pts <= m), axis=-1)
        clipped = np.clip(pts, 0, m)
        lin = np.ravel_multi_index(
            tuple(np.moveaxis(clipped, -1, 0)), arr.shape)
        return np.where(valid, arr.reshape(-1)[lin], 0.0)

    def log_scale(self, m: int | None = None) -> float:
        _, ls, _ = self._slice(m)
        return ls


def dp_point_prob(dp: LatticeDP, point) -> float:
    """Exact mu^(xN)(S_N = point), up to floating point."""
    return dp.point_prob(point)


class SliceLadder:
    """Slice provider for strictly descending access with bounded memory.

    Stores every slice when that fits the entry cap, otherwise checkpoints
    every ~sqrt(N) levels and recomputes one block at a time (queries must
    then arrive in non-increasing m order, which is how the canonical
    sampler consumes them).
    """

    def __init__(self, source, N: int):
        mu = _as_mu(source)
        self.mu = mu
        self.N = N
        K = mu.K
        total_all = sum(float(m + 1) ** K for m in range(N + 1))
        self._cache: dict[int, tuple[np.ndarray, float]] = {}
        if total_all <= DP_ENTRY_CAP:
            self.mode = "all"
            for m, arr, ls in _dp_iter(mu.xi, mu.weights, N):
                self._cache[m] = (arr.copy(), ls)
            return
        self.mode = "ladder"
        self.L = int(math.isqrt(N)) + 1
        need = (N / self.L + 2 + self.L) * float(N + 1) ** K
        _check_caps(K, need)
        self._checkpoints: dict[int, tuple[np.ndarray, float]] = {}
        for m, arr, ls in _dp_iter(mu.xi, mu.weights, N):
            if m % self.L == 0 or m == N:
                self._checkpoints[m] = (arr.copy(), ls)

    def get(self, m: int) -> tuple[np.ndarray, float]:
        if m in self._cache:
            return self._cache[m]
        if self.mode == "all":
            raise ValueError(f"slice {m} out of range")
        base = (m // self.L) * self.L
        hi = min(base + self.L, self.N)
        self._cache = {base: self._checkpoints[base]}
        K = self.mu.K
        xi, w = self.mu.xi, self.mu.weights
        cur, curls = self._checkpoints[base]
        for mm in range(base + 1, hi + 1):
            new = np.zeros((mm + 1,) * K)
            for a in range(len(w)):
                dst = tuple(slice(x, mm + x) for x in xi[a])
                new[dst] += w[a] * cur
            mx = new.max()
            if mx <= 0.0:
                raise EmptySectorError("DP slice vanished")
            new /= mx
            curls += math.log(mx)
            cur = new
            self._cache[mm] = (cur, curls)
        return self._cache[m]

    def lookup(self, pts: np.ndarray, m: int) -> np.ndarray:
        arr, _ = self.get(m)
        valid = np.all((pts >= 0) & (pts <= m), axis=-1)
        clipped = np.clip(pts, 0, m)
        lin = np.ravel_multi_index(
            tuple(np.moveaxis(clipped, -1, 0)), arr.shape)
        return np.where(valid, arr.reshape(-1)[lin], 0.0)


# ---------------------------------------------------------------------------
# Gaussian local-CLT approximation
# ---------------------------------------------------------------------------

def gaussian_approx(mu: InducedMeasure | Distribution, N: int, point) -> float:
    """Density formula exp(-|z|^2/2) / ((2 pi N)^{K/2} sqrt(det V_1)) with
    z = V_1^{-1/2} (point - N mean) / sqrt(N); requires irreducible mu."""
    mu = _as_mu(mu)
    if not mu.irreducible:
        raise RecombinatorError("gaussian_approx requires an irreducible measure")
    vals, vecs = np.linalg.eigh(mu.cov)
    if vals.min() < 1e-12:
        raise SingularCovarianceError(
            f"covariance eigenvalue {vals.min():.3e} below floor")
    point = np.asarray(point, dtype=np.float64)
    dev = (point - N * mu.mean) / math.sqrt(N)
    z = vecs @ ((vecs.T @ dev) / np.sqrt(vals))
    det = float(np.prod(vals))
    return math.exp(-0.5 * float(z @ z)) / (
        (2.0 * math.pi * N) ** (mu.K / 2.0) * math.sqrt(det))


# ---------------------------------------------------------------------------
# conditioned tensor products
# ---------------------------------------------------------------------------

def k_fold_shape(shape: SpaceShape, k: int) -> SpaceShape:
    return SpaceShape(list(shape.q) * k)


def sector_log_prob(p: Distribution, rho, N: int) -> float:
    """log p^(xN)(Omega_rho); -inf when the sector is unreachable."""
    dp = LatticeDP(p, N, tail=0)
    return dp.log_point_prob(_counts_vector(rho))


def exact_k_marginal(p: Distribution, rho, N: int, k: int) -> Distribution:
    """Exact k-particle marginal of p^(xN) conditioned on the rho sector.

    P_k(s_1..s_k) = prod_i p(s_i) * T_{N-k}(c - sum xi(s_i)) / T_N(c) with the
    DP ratio formed in log scale. Output lives on the k-fold product space,
    slot 0 least significant.
    """
    if k < 1 or k > N:
        raise ValueError("need 1 <= k <= N")
    if k > 4:
        raise CapExceededError("lclt", "k-marginals are capped at k = 4")
    shape = p.shape
    omega = shape.omega_size
    if float(omega) ** k > MARGINAL_ROW_CAP:
        raise CapExceededError("lclt", f"|Omega|^k = {omega ** k} too large")
    c = _counts_vector(rho)
    dp = LatticeDP(p, N, tail=k)
    log_top = dp.log_point_prob(c)
    if log_top == -math.inf:
        raise EmptySectorError("sector has zero probability under p^x N")
    table = xi_table(shape)

    s = np.zeros((1,) * k + (shape.K,), dtype=np.int64)
    pprod = np.ones((1,) * k)
    for j in range(k):
        view = [1] * (k + 1)
        view[k - 1 - j] = omega
        view[-1] = shape.K
        s = s + table.reshape(view)
        pview = [1] * k
        pview[k - 1 - j] = omega
        pprod = pprod * p.probs.reshape(pview)
    vals = dp.lookup(c[None] - s.reshape(-1, shape.K), m=N - k)
    pprod = pprod.reshape(-1)
    out = np.zeros(omega ** k)
    pos = (vals > 0.0) & (pprod > 0.0)
    shift = dp.log_scale(N - k) - log_top
    out[pos] = np.exp(np.log(pprod[pos]) + np.log(vals[pos]) + shift)
    return Distribution(k_fold_shape(shape, k), out)


def entropic_chaos(p: Distribution, rho, N: int) -> float:
    """Per-particle relative entropy (1/N) H(gamma(p, rho) || gamma(pi, rho)),
    computed as P_1 gamma[log(p/pi)] plus the per-particle log ratio of the
    two sector probabilities."""
    pi = p.stationary_product()
    p1 = exact_k_marginal(p, rho, N, 1).probs
    on = p1 > 0.0
    term1 = float(p1[on] @ (np.log(p.probs[on]) - np.log(pi.probs[on])))
    lp = sector_log_prob(p, rho, N)
    lpi = sector_log_prob(pi, rho, N)
    if lp == -math.inf or lpi == -math.inf:
        raise EmptySectorError("sector unreachable")
    return term1 + (lpi - lp) / N


def _site_code_contrib(shape: SpaceShape, mask: int) -> np.ndarray:
    """Per-config mixed-radix contribution of the sites in ``mask``."""
    out = np.zeros(shape.omega_size, dtype=np.int64)
    for site in mask_sites(mask):
        out += shape.digit_table[site].astype(np.int64) * shape.strides[site]
    return out


def fisher_particle(p: Distribution, rho, N: int,
                    nu: RecombinationMeasure) -> float:
    """Entropy derivative of the particle system per particle, D_N(f_N)/N.

    Uses exchangeability: the pair sum collapses onto the exact 2-particle
    marginal, and the density ratio after a collision reduces to a product
    of values of p. Non-positive; converges to fisher_nonlinear(p, nu).
    """
    if p.probs.min() <= 0.0:
        raise ValueError("fisher_particle requires strictly positive p")
    if N < 2:
        raise ValueError("need at least two particles")
    shape = p.shape
    p2 = exact_k_marginal(p, rho, N, 2).probs.reshape(
        shape.omega_size, shape.omega_size)
    logp = np.log(p.probs)
    total = 0.0
    for mask, w in nu.iter_atoms():
        ta = _site_code_contrib(shape, mask)
        tac = _site_code_contrib(
            shape, mask ^ ((1 << shape.n) - 1))
        comb = ta[:, None] + tac[None, :]       # sigma_A sigma'_{A^c}
        log_r = logp[comb] + logp[comb.T] - logp[:, None] - logp[None, :]
        total += w * float(
            np.sum(p2 * (np.expm1(log_r) * log_r)))
    return -0.25 * (N - 1) / N * total
