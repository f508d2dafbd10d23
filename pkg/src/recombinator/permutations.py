"""Exact functional-inequality certificates on tuples of permutations.

The GRT state space S_N^n is enumerated exactly (capped so certificates stay
exact); functions are arrays over states. Provides the Dirichlet form and
entropy of the generalized random transposition process, projections onto
permutation-symmetric functions, permutation entropies, and the Shearer /
random-transposition / key inequality checks they satisfy.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import CapExceededError
from .space import RecombinationMeasure, full_mask, mask_sites

STATE_CAP = 2_000_000
N_CAP = 5          # for n >= 2
N_CAP_SINGLE = 6   # plain random transpositions (n = 1)


class PermutationTupleSpace:
    """S_N^n with precomputed composition and transposition tables."""

    def __init__(self, N: int, n: int):
        cap = N_CAP_SINGLE if n == 1 else N_CAP
        if N < 2 or N > cap:
            raise CapExceededError("analysis", f"N must be in [2, {cap}] for n={n}")
        if n < 1:
            raise ValueError("n must be >= 1")
        self.N = N
        self.n = n
        self.perms = list(itertools.permutations(range(N)))
        self.P = len(self.perms)
        if self.P ** n > STATE_CAP:
            raise CapExceededError(
                "analysis", f"(N!)^n = {self.P ** n} exceeds {STATE_CAP}")
        self.size = self.P ** n
        self._index = {perm: i for i, perm in enumerate(self.perms)}
        # comp[a, b] = a o b, i.e. j -> a[b[j]]
        self.comp = np.empty((self.P, self.P), dtype=np.int32)
        for a, pa in enumerate(self.perms):
            for b, pb in enumerate(self.perms):
                self.comp[a, b] = self._index[tuple(pa[x] for x in pb)]
        # swap[(j,l)][a] = a with the values at positions j, l exchanged
        self.swaps: dict[tuple[int, int], np.ndarray] = {}
        for j in range(N):
            for l in range(j + 1, N):
                tab = np.empty(self.P, dtype=np.int32)
                for a, pa in enumerate(self.perms):
                    q = list(pa)
                    q[j], q[l] = q[l], q[j]
                    tab[a] = self._index[tuple(q)]
                self.swaps[(j, l)] = tab
        codes = np.arange(self.size, dtype=np.int64)
        self.digits = np.empty((n, self.size), dtype=np.int64)
        for i in range(n):
            self.digits[i] = (codes // self.P ** i) % self.P

    # -- elementary maps -----------------------------------------------------

    def pairs(self):
        return itertools.combinations(range(self.N), 2)

    @lru_cache(maxsize=4096)
    def collision_map(self, j: int, l: int, mask: int) -> np.ndarray:
        """State map of eta -> eta^{j,l,mask}."""
        tab = self.swaps[(j, l)]
        out = np.zeros(self.size, dtype=np.int64)
        for i in range(self.n):
            d = self.digits[i]
            out += (tab[d] if mask >> i & 1 else d) * self.P ** i
        return out

    def _relabel_map(self, tau: int, mask: int) -> np.ndarray:
        """State map of eta -> (tau eta)_A eta_{A^c}."""
        out = np.zeros(self.size, dtype=np.int64)
        for i in range(self.n):
            d = self.digits[i]
            out += (self.comp[d, tau] if mask >> i & 1 else d) * self.P ** i
        return out

    # -- averaging operators ---------------------------------------------------

    def project_pa(self, f: np.ndarray, mask: int) -> np.ndarray:
        """P_A f: average over label permutations acting on the masked sites."""
        f = np.asarray(f, dtype=np.float64)
        out = np.zeros_like(f, dtype=np.float64)
        for tau in range(self.P):
            out += f[self._relabel_map(tau, mask)]
        return out / self.P

    def mu_a(self, f: np.ndarray, mask: int) -> np.ndarray:
        """Conditional expectation given the sites outside the mask."""
        f = np.asarray(f, dtype=np.float64)
        rest = [i for i in range(self.n) if not mask >> i & 1]
        gid = np.zeros(self.size, dtype=np.int64)
        for rank, i in enumerate(rest):
            gid += self.digits[i] * self.P ** rank
        groups = self.P ** len(rest)
        sums = np.bincount(gid, weights=f, minlength=groups)
        block = self.size // groups
        return sums[gid] / block

    def symmetrize(self, f: np.ndarray) -> np.ndarray:
        """Projection onto the symmetric class (simultaneous relabeling)."""
        return self.project_pa(f, full_mask(self.n))

    # -- entropies -------------------------------------------------------------

    def mean(self, f: np.ndarray) -> float:
        return float(np.mean(f))

    def entropy(self, f: np.ndarray) -> float:
        """ent(f) = pi_N(f log f) - pi_N(f) log pi_N(f)."""
        f = np.asarray(f, dtype=np.float64)
        mean = float(f.mean())
        if mean <= 0.0:
            return 0.0
        on = f > 0.0
        return float(np.mean(np.where(on, f * np.log(np.where(on, f, 1.0)), 0.0))
                     ) - mean * math.log(mean)

    def ent_a_mean(self, f: np.ndarray, mask: int) -> float:
        """mu[ent_A(f)] = mu[f log(f / mu_A f)]."""
        return self._mean_flog(f, self.mu_a(f, mask))

    def phi(self, mask: int, f: np.ndarray) -> float:
        """Permutation entropy phi(A; f) = mu[f log(f / P_A f)]."""
        return self._mean_flog(f, self.project_pa(f, mask))

    def _mean_flog(self, f: np.ndarray, g: np.ndarray) -> float:
        f = np.asarray(f, dtype=np.float64)
        on = f > 0.0
        return float(np.mean(np.where(
            on, f * (np.log(np.where(on, f, 1.0)) -
                     np.log(np.where(on, g, 1.0))), 0.0)))

    # -- Dirichlet forms ---------------------------------------------------------

    def dirichlet_masked(self, f: np.ndarray, g: np.ndarray,
                         mask: int) -> float:
        """E_A(f, g) = (1/2N) sum_{j<l} mu[(f^{jlA} - f)(g^{jlA} - g)]."""
        f = np.asarray(f, dtype=np.float64)
        g = np.asarray(g, dtype=np.float64)
        acc = 0.0
        for j, l in self.pairs():
            mp = self.collision_map(j, l, mask)
            acc += float(np.mean((f[mp] - f) * (g[mp] - g)))
        return acc / (2.0 * self.N)

    def dirichlet(self, f: np.ndarray, g: np.ndarray,
                  nu: RecombinationMeasure) -> float:
        """The GRT Dirichlet form E_{N,n}(f, g)."""
        if nu.n != self.n:
            raise ValueError("nu has the wrong number of sites")
        return sum(w * self.dirichlet_masked(f, g, mask)
                   for mask, w in nu.iter_atoms())

    def dirichlet_batch(self, fs: np.ndarray, gs: np.ndarray,
                        nu: RecombinationMeasure) -> np.ndarray:
        """Row-wise E_{N,n}(f, g) for (trials, size) matrices."""
        acc = np.zeros(fs.shape[0])
        for mask, w in nu.iter_atoms():
            if w == 0.0:
                continue
            for j, l in self.pairs():
                mp = self.collision_map(j, l, mask)
                acc += w * ((fs[:, mp] - fs) * (gs[:, mp] - gs)).mean(axis=1)
        return acc / (2.0 * self.N)

    def entropy_batch(self, fs: np.ndarray) -> np.ndarray:
        means = fs.mean(axis=1)
        on = fs > 0.0
        flogf = np.where(on, fs * np.log(np.where(on, fs, 1.0)), 0.0).mean(axis=1)
        return flogf - means * np.log(means)


# ---------------------------------------------------------------------------
# certificates
# ---------------------------------------------------------------------------

def random_positive(space_size: int, rng: np.random.Generator) -> np.ndarray:
    """exp of i.i.d. standard Gaussians: rough and near-constant cases both
    occur with decent probability."""
    return np.exp(rng.standard_normal(space_size))


@dataclass
class MLSIReport:
    inequality: str
    trials: int
    min_ratio: float
    bound: float
    worst_trial: int
    descent_ratio: float

    @property
    def passed(self) -> bool:
        return min(self.min_ratio, self.descent_ratio) >= self.bound - 1e-12


def mlsi_bound(nu: RecombinationMeasure, n: int, symmetric: bool) -> float:
    """Certified lower bound for the entropy production constant."""
    if symmetric:
        if nu.kind != "uniform":
            raise ValueError("the symmetric-class bound is for uniform crossover")
        return 1.0 / (2.0 * (n + 2))
    if nu.kind == "uniform":
        return 1.0 / (4.0 * n)
    if nu.kind == "onepoint":
        return 1.0 / (4.0 * (n + 1))
    return nu.delta / (2.0 * n)


def dirichlet_mlsi(space: PermutationTupleSpace, f: np.ndarray,
                   nu: RecombinationMeasure) -> tuple[float, float, float | None]:
    """(E(f, log f), ent(f), ratio); ratio is None for constant f."""
    f = np.asarray(f, dtype=np.float64)
    if f.min() <= 0.0:
        raise ValueError("f must be strictly positive")
    e = space.dirichlet(f, np.log(f), nu)
    entf = space.entropy(f)
    ratio = e / entf if entf > 1e-14 else None
    return e, entf, ratio


def mlsi_certificate(space: PermutationTupleSpace, nu: RecombinationMeasure,
                     trials: int, rng: np.random.Generator,
                     symmetric: bool = False, descent_steps: int = 200,
                     descent_step: float = 0.05,
                     batch: int = 2000) -> MLSIReport:
    """Upper-bound the MLSI constant by random trials plus a multiplicative
    local descent from the worst case; certify it against the proven bound."""
    bound = mlsi_bound(nu, space.n, symmetric)
    best = math.inf
    best_f = None
    worst_trial = -1
    done = 0
    while done < trials:
        b = min(batch, trials - done)
        fs = np.exp(rng.standard_normal((b, space.size)))
        if symmetric:
            fs = np.stack([space.symmetrize(f) for f in fs])
        es = space.dirichlet_batch(fs, np.log(fs), nu)
        ents = space.entropy_batch(fs)
        ok = ents > 1e-12
        ratios = np.where(ok, es / np.where(ok, ents, 1.0), math.inf)
        i = int(np.argmin(ratios))
        if ratios[i] < best:
            best = float(ratios[i])
            best_f = fs[i].copy()
            worst_trial = done + i
        done += b

    ratio = best
    f = best_f
    for _ in range(descent_steps):
        g = f * np.exp(descent_step * rng.standard_normal(space.size))
        if symmetric:
            g = space.symmetrize(g)
        e = space.dirichlet(g, np.log(g), nu)
        entg = space.entropy(g)
        if entg > 1e-12 and e / entg < ratio:
            ratio = e / entg
            f = g
    name = ("mlsi-symmetric" if symmetric else "mlsi") + "-" + nu.kind
    return MLSIReport(name, trials, best, bound, worst_trial, float(ratio))


def shearer_margin(space: PermutationTupleSpace, f: np.ndarray,
                   nu: RecombinationMeasure) -> float:
    """sum_A nu(A) mu[ent_A f] - gamma(nu) ent(f) (>= 0 by Shearer)."""
    lhs = sum(w * space.ent_a_mean(f, mask) for mask, w in nu.iter_atoms())
    return lhs - nu.gamma * space.entropy(f)


def tensorization_margin(space: PermutationTupleSpace, f: np.ndarray) -> float:
    """sum_i mu[ent_i f] - ent(f) (>= 0; Shearer with singleton nu)."""
    lhs = sum(space.ent_a_mean(f, 1 << i) for i in range(space.n))
    return lhs - space.entropy(f)


def gq_margin(g: np.ndarray, N: int) -> float:
    """Random-transposition MLSI margin on S_N:
    (1/N) sum_{j<l} sum_tau (g(tau^{jl}) - g) log(g(tau^{jl})/g)
    minus sum_tau g log(g / mean g)."""
    space = PermutationTupleSpace(N, 1)
    g = np.asarray(g, dtype=np.float64)
    if g.min() <= 0.0:
        raise ValueError("g must be positive")
    logg = np.log(g)
    rhs = 0.0
    for j, l in space.pairs():
        mp = space.collision_map(j, l, 1)
        rhs += float(np.sum((g[mp] - g) * (logg[mp] - logg)))
    rhs /= N
    gbar = g.mean()
    lhs = float(np.sum(g * (logg - math.log(gbar))))
    return rhs - lhs


def phi_decomposition_gap(space: PermutationTupleSpace, f: np.ndarray,
                          mask: int) -> float:
    """phi(A) - (mu[ent_A f] - mu[ent_A P_A f]); zero by the projection
    identity."""
    pa = space.project_pa(f, mask)
    return space.phi(mask, f) - (space.ent_a_mean(f, mask)
                                 - space.ent_a_mean(pa, mask))


def phi_dirichlet_margin(space: PermutationTupleSpace, f: np.ndarray,
                         mask: int) -> float:
    """2 E_A(f, log f) - phi(A) (>= 0 via the random-transposition bound)."""
    f = np.asarray(f, dtype=np.float64)
    return 2.0 * space.dirichlet_masked(f, np.log(f), mask) \
        - space.phi(mask, f)


def keyphi_margin(space: PermutationTupleSpace, f: np.ndarray, mask: int,
                  v_mask: int) -> float:
    """phi(A) + sum_{i in V} phi(A + i) - mu[ent_V f] (>= 0), V inside A^c."""
    if mask & v_mask:
        raise ValueError("V must lie in the complement of A")
    acc = space.phi(mask, f)
    for i in mask_sites(v_mask):
        acc += space.phi(mask | (1 << i), f)
    return acc - space.ent_a_mean(f, v_mask)
