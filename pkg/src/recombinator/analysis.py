"""Information-theoretic functionals: entropies, total variation, exact
Hamming-Wasserstein transport, and the nonlinear entropy production rate."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import RecombinatorError, ShapeError
from .space import (
    Distribution,
    RecombinationMeasure,
    SpaceShape,
    collision_kernel_array,
)


def rel_entropy(p: Distribution, q: Distribution) -> float:
    """H(p || q) with the convention 0 log 0 = 0; +inf when supp(p) is not
    contained in supp(q)."""
    if p.shape != q.shape:
        raise ShapeError("relative entropy requires equal shapes")
    pp, qq = p.probs, q.probs
    on = pp > 0.0
    if np.any(qq[on] == 0.0):
        return math.inf
    return float(np.sum(pp[on] * (np.log(pp[on]) - np.log(qq[on]))))


def tv(p: Distribution, q: Distribution) -> float:
    if p.shape != q.shape:
        raise ShapeError("total variation requires equal shapes")
    return tv_arrays(p.probs, q.probs)


def tv_arrays(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(p - q).sum())


def ent(f: np.ndarray, mu: np.ndarray) -> float:
    """Ent_mu(f) = mu(f log f) - mu(f) log mu(f) for f >= 0."""
    f = np.asarray(f, dtype=np.float64)
    mu = np.asarray(mu, dtype=np.float64)
    on = f > 0.0
    mean = float(mu @ f)
    if mean <= 0.0:
        return 0.0
    flogf = float(mu[on] @ (f[on] * np.log(f[on])))
    return flogf - mean * math.log(mean)


def hamming_matrix(shape: SpaceShape, configs_a: np.ndarray,
                   configs_b: np.ndarray) -> np.ndarray:
    """Pairwise Hamming distances between configuration code arrays."""
    da = shape.digit_table[:, configs_a]
    db = shape.digit_table[:, configs_b]
    return (da[:, :, None] != db[:, None, :]).sum(axis=0)


@dataclass
class TransportPlan:
    """Optimal coupling between two distributions on the same space."""
    support_p: np.ndarray   # config codes carrying p-mass
    support_q: np.ndarray
    flow: np.ndarray        # (len(support_p), len(support_q)) coupling masses
    cost_matrix: np.ndarray
    cost: float


class TransportError(RecombinatorError):
    pass


def _min_cost_transport(a: np.ndarray, b: np.ndarray,
                        cost: np.ndarray) -> np.ndarray:
    """Exact transportation optimum by successive shortest paths.

    Integer costs and a bipartite residual graph; Dijkstra with Johnson
    potentials keeps reduced costs non-negative. Every augmentation zeroes a
    residual supply, demand or flow entry exactly, so the loop terminates.
    """
    m, k = cost.shape
    flow = np.zeros((m, k))
    res_a = a.astype(np.float64).copy()
    res_b = b.astype(np.float64).copy()
    pot = np.zeros(m + k)
    inf = math.inf
    guard = 4 * (m + k) * (m + k) + 16
    while res_a.sum() > 0.0:
        guard -= 1
        if guard < 0:
            raise TransportError("successive-shortest-path did not terminate")
        dist = np.full(m + k, inf)
        parent = np.full(m + k, -1, dtype=np.int64)
        dist[:m][res_a > 0.0] = 0.0
        settled = np.zeros(m + k, dtype=bool)
        target = -1
        while True:
            cand = np.where(~settled, dist, inf)
            u = int(np.argmin(cand))
            if cand[u] == inf:
                break
            settled[u] = True
            if u >= m and res_b[u - m] > 0.0:
                target = u
                break
            if u < m:          # source -> all sinks
                rc = cost[u] + pot[u] - pot[m:]
                nd = dist[u] + rc
                upd = nd < dist[m:]
                dist[m:][upd] = nd[upd]
                parent[m:][upd] = u
            else:              # sink -> sources with positive flow
                q = u - m
                back = flow[:, q] > 0.0
                rc = -cost[:, q] + pot[u] - pot[:m]
                nd = dist[u] + rc
                upd = back & (nd < dist[:m])
                dist[:m][upd] = nd[upd]
                parent[:m][upd] = u
        if target < 0:
            raise TransportError("no augmenting path (unbalanced marginals?)")
        reach = dist < inf
        pot[reach] += np.minimum(dist[reach], dist[target])
        # walk back to a source, collecting the bottleneck
        path = [target]
        while parent[path[-1]] >= 0:
            path.append(int(parent[path[-1]]))
        src = path[-1]
        bottleneck = min(res_a[src], res_b[target - m])
        for x, y in zip(path[1:], path[:-1]):
            if x < m:      # forward arc x -> y
                continue
            bottleneck = min(bottleneck, flow[y, x - m])
        for x, y in zip(path[1:], path[:-1]):
            if x < m:
                flow[x, y - m] += bottleneck
            else:
                flow[y, x - m] -= bottleneck
        res_a[src] -= bottleneck
        res_b[target - m] -= bottleneck
        if res_a[src] < 1e-18:
            res_a[src] = 0.0
        if res_b[target - m] < 1e-18:
            res_b[target - m] = 0.0
    return flow


def wasserstein_plan(p: Distribution, q: Distribution) -> TransportPlan:
    """Exact W(p, q) for the Hamming ground cost, with the optimal coupling."""
    if p.shape != q.shape:
        raise ShapeError("wasserstein requires equal shapes")
    common = np.minimum(p.probs, q.probs)
    rp = p.probs - common
    rq = q.probs - common
    # mass shared in place moves at zero cost; transport only the difference
    sup_p = np.nonzero(rp > 0.0)[0]
    sup_q = np.nonzero(rq > 0.0)[0]
    if len(sup_p) == 0 or len(sup_q) == 0:
        plan = TransportPlan(sup_p, sup_q,
                             np.zeros((len(sup_p), len(sup_q))),
                             np.zeros((len(sup_p), len(sup_q)), dtype=np.int64),
                             0.0)
    else:
        a = rp[sup_p]
        b = rq[sup_q]
        scale = a.sum()
        b = b * (scale / b.sum())   # equalize roundoff in the two residuals
        cost = hamming_matrix(p.shape, sup_p, sup_q)
        flow = _min_cost_transport(a, b, cost.astype(np.float64))
        plan = TransportPlan(sup_p, sup_q, flow, cost,
                             float((flow * cost).sum()))
    _check_tv_sandwich(p, q, plan.cost)
    return plan


def wasserstein(p: Distribution, q: Distribution) -> float:
    return wasserstein_plan(p, q).cost


def _check_tv_sandwich(p: Distribution, q: Distribution, w: float) -> None:
    # ||p-q||_tv <= W <= n ||p-q||_tv must hold for every computed optimum
    d = tv(p, q)
    n = max(p.shape.n, 1)
    if w < d - 1e-9 or w > n * d + 1e-9:
        raise TransportError(
            f"tv/W sandwich violated: tv={d!r}, W={w!r}, n={n}")


def fisher_nonlinear(p: Distribution, nu: RecombinationMeasure) -> float:
    """Entropy derivative d/dt H(p_t || pi) at t = 0 (non-positive).

    pi is the product of the marginals of p; requires strictly positive p.
    Its absolute value is the nonlinear entropy production rate.
    """
    if nu.n != p.shape.n:
        raise ShapeError("nu does not match the distribution's sites")
    if p.probs.min() <= 0.0:
        raise ValueError("fisher_nonlinear requires strictly positive p")
    pi = p.stationary_product()
    qp = collision_kernel_array(p.probs, nu, p.shape)
    return float((qp - p.probs) @ (np.log(p.probs) - np.log(pi.probs)))
