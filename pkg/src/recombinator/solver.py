"""Deterministic solvers for dp/dt = Q(p) - p.

``evolve`` integrates the |Omega|-dimensional ODE with classical RK4 on a
fixed grid; ``WildExpansion`` computes the collision-count series and its
truncation; ``linearized_evolve`` co-integrates the linearization around a
nonlinear trajectory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import analysis
from .errors import CapExceededError, RecombinatorError, StepSizeError
from .space import (
    Distribution,
    RecombinationMeasure,
    SpaceShape,
    collision_kernel_array,
    convolve_arrays,
)

MAX_DT = 0.05
WILD_MAX_TERMS = 10_000
INVARIANT_TOL = 1e-9


class SolverInvariantError(RecombinatorError):
    """Mass or marginal conservation broken beyond tolerance."""


@dataclass
class SolveTrace:
    """Solution snapshots on a time grid plus per-point diagnostics."""
    shape: SpaceShape
    times: np.ndarray                 # strictly increasing, starts at 0
    probs: np.ndarray                 # (T, |Omega|)
    mass_defect: np.ndarray
    max_marginal_drift: np.ndarray
    tv_to_pi: np.ndarray
    rel_entropy_to_pi: np.ndarray
    pi: Distribution

    def state(self, idx: int) -> Distribution:
        return Distribution(self.shape, self.probs[idx])

    def final(self) -> Distribution:
        return self.state(len(self.times) - 1)

    def __len__(self) -> int:
        return len(self.times)


def _rk4_step(y: np.ndarray, dt: float, rhs) -> np.ndarray:
    k1 = rhs(y)
    k2 = rhs(y + 0.5 * dt * k1)
    k3 = rhs(y + 0.5 * dt * k2)
    k4 = rhs(y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def evolve(p0: Distribution, nu: RecombinationMeasure, t_end: float,
           dt: float = 0.01, record_every: int = 1) -> SolveTrace:
    """Integrate the nonlinear equation from p0 up to t_end.

    Mass and all single-site marginals must stay within 1e-9 of their initial
    values at every recorded point, otherwise the run aborts with
    diagnostics. The recorded grid is every ``record_every``-th step plus the
    final time.
    """
    if dt > MAX_DT or dt <= 0.0:
        raise StepSizeError(f"dt must be in (0, {MAX_DT}], got {dt}")
    if t_end < 0.0:
        raise ValueError("t_end must be non-negative")
    shape = p0.shape
    n_steps = max(1, math.ceil(t_end / dt - 1e-12)) if t_end > 0 else 0
    h = t_end / n_steps if n_steps else 0.0

    pi = p0.stationary_product()
    marg0 = p0.marginals()

    def rhs(y: np.ndarray) -> np.ndarray:
        return collision_kernel_array(y, nu, shape) - y

    times = [0.0]
    states = [p0.probs.copy()]
    y = p0.probs.copy()
    for step in range(1, n_steps + 1):
        y = _rk4_step(y, h, rhs)
        # roundoff in the total mass feeds back through the quadratic term
        # and grows like e^t; project back to the simplex once per step
        y /= y.sum()
        if step % record_every == 0 or step == n_steps:
            times.append(step * h)
            states.append(y.copy())

    probs = np.array(states)
    t_arr = np.array(times)
    mass = np.abs(probs.sum(axis=1) - 1.0)
    drift = np.empty(len(t_arr))
    tvs = np.empty(len(t_arr))
    ents = np.empty(len(t_arr))
    for idx in range(len(t_arr)):
        d = Distribution(shape, probs[idx])
        drift[idx] = max(
            (np.abs(d.site_marginal(i) - marg0[i]).max()
             for i in range(shape.n)), default=0.0)
        tvs[idx] = analysis.tv(d, pi)
        ents[idx] = analysis.rel_entropy(d, pi)
        if mass[idx] > INVARIANT_TOL or drift[idx] > INVARIANT_TOL:
            raise SolverInvariantError(
                f"conservation breach at t={t_arr[idx]:.6g}: "
                f"mass defect {mass[idx]:.3e}, marginal drift {drift[idx]:.3e}")
    return SolveTrace(shape, t_arr, probs, mass, drift, tvs, ents, pi)


# ---------------------------------------------------------------------------
# Wild sums
# ---------------------------------------------------------------------------

@dataclass
class WildExpansion:
    """Memoized collision-count terms p^(k) of the Wild series."""
    p0: Distribution
    nu: RecombinationMeasure
    _terms: dict[int, np.ndarray] = field(default_factory=dict)

    def term_array(self, k: int) -> np.ndarray:
        if k < 1:
            raise ValueError("k must be >= 1")
        got = self._terms.get(k)
        if got is not None:
            return got
        if k == 1:
            arr = self.p0.probs.copy()
        else:
            shape = self.p0.shape
            acc = np.zeros(shape.omega_size)
            for j in range(1, k):
                acc += convolve_arrays(self.term_array(j),
                                       self.term_array(k - j), self.nu, shape)
            arr = acc / (k - 1)
        self._terms[k] = arr
        return arr

    def term(self, k: int) -> Distribution:
        return Distribution(self.p0.shape, self.term_array(k))

    def truncation_order(self, t: float, tol: float) -> int:
        """Smallest K with geometric tail mass (1 - e^-t)^K <= tol."""
        if tol <= 0.0:
            raise ValueError("tol must be positive")
        x = -math.expm1(-t)
        if x <= 0.0:
            return 1
        if x >= 1.0:
            raise ValueError("t too large for the Wild series")
        k = max(1, math.ceil(math.log(tol) / math.log(x) - 1e-12))
        if k > WILD_MAX_TERMS:
            raise CapExceededError(
                "nonlinear-solver",
                f"Wild truncation needs {k} terms (> {WILD_MAX_TERMS}); "
                "t too large for this solver")
        return k

    def value(self, t: float, tol: float = 1e-10) -> Distribution:
        """Truncated, renormalized Wild sum at time t."""
        if t < 0.0:
            raise ValueError("t must be non-negative")
        big_k = self.truncation_order(t, tol)
        x = -math.expm1(-t)
        if x <= 0.0:
            return self.p0
        acc = np.zeros(self.p0.shape.omega_size)
        w = math.exp(-t)
        for k in range(1, big_k + 1):
            acc += w * self.term_array(k)
            w *= x
        acc /= 1.0 - x ** big_k
        return Distribution(self.p0.shape, acc)


def wild_term(p0: Distribution, nu: RecombinationMeasure, k: int) -> Distribution:
    return WildExpansion(p0, nu).term(k)


def wild_sum(p0: Distribution, nu: RecombinationMeasure, t: float,
             tol: float = 1e-10) -> Distribution:
    return WildExpansion(p0, nu).value(t, tol)


# ---------------------------------------------------------------------------
# linearized semigroup
# ---------------------------------------------------------------------------

def qhat(f: np.ndarray, g: np.ndarray, nu: RecombinationMeasure,
         shape: SpaceShape) -> np.ndarray:
    """Symmetric bilinear collision form; qhat(p, p) = Q(p) - p for
    probability vectors."""
    f = np.asarray(f, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    conv = convolve_arrays(f, g, nu, shape)
    return conv - 0.5 * (f.sum() * g + g.sum() * f)


def linearized_evolve(q0: Distribution, h0: np.ndarray,
                      nu: RecombinationMeasure, t_end: float,
                      dt: float = 0.01) -> np.ndarray:
    """Solve dh/dt = 2 qhat(q_t, h_t) along the nonlinear trajectory of q0.

    q_t is co-integrated on the same RK4 grid, so no interpolation error
    enters. Linear in h0 and preserves sum(h).
    """
    if dt > MAX_DT or dt <= 0.0:
        raise StepSizeError(f"dt must be in (0, {MAX_DT}], got {dt}")
    shape = q0.shape
    h0 = np.asarray(h0, dtype=np.float64)
    if h0.shape != (shape.omega_size,):
        raise ValueError("h0 has the wrong length")
    n_steps = max(1, math.ceil(t_end / dt - 1e-12)) if t_end > 0 else 0
    h = t_end / n_steps if n_steps else 0.0
    m = shape.omega_size

    def rhs(y: np.ndarray) -> np.ndarray:
        qq, hh = y[:m], y[m:]
        out = np.empty_like(y)
        out[:m] = collision_kernel_array(qq, nu, shape) - qq
        out[m:] = 2.0 * qhat(qq, hh, nu, shape)
        return out

    y = np.concatenate([q0.probs, h0])
    for _ in range(n_steps):
        y = _rk4_step(y, h, rhs)
        y[:m] /= y[:m].sum()
    return y[m:]
