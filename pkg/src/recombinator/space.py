"""Finite product spaces, distributions and recombination measures.

The state space is ``Omega = X_1 x ... x X_n`` with ``X_i = {0, ..., q_i}``.
Configurations are mixed-radix integers with site 0 least significant, and
subsets of sites are bitmasks (bit ``i`` = site ``i``).
"""

from __future__ import annotations

import json
import math
from functools import cached_property
from typing import Iterable, Iterator, Mapping

import numpy as np

from .errors import (
    InvalidDistributionError,
    InvalidMeasureError,
    ShapeError,
)

MAX_SITES = 20
MASS_TOL = 1e-12
NEG_TOL = 1e-15
#: Implicit uniform crossover enumerates its 2^n atoms only up to this n.
UNIFORM_ENUM_LIMIT = 16


# ---------------------------------------------------------------------------
# subset bitmask helpers
# ---------------------------------------------------------------------------

def full_mask(n: int) -> int:
    return (1 << n) - 1


def complement(mask: int, n: int) -> int:
    return full_mask(n) ^ mask


def mask_sites(mask: int) -> list[int]:
    """Site indices contained in ``mask``, ascending."""
    sites = []
    i = 0
    while mask:
        if mask & 1:
            sites.append(i)
        mask >>= 1
        i += 1
    return sites


def mask_from_sites(sites: Iterable[int]) -> int:
    mask = 0
    for i in sites:
        mask |= 1 << i
    return mask


def check_mask(mask: int, n: int) -> int:
    if mask < 0 or mask > full_mask(n):
        raise ShapeError(f"mask {mask:#x} has bits outside the {n} sites")
    return mask


# ---------------------------------------------------------------------------
# product space
# ---------------------------------------------------------------------------

class SpaceShape:
    """The product space: site count ``n`` and per-site alphabet sizes.

    ``q[i] >= 1`` so site ``i`` carries the alphabet ``{0, ..., q[i]}``.
    ``n = 0`` denotes the trivial one-point space (it arises as the marginal
    on the empty subset); user-built spaces have ``1 <= n <= MAX_SITES``.
    """

    __slots__ = ("n", "q", "sizes", "omega_size", "K", "strides", "__dict__")

    def __init__(self, q: Iterable[int]):
        q = tuple(int(v) for v in q)
        if len(q) > MAX_SITES:
            raise ShapeError(f"at most {MAX_SITES} sites supported, got {len(q)}")
        if any(v < 1 for v in q):
            raise ShapeError("every alphabet size q_i must be >= 1")
        self.n = len(q)
        self.q = q
        self.sizes = tuple(v + 1 for v in q)
        self.omega_size = int(np.prod(self.sizes, dtype=np.int64)) if q else 1
        self.K = sum(q)
        strides = []
        s = 1
        for size in self.sizes:
            strides.append(s)
            s *= size
        self.strides = tuple(strides)

    @classmethod
    def binary(cls, n: int) -> "SpaceShape":
        return cls([1] * n)

    @property
    def nd_shape(self) -> tuple[int, ...]:
        """ndarray view shape; axis ``n-1-i`` carries site ``i``."""
        return self.sizes[::-1]

    def axis(self, site: int) -> int:
        return self.n - 1 - site

    def encode(self, digits: Iterable[int]) -> int:
        code = 0
        for d, s in zip(digits, self.strides, strict=True):
            code += int(d) * s
        return code

    def decode(self, code: int) -> tuple[int, ...]:
        digits = []
        for size in self.sizes:
            digits.append(code % size)
            code //= size
        return tuple(digits)

    @cached_property
    def digit_table(self) -> np.ndarray:
        """(n, omega_size) int16 array: digit of site i for each configuration."""
        codes = np.arange(self.omega_size, dtype=np.int64)
        table = np.empty((self.n, self.omega_size), dtype=np.int16)
        for i, size in enumerate(self.sizes):
            table[i] = (codes // self.strides[i]) % size
        return table

    def config_string(self, code: int) -> str:
        return "".join(str(d) for d in self.decode(code))

    def subshape(self, mask: int) -> "SpaceShape":
        check_mask(mask, self.n)
        return SpaceShape([self.q[i] for i in mask_sites(mask)])

    def is_binary(self) -> bool:
        return all(v == 1 for v in self.q)

    def __eq__(self, other) -> bool:
        return isinstance(other, SpaceShape) and self.q == other.q

    def __hash__(self) -> int:
        return hash(self.q)

    def __repr__(self) -> str:
        return f"SpaceShape(q={list(self.q)})"

    def to_json(self) -> dict:
        return {"n": self.n, "q": list(self.q)}

    @classmethod
    def from_json(cls, obj: Mapping) -> "SpaceShape":
        shape = cls(obj["q"])
        if "n" in obj and int(obj["n"]) != shape.n:
            raise ShapeError("inconsistent n and q in shape JSON")
        return shape


# ---------------------------------------------------------------------------
# distributions
# ---------------------------------------------------------------------------

class Distribution:
    """Dense probability array over a product space (immutable).

    Entries below ``-NEG_TOL`` are rejected; tiny negatives in
    ``[-NEG_TOL, 0)`` coming from floating-point drift are clamped to zero,
    and the array is renormalized. The total mass must be 1 within
    ``MASS_TOL`` before renormalization.
    """

    __slots__ = ("shape", "probs")

    def __init__(self, shape: SpaceShape, probs):
        probs = np.array(probs, dtype=np.float64)
        if probs.shape != (shape.omega_size,):
            raise ShapeError(
                f"probs has shape {probs.shape}, expected ({shape.omega_size},)")
        lo = probs.min(initial=0.0)
        if lo < -NEG_TOL:
            raise InvalidDistributionError(f"negative probability {lo:.3e}")
        if lo < 0.0:
            np.clip(probs, 0.0, None, out=probs)
        total = float(probs.sum())
        if not math.isfinite(total) or abs(total - 1.0) > MASS_TOL:
            raise InvalidDistributionError(f"total mass {total!r} != 1")
        if total != 1.0:
            probs /= total
        probs.setflags(write=False)
        self.shape = shape
        self.probs = probs

    # -- constructors ------------------------------------------------------

    @classmethod
    def point_mass(cls, shape: SpaceShape, config: int) -> "Distribution":
        probs = np.zeros(shape.omega_size)
        probs[config] = 1.0
        return cls(shape, probs)

    @classmethod
    def uniform(cls, shape: SpaceShape) -> "Distribution":
        return cls(shape, np.full(shape.omega_size, 1.0 / shape.omega_size))

    @classmethod
    def from_marginals(cls, shape: SpaceShape, marginals) -> "Distribution":
        """Product distribution with the given per-site marginals."""
        nd = np.ones(shape.nd_shape)
        for i, m in enumerate(marginals):
            m = np.asarray(m, dtype=np.float64)
            if m.shape != (shape.sizes[i],):
                raise ShapeError(f"marginal {i} has wrong length")
            view = [1] * shape.n
            view[shape.axis(i)] = shape.sizes[i]
            nd = nd * m.reshape(view)
        return cls(shape, nd.reshape(-1))

    @classmethod
    def random(cls, shape: SpaceShape, rng: np.random.Generator,
               floor: float = 0.0) -> "Distribution":
        """Dirichlet(1) sample, optionally mixed with the uniform floor."""
        probs = rng.dirichlet(np.ones(shape.omega_size))
        if floor > 0.0:
            probs = (1.0 - floor) * probs + floor / shape.omega_size
        return cls(shape, probs)

    # -- views and basics ----------------------------------------------------

    @property
    def nd(self) -> np.ndarray:
        return self.probs.reshape(self.shape.nd_shape)

    def site_marginal(self, site: int) -> np.ndarray:
        axes = tuple(a for a in range(self.shape.n) if a != self.shape.axis(site))
        return self.nd.sum(axis=axes)

    def marginals(self) -> list[np.ndarray]:
        return [self.site_marginal(i) for i in range(self.shape.n)]

    def stationary_product(self) -> "Distribution":
        """The product of the single-site marginals (the equilibrium state)."""
        return Distribution.from_marginals(self.shape, self.marginals())

    def __eq__(self, other) -> bool:
        return (isinstance(other, Distribution) and self.shape == other.shape
                and np.array_equal(self.probs, other.probs))

    def __repr__(self) -> str:
        return f"Distribution(shape={self.shape!r}, probs={self.probs!r})"

    def to_json(self) -> dict:
        return {"shape": self.shape.to_json(), "probs": self.probs.tolist()}

    @classmethod
    def from_json(cls, obj: Mapping) -> "Distribution":
        return cls(SpaceShape.from_json(obj["shape"]), obj["probs"])


# ---------------------------------------------------------------------------
# marginals, tensor products, collision kernel
# ---------------------------------------------------------------------------

def _sum_axes(shape: SpaceShape, mask: int) -> tuple[int, ...]:
    """ndarray axes corresponding to the sites NOT in ``mask``."""
    keep = mask_sites(mask)
    return tuple(shape.axis(i) for i in range(shape.n) if i not in keep)


def marginal(p: Distribution, mask: int) -> Distribution:
    """Marginal of ``p`` on the sites of ``mask`` (sums out the complement)."""
    check_mask(mask, p.shape.n)
    sub = p.shape.subshape(mask)
    nd = p.nd.sum(axis=_sum_axes(p.shape, mask))
    return Distribution(sub, nd.reshape(-1))


def tensor(p_a: Distribution, p_ac: Distribution, mask: int,
           shape: SpaceShape) -> Distribution:
    """Assemble ``p_a (x) p_ac`` on the full space.

    ``p_a`` lives on the sites of ``mask`` (ascending order) and ``p_ac`` on
    the complementary sites.
    """
    check_mask(mask, shape.n)
    cmask = complement(mask, shape.n)
    if p_a.shape != shape.subshape(mask) or p_ac.shape != shape.subshape(cmask):
        raise ShapeError("tensor factors do not match the mask decomposition")
    nd = _expand(p_a.probs, mask, shape) * _expand(p_ac.probs, cmask, shape)
    return Distribution(shape, nd.reshape(-1))


def _expand(flat: np.ndarray, mask: int, shape: SpaceShape) -> np.ndarray:
    """Reshape a sub-space array for broadcasting over the full nd view."""
    view = [1] * shape.n
    sub_sizes = []
    for i in mask_sites(mask):
        view[shape.axis(i)] = shape.sizes[i]
        sub_sizes.append(shape.sizes[i])
    # the sub-space flat order is site-ascending == axis-descending
    return flat.reshape(sub_sizes[::-1] if sub_sizes else ()).reshape(view)


def pair_tensor_nd(f_nd: np.ndarray, g_nd: np.ndarray, shape: SpaceShape,
                   mask: int) -> np.ndarray:
    """``f_A (x) g_{A^c}`` as a full nd array, for signed arrays too."""
    a_axes = _sum_axes(shape, mask)                      # axes to sum for f_A
    ac_axes = _sum_axes(shape, complement(mask, shape.n))
    return f_nd.sum(axis=a_axes, keepdims=True) * g_nd.sum(axis=ac_axes,
                                                           keepdims=True)


def collision_kernel_array(probs: np.ndarray, nu: "RecombinationMeasure",
                           shape: SpaceShape) -> np.ndarray:
    """Q(p) = sum_A nu(A) p_A (x) p_{A^c} on raw arrays."""
    nd = probs.reshape(shape.nd_shape)
    out = np.zeros(shape.nd_shape)
    for mask, w in nu.iter_atoms():
        out += w * pair_tensor_nd(nd, nd, shape, mask)
    return out.reshape(-1)


def collision_kernel(p: Distribution, nu: "RecombinationMeasure") -> Distribution:
    """The quadratic collision kernel Q(p), a convex combination of
    recombined tensor products; preserves all single-site marginals."""
    _check_nu_shape(p.shape, nu)
    return Distribution(p.shape, collision_kernel_array(p.probs, nu, p.shape))


def convolve_arrays(f: np.ndarray, g: np.ndarray, nu: "RecombinationMeasure",
                    shape: SpaceShape) -> np.ndarray:
    """The symmetrized convolution f o g extended bilinearly to signed arrays."""
    f_nd = f.reshape(shape.nd_shape)
    g_nd = g.reshape(shape.nd_shape)
    out = np.zeros(shape.nd_shape)
    for mask, w in nu.iter_atoms():
        out += (0.5 * w) * (pair_tensor_nd(f_nd, g_nd, shape, mask)
                            + pair_tensor_nd(g_nd, f_nd, shape, mask))
    return out.reshape(-1)


def convolve(p: Distribution, q: Distribution,
             nu: "RecombinationMeasure") -> Distribution:
    """Wild convolution p o q; commutative, and p o p = Q(p)."""
    if p.shape != q.shape:
        raise ShapeError("convolve requires equal shapes")
    _check_nu_shape(p.shape, nu)
    return Distribution(p.shape, convolve_arrays(p.probs, q.probs, nu, p.shape))


def _check_nu_shape(shape: SpaceShape, nu: "RecombinationMeasure") -> None:
    if nu.n != shape.n:
        raise ShapeError(f"nu is over {nu.n} sites, space has {shape.n}")


# ---------------------------------------------------------------------------
# recombination measures
# ---------------------------------------------------------------------------

class RecombinationMeasure:
    """Probability measure nu over subsets A of the n sites.

    Stored sparsely as ``mask -> probability``; the uniform crossover keeps an
    implicit representation (sampled by n fair coin flips) and enumerates its
    2^n atoms lazily only for n <= UNIFORM_ENUM_LIMIT.

    Derived constants:

    * ``r``: worst-pair non-separation probability, max over site pairs
      i < j of Pr(i, j on the same side of A); ``D = 1 - r``.
    * ``gamma``: min over sites i of Pr(A contains i) (Shearer constant).
    * ``delta``: min over i of max over atoms A containing i of
      min(nu(A), nu(A minus i)) -- a positive witness iff nu is strictly
      separating.
    """

    __slots__ = ("n", "kind", "atoms", "__dict__")

    def __init__(self, n: int, kind: str, atoms: Mapping[int, float] | None):
        if n < 1 or n > MAX_SITES:
            raise InvalidMeasureError(f"n must be in [1, {MAX_SITES}]")
        self.n = n
        self.kind = kind
        if atoms is None:
            if kind != "uniform":
                raise InvalidMeasureError("only uniform crossover may be implicit")
            self.atoms = None
            return
        clean: dict[int, float] = {}
        for mask, w in atoms.items():
            mask = check_mask(int(mask), n)
            w = float(w)
            if w < 0:
                raise InvalidMeasureError(f"negative atom weight {w}")
            if w > 0:
                clean[mask] = clean.get(mask, 0.0) + w
        total = sum(clean.values())
        if abs(total - 1.0) > MASS_TOL:
            raise InvalidMeasureError(f"atom weights sum to {total!r}, not 1")
        self.atoms = clean

    # -- constructors ------------------------------------------------------

    @classmethod
    def uniform_crossover(cls, n: int) -> "RecombinationMeasure":
        return cls(n, "uniform", None)

    @classmethod
    def one_point_crossover(cls, n: int) -> "RecombinationMeasure":
        w = 1.0 / (n + 1)
        atoms = {0: w}
        for i in range(1, n + 1):
            atoms[full_mask(i)] = w
        return cls(n, "onepoint", atoms)

    @classmethod
    def single_site(cls, n: int) -> "RecombinationMeasure":
        return cls(n, "singlesite", {1 << i: 1.0 / n for i in range(n)})

    @classmethod
    def custom(cls, n: int, atoms: Mapping[int, float]) -> "RecombinationMeasure":
        return cls(n, "custom", atoms)

    # -- enumeration and sampling -------------------------------------------

    def is_implicit(self) -> bool:
        return self.atoms is None

    def iter_atoms(self) -> Iterator[tuple[int, float]]:
        if self.atoms is None:
            if self.n > UNIFORM_ENUM_LIMIT:
                raise InvalidMeasureError(
                    f"uniform crossover enumerates atoms only for n <= "
                    f"{UNIFORM_ENUM_LIMIT}, got n={self.n}")
            w = 2.0 ** -self.n
            return ((mask, w) for mask in range(1 << self.n))
        return iter(sorted(self.atoms.items()))

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        pairs = list(self.iter_atoms())
        masks = np.array([m for m, _ in pairs], dtype=np.int64)
        probs = np.array([w for _, w in pairs], dtype=np.float64)
        return masks, probs

    def symmetrized(self) -> "RecombinationMeasure":
        """nu_bar(A) = (nu(A) + nu(A^c)) / 2, used to mark McKean trees."""
        if self.atoms is None:
            return self
        sym: dict[int, float] = {}
        for mask, w in self.atoms.items():
            sym[mask] = sym.get(mask, 0.0) + 0.5 * w
            cm = complement(mask, self.n)
            sym[cm] = sym.get(cm, 0.0) + 0.5 * w
        return RecombinationMeasure(self.n, "custom", sym)

    def sample_mask(self, rng: np.random.Generator) -> int:
        if self.atoms is None:
            return int(rng.integers(0, 1 << self.n))
        masks, cdf = self._sample_tables
        return int(masks[np.searchsorted(cdf, rng.random(), side="right")])

    def sample_masks(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.atoms is None:
            return rng.integers(0, 1 << self.n, size=size, dtype=np.int64)
        masks, cdf = self._sample_tables
        idx = np.searchsorted(cdf, rng.random(size), side="right")
        return masks[idx]

    @cached_property
    def _sample_tables(self) -> tuple[np.ndarray, np.ndarray]:
        masks, probs = self.as_arrays()
        cdf = np.cumsum(probs)
        cdf[-1] = 1.0
        # searchsorted(side="right") on U < 1 lands in [0, len-1]
        return masks, np.minimum(cdf, 1.0)

    # -- derived constants --------------------------------------------------

    @cached_property
    def _bit_matrix(self) -> tuple[np.ndarray, np.ndarray]:
        masks, probs = self.as_arrays()
        bits = (masks[:, None] >> np.arange(self.n)) & 1
        return bits, probs

    @cached_property
    def r(self) -> float:
        """Non-separation probability; max over pairs i < j (0 when n = 1)."""
        if self.n == 1:
            return 0.0
        if self.atoms is None:
            return 0.5
        bits, probs = self._bit_matrix
        worst = 0.0
        for i in range(self.n):
            for j in range(i + 1, self.n):
                same = bits[:, i] == bits[:, j]
                worst = max(worst, float(probs[same].sum()))
        return worst

    @property
    def D(self) -> float:
        return 1.0 - self.r

    @cached_property
    def gamma(self) -> float:
        if self.atoms is None:
            return 0.5
        bits, probs = self._bit_matrix
        return min(float(probs[bits[:, i] == 1].sum()) for i in range(self.n))

    @cached_property
    def delta(self) -> float:
        if self.atoms is None:
            return 2.0 ** -self.n
        best = []
        for i in range(self.n):
            bit = 1 << i
            cand = [min(w, self.atoms.get(mask ^ bit, 0.0))
                    for mask, w in self.atoms.items() if mask & bit]
            best.append(max(cand, default=0.0))
        return min(best)

    @property
    def separating(self) -> bool:
        return self.r < 1.0

    @property
    def strictly_separating(self) -> bool:
        return self.delta > 0.0

    def __repr__(self) -> str:
        return f"RecombinationMeasure(n={self.n}, kind={self.kind!r})"

    # -- serialization -------------------------------------------------------

    def to_json(self) -> dict:
        obj: dict = {"kind": self.kind, "n": self.n}
        if self.atoms is not None:
            obj["atoms"] = [{"mask": m, "p": w} for m, w in sorted(self.atoms.items())]
        return obj

    @classmethod
    def from_json(cls, obj: Mapping) -> "RecombinationMeasure":
        kind = obj["kind"]
        n = int(obj["n"])
        if kind == "uniform":
            return cls.uniform_crossover(n)
        if kind == "onepoint":
            return cls.one_point_crossover(n)
        if kind == "singlesite":
            return cls.single_site(n)
        atoms = {int(a["mask"]): float(a["p"]) for a in obj["atoms"]}
        return cls(n, kind, atoms)


def builtin_nu(kind: str, n: int,
               atoms: Mapping[int, float] | None = None) -> RecombinationMeasure:
    """Factory for the named recombination measures."""
    if kind == "uniform":
        return RecombinationMeasure.uniform_crossover(n)
    if kind == "onepoint":
        return RecombinationMeasure.one_point_crossover(n)
    if kind == "singlesite":
        return RecombinationMeasure.single_site(n)
    if kind == "custom":
        if atoms is None:
            raise InvalidMeasureError("custom measure requires atoms")
        return RecombinationMeasure.custom(n, atoms)
    raise InvalidMeasureError(f"unknown recombination measure kind {kind!r}")


def distribution_to_json_str(p: Distribution) -> str:
    return json.dumps(p.to_json())


def distribution_from_json_str(s: str) -> Distribution:
    return Distribution.from_json(json.loads(s))
