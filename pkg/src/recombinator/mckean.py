"""McKean trees, fragmentation marks and the stochastic Wild-sum sampler.

A tree with k leaves is grown by k-1 uniform leaf splits, which reproduces
the collision-history weights alpha_k exactly; marks on internal nodes are
drawn i.i.d. from the symmetrized recombination measure, the left edge
carrying A and the right edge its complement. Intersecting the marks along
root-to-leaf paths fragments the site set into the blocks each leaf
contributes to the sampled configuration.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .space import Distribution, RecombinationMeasure, complement, full_mask


@dataclass(eq=False)
class TreeNode:
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None


@dataclass
class McKeanTree:
    root: TreeNode
    k: int

    def leaves(self) -> list[TreeNode]:
        out: list[TreeNode] = []
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node.is_leaf:
                out.append(node)
            else:
                stack.append(node.right)   # left-to-right order
                stack.append(node.left)
        return out

    def leaf_depths(self) -> list[int]:
        out: list[int] = []
        stack = [(self.root, 0)]
        while stack:
            node, d = stack.pop()
            if node.is_leaf:
                out.append(d)
            else:
                stack.append((node.right, d + 1))
                stack.append((node.left, d + 1))
        return out

    def validate(self) -> None:
        assert len(self.leaf_depths()) == self.k


@dataclass
class MarkedTree:
    """A McKean tree with subset marks and the induced leaf partition."""
    tree: McKeanTree
    n: int
    marks: dict[int, int] = field(repr=False)   # id(node) -> mask
    blocks: list[int] = field(default_factory=list)

    def validate(self) -> None:
        union = 0
        for b in self.blocks:
            assert union & b == 0, "blocks overlap"
            union |= b
        assert union == full_mask(self.n), "blocks do not cover the sites"


def sample_tree(t: float, rng: np.random.Generator) -> McKeanTree:
    """Leaf count geometric with success e^-t, then uniform leaf splits."""
    if t < 0.0:
        raise ValueError("t must be non-negative")
    k = int(rng.geometric(np.exp(-t)))
    root = TreeNode()
    leaves = [root]
    for _ in range(k - 1):
        i = int(rng.integers(len(leaves)))
        node = leaves[i]
        node.left = TreeNode()
        node.right = TreeNode()
        leaves[i:i + 1] = [node.left, node.right]
    return McKeanTree(root, k)


def omega_statistic(tree: McKeanTree, r: float) -> float:
    """omega(gamma) = sum over leaves of (r/2)^depth."""
    if not 0.0 <= r <= 1.0:
        raise ValueError("r must lie in [0, 1]")
    x = r / 2.0
    return float(sum(x ** d for d in tree.leaf_depths()))


def fragment(tree: McKeanTree, nu: RecombinationMeasure,
             rng: np.random.Generator) -> MarkedTree:
    """Draw i.i.d. marks from nu_bar and fragment the site set."""
    nbar = nu.symmetrized()
    n = nu.n
    marks: dict[int, int] = {}
    blocks: list[int] = []
    stack = [(tree.root, full_mask(n))]
    while stack:
        node, block = stack.pop()
        if node.is_leaf:
            blocks.append(block)
            continue
        a = nbar.sample_mask(rng)
        marks[id(node)] = a
        stack.append((node.right, block & complement(a, n)))
        stack.append((node.left, block & a))
    blocks.reverse()   # stack pops right first; restore left-to-right order
    return MarkedTree(tree, n, marks, blocks)


def assemble(blocks: list[int], leaf_configs: list[int],
             p0_shape) -> int:
    """Configuration whose content on each block comes form the block's leaf."""
    digits = p0_shape.digit_table
    code = 0
    for block, cfg in zip(blocks, leaf_configs):
        for site in range(p0_shape.n):
            if block >> site & 1:
                code += int(digits[site, cfg]) * p0_shape.strides[site]
    return code


def sample_pt(p0: Distribution, nu: RecombinationMeasure, t: float,
              rng: np.random.Generator) -> int:
    """One configuration distributed as the time-t solution with datum p0."""
    tree = sample_tree(t, rng)
    marked = fragment(tree, nu, rng)
    cdf = np.cumsum(p0.probs)
    draws = np.searchsorted(cdf, rng.random(tree.k), side="right")
    draws = np.minimum(draws, p0.shape.omega_size - 1)
    return assemble(marked.blocks, [int(c) for c in draws], p0.shape)


# ---------------------------------------------------------------------------
# batched Monte Carlo (kernel-backed)
# ---------------------------------------------------------------------------

def _nbar_arrays(nu: RecombinationMeasure):
    if nu.is_implicit():
        return None, None
    masks, probs = nu.symmetrized().as_arrays()
    cdf = np.cumsum(probs)
    cdf[-1] = 1.0
    return masks, cdf


def _contrib_table(shape) -> np.ndarray:
    strides = np.array(shape.strides, dtype=np.int64)[:, None]
    return shape.digit_table.astype(np.int64) * strides


def sample_pt_many(p0: Distribution, nu: RecombinationMeasure, t: float,
                   size: int, rng: np.random.Generator) -> np.ndarray:
    """``size`` independent draws from p_t, as flat configuration codes."""
    if t < 0.0:
        raise ValueError("t must be non-negative")
    cdf = np.cumsum(p0.probs)
    cdf[-1] = 1.0
    masks, mcdf = _nbar_arrays(nu)
    seed = int(rng.integers(np.iinfo(np.int64).max))
    return _kernels.sample_pt_batch(
        t, cdf, _contrib_table(p0.shape), masks, mcdf,
        p0.shape.n, size, seed)


def sample_pt_histogram(p0: Distribution, nu: RecombinationMeasure, t: float,
                        size: int, rng: np.random.Generator) -> Distribution:
    codes = sample_pt_many(p0, nu, t, size, rng)
    counts = np.bincount(codes, minlength=p0.shape.omega_size)
    return Distribution(p0.shape, counts / size)


def omega_mean(nu_r: float, t: float, size: int,
               rng: np.random.Generator) -> tuple[float, float]:
    """Monte Carlo mean and standard error of omega over sampled trees."""
    seed = int(rng.integers(np.iinfo(np.int64).max))
    _, omegas = _kernels.tree_omega_batch(t, nu_r, size, seed)
    mean = float(omegas.mean())
    se = float(omegas.std(ddof=1) / np.sqrt(size))
    return mean, se
