"""Shared-structure decision tree with one output per task at each leaf.

Structure is grown best-first (leaf-wise) from the per-sample splitting
gradients (g_e, h_e): node histograms accumulate gradient/hessian sums per
(feature, bin), and the split maximizing the second-order gain

    1/2 [ G_L^2/(H_L+lambda) + G_R^2/(H_R+lambda) - (G_L+G_R)^2/(H_L+H_R+lambda) ] - gamma_reg

wins. Leaf values are fitted afterwards, per task, from the per-task
updating gradients, so the same structure serves every task.

Determinism rules used throughout: samples are accumulated in ascending
index order, features are scanned in ascending order, bins left to right,
and ties keep the first candidate. The left child's histogram is built
directly; the right child's is derived by subtracting it from the parent's,
which makes parent = left + right an exact identity.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .errors import EmptyLeaf

# Missing values always route to the right child: the missing bin index is
# larger than any finite threshold bin.
DEFAULT_RIGHT = True

MAX_DELTA_DEFAULT = 1e10


@dataclass(frozen=True)
class GrowthParams:
    """Stopping and regularization knobs for a single tree."""

    max_leaves: int = 31
    max_depth: int = 6
    min_samples_leaf: int = 20
    min_hess_leaf: float = 1e-3
    min_gain_to_split: float = 0.0
    lambda_reg: float = 0.1
    gamma_reg: float = 0.0

    def __post_init__(self):
        if self.max_leaves < 1:
            raise ValueError("max_leaves must be >= 1")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")
        if self.lambda_reg < 0:
            raise ValueError("lambda_reg must be >= 0")


@dataclass(eq=False)
class Histogram:
    """Per-(feature, bin) sums of g_e, h_e and sample counts.

    Arrays are (d, B) with B = max bins over features; rows are padded with
    zeros past each feature's own bin count. ``finite_bins[f]`` counts the
    non-missing bins of feature f; the missing bin sits right after them.
    """

    sum_g: np.ndarray
    sum_h: np.ndarray
    count: np.ndarray
    finite_bins: np.ndarray


def build_histograms(sample_indices, dataset: Dataset, g_e, h_e) -> Histogram:
    """Accumulate gradient/hessian histograms for one node.

    Samples are visited in ascending index order per feature, so repeated
    calls on the same arguments are bit-identical.
    """
    idx = np.sort(np.asarray(sample_indices, dtype=np.int64))
    finite = dataset.mapper.finite_bin_counts
    n_bins_max = int(finite.max()) + 1  # room for the missing bin
    d = dataset.d
    sum_g = np.zeros((d, n_bins_max), dtype=np.float64)
    sum_h = np.zeros((d, n_bins_max), dtype=np.float64)
    count = np.zeros((d, n_bins_max), dtype=np.int64)
    g_node = g_e[idx]
    h_node = h_e[idx]
    for f in range(d):
        bins = dataset.binned_by_feature[f][idx]
        sum_g[f] = np.bincount(bins, weights=g_node, minlength=n_bins_max)
        sum_h[f] = np.bincount(bins, weights=h_node, minlength=n_bins_max)
        count[f] = np.bincount(bins, minlength=n_bins_max)
    return Histogram(sum_g=sum_g, sum_h=sum_h, count=count, finite_bins=finite.copy())


def subtract_histograms(parent: Histogram, child: Histogram) -> Histogram:
    """Histogram of the sibling node: parent minus one child, elementwise."""
    return Histogram(
        sum_g=parent.sum_g - child.sum_g,
        sum_h=parent.sum_h - child.sum_h,
        count=parent.count - child.count,
        finite_bins=parent.finite_bins,
    )


def split_gain(gl: float, hl: float, gr: float, hr: float,
               lam: float, gamma_reg: float) -> float:
    """Second-order gain of splitting a node into (left, right) parts."""
    parent = (gl + gr) ** 2 / (hl + hr + lam)
    return 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent) - gamma_reg


@dataclass(frozen=True)
class SplitInfo:
    """Winning split of one node: boundary, gain and both children's sums."""

    feature: int
    threshold_bin: int
    gain: float
    left_sums: tuple[float, float, int]  # (G_e, H_e, count)
    right_sums: tuple[float, float, int]
    default_right: bool = DEFAULT_RIGHT


def find_best_split(hist: Histogram, node_totals, params: GrowthParams):
    """Scan every feature and bin boundary; return the best split or None.

    ``node_totals`` is the node's (G_e, H_e, count). A boundary at bin b
    sends bins <= b left and everything else (missing bin included) right.
    Both children must satisfy min_samples_leaf and min_hess_leaf; ties are
    broken toward the lower feature index, then the lower bin index. Returns
    None when no candidate beats min_gain_to_split.
    """
    g_tot, h_tot, c_tot = node_totals
    if c_tot < 2 * params.min_samples_leaf:
        return None
    lam = params.lambda_reg
    best = None
    best_gain = params.min_gain_to_split
    for f in range(hist.sum_g.shape[0]):
        nb = int(hist.finite_bins[f])
        if nb < 2:
            continue
        lg = np.cumsum(hist.sum_g[f, : nb - 1])
        lh = np.cumsum(hist.sum_h[f, : nb - 1])
        lc = np.cumsum(hist.count[f, : nb - 1])
        rg = g_tot - lg
        rh = h_tot - lh
        rc = c_tot - lc
        valid = (
            (lc >= params.min_samples_leaf)
            & (rc >= params.min_samples_leaf)
            & (lh >= params.min_hess_leaf)
            & (rh >= params.min_hess_leaf)
        )
        if not valid.any():
            continue
        with np.errstate(divide="ignore", invalid="ignore"):
            gains = 0.5 * (
                lg * lg / (lh + lam)
                + rg * rg / (rh + lam)
                - (lg + rg) ** 2 / (lh + rh + lam)
            ) - params.gamma_reg
        gains[~valid] = -np.inf
        b = int(np.argmax(gains))
        gain = float(gains[b])
        if gain > best_gain:
            best_gain = gain
            best = SplitInfo(
                feature=f,
                threshold_bin=b,
                gain=gain,
                left_sums=(float(lg[b]), float(lh[b]), int(lc[b])),
                right_sums=(float(rg[b]), float(rh[b]), int(rc[b])),
            )
    return best


@dataclass
class TreeNode:
    """Internal node. Children >= 0 index nodes; negative c encodes leaf ~c."""

    feature: int
    threshold_bin: int
    left: int = 0
    right: int = 0
    default_right: bool = DEFAULT_RIGHT
    gain: float = 0.0
    count: int = 0


@dataclass(eq=False)
class TreeSkeleton:
    """Split structure produced by growth, before leaf values are fitted."""

    nodes: list[TreeNode]
    n_leaves: int
    # Present only when growth ran with capture_histograms=True; one entry
    # per internal node: (node hist, left child hist, right child hist).
    captures: list[tuple[Histogram, Histogram, Histogram]] | None = None


class _Candidate:
    """A leaf-in-waiting: its samples, histogram, totals and best split."""

    __slots__ = ("samples", "hist", "totals", "depth", "best", "slot")

    def __init__(self, samples, hist, totals, depth, best, slot):
        self.samples = samples
        self.hist = hist
        self.totals = totals
        self.depth = depth
        self.best = best
        self.slot = slot  # (parent node id, "left"/"right") or None for root


def grow_tree(dataset: Dataset, g_e, h_e, params: GrowthParams,
              capture_histograms: bool = False):
    """Grow the split structure best-first from the splitting gradients.

    Repeatedly splits the pending leaf with the largest gain until
    max_leaves, max_depth or the gain threshold stops it. Returns the
    skeleton and the per-leaf sample index lists (ascending, disjoint,
    covering all samples).
    """
    m = dataset.m
    samples = np.arange(m, dtype=np.int64)
    hist = build_histograms(samples, dataset, g_e, h_e)
    totals = (float(np.sum(g_e)), float(np.sum(h_e)), m)

    nodes: list[TreeNode] = []
    captures: list | None = [] if capture_histograms else None
    pending: dict[int, _Candidate] = {}
    heap: list[tuple[float, int]] = []
    counter = 0

    def add_candidate(samples, hist, totals, depth, slot):
        nonlocal counter
        best = None
        if params.max_leaves > 1 and depth < params.max_depth:
            best = find_best_split(hist, totals, params)
        cand = _Candidate(samples, hist, totals, depth, best, slot)
        pending[counter] = cand
        if best is not None:
            heapq.heappush(heap, (-best.gain, counter))
        counter += 1

    add_candidate(samples, hist, totals, 0, None)

    n_leaves = 1
    while n_leaves < params.max_leaves and heap:
        _, cid = heapq.heappop(heap)
        cand = pending.pop(cid)
        best = cand.best
        node_id = len(nodes)
        node = TreeNode(
            feature=best.feature,
            threshold_bin=best.threshold_bin,
            gain=best.gain,
            count=cand.totals[2],
        )
        nodes.append(node)
        if cand.slot is not None:
            _link(nodes, cand.slot, node_id)

        col = dataset.binned_by_feature[best.feature][cand.samples]
        left_mask = col <= best.threshold_bin
        left_samples = cand.samples[left_mask]
        right_samples = cand.samples[~left_mask]
        left_hist = build_histograms(left_samples, dataset, g_e, h_e)
        right_hist = subtract_histograms(cand.hist, left_hist)
        if captures is not None:
            captures.append((cand.hist, left_hist, right_hist))

        depth = cand.depth + 1
        add_candidate(left_samples, left_hist, best.left_sums, depth, (node_id, "left"))
        add_candidate(right_samples, right_hist, best.right_sums, depth, (node_id, "right"))
        n_leaves += 1

    # Whatever is still pending becomes a leaf, in creation order.
    leaf_samples: list[np.ndarray] = []
    for cand in pending.values():
        leaf_id = len(leaf_samples)
        leaf_samples.append(cand.samples)
        if cand.slot is not None:
            _link(nodes, cand.slot, ~leaf_id)

    skeleton = TreeSkeleton(nodes=nodes, n_leaves=len(leaf_samples), captures=captures)
    return skeleton, leaf_samples


def _link(nodes, slot, child_id):
    parent_id, side = slot
    if side == "left":
        nodes[parent_id].left = child_id
    else:
        nodes[parent_id].right = child_id


@dataclass(eq=False)
class MultiOutputTree:
    """Finished tree: shared structure plus per-task leaf values.

    ``leaf_values`` holds the shrunk Newton steps, ``leaf_residual_means``
    the plain per-task mean gradient of each leaf's samples (kept in the
    model dump as the residual summary of the leaf).
    """

    nodes: list[TreeNode]
    leaf_values: np.ndarray  # (L, n)
    leaf_residual_means: np.ndarray  # (L, n)
    leaf_counts: np.ndarray  # (L,)

    @property
    def n_tasks(self) -> int:
        return self.leaf_values.shape[1]

    @property
    def n_leaves(self) -> int:
        return self.leaf_values.shape[0]


def fit_leaf_values(skeleton: TreeSkeleton, leaf_samples, g_u, h_u,
                    lambda_reg: float, learning_rate: float,
                    max_delta: float = MAX_DELTA_DEFAULT) -> MultiOutputTree:
    """Compute every leaf's per-task Newton step from the updating gradients.

    value[leaf, t] = -learning_rate * sum(g_u[t]) / (sum(h_u[t]) + lambda),
    clamped to [-max_delta, max_delta].
    """
    n = g_u.shape[1]
    n_leaves = len(leaf_samples)
    values = np.empty((n_leaves, n), dtype=np.float64)
    means = np.empty((n_leaves, n), dtype=np.float64)
    counts = np.empty(n_leaves, dtype=np.int64)
    for leaf, s in enumerate(leaf_samples):
        if len(s) == 0:
            raise EmptyLeaf(f"leaf {leaf} received no samples")
        counts[leaf] = len(s)
        for t in range(n):
            gs = float(g_u[s, t].sum())
            hs = float(h_u[s, t].sum())
            values[leaf, t] = -learning_rate * gs / (hs + lambda_reg)
            means[leaf, t] = gs / len(s)
    np.clip(values, -max_delta, max_delta, out=values)
    return MultiOutputTree(
        nodes=skeleton.nodes,
        leaf_values=values,
        leaf_residual_means=means,
        leaf_counts=counts,
    )


def route_binned(nodes, binned) -> np.ndarray:
    """Map each binned row to its leaf index."""
    k = binned.shape[0]
    out = np.zeros(k, dtype=np.int64)
    if not nodes:
        return out
    stack = [(0, np.arange(k, dtype=np.int64))]
    while stack:
        node_id, idx = stack.pop()
        node = nodes[node_id]
        col = binned[idx, node.feature]
        mask = col <= node.threshold_bin
        for child, sub in ((node.left, idx[mask]), (node.right, idx[~mask])):
            if sub.size == 0:
                continue
            if child >= 0:
                stack.append((child, sub))
            else:
                out[sub] = ~child
    return out
