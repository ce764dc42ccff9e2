"""Monte-Carlo geometry for the Poisson-Voronoi backbone.

Nodes are sampled as a homogeneous Poisson process on a square torus
(wraparound keeps the point process stationary, so no boundary trimming
is needed).  A user pair (u, v) is routed along the chain of nodes whose
Voronoi cells the straight segment between them crosses; the chain is
recovered by sampling the segment densely and recording where the
nearest-node assignment changes.

The two estimators here are the empirical counterparts of the analytic
constants in `stochastic`:

* estimate_kappa_loc_mc  -> 2 E[C(distance to nearest node)]
* estimate_kappa_bb_mc   -> E[sum of C(hop) along the chain] / |u - v|

Both split their sample budget into independent replicas (fresh node set
per replica) and report a replica-level standard error, so the error bar
honestly includes node-set variability, not just pair noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.spatial import cKDTree

from .linkmodel import CostParams, LinkModel
from .numerics import Tolerance
from .stats import McEstimate
from .stochastic import vector_cost

__all__ = [
    "PointSet",
    "MarkovPath",
    "sample_poisson",
    "nearest_node",
    "markov_path",
    "estimate_kappa_loc_mc",
    "estimate_kappa_bb_mc",
    "dump_geometry",
]

# Segment sampling resolution: coarse step = mean node spacing / 64, and a
# 10x finer second pass around each detected cell transition.  Cells whose
# chord along the segment is shorter than the fine step can still be
# missed; at these settings that is far below the Monte-Carlo noise floor.
_COARSE_DIVISOR = 64
_REFINE_FACTOR = 10


@dataclass
class PointSet:
    """Points in the square [0, side)^2, optionally with torus topology.

    With wraparound=True coordinates are stored modulo side and all
    distances are min-image.  The k-d tree is built lazily and cached.
    """

    points: np.ndarray
    side: float
    wraparound: bool = True
    _tree: "cKDTree | None" = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError(f"points must have shape (n, 2), got {pts.shape}")
        if self.side <= 0.0:
            raise ValueError(f"side must be > 0, got {self.side}")
        if self.wraparound:
            pts = np.mod(pts, self.side)
        elif pts.size and (pts.min() < 0.0 or pts.max() > self.side):
            raise ValueError("points must lie inside [0, side]^2")
        self.points = pts

    def __len__(self) -> int:
        return self.points.shape[0]

    def kdtree(self) -> cKDTree:
        if self._tree is None:
            if self.wraparound:
                self._tree = cKDTree(self.points, boxsize=self.side)
            else:
                self._tree = cKDTree(self.points)
        return self._tree

    def displacement(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Shortest displacement vector(s) from a to b."""
        d = np.asarray(b, dtype=float) - np.asarray(a, dtype=float)
        if self.wraparound:
            d = d - self.side * np.round(d / self.side)
        return d

    def distance(self, a: np.ndarray, b: np.ndarray) -> float:
        return float(np.linalg.norm(self.displacement(a, b)))


@dataclass(frozen=True)
class MarkovPath:
    """Ordered chain of node indices crossed by a segment, with the
    node-to-node hop lengths (len(hop_lengths) == len(node_indices) - 1)."""

    node_indices: tuple[int, ...]
    hop_lengths: tuple[float, ...]

    def __post_init__(self):
        if len(self.node_indices) == 0:
            raise ValueError("a path visits at least one node")
        if len(self.hop_lengths) != len(self.node_indices) - 1:
            raise ValueError("hop count must be node count minus one")
        for a, b in zip(self.node_indices, self.node_indices[1:]):
            if a == b:
                raise ValueError("consecutive path nodes must be distinct")

    @property
    def hops(self) -> int:
        return len(self.hop_lengths)

    def total_length(self) -> float:
        return float(sum(self.hop_lengths))


def sample_poisson(intensity: float, side: float, seed, wraparound: bool = True) -> PointSet:
    """Homogeneous Poisson process of the given intensity (points per unit
    area) on [0, side)^2.  `seed` is anything numpy's default_rng accepts,
    including an existing Generator (used as-is, which lets callers thread
    one deterministic stream through several draws)."""
    if intensity <= 0.0 or side <= 0.0:
        raise ValueError("intensity and side must be > 0")
    rng = np.random.default_rng(seed)
    n = int(rng.poisson(intensity * side * side))
    pts = rng.uniform(0.0, side, size=(n, 2))
    return PointSet(points=pts, side=side, wraparound=wraparound)


def nearest_node(nodes: PointSet, p) -> int:
    """Index of the node nearest to p, by brute-force scan (ties go to the
    lowest index).  Deliberately independent of the k-d tree so the two
    can cross-check each other."""
    if len(nodes) == 0:
        raise ValueError("empty point set has no nearest node")
    d = nodes.displacement(np.asarray(p, dtype=float)[None, :], nodes.points)
    return int(np.argmin(np.einsum("ij,ij->i", d, d)))


def _query_indices(nodes: PointSet, samples: np.ndarray) -> np.ndarray:
    if nodes.wraparound:
        samples = np.mod(samples, nodes.side)
    _, idx = nodes.kdtree().query(samples)
    return idx


def markov_path(nodes: PointSet, u, v, step: float | None = None) -> MarkovPath:
    """Chain of nodes whose Voronoi cells the segment from u to v crosses.

    On a torus the segment follows the min-image displacement.  The default
    step is the mean node spacing / 64 with a 10x refinement pass around
    each assignment change; pass `step` to override the coarse resolution.
    """
    if len(nodes) == 0:
        raise ValueError("empty point set has no paths")
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    disp = nodes.displacement(u, v)
    length = float(np.linalg.norm(disp))
    if length == 0.0:
        return MarkovPath(node_indices=(nearest_node(nodes, u),), hop_lengths=())
    if step is None:
        spacing = nodes.side / math.sqrt(max(len(nodes), 1))
        step = spacing / _COARSE_DIVISOR
    if step <= 0.0:
        raise ValueError(f"step must be > 0, got {step}")

    n_coarse = max(int(math.ceil(length / step)), 1)
    ts = np.linspace(0.0, 1.0, n_coarse + 1)
    idx = _query_indices(nodes, u[None, :] + ts[:, None] * disp[None, :])

    changed = np.flatnonzero(idx[:-1] != idx[1:])
    if changed.size:
        fine_ts = np.concatenate(
            [
                np.linspace(ts[i], ts[i + 1], _REFINE_FACTOR + 2)[1:-1]
                for i in changed
            ]
        )
        fine_idx = _query_indices(nodes, u[None, :] + fine_ts[:, None] * disp[None, :])
        order = np.argsort(np.concatenate([ts, fine_ts]), kind="stable")
        idx = np.concatenate([idx, fine_idx])[order]

    keep = np.concatenate([[True], idx[1:] != idx[:-1]])
    chain = idx[keep]
    hops = tuple(
        nodes.distance(nodes.points[a], nodes.points[b])
        for a, b in zip(chain[:-1], chain[1:])
    )
    return MarkovPath(node_indices=tuple(int(i) for i in chain), hop_lengths=hops)


def dump_geometry(nodes: PointSet, path: MarkovPath) -> str:
    """Line-oriented dump of a sampled geometry for external plotting:
    one `node x y` line per node, then one `path id id id ...` line."""
    lines = [f"node {float(x)!r} {float(y)!r}" for x, y in nodes.points]
    lines.append("path " + " ".join(str(i) for i in path.node_indices))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# estimators
# ---------------------------------------------------------------------------


def _replica_plan(budget: int, per_replica: int) -> tuple[int, int]:
    """Split a sample budget into equal replicas (at least 2, so a standard
    error exists).  Doubling the budget doubles the replica count, which is
    what makes the reported variance scale like 1/budget."""
    replicas = max(2, int(math.ceil(budget / per_replica)))
    return replicas, int(math.ceil(budget / replicas))


def _resolve_cost(
    model: LinkModel | None,
    costs: CostParams | None,
    cost_override: Callable | None,
    beyond_cutoff_cost: float | None,
) -> Callable[[np.ndarray], np.ndarray]:
    if cost_override is not None:
        return lambda ell: np.asarray(cost_override(np.asarray(ell, dtype=float)), dtype=float)
    if model is None or costs is None:
        raise ValueError("either a link model and costs or a cost_override is required")
    return vector_cost(model, costs, beyond_cutoff_cost)


def estimate_kappa_loc_mc(
    model: LinkModel | None,
    costs: CostParams | None,
    alpha_bb: float,
    side_in_alpha: float = 20.0,
    queries: int = 40_000,
    seed: int = 0,
    queries_per_replica: int = 2_000,
    cost_override: Callable | None = None,
    beyond_cutoff_cost: float | None = None,
) -> McEstimate:
    """Monte-Carlo access constant: mean of 2 C(distance to nearest node)
    over uniform query points, with a fresh Poisson node set per replica.

    cost_override replaces the model cost with an arbitrary vectorized
    callable (used by the validation suite with constant and linear costs,
    whose access constants are known exactly).
    """
    if alpha_bb <= 0.0:
        raise ValueError(f"alpha_bb must be > 0, got {alpha_bb}")
    if side_in_alpha < 10.0:
        raise ValueError("side_in_alpha below 10 node spacings is too small for a torus estimate")
    if queries < 100:
        raise ValueError("fewer than 100 queries cannot give a usable error bar")
    cost = _resolve_cost(model, costs, cost_override, beyond_cutoff_cost)
    side = side_in_alpha * alpha_bb
    replicas, per_replica = _replica_plan(queries, queries_per_replica)

    values = []
    for child in np.random.SeedSequence(seed).spawn(replicas):
        rng = np.random.default_rng(child)
        nodes = sample_poisson(alpha_bb**-2, side, rng)
        while len(nodes) == 0:
            nodes = sample_poisson(alpha_bb**-2, side, rng)
        q = rng.uniform(0.0, side, size=(per_replica, 2))
        d, _ = nodes.kdtree().query(q)
        values.append(float(np.mean(2.0 * cost(d))))
    return McEstimate.from_replicas(values)


def estimate_kappa_bb_mc(
    model: LinkModel | None,
    costs: CostParams | None,
    alpha_bb: float,
    side_in_alpha: float = 20.0,
    pairs: int = 10_000,
    seed: int = 0,
    pairs_per_replica: int = 500,
    cost_override: Callable | None = None,
    beyond_cutoff_cost: float | None = None,
) -> McEstimate:
    """Monte-Carlo trunk constant: for uniform user pairs at min-image
    separation >= 2 alpha_bb, the mean of

        sum of C(hop) along the Voronoi cell chain / |u - v|.

    Fresh Poisson node set per replica; the replica spread sets the error
    bar.  The estimator carries an O(alpha_bb/|u - v|) finite-separation
    bias, kept below the noise floor by the separation floor and torus
    size; tolerances that consume it should stay at the 3-sigma scale.
    """
    if alpha_bb <= 0.0:
        raise ValueError(f"alpha_bb must be > 0, got {alpha_bb}")
    if side_in_alpha < 10.0:
        raise ValueError("side_in_alpha below 10 node spacings is too small for a torus estimate")
    if pairs < 100:
        raise ValueError("fewer than 100 pairs cannot give a usable error bar")
    cost = _resolve_cost(model, costs, cost_override, beyond_cutoff_cost)
    side = side_in_alpha * alpha_bb
    min_sep = 2.0 * alpha_bb
    replicas, per_replica = _replica_plan(pairs, pairs_per_replica)

    values = []
    for child in np.random.SeedSequence(seed).spawn(replicas):
        rng = np.random.default_rng(child)
        nodes = sample_poisson(alpha_bb**-2, side, rng)
        while len(nodes) < 2:
            nodes = sample_poisson(alpha_bb**-2, side, rng)
        total = 0.0
        for _ in range(per_replica):
            while True:
                u, v = rng.uniform(0.0, side, size=(2, 2))
                dist = nodes.distance(u, v)
                if dist >= min_sep:
                    break
            path = markov_path(nodes, u, v)
            if path.hops:
                total += float(np.sum(cost(np.asarray(path.hop_lengths)))) / dist
        values.append(total / per_replica)
    return McEstimate.from_replicas(values)
