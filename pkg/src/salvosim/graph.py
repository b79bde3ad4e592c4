"""Directed communication graphs and the spectral quantities that gate gains.

Two graphs drive the simulation.  The sensing graph contains the target as
node 0 plus one node per interceptor; a directed edge (i, j) means node j
receives information from node i, so a target edge (0, j) exists exactly when
interceptor j carries a working seeker.  The actuation graph contains only
the interceptors and carries the time-to-go exchange; it must be strongly
connected.

All edges have unit weight.  Laplacians follow the in-degree convention:
row i holds the in-degree of node i on the diagonal and -1 in column j for
every edge (j, i), so every row sums to zero.
"""

from dataclasses import dataclass, field

import numpy as np

# Positivity margin for eigenvalue checks; well above LAPACK noise for n <= 16.
EIG_TOL = 1e-9


class GraphError(ValueError):
    """Structural problem with a directed graph."""


class TargetNotLeader(GraphError):
    """The designated target node has incoming edges."""


class SingularFollowerMatrix(GraphError):
    """Reduced follower Laplacian is singular: the target does not reach
    every follower, so the rooted-spanning-tree requirement is violated."""


class NotStronglyConnected(GraphError):
    """Operation requires a strongly connected digraph."""


@dataclass(frozen=True)
class DirectedGraph:
    """Unit-weight simple digraph on nodes 0..node_count-1.

    Edges are (from, to) pairs; self-loops are rejected.
    """

    node_count: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.node_count < 1:
            raise GraphError("graph needs at least one node")
        object.__setattr__(self, "edges", frozenset(tuple(e) for e in self.edges))
        for (u, v) in self.edges:
            if u == v:
                raise GraphError(f"self-loop on node {u}")
            if not (0 <= u < self.node_count and 0 <= v < self.node_count):
                raise GraphError(f"edge ({u}, {v}) leaves node range 0..{self.node_count - 1}")

    def in_neighbors(self, node):
        return sorted(u for (u, v) in self.edges if v == node)

    def out_neighbors(self, node):
        return sorted(v for (u, v) in self.edges if u == node)

    def subgraph(self, keep):
        """Induced subgraph on the given nodes, relabeled 0..len(keep)-1 in
        ascending order of the original indices."""
        keep = sorted(set(keep))
        index = {n: i for i, n in enumerate(keep)}
        edges = {(index[u], index[v]) for (u, v) in self.edges if u in index and v in index}
        return DirectedGraph(len(keep), frozenset(edges))

    def without_edge(self, u, v):
        if (u, v) not in self.edges:
            raise GraphError(f"edge ({u}, {v}) not present")
        return DirectedGraph(self.node_count, self.edges - {(u, v)})


@dataclass(frozen=True)
class LeaderPartition:
    """Blocks of the Laplacian reordered with the leader (target) first.

    ``target_column`` is the N-vector coupling each follower to the leader
    (entry -1 where a leader edge feeds that follower); ``follower_laplacian``
    is the N x N reduced Laplacian among the followers.
    """

    target_column: np.ndarray
    follower_laplacian: np.ndarray


@dataclass(frozen=True)
class FollowerSpectrum:
    """Spectral data of a reduced follower Laplacian L.

    ``weights`` solves L^T w = 1 and is elementwise positive whenever the
    leader roots a spanning tree; with W = diag(weights), the symmetrized
    form ``sym`` = W L + L^T W is positive definite.  Its smallest eigenvalue
    and the weight extremes bound the convergence rate of observer dynamics
    driven by L and therefore floor the observer gain.
    """

    weights: np.ndarray
    sym: np.ndarray
    min_eig_sym: float
    max_weight: float
    min_weight: float

    @property
    def weight_matrix(self):
        return np.diag(self.weights)


def laplacian(g: DirectedGraph) -> np.ndarray:
    """In-degree Laplacian; rows sum to zero exactly."""
    lap = np.zeros((g.node_count, g.node_count))
    for (u, v) in g.edges:
        lap[v, u] -= 1.0
        lap[v, v] += 1.0
    return lap


def leader_partition(g: DirectedGraph, leader: int) -> LeaderPartition:
    """Split the Laplacian into leader/follower blocks with the leader first.

    Requires the leader to have in-degree zero (it transmits, never
    receives); raises TargetNotLeader otherwise.  Follower rows keep their
    relative order.
    """
    if not 0 <= leader < g.node_count:
        raise GraphError(f"leader index {leader} out of range")
    incoming = g.in_neighbors(leader)
    if incoming:
        raise TargetNotLeader(
            f"node {leader} must have no incoming edges, has {incoming}"
        )
    order = [leader] + [n for n in range(g.node_count) if n != leader]
    lap = laplacian(g)[np.ix_(order, order)]
    return LeaderPartition(target_column=lap[1:, 0].copy(), follower_laplacian=lap[1:, 1:].copy())


def has_spanning_tree_from(g: DirectedGraph, root: int) -> bool:
    """True iff every node is reachable from ``root`` along directed edges."""
    if not 0 <= root < g.node_count:
        raise GraphError(f"root index {root} out of range")
    succ = [[] for _ in range(g.node_count)]
    for (u, v) in g.edges:
        succ[u].append(v)
    seen = {root}
    stack = [root]
    while stack:
        for v in succ[stack.pop()]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return len(seen) == g.node_count


def is_strongly_connected(g: DirectedGraph) -> bool:
    """True iff every node reaches every other node.

    Checked as reachability from node 0 in the graph and in its reverse,
    which is equivalent for a single strongly connected component.
    """
    if g.node_count == 1:
        return True
    reverse = DirectedGraph(g.node_count, frozenset((v, u) for (u, v) in g.edges))
    return has_spanning_tree_from(g, 0) and has_spanning_tree_from(reverse, 0)


def follower_spectrum(follower_laplacian: np.ndarray) -> FollowerSpectrum:
    """Weights and symmetrized-form spectrum of a reduced follower Laplacian.

    Raises SingularFollowerMatrix when the linear solve fails, which happens
    exactly when the leader-rooted spanning-tree requirement is violated.
    """
    lap = np.asarray(follower_laplacian, dtype=float)
    n = lap.shape[0]
    if lap.shape != (n, n):
        raise GraphError("follower Laplacian must be square")
    try:
        weights = np.linalg.solve(lap.T, np.ones(n))
    except np.linalg.LinAlgError as exc:
        raise SingularFollowerMatrix(str(exc)) from exc
    if not np.all(np.isfinite(weights)):
        raise SingularFollowerMatrix("weight solve produced non-finite values")
    w = np.diag(weights)
    sym = w @ lap + lap.T @ w
    sym = 0.5 * (sym + sym.T)  # kill asymmetric rounding residue
    eigs = np.linalg.eigvalsh(sym)
    return FollowerSpectrum(
        weights=weights,
        sym=sym,
        min_eig_sym=float(eigs[0]),
        max_weight=float(weights.max()),
        min_weight=float(weights.min()),
    )


def mirror_laplacian(g: DirectedGraph) -> np.ndarray:
    """Laplacian of the undirected mirror graph with weights (a_ij + a_ji)/2."""
    adj = np.zeros((g.node_count, g.node_count))
    for (u, v) in g.edges:
        adj[v, u] = 1.0
    sym_adj = 0.5 * (adj + adj.T)
    return np.diag(sym_adj.sum(axis=1)) - sym_adj


def mirror_fiedler(g: DirectedGraph) -> float:
    """Second-smallest eigenvalue of the mirror-graph Laplacian.

    Positive for every strongly connected digraph; this value floors the
    consensus gain of the guidance law.  Raises NotStronglyConnected when
    the digraph is not strongly connected (the floor would be meaningless).
    """
    if g.node_count < 2:
        raise GraphError("Fiedler eigenvalue needs at least two nodes")
    if not is_strongly_connected(g):
        raise NotStronglyConnected("mirror Fiedler value requires a strongly connected digraph")
    eigs = np.linalg.eigvalsh(mirror_laplacian(g))
    return float(eigs[1])


def all_eigs_positive_real(matrix: np.ndarray) -> bool:
    """True iff every eigenvalue has real part above the positivity margin."""
    eigs = np.linalg.eigvals(np.asarray(matrix, dtype=float))
    return bool(eigs.real.min() > EIG_TOL)
